/*
 * Copyright 2026 The trainsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Core>

#include "trainsel/cluster.h"
#include "trainsel/marker_matrix.h"
#include "trainsel/phenotype.h"

namespace trainsel
{

/// Synthetic structured population.
///
/// Allele frequencies start from a common base p ~ U(0.05, 0.95); each
/// cluster draws its own frequencies from Beta(p (1 - F) / F, (1 - p)(1 - F) / F)
/// with F = divergence (F = 0 keeps the base). Dosages are Binomial(2, p_c).
/// The trait is the sum of n_qtl standard normal marker effects plus noise
/// scaled so that var(g) / (var(g) + var(e)) = h2.
struct SimulationSpec
{
    Index n_individuals = 500;
    Index n_markers = 1000;
    Index n_clusters = 5;
    double divergence = 0.1;
    Index n_qtl = 100;
    double h2 = 0.5;
    /// Year assigned to cluster c is first_year + c - 1.
    long first_year = 2005;

    void validate() const;
};

struct SimulatedData
{
    /// Raw dosages in {0, 1, 2}.
    MarkerMatrix markers;
    PhenotypeVector phenotype;
    /// Generating cluster of each individual.
    ClusterAssignment clusters;
    std::map<std::string, long> years;
    Eigen::VectorXd genetic_values;
    /// n_clusters x n_markers.
    Eigen::MatrixXd cluster_frequencies;
};

SimulatedData simulate_data(const SimulationSpec& spec, std::uint64_t seed);

}  // namespace trainsel
