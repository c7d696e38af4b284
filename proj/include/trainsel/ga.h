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

#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "trainsel/criterion.h"
#include "trainsel/partition.h"
#include "trainsel/pca.h"

namespace trainsel
{

using Rng = std::mt19937_64;

/// Fixed-cardinality selection over the candidate block: mask[i] == 1 when
/// candidate i is in the training set.
class SubsetGenome
{
   public:
    explicit SubsetGenome(std::vector<std::uint8_t> mask);

    static SubsetGenome from_indices(Index length, std::span<const Index> selected);
    static SubsetGenome random(Index length, Index cardinality, Rng& rng);

    const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
    Index length() const noexcept { return static_cast<Index>(mask_.size()); }
    Index cardinality() const noexcept { return cardinality_; }
    bool selected(Index i) const { return mask_[static_cast<std::size_t>(i)] != 0; }

    /// Selected positions, ascending.
    std::vector<Index> indices() const;

    friend bool operator==(const SubsetGenome&, const SubsetGenome&) = default;
    /// Lexicographic on the mask.
    friend std::strong_ordering operator<=>(
        const SubsetGenome& a,
        const SubsetGenome& b) noexcept
    {
        return a.mask_ <=> b.mask_;
    }

   private:
    std::vector<std::uint8_t> mask_;
    Index cardinality_ = 0;
};

/// Genetic algorithm settings. Defaults are conventional values; nothing
/// here is tuned.
struct GAConfig
{
    Index population_size = 100;
    Index n_generations = 200;
    double elite_fraction = 0.1;
    /// Per selected gene, see mutate().
    double mutation_rate = 0.01;
    /// Probability that a non-elite child is produced by crossover rather
    /// than copied from its first parent.
    double crossover_rate = 1.0;
    std::uint64_t seed = 1;
    Index convergence_patience = 30;
    /// Independent restarts; the best result is kept.
    Index n_starts = 1;

    void validate() const;
};

struct GAResult
{
    SubsetGenome best_genome;
    double best_fitness = 0.0;
    /// Best fitness after each generation (of the winning start).
    std::vector<double> history;
    /// Fitness evaluations across all starts (cache hits excluded).
    std::uint64_t evaluations = 0;
};

/// Child keeps every index both parents share and fills the remaining slots
/// uniformly without replacement from the symmetric difference.
SubsetGenome crossover(const SubsetGenome& a, const SubsetGenome& b, Rng& rng);

/// Swap mutation: each selected index, independently with probability
/// `rate`, is exchanged with a uniformly drawn unselected index.
SubsetGenome mutate(const SubsetGenome& genome, double rate, Rng& rng);

/// The ceil(elite_fraction * population) genomes of lowest fitness, ordered
/// by (fitness, mask).
std::vector<SubsetGenome> select_elites(
    std::span<const SubsetGenome> population,
    std::span<const double> fitnesses,
    double elite_fraction);

/// Component count the criterion uses with `basis`.
Index effective_components(const PCBasis& basis, const CriterionConfig& criterion);

/// tr(pev_pc) for the candidates selected by `genome` against the test rows.
double evaluate_fitness(
    const SubsetGenome& genome,
    const PCBasis& basis,
    const PopulationPartition& partition,
    const CriterionConfig& criterion);

/// Searches n_train-subsets of the candidates minimizing the PC criterion.
/// Deterministic in config.seed.
GAResult optimize(
    const PopulationPartition& partition,
    const PCBasis& basis,
    Index n_train,
    const GAConfig& config,
    const CriterionConfig& criterion);

struct OracleResult
{
    SubsetGenome best_genome;
    double best_fitness = 0.0;
    std::uint64_t evaluations = 0;
};

/// C(n, k) as a double (exact below 2^53).
double binomial_count(Index n, Index k);

/// Exact optimum by enumerating every n_train-subset. Throws RefusalError
/// when the subset count exceeds `limit`.
OracleResult exhaustive_oracle(
    const PopulationPartition& partition,
    const PCBasis& basis,
    Index n_train,
    const CriterionConfig& criterion,
    double limit = 1e6);

}  // namespace trainsel
