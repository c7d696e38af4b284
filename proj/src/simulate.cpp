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

#include "trainsel/simulate.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

double draw_beta(double a, double b, std::mt19937_64& rng)
{
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    if (x + y == 0.0)
    {
        return 0.5;
    }
    return x / (x + y);
}

}  // namespace

void SimulationSpec::validate() const
{
    if (n_individuals < 2 || n_markers < 1)
    {
        throw ContractError("simulation needs at least 2 individuals and 1 marker");
    }
    if (n_clusters < 1 || n_clusters > n_individuals)
    {
        throw ContractError(fmt::format(
            "simulation cluster count {} outside [1, {}]", n_clusters, n_individuals));
    }
    if (!(divergence >= 0.0 && divergence < 1.0))
    {
        throw ContractError(fmt::format("divergence must be in [0, 1), got {}", divergence));
    }
    if (n_qtl < 1 || n_qtl > n_markers)
    {
        throw ContractError(fmt::format(
            "n_qtl must be in [1, n_markers = {}], got {}", n_markers, n_qtl));
    }
    if (!(h2 > 0.0 && h2 < 1.0))
    {
        throw ContractError(fmt::format("h2 must be in (0, 1), got {}", h2));
    }
}

SimulatedData simulate_data(const SimulationSpec& spec, std::uint64_t seed)
{
    spec.validate();
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32),
        0x5eedu};
    std::mt19937_64 rng(seq);

    const Index n = spec.n_individuals;
    const Index m = spec.n_markers;
    const Index c = spec.n_clusters;

    std::uniform_real_distribution<double> base_dist(0.05, 0.95);
    Eigen::VectorXd base(m);
    for (Index j = 0; j < m; ++j)
    {
        base[j] = base_dist(rng);
    }

    Eigen::MatrixXd freq(c, m);
    for (Index k = 0; k < c; ++k)
    {
        for (Index j = 0; j < m; ++j)
        {
            if (spec.divergence == 0.0)
            {
                freq(k, j) = base[j];
                continue;
            }
            const double s = (1.0 - spec.divergence) / spec.divergence;
            freq(k, j) = draw_beta(base[j] * s, (1.0 - base[j]) * s, rng);
        }
    }

    std::vector<std::string> ids;
    std::vector<int> labels;
    ids.reserve(static_cast<std::size_t>(n));
    Eigen::MatrixXd dosage(n, m);
    for (Index i = 0; i < n; ++i)
    {
        const auto k = static_cast<int>(i % c);
        ids.push_back(fmt::format("ind{:04d}", i + 1));
        labels.push_back(k + 1);
        for (Index j = 0; j < m; ++j)
        {
            std::binomial_distribution<int> allele(2, freq(k, j));
            dosage(i, j) = allele(rng);
        }
    }

    std::vector<Index> markers(static_cast<std::size_t>(m));
    std::iota(markers.begin(), markers.end(), Index{0});
    std::shuffle(markers.begin(), markers.end(), rng);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Index q = 0; q < spec.n_qtl; ++q)
    {
        g += stdnorm(rng) * dosage.col(markers[static_cast<std::size_t>(q)]);
    }
    g.array() -= g.mean();
    const double var_g = g.squaredNorm() / static_cast<double>(n);
    const double sd_e = std::sqrt(var_g * (1.0 - spec.h2) / spec.h2);
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i)
    {
        y[i] = g[i] + sd_e * stdnorm(rng);
    }

    std::map<std::string, long> years;
    for (Index i = 0; i < n; ++i)
    {
        years[ids[static_cast<std::size_t>(i)]] =
            spec.first_year + labels[static_cast<std::size_t>(i)] - 1;
    }

    ClusterAssignment clusters{ids, labels, static_cast<int>(c)};
    return {
        MarkerMatrix(ids, dosage),
        PhenotypeVector(ids, y, "trait"),
        std::move(clusters),
        std::move(years),
        std::move(g),
        std::move(freq)};
}

}  // namespace trainsel
