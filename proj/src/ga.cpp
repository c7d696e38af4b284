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

#include "trainsel/ga.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

void check_basis(const PopulationPartition& partition, const PCBasis& basis)
{
    if (basis.ids != partition.ids())
    {
        throw ContractError(
            "PC basis rows do not match the partitioned marker matrix");
    }
}

Eigen::MatrixXd leading(const Eigen::MatrixXd& scores, Index k)
{
    return scores.leftCols(k);
}

TraceEvaluator make_evaluator(
    const PopulationPartition& partition,
    const PCBasis& basis,
    Index n_train,
    const CriterionConfig& criterion)
{
    criterion.validate_for_pc();
    check_basis(partition, basis);
    const Index k = effective_components(basis, criterion);
    const Eigen::MatrixXd scores = leading(basis.scores, k);
    return {
        partition.candidate_block(scores),
        partition.test_block(scores),
        criterion.lambda,
        criterion.include_intercept,
        n_train};
}

std::string mask_key(const SubsetGenome& g)
{
    return {g.mask().begin(), g.mask().end()};
}

std::vector<std::size_t> rank_order(
    std::span<const SubsetGenome> population,
    std::span<const double> fitnesses)
{
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(
        order.begin(),
        order.end(),
        [&](std::size_t a, std::size_t b)
        {
            if (fitnesses[a] != fitnesses[b])
            {
                return fitnesses[a] < fitnesses[b];
            }
            return population[a] < population[b];
        });
    return order;
}

Index elite_count(double elite_fraction, std::size_t population)
{
    const double raw = elite_fraction * static_cast<double>(population);
    // Guard against 1/3 * 3 landing a hair above an integer.
    const auto n = static_cast<Index>(std::ceil(raw - 1e-9));
    return std::clamp<Index>(n, 1, static_cast<Index>(population));
}

void check_rate(double rate, const char* name)
{
    if (!(rate >= 0.0 && rate <= 1.0))
    {
        throw ContractError(fmt::format("{} must be in [0, 1], got {}", name, rate));
    }
}

struct StartResult
{
    SubsetGenome best;
    double fitness;
    std::vector<double> history;
    std::uint64_t evaluations;
};

StartResult run_start(
    const TraceEvaluator& evaluate,
    Index n_candidates,
    Index n_train,
    const GAConfig& config,
    Rng& rng)
{
    std::unordered_map<std::string, double> cache;
    std::uint64_t evaluations = 0;
    auto fitness_of = [&](const SubsetGenome& g)
    {
        auto key = mask_key(g);
        if (auto it = cache.find(key); it != cache.end())
        {
            return it->second;
        }
        const auto idx = g.indices();
        const double f = evaluate(idx);
        ++evaluations;
        cache.emplace(std::move(key), f);
        return f;
    };

    const auto pop_size = static_cast<std::size_t>(config.population_size);
    std::vector<SubsetGenome> population;
    population.reserve(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i)
    {
        population.push_back(SubsetGenome::random(n_candidates, n_train, rng));
    }
    std::vector<double> fitness;
    fitness.reserve(pop_size);
    for (const auto& g : population)
    {
        fitness.push_back(fitness_of(g));
    }

    const Index n_elite = std::min<Index>(
        elite_count(config.elite_fraction, pop_size),
        static_cast<Index>(pop_size));
    std::vector<double> history;
    double best_so_far = std::numeric_limits<double>::infinity();
    Index stale = 0;

    for (Index gen = 0; gen < config.n_generations; ++gen)
    {
        const auto order = rank_order(population, fitness);
        std::vector<SubsetGenome> next;
        std::vector<double> next_fitness;
        next.reserve(pop_size);
        next_fitness.reserve(pop_size);
        for (Index e = 0; e < n_elite; ++e)
        {
            next.push_back(population[order[static_cast<std::size_t>(e)]]);
            next_fitness.push_back(fitness[order[static_cast<std::size_t>(e)]]);
        }

        history.push_back(next_fitness.front());
        if (next_fitness.front() < best_so_far)
        {
            best_so_far = next_fitness.front();
            stale = 0;
        }
        else if (++stale >= config.convergence_patience)
        {
            population = std::move(next);
            fitness = std::move(next_fitness);
            break;
        }
        if (gen + 1 == config.n_generations)
        {
            population = std::move(next);
            fitness = std::move(next_fitness);
            break;
        }

        // All operator randomness is drawn before any child is evaluated.
        std::uniform_int_distribution<Index> pick(0, n_elite - 1);
        std::bernoulli_distribution do_cross(config.crossover_rate);
        while (next.size() < pop_size)
        {
            const auto& pa = next[static_cast<std::size_t>(pick(rng))];
            const auto& pb = next[static_cast<std::size_t>(pick(rng))];
            SubsetGenome child = do_cross(rng) ? crossover(pa, pb, rng) : pa;
            next.push_back(mutate(child, config.mutation_rate, rng));
            assert(next.back().cardinality() == n_train);
        }
        for (std::size_t c = static_cast<std::size_t>(n_elite); c < next.size(); ++c)
        {
            next_fitness.push_back(fitness_of(next[c]));
        }
        population = std::move(next);
        fitness = std::move(next_fitness);
    }

    // population[0] is the best elite of the last recorded generation.
    return {population.front(), history.back(), std::move(history), evaluations};
}

}  // namespace

SubsetGenome::SubsetGenome(std::vector<std::uint8_t> mask) : mask_(std::move(mask))
{
    for (auto& b : mask_)
    {
        if (b > 1)
        {
            throw ContractError("genome mask entries must be 0 or 1");
        }
        cardinality_ += b;
    }
}

SubsetGenome SubsetGenome::from_indices(Index length, std::span<const Index> selected)
{
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(length), 0);
    for (Index i : selected)
    {
        if (i < 0 || i >= length)
        {
            throw ContractError(fmt::format("index {} outside genome of length {}", i, length));
        }
        if (mask[static_cast<std::size_t>(i)] != 0)
        {
            throw ContractError(fmt::format("index {} selected twice", i));
        }
        mask[static_cast<std::size_t>(i)] = 1;
    }
    return SubsetGenome(std::move(mask));
}

SubsetGenome SubsetGenome::random(Index length, Index cardinality, Rng& rng)
{
    if (cardinality < 0 || cardinality > length)
    {
        throw ContractError(fmt::format(
            "cannot select {} of {} candidates", cardinality, length));
    }
    std::vector<Index> pool(static_cast<std::size_t>(length));
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates.
    for (Index i = 0; i < cardinality; ++i)
    {
        std::uniform_int_distribution<Index> d(i, length - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(d(rng))]);
    }
    return from_indices(length, std::span(pool).first(static_cast<std::size_t>(cardinality)));
}

std::vector<Index> SubsetGenome::indices() const
{
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(cardinality_));
    for (std::size_t i = 0; i < mask_.size(); ++i)
    {
        if (mask_[i] != 0)
        {
            out.push_back(static_cast<Index>(i));
        }
    }
    return out;
}

void GAConfig::validate() const
{
    if (population_size < 2)
    {
        throw ContractError(fmt::format(
            "population_size must be >= 2, got {}", population_size));
    }
    if (n_generations < 1)
    {
        throw ContractError(fmt::format(
            "n_generations must be >= 1, got {}", n_generations));
    }
    if (!(elite_fraction > 0.0 && elite_fraction < 1.0))
    {
        throw ContractError(fmt::format(
            "elite_fraction must be in (0, 1), got {}", elite_fraction));
    }
    check_rate(mutation_rate, "mutation_rate");
    check_rate(crossover_rate, "crossover_rate");
    if (convergence_patience < 1)
    {
        throw ContractError(fmt::format(
            "convergence_patience must be >= 1, got {}", convergence_patience));
    }
    if (n_starts < 1)
    {
        throw ContractError(fmt::format("n_starts must be >= 1, got {}", n_starts));
    }
}

SubsetGenome crossover(const SubsetGenome& a, const SubsetGenome& b, Rng& rng)
{
    if (a.length() != b.length())
    {
        throw ContractError(fmt::format(
            "crossover parents have lengths {} and {}", a.length(), b.length()));
    }
    if (a.cardinality() != b.cardinality())
    {
        throw ContractError(fmt::format(
            "crossover parents have cardinalities {} and {}",
            a.cardinality(),
            b.cardinality()));
    }
    std::vector<std::uint8_t> child(static_cast<std::size_t>(a.length()), 0);
    std::vector<Index> differ;
    Index common = 0;
    for (Index i = 0; i < a.length(); ++i)
    {
        const bool sa = a.selected(i);
        const bool sb = b.selected(i);
        if (sa && sb)
        {
            child[static_cast<std::size_t>(i)] = 1;
            ++common;
        }
        else if (sa || sb)
        {
            differ.push_back(i);
        }
    }
    const Index need = a.cardinality() - common;
    const auto pool = static_cast<Index>(differ.size());
    for (Index i = 0; i < need; ++i)
    {
        std::uniform_int_distribution<Index> d(i, pool - 1);
        std::swap(differ[static_cast<std::size_t>(i)], differ[static_cast<std::size_t>(d(rng))]);
        child[static_cast<std::size_t>(differ[static_cast<std::size_t>(i)])] = 1;
    }
    SubsetGenome out(std::move(child));
    assert(out.cardinality() == a.cardinality());
    return out;
}

SubsetGenome mutate(const SubsetGenome& genome, double rate, Rng& rng)
{
    check_rate(rate, "mutation rate");
    if (rate == 0.0 || genome.cardinality() == genome.length())
    {
        return genome;
    }
    std::vector<std::uint8_t> mask = genome.mask();
    std::vector<Index> unselected;
    unselected.reserve(static_cast<std::size_t>(genome.length() - genome.cardinality()));
    for (Index i = 0; i < genome.length(); ++i)
    {
        if (!genome.selected(i))
        {
            unselected.push_back(i);
        }
    }
    std::bernoulli_distribution flip(rate);
    std::uniform_int_distribution<std::size_t> pick(0, unselected.size() - 1);
    for (Index s : genome.indices())
    {
        if (!flip(rng))
        {
            continue;
        }
        const std::size_t j = pick(rng);
        const Index u = unselected[j];
        mask[static_cast<std::size_t>(s)] = 0;
        mask[static_cast<std::size_t>(u)] = 1;
        unselected[j] = s;
    }
    SubsetGenome out(std::move(mask));
    assert(out.cardinality() == genome.cardinality());
    return out;
}

std::vector<SubsetGenome> select_elites(
    std::span<const SubsetGenome> population,
    std::span<const double> fitnesses,
    double elite_fraction)
{
    if (population.size() != fitnesses.size())
    {
        throw ContractError(fmt::format(
            "{} genomes but {} fitness values", population.size(), fitnesses.size()));
    }
    if (population.empty())
    {
        return {};
    }
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0))
    {
        throw ContractError(fmt::format(
            "elite_fraction must be in (0, 1], got {}", elite_fraction));
    }
    const auto order = rank_order(population, fitnesses);
    const Index n = elite_count(elite_fraction, population.size());
    std::vector<SubsetGenome> out;
    out.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
    {
        out.push_back(population[order[static_cast<std::size_t>(i)]]);
    }
    return out;
}

Index effective_components(const PCBasis& basis, const CriterionConfig& criterion)
{
    if (criterion.k == 0)
    {
        return basis.k();
    }
    if (criterion.k > basis.k())
    {
        throw ContractError(fmt::format(
            "criterion asks for {} components but the basis has {}",
            criterion.k,
            basis.k()));
    }
    return criterion.k;
}

double evaluate_fitness(
    const SubsetGenome& genome,
    const PCBasis& basis,
    const PopulationPartition& partition,
    const CriterionConfig& criterion)
{
    criterion.validate_for_pc();
    check_basis(partition, basis);
    if (genome.length() != partition.n_candidates())
    {
        throw ContractError(fmt::format(
            "genome length {} does not match {} candidates",
            genome.length(),
            partition.n_candidates()));
    }
    const Index k = effective_components(basis, criterion);
    std::vector<Index> rows;
    for (Index i : genome.indices())
    {
        rows.push_back(partition.candidate_rows()[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd scores = leading(basis.scores, k);
    return criterion_trace(pev_pc(
        select_rows(scores, rows),
        partition.test_block(scores),
        criterion.lambda,
        criterion.include_intercept));
}

GAResult optimize(
    const PopulationPartition& partition,
    const PCBasis& basis,
    Index n_train,
    const GAConfig& config,
    const CriterionConfig& criterion)
{
    config.validate();
    if (n_train < 1)
    {
        throw ContractError(fmt::format("n_train must be >= 1, got {}", n_train));
    }
    if (n_train > partition.n_candidates())
    {
        throw ContractError(fmt::format(
            "n_train {} exceeds the {} candidates", n_train, partition.n_candidates()));
    }
    const TraceEvaluator evaluate = make_evaluator(partition, basis, n_train, criterion);

    if (n_train == partition.n_candidates())
    {
        // Forced selection: the only feasible subset.
        std::vector<std::uint8_t> all(static_cast<std::size_t>(n_train), 1);
        SubsetGenome g(std::move(all));
        const double f = evaluate(g.indices());
        return {g, f, {f}, 1};
    }

    std::optional<StartResult> best;
    std::uint64_t evaluations = 0;
    for (Index start = 0; start < config.n_starts; ++start)
    {
        std::seed_seq seq{
            static_cast<std::uint32_t>(config.seed & 0xffffffffu),
            static_cast<std::uint32_t>(config.seed >> 32),
            static_cast<std::uint32_t>(start)};
        Rng rng(seq);
        StartResult r = run_start(evaluate, partition.n_candidates(), n_train, config, rng);
        evaluations += r.evaluations;
        if (!best || r.fitness < best->fitness)
        {
            best = std::move(r);
        }
    }
    return {best->best, best->fitness, std::move(best->history), evaluations};
}

double binomial_count(Index n, Index k)
{
    if (k < 0 || k > n)
    {
        return 0.0;
    }
    k = std::min(k, n - k);
    double c = 1.0;
    for (Index i = 1; i <= k; ++i)
    {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(c);
}

OracleResult exhaustive_oracle(
    const PopulationPartition& partition,
    const PCBasis& basis,
    Index n_train,
    const CriterionConfig& criterion,
    double limit)
{
    const Index n = partition.n_candidates();
    if (n_train < 1 || n_train > n)
    {
        throw ContractError(fmt::format(
            "cannot select {} of {} candidates", n_train, n));
    }
    const double count = binomial_count(n, n_train);
    if (count > limit)
    {
        throw RefusalError(
            fmt::format(
                "exhaustive search over {} subsets exceeds the limit of {}",
                count,
                limit),
            count);
    }
    const TraceEvaluator evaluate = make_evaluator(partition, basis, n_train, criterion);

    std::vector<Index> idx(static_cast<std::size_t>(n_train));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::optional<SubsetGenome> best;
    double best_fitness = std::numeric_limits<double>::infinity();
    std::uint64_t evaluations = 0;
    const auto k = static_cast<std::size_t>(n_train);

    while (true)
    {
        const double f = evaluate(idx);
        ++evaluations;
        if (f < best_fitness)
        {
            best_fitness = f;
            best = SubsetGenome::from_indices(n, idx);
        }
        else if (f == best_fitness)
        {
            auto g = SubsetGenome::from_indices(n, idx);
            if (g < *best)
            {
                best = std::move(g);
            }
        }

        // Advance to the next combination in lexicographic order.
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - static_cast<Index>(k - i + 1))
        {
            --i;
        }
        if (i == 0)
        {
            break;
        }
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j)
        {
            idx[j] = idx[j - 1] + 1;
        }
    }
    return {*best, best_fitness, evaluations};
}

}  // namespace trainsel
