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

#include "trainsel/experiment.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trainsel/errors.h"
#include "trainsel/gblup.h"
#include "trainsel/io.h"
#include "trainsel/kinship.h"
#include "trainsel/partition.h"
#include "trainsel/pca.h"

namespace trainsel
{

namespace
{

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void rethrow_with_context(const std::string& ctx)
{
    try
    {
        throw;
    }
    catch (const RefusalError& e)
    {
        throw RefusalError(ctx + e.what(), e.count());
    }
    catch (const FormatError& e)
    {
        throw FormatError(ctx + e.what(), e.line(), e.column());
    }
    catch (const DegenerateInputError& e)
    {
        throw DegenerateInputError(ctx + e.what());
    }
    catch (const IoError& e)
    {
        throw IoError(ctx + e.what());
    }
    catch (const DataError& e)
    {
        throw DataError(ctx + e.what());
    }
    catch (const ContractError& e)
    {
        throw ContractError(ctx + e.what());
    }
    catch (const NumericalError& e)
    {
        throw NumericalError(ctx + e.what());
    }
    catch (const std::exception& e)
    {
        throw std::runtime_error(ctx + e.what());
    }
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint32_t> keys)
{
    std::vector<std::uint32_t> words{
        static_cast<std::uint32_t>(master & 0xffffffffu),
        static_cast<std::uint32_t>(master >> 32)};
    words.insert(words.end(), keys.begin(), keys.end());
    std::seed_seq seq(words.begin(), words.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Test pool and candidate pool for one scenario unit, as marker rows.
struct Unit
{
    std::string name;
    std::vector<Index> test_pool;
    std::vector<Index> candidate_pool;
    // Candidate must satisfy this relative to the unit for integrity checks.
    std::optional<long> test_year;
    std::optional<int> test_cluster;
};

struct Job
{
    std::vector<std::size_t> traits;
    std::size_t unit = 0;
    Index replication = 0;
    std::uint32_t trait_key = 0;
};

struct Context
{
    const ExperimentConfig& config;
    const MarkerMatrix& markers;
    const PCBasis& basis;
    const KinshipMatrix& kin;
    const std::vector<PhenotypeVector>& traits;
    const std::map<std::string, long>& years;
    const std::optional<ClusterAssignment>& clusters;
    CriterionConfig criterion;
};

std::vector<std::string> ids_of(const MarkerMatrix& m, const std::vector<Index>& rows)
{
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (Index r : rows)
    {
        out.push_back(m.ids()[static_cast<std::size_t>(r)]);
    }
    return out;
}

std::vector<Index> sample_rows(const std::vector<Index>& pool, Index count, Rng& rng)
{
    const auto genome = SubsetGenome::random(static_cast<Index>(pool.size()), count, rng);
    std::vector<Index> out;
    for (Index i : genome.indices())
    {
        out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<Unit> build_units(
    const ExperimentConfig& config,
    const MarkerMatrix& markers,
    const std::vector<Index>& universe,
    const std::map<std::string, long>& years,
    const std::optional<ClusterAssignment>& clusters)
{
    std::vector<Unit> units;
    switch (config.scenario)
    {
        case Scenario::RandomSplit:
        {
            units.push_back({"all", universe, {}, std::nullopt, std::nullopt});
            break;
        }
        case Scenario::TemporalSplit:
        {
            std::map<long, std::vector<Index>> by_year;
            for (Index r : universe)
            {
                const auto& id = markers.ids()[static_cast<std::size_t>(r)];
                auto it = years.find(id);
                if (it == years.end())
                {
                    throw DataError(fmt::format("no year recorded for '{}'", id));
                }
                by_year[it->second].push_back(r);
            }
            std::vector<long> test_years = config.test_years;
            if (test_years.empty())
            {
                for (const auto& [y, rows] : by_year)
                {
                    if (y != by_year.begin()->first)
                    {
                        test_years.push_back(y);
                    }
                }
            }
            for (long y : test_years)
            {
                Unit u;
                u.name = fmt::format("year={}", y);
                u.test_year = y;
                if (auto it = by_year.find(y); it != by_year.end())
                {
                    u.test_pool = it->second;
                }
                for (const auto& [yy, rows] : by_year)
                {
                    if (yy < y)
                    {
                        u.candidate_pool.insert(u.candidate_pool.end(), rows.begin(), rows.end());
                    }
                }
                std::sort(u.candidate_pool.begin(), u.candidate_pool.end());
                units.push_back(std::move(u));
            }
            break;
        }
        case Scenario::CrossCluster:
        {
            for (int c = 1; c <= clusters->n_clusters; ++c)
            {
                Unit u;
                u.name = fmt::format("cluster={}", c);
                u.test_cluster = c;
                for (Index r : universe)
                {
                    if (clusters->labels[static_cast<std::size_t>(r)] == c)
                    {
                        u.test_pool.push_back(r);
                    }
                    else
                    {
                        u.candidate_pool.push_back(r);
                    }
                }
                units.push_back(std::move(u));
            }
            break;
        }
    }
    for (const auto& u : units)
    {
        if (static_cast<Index>(u.test_pool.size()) < config.n_test)
        {
            throw ContractError(fmt::format(
                "{}: test pool has {} individuals, fewer than n_test = {}",
                u.name,
                u.test_pool.size(),
                config.n_test));
        }
    }
    return units;
}

void check_integrity(
    const Context& ctx,
    const Unit& unit,
    const std::vector<Index>& test,
    const std::vector<Index>& train)
{
    std::unordered_set<Index> test_set(test.begin(), test.end());
    for (Index r : train)
    {
        const auto& id = ctx.markers.ids()[static_cast<std::size_t>(r)];
        if (test_set.contains(r))
        {
            throw std::logic_error(fmt::format("integrity: '{}' is in both training and test", id));
        }
        if (unit.test_year && ctx.years.at(id) >= *unit.test_year)
        {
            throw std::logic_error(fmt::format(
                "integrity: training id '{}' has year {} >= test year {}",
                id,
                ctx.years.at(id),
                *unit.test_year));
        }
        if (unit.test_cluster
            && ctx.clusters->labels[static_cast<std::size_t>(r)] == *unit.test_cluster)
        {
            throw std::logic_error(fmt::format(
                "integrity: training id '{}' shares test cluster {}", id, *unit.test_cluster));
        }
    }
}

struct FitSummary
{
    double accuracy = kNaN;
    double sigma_g2 = kNaN;
    double sigma_e2 = kNaN;
    double loglik = kNaN;
};

FitSummary fit_and_score(
    const Context& ctx,
    const PhenotypeVector& trait,
    const std::vector<std::string>& train_ids,
    const std::vector<std::string>& test_ids)
{
    // Kinship over train and test only; computed from all markers.
    std::vector<std::string> both = train_ids;
    both.insert(both.end(), test_ids.begin(), test_ids.end());
    const KinshipMatrix k = ctx.kin.subset(both);
    const MixedModelFit fit = fit_spmm(trait, k, train_ids);
    FitSummary s;
    s.sigma_g2 = fit.sigma_g2;
    s.sigma_e2 = fit.sigma_e2;
    s.loglik = fit.log_likelihood;
    try
    {
        s.accuracy = accuracy(predict_gebv(fit, test_ids), trait).correlation;
    }
    catch (const DegenerateInputError& e)
    {
        spdlog::warn("accuracy undefined: {}", e.what());
    }
    return s;
}

std::vector<ComparisonRow> run_job(const Context& ctx, const std::vector<Unit>& units, const Job& job)
{
    const auto& config = ctx.config;
    const Unit& unit = units[job.unit];
    const std::uint64_t job_seed = derive_seed(
        config.seed,
        {job.trait_key,
         static_cast<std::uint32_t>(job.unit),
         static_cast<std::uint32_t>(job.replication)});
    Rng rng(job_seed);

    std::vector<Index> test = sample_rows(unit.test_pool, config.n_test, rng);
    std::vector<Index> candidates;
    if (config.scenario == Scenario::RandomSplit)
    {
        std::unordered_set<Index> t(test.begin(), test.end());
        for (Index r : unit.test_pool)
        {
            if (!t.contains(r))
            {
                candidates.push_back(r);
            }
        }
    }
    else
    {
        candidates = unit.candidate_pool;
    }

    const PopulationPartition part(ctx.markers.ids(), candidates, test);
    const auto test_ids = ids_of(ctx.markers, test);

    std::vector<ComparisonRow> rows;
    for (Index n_train : config.n_train)
    {
        if (n_train > part.n_candidates())
        {
            throw ContractError(fmt::format(
                "n_train {} exceeds the {} candidates", n_train, part.n_candidates()));
        }
        const SubsetGenome random_genome =
            SubsetGenome::random(part.n_candidates(), n_train, rng);
        GAConfig ga = config.ga;
        ga.seed = rng();
        const GAResult result = optimize(part, ctx.basis, n_train, ga, ctx.criterion);

        auto rows_for = [&](const SubsetGenome& g)
        {
            std::vector<Index> out;
            for (Index i : g.indices())
            {
                out.push_back(candidates[static_cast<std::size_t>(i)]);
            }
            return out;
        };
        const auto opt_rows = rows_for(result.best_genome);
        const auto rnd_rows = rows_for(random_genome);
        check_integrity(ctx, unit, test, opt_rows);
        check_integrity(ctx, unit, test, rnd_rows);
        const auto opt_ids = ids_of(ctx.markers, opt_rows);
        const auto rnd_ids = ids_of(ctx.markers, rnd_rows);

        const double crit_opt =
            evaluate_fitness(result.best_genome, ctx.basis, part, ctx.criterion);
        const double crit_rnd = evaluate_fitness(random_genome, ctx.basis, part, ctx.criterion);

        for (std::size_t t : job.traits)
        {
            const auto& trait = ctx.traits[t];
            const FitSummary fo = fit_and_score(ctx, trait, opt_ids, test_ids);
            const FitSummary fr = fit_and_score(ctx, trait, rnd_ids, test_ids);
            ComparisonRow row;
            row.scenario = std::string(to_string(config.scenario));
            row.group = unit.name;
            row.trait = trait.trait_name();
            row.n_train = n_train;
            row.replication = job.replication;
            row.seed = job_seed;
            row.accuracy_optimized = fo.accuracy;
            row.accuracy_random = fr.accuracy;
            row.criterion_optimized = crit_opt;
            row.criterion_random = crit_rnd;
            row.sigma_g2_optimized = fo.sigma_g2;
            row.sigma_e2_optimized = fo.sigma_e2;
            row.loglik_optimized = fo.loglik;
            row.sigma_g2_random = fr.sigma_g2;
            row.sigma_e2_random = fr.sigma_e2;
            row.loglik_random = fr.loglik;
            row.ga_evaluations = result.evaluations;
            row.test_ids = test_ids;
            row.train_ids_optimized = opt_ids;
            row.train_ids_random = rnd_ids;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double resolve_lambda(const ExperimentConfig& config, Index n_markers)
{
    if (config.lambda)
    {
        return *config.lambda;
    }
    if (config.h2)
    {
        return lambda_from_delta(delta_from_heritability(*config.h2), n_markers);
    }
    return 1.0;
}

std::string format_number(double v)
{
    if (std::isnan(v))
    {
        return std::string(kMissingToken);
    }
    return fmt::format("{}", v);
}

double parse_number(std::string_view s)
{
    if (s == kMissingToken)
    {
        return kNaN;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        throw FormatError(fmt::format("bad number '{}' in report", s), 0, 0);
    }
    return v;
}

template <typename T>
T parse_integer(std::string_view s)
{
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        throw FormatError(fmt::format("bad integer '{}' in report", s), 0, 0);
    }
    return v;
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where)
{
    if (!j.is_object())
    {
        throw ContractError(fmt::format("config: '{}' must be an object", where));
    }
    for (const auto& [key, value] : j.items())
    {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        {
            throw ContractError(fmt::format("config: unknown key '{}' in {}", key, where));
        }
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null())
    {
        out = j.at(key).get<T>();
    }
}

ordered_json simulation_to_json(const SimulationSpec& s)
{
    ordered_json j;
    j["n_individuals"] = s.n_individuals;
    j["n_markers"] = s.n_markers;
    j["n_clusters"] = s.n_clusters;
    j["divergence"] = s.divergence;
    j["n_qtl"] = s.n_qtl;
    j["h2"] = s.h2;
    j["first_year"] = s.first_year;
    return j;
}

SimulationSpec simulation_from_json(const json& j)
{
    check_keys(
        j,
        {"n_individuals", "n_markers", "n_clusters", "divergence", "n_qtl", "h2", "first_year"},
        "data.simulation");
    SimulationSpec s;
    read_if(j, "n_individuals", s.n_individuals);
    read_if(j, "n_markers", s.n_markers);
    read_if(j, "n_clusters", s.n_clusters);
    read_if(j, "divergence", s.divergence);
    read_if(j, "n_qtl", s.n_qtl);
    read_if(j, "h2", s.h2);
    read_if(j, "first_year", s.first_year);
    return s;
}

}  // namespace

std::string_view to_string(Scenario s)
{
    switch (s)
    {
        case Scenario::RandomSplit:
            return "random-split";
        case Scenario::TemporalSplit:
            return "temporal-split";
        case Scenario::CrossCluster:
            return "cross-cluster";
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view name)
{
    if (name == "random-split")
    {
        return Scenario::RandomSplit;
    }
    if (name == "temporal-split")
    {
        return Scenario::TemporalSplit;
    }
    if (name == "cross-cluster")
    {
        return Scenario::CrossCluster;
    }
    throw ContractError(fmt::format(
        "unknown scenario '{}' (expected random-split, temporal-split or cross-cluster)",
        name));
}

void ExperimentConfig::validate() const
{
    if (n_test < 3)
    {
        throw ContractError(fmt::format("n_test must be >= 3, got {}", n_test));
    }
    if (n_train.empty())
    {
        throw ContractError("n_train list is empty");
    }
    for (Index t : n_train)
    {
        if (t < 3)
        {
            throw ContractError(fmt::format("every n_train must be >= 3, got {}", t));
        }
    }
    if (n_replications < 1)
    {
        throw ContractError(fmt::format("n_replications must be >= 1, got {}", n_replications));
    }
    if (lambda && !(*lambda > 0.0))
    {
        throw ContractError(fmt::format("lambda must be > 0, got {}", *lambda));
    }
    if (h2 && !(*h2 > 0.0 && *h2 < 1.0))
    {
        throw ContractError(fmt::format("h2 must be in (0, 1), got {}", *h2));
    }
    if (k < 0)
    {
        throw ContractError(fmt::format("k must be >= 0, got {}", k));
    }
    ga.validate();
    if (n_clusters < 1)
    {
        throw ContractError(fmt::format("n_clusters must be >= 1, got {}", n_clusters));
    }
    if (threads < 1)
    {
        throw ContractError(fmt::format("threads must be >= 1, got {}", threads));
    }
    if (!data.simulation && (data.markers.empty() || data.phenotypes.empty()))
    {
        throw ContractError("data needs either a simulation spec or markers and phenotypes files");
    }
    if (data.simulation)
    {
        data.simulation->validate();
    }
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c)
{
    ordered_json data;
    data["simulation"] = c.data.simulation ? simulation_to_json(*c.data.simulation) : ordered_json();
    data["markers"] = c.data.markers;
    data["marker_format"] = c.data.marker_format;
    data["phenotypes"] = c.data.phenotypes;
    data["groups"] = c.data.groups;
    data["year_column"] = c.data.year_column;
    data["traits"] = c.data.traits;

    ordered_json ga;
    ga["population_size"] = c.ga.population_size;
    ga["n_generations"] = c.ga.n_generations;
    ga["elite_fraction"] = c.ga.elite_fraction;
    ga["mutation_rate"] = c.ga.mutation_rate;
    ga["crossover_rate"] = c.ga.crossover_rate;
    ga["convergence_patience"] = c.ga.convergence_patience;
    ga["n_starts"] = c.ga.n_starts;

    ordered_json j;
    j["data"] = std::move(data);
    j["scenario"] = std::string(to_string(c.scenario));
    j["n_test"] = c.n_test;
    j["n_train"] = c.n_train;
    j["n_replications"] = c.n_replications;
    j["lambda"] = c.lambda ? ordered_json(*c.lambda) : ordered_json();
    j["h2"] = c.h2 ? ordered_json(*c.h2) : ordered_json();
    j["k"] = c.k;
    j["include_intercept"] = c.include_intercept;
    j["ga"] = std::move(ga);
    j["n_clusters"] = c.n_clusters;
    j["test_years"] = c.test_years;
    j["shared_selection"] = c.shared_selection;
    j["seed"] = c.seed;
    j["report_ids"] = c.report_ids;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j)
{
    check_keys(
        j,
        {"data",
         "scenario",
         "n_test",
         "n_train",
         "n_replications",
         "lambda",
         "h2",
         "k",
         "include_intercept",
         "ga",
         "n_clusters",
         "test_years",
         "shared_selection",
         "seed",
         "threads",
         "report_ids"},
        "config");
    ExperimentConfig c;
    try
    {
        if (j.contains("data"))
        {
            const auto& d = j.at("data");
            check_keys(
                d,
                {"simulation",
                 "markers",
                 "marker_format",
                 "phenotypes",
                 "groups",
                 "year_column",
                 "traits"},
                "data");
            if (d.contains("simulation") && !d.at("simulation").is_null())
            {
                c.data.simulation = simulation_from_json(d.at("simulation"));
            }
            read_if(d, "markers", c.data.markers);
            read_if(d, "marker_format", c.data.marker_format);
            read_if(d, "phenotypes", c.data.phenotypes);
            read_if(d, "groups", c.data.groups);
            read_if(d, "year_column", c.data.year_column);
            read_if(d, "traits", c.data.traits);
        }
        if (j.contains("scenario"))
        {
            c.scenario = parse_scenario(j.at("scenario").get<std::string>());
        }
        read_if(j, "n_test", c.n_test);
        read_if(j, "n_train", c.n_train);
        read_if(j, "n_replications", c.n_replications);
        if (j.contains("lambda") && !j.at("lambda").is_null())
        {
            c.lambda = j.at("lambda").get<double>();
        }
        if (j.contains("h2") && !j.at("h2").is_null())
        {
            c.h2 = j.at("h2").get<double>();
        }
        read_if(j, "k", c.k);
        read_if(j, "include_intercept", c.include_intercept);
        if (j.contains("ga"))
        {
            const auto& g = j.at("ga");
            check_keys(
                g,
                {"population_size",
                 "n_generations",
                 "elite_fraction",
                 "mutation_rate",
                 "crossover_rate",
                 "convergence_patience",
                 "n_starts"},
                "ga");
            read_if(g, "population_size", c.ga.population_size);
            read_if(g, "n_generations", c.ga.n_generations);
            read_if(g, "elite_fraction", c.ga.elite_fraction);
            read_if(g, "mutation_rate", c.ga.mutation_rate);
            read_if(g, "crossover_rate", c.ga.crossover_rate);
            read_if(g, "convergence_patience", c.ga.convergence_patience);
            read_if(g, "n_starts", c.ga.n_starts);
        }
        read_if(j, "n_clusters", c.n_clusters);
        read_if(j, "test_years", c.test_years);
        read_if(j, "shared_selection", c.shared_selection);
        read_if(j, "seed", c.seed);
        read_if(j, "threads", c.threads);
        read_if(j, "report_ids", c.report_ids);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ContractError(fmt::format("config: {}", e.what()));
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError(fmt::format("cannot open config '{}'", path.string()));
    }
    json j;
    try
    {
        j = json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw FormatError(
            fmt::format("{}: {}", path.string(), e.what()), 0, e.byte);
    }
    return config_from_json(j);
}

Dataset load_dataset(const DataSource& source, std::uint64_t seed)
{
    if (source.simulation)
    {
        SimulatedData sim = simulate_data(*source.simulation, seed);
        return {std::move(sim.markers), {std::move(sim.phenotype)}, std::move(sim.years)};
    }
    MarkerMatrix markers = load_markers(source.markers, parse_marker_format(source.marker_format));
    std::vector<PhenotypeVector> traits = load_phenotypes(source.phenotypes);
    if (!source.traits.empty())
    {
        std::vector<PhenotypeVector> chosen;
        for (const auto& name : source.traits)
        {
            auto it = std::find_if(
                traits.begin(),
                traits.end(),
                [&](const PhenotypeVector& t) { return t.trait_name() == name; });
            if (it == traits.end())
            {
                throw DataError(fmt::format(
                    "trait '{}' not found in '{}'", name, source.phenotypes));
            }
            chosen.push_back(*it);
        }
        traits = std::move(chosen);
    }
    std::map<std::string, long> years;
    if (!source.groups.empty())
    {
        auto table = load_integer_table(source.groups);
        if (auto it = table.find(source.year_column); it != table.end())
        {
            years = std::move(it->second);
        }
    }
    return {std::move(markers), std::move(traits), std::move(years)};
}

ComparisonReport run_comparison(const ExperimentConfig& config)
{
    config.validate();
    const Dataset data = load_dataset(config.data, config.seed);
    return run_comparison(config, data);
}

ComparisonReport run_comparison(const ExperimentConfig& config, const Dataset& data)
{
    config.validate();
    if (data.traits.empty())
    {
        throw DataError("no traits to analyse");
    }
    const MarkerMatrix markers = center_scale(data.markers);
    if (!markers.dropped_markers().empty())
    {
        spdlog::warn(
            "dropped {} zero-variance markers: {}",
            markers.dropped_markers().size(),
            fmt::join(markers.dropped_markers(), ","));
    }

    CriterionConfig criterion;
    criterion.lambda = resolve_lambda(config, markers.n_markers());
    criterion.include_intercept = config.include_intercept;
    criterion.validate_for_pc();
    const PCBasis basis = config.k > 0 ? principal_components(markers, config.k)
                                       : principal_components(markers);
    const KinshipMatrix kin = kinship(markers);
    spdlog::info(
        "{} individuals, {} markers, {} components, lambda {}",
        markers.n_individuals(),
        markers.n_markers(),
        basis.k(),
        criterion.lambda);

    std::optional<ClusterAssignment> clusters;
    if (config.scenario == Scenario::CrossCluster)
    {
        clusters = ward_cluster(markers, config.n_clusters);
    }

    // Selection universes: one per trait, or a single shared one.
    struct Universe
    {
        std::vector<std::size_t> traits;
        std::uint32_t key;
        std::vector<Index> rows;
    };
    std::vector<Universe> universes;
    auto observed_rows = [&](const std::vector<std::size_t>& traits)
    {
        std::vector<Index> rows;
        for (Index r = 0; r < markers.n_individuals(); ++r)
        {
            const auto& id = markers.ids()[static_cast<std::size_t>(r)];
            const bool all = std::all_of(
                traits.begin(),
                traits.end(),
                [&](std::size_t t) { return data.traits[t].contains(id); });
            if (all)
            {
                rows.push_back(r);
            }
        }
        return rows;
    };
    if (config.shared_selection)
    {
        std::vector<std::size_t> all(data.traits.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        universes.push_back({all, 0xffffffffu, observed_rows(all)});
    }
    else
    {
        for (std::size_t t = 0; t < data.traits.size(); ++t)
        {
            universes.push_back({{t}, static_cast<std::uint32_t>(t), observed_rows({t})});
        }
    }

    Context ctx{config, markers, basis, kin, data.traits, data.years, clusters, criterion};

    std::vector<std::vector<Unit>> units;
    std::vector<std::pair<std::size_t, Job>> jobs;
    for (std::size_t u = 0; u < universes.size(); ++u)
    {
        units.push_back(build_units(config, markers, universes[u].rows, data.years, clusters));
        for (std::size_t unit = 0; unit < units.back().size(); ++unit)
        {
            for (Index r = 0; r < config.n_replications; ++r)
            {
                jobs.push_back({u, Job{universes[u].traits, unit, r, universes[u].key}});
            }
        }
    }

    std::vector<std::vector<ComparisonRow>> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]
    {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
        {
            const auto& [u, job] = jobs[i];
            try
            {
                results[i] = run_job(ctx, units[u], job);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(
        std::min<Index>(config.threads, static_cast<Index>(jobs.size())));
    if (n_threads <= 1)
    {
        worker();
    }
    else
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t)
        {
            pool.emplace_back(worker);
        }
    }

    ComparisonReport report;
    report.config = config;
    report.n_markers = markers.n_markers();
    report.n_components = basis.k();
    report.lambda = criterion.lambda;
    for (std::size_t i = 0; i < jobs.size(); ++i)
    {
        if (errors[i])
        {
            const auto& [u, job] = jobs[i];
            try
            {
                std::rethrow_exception(errors[i]);
            }
            catch (...)
            {
                rethrow_with_context(fmt::format(
                    "{} replication {}: ",
                    units[u][job.unit].name,
                    job.replication));
            }
        }
        for (auto& row : results[i])
        {
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::vector<ComparisonSummary> ComparisonReport::summarize() const
{
    struct Acc
    {
        ComparisonSummary s;
        std::vector<double> diffs;
        Index wins = 0;
        Index total = 0;
    };
    std::vector<Acc> cells;
    auto cell_for = [&](const std::string& group, const std::string& trait, Index n_train) -> Acc&
    {
        for (auto& c : cells)
        {
            if (c.s.group == group && c.s.trait == trait && c.s.n_train == n_train)
            {
                return c;
            }
        }
        Acc a;
        a.s.group = group;
        a.s.trait = trait;
        a.s.n_train = n_train;
        cells.push_back(std::move(a));
        return cells.back();
    };

    for (const auto& r : rows)
    {
        for (int pooled = 0; pooled < 2; ++pooled)
        {
            Acc& a = pooled == 0 ? cell_for(r.group, r.trait, r.n_train)
                                 : cell_for("*", "*", r.n_train);
            ++a.total;
            if (r.criterion_optimized <= r.criterion_random)
            {
                ++a.wins;
            }
            if (std::isfinite(r.accuracy_optimized) && std::isfinite(r.accuracy_random))
            {
                a.s.mean_accuracy_optimized += r.accuracy_optimized;
                a.s.mean_accuracy_random += r.accuracy_random;
                a.diffs.push_back(r.accuracy_optimized - r.accuracy_random);
            }
        }
    }

    std::vector<ComparisonSummary> out;
    for (auto& a : cells)
    {
        a.s.n_valid = static_cast<Index>(a.diffs.size());
        a.s.criterion_win_rate =
            a.total > 0 ? static_cast<double>(a.wins) / static_cast<double>(a.total) : kNaN;
        if (a.diffs.empty())
        {
            a.s.mean_accuracy_optimized = kNaN;
            a.s.mean_accuracy_random = kNaN;
            a.s.mean_difference = kNaN;
            a.s.median_difference = kNaN;
        }
        else
        {
            const auto n = static_cast<double>(a.diffs.size());
            a.s.mean_accuracy_optimized /= n;
            a.s.mean_accuracy_random /= n;
            a.s.mean_difference = std::accumulate(a.diffs.begin(), a.diffs.end(), 0.0) / n;
            std::sort(a.diffs.begin(), a.diffs.end());
            const std::size_t mid = a.diffs.size() / 2;
            a.s.median_difference = a.diffs.size() % 2 == 1
                                        ? a.diffs[mid]
                                        : 0.5 * (a.diffs[mid - 1] + a.diffs[mid]);
        }
        out.push_back(a.s);
    }
    // Pooled rows last.
    std::stable_partition(
        out.begin(), out.end(), [](const ComparisonSummary& s) { return s.group != "*"; });
    return out;
}

ReportFormat parse_report_format(std::string_view name)
{
    if (name == "json")
    {
        return ReportFormat::Json;
    }
    if (name == "csv")
    {
        return ReportFormat::Csv;
    }
    throw ContractError(fmt::format("unknown report format '{}' (expected json or csv)", name));
}

namespace
{

constexpr std::array kCsvColumns{
    "scenario",
    "group",
    "trait",
    "n_train",
    "replication",
    "seed",
    "accuracy_optimized",
    "accuracy_random",
    "criterion_optimized",
    "criterion_random",
    "sigma_g2_optimized",
    "sigma_e2_optimized",
    "loglik_optimized",
    "sigma_g2_random",
    "sigma_e2_random",
    "loglik_random",
    "ga_evaluations"};

}  // namespace

std::string report_to_csv(const ComparisonReport& report)
{
    std::string out = fmt::format("{}\n", fmt::join(kCsvColumns, ","));
    for (const auto& r : report.rows)
    {
        out += fmt::format(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.group,
            r.trait,
            r.n_train,
            r.replication,
            r.seed,
            format_number(r.accuracy_optimized),
            format_number(r.accuracy_random),
            format_number(r.criterion_optimized),
            format_number(r.criterion_random),
            format_number(r.sigma_g2_optimized),
            format_number(r.sigma_e2_optimized),
            format_number(r.loglik_optimized),
            format_number(r.sigma_g2_random),
            format_number(r.sigma_e2_random),
            format_number(r.loglik_random),
            r.ga_evaluations);
    }
    return out;
}

std::vector<ComparisonRow> rows_from_csv(std::string_view csv)
{
    std::vector<ComparisonRow> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < csv.size())
    {
        auto end = csv.find('\n', start);
        if (end == std::string_view::npos)
        {
            end = csv.size();
        }
        const std::string_view line = csv.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty())
        {
            continue;
        }
        std::vector<std::string_view> f;
        std::size_t s = 0;
        while (true)
        {
            const auto p = line.find(',', s);
            f.push_back(line.substr(s, p == std::string_view::npos ? std::string_view::npos : p - s));
            if (p == std::string_view::npos)
            {
                break;
            }
            s = p + 1;
        }
        if (f.size() != kCsvColumns.size())
        {
            throw FormatError(
                fmt::format("report line {}: expected {} fields, found {}", line_no, kCsvColumns.size(), f.size()),
                line_no,
                std::min(f.size(), kCsvColumns.size()) + 1);
        }
        if (line_no == 1)
        {
            for (std::size_t c = 0; c < f.size(); ++c)
            {
                if (f[c] != kCsvColumns[c])
                {
                    throw FormatError(
                        fmt::format("report header column {} is '{}'", c + 1, f[c]), 1, c + 1);
                }
            }
            continue;
        }
        ComparisonRow r;
        r.scenario = f[0];
        r.group = f[1];
        r.trait = f[2];
        r.n_train = parse_integer<Index>(f[3]);
        r.replication = parse_integer<Index>(f[4]);
        r.seed = parse_integer<std::uint64_t>(f[5]);
        r.accuracy_optimized = parse_number(f[6]);
        r.accuracy_random = parse_number(f[7]);
        r.criterion_optimized = parse_number(f[8]);
        r.criterion_random = parse_number(f[9]);
        r.sigma_g2_optimized = parse_number(f[10]);
        r.sigma_e2_optimized = parse_number(f[11]);
        r.loglik_optimized = parse_number(f[12]);
        r.sigma_g2_random = parse_number(f[13]);
        r.sigma_e2_random = parse_number(f[14]);
        r.loglik_random = parse_number(f[15]);
        r.ga_evaluations = parse_integer<std::uint64_t>(f[16]);
        rows.push_back(std::move(r));
    }
    return rows;
}

nlohmann::ordered_json report_to_json(const ComparisonReport& report)
{
    ordered_json j;
    j["config"] = config_to_json(report.config);

    ordered_json resolved;
    resolved["n_markers"] = report.n_markers;
    resolved["n_components"] = report.n_components;
    resolved["lambda"] = report.lambda;
    j["resolved"] = std::move(resolved);

    ordered_json seeds;
    seeds["master"] = report.config.seed;
    std::vector<std::uint64_t> job_seeds;
    std::set<std::uint64_t> seen;
    for (const auto& r : report.rows)
    {
        if (seen.insert(r.seed).second)
        {
            job_seeds.push_back(r.seed);
        }
    }
    seeds["replications"] = job_seeds;
    j["seeds"] = std::move(seeds);

    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows)
    {
        ordered_json o;
        o["scenario"] = r.scenario;
        o["group"] = r.group;
        o["trait"] = r.trait;
        o["n_train"] = r.n_train;
        o["replication"] = r.replication;
        o["seed"] = r.seed;
        o["accuracy_optimized"] = r.accuracy_optimized;
        o["accuracy_random"] = r.accuracy_random;
        o["criterion_optimized"] = r.criterion_optimized;
        o["criterion_random"] = r.criterion_random;
        ordered_json fo;
        fo["sigma_g2"] = r.sigma_g2_optimized;
        fo["sigma_e2"] = r.sigma_e2_optimized;
        fo["log_likelihood"] = r.loglik_optimized;
        o["fit_optimized"] = std::move(fo);
        ordered_json fr;
        fr["sigma_g2"] = r.sigma_g2_random;
        fr["sigma_e2"] = r.sigma_e2_random;
        fr["log_likelihood"] = r.loglik_random;
        o["fit_random"] = std::move(fr);
        o["ga_evaluations"] = r.ga_evaluations;
        if (report.config.report_ids)
        {
            o["test_ids"] = r.test_ids;
            o["train_ids_optimized"] = r.train_ids_optimized;
            o["train_ids_random"] = r.train_ids_random;
        }
        rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);

    ordered_json summary = ordered_json::array();
    for (const auto& s : report.summarize())
    {
        ordered_json o;
        o["group"] = s.group;
        o["trait"] = s.trait;
        o["n_train"] = s.n_train;
        o["n_valid"] = s.n_valid;
        o["mean_accuracy_optimized"] = s.mean_accuracy_optimized;
        o["mean_accuracy_random"] = s.mean_accuracy_random;
        o["mean_difference"] = s.mean_difference;
        o["median_difference"] = s.median_difference;
        o["criterion_win_rate"] = s.criterion_win_rate;
        summary.push_back(std::move(o));
    }
    j["summary"] = std::move(summary);
    return j;
}

void emit_report(
    const ComparisonReport& report,
    const std::filesystem::path& path,
    ReportFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    }
    if (format == ReportFormat::Csv)
    {
        out << report_to_csv(report);
    }
    else
    {
        out << report_to_json(report).dump(2) << '\n';
    }
    if (!out)
    {
        throw IoError(fmt::format("write to '{}' failed", path.string()));
    }
}

}  // namespace trainsel
