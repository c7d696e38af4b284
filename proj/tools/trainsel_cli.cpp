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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "trainsel/cluster.h"
#include "trainsel/errors.h"
#include "trainsel/experiment.h"
#include "trainsel/ga.h"
#include "trainsel/io.h"
#include "trainsel/partition.h"
#include "trainsel/pca.h"
#include "trainsel/simulate.h"

namespace
{

using namespace trainsel;
using nlohmann::json;

/// Optional leaf flags; a set flag becomes a JSON merge-patch entry.
template <typename T>
struct Flag
{
    std::optional<T> value;
    std::vector<std::string> path;
};

class Overrides
{
   public:
    template <typename T>
    void add(CLI::App* app, const std::string& name, std::vector<std::string> path, const std::string& help)
    {
        auto& slot = slots_.emplace_back();
        auto holder = std::make_shared<Flag<T>>();
        holder->path = std::move(path);
        app->add_option("--" + name, holder->value, help);
        slot = [holder](json& patch)
        {
            if (holder->value)
            {
                json* node = &patch;
                for (const auto& key : holder->path)
                {
                    node = &(*node)[key];
                }
                *node = *holder->value;
            }
        };
    }

    json patch() const
    {
        json p = json::object();
        for (const auto& s : slots_)
        {
            s(p);
        }
        return p;
    }

   private:
    std::vector<std::function<void(json&)>> slots_;
};

void add_ga_flags(CLI::App* app, Overrides& o, const std::string& prefix_key)
{
    auto path = [&](const char* leaf)
    {
        std::vector<std::string> p;
        if (!prefix_key.empty())
        {
            p.push_back(prefix_key);
        }
        p.emplace_back(leaf);
        return p;
    };
    o.add<long>(app, "population_size", path("population_size"), "GA population size");
    o.add<long>(app, "n_generations", path("n_generations"), "GA generation budget");
    o.add<double>(app, "elite_fraction", path("elite_fraction"), "fraction of elites kept");
    o.add<double>(app, "mutation_rate", path("mutation_rate"), "per-position swap rate");
    o.add<double>(app, "crossover_rate", path("crossover_rate"), "crossover probability");
    o.add<long>(app, "convergence_patience", path("convergence_patience"), "generations without improvement before stopping");
    o.add<long>(app, "n_starts", path("n_starts"), "independent GA restarts");
}

void add_simulation_flags(CLI::App* app, Overrides& o, const std::vector<std::string>& prefix, bool dotted)
{
    auto flag = [&](const char* leaf)
    {
        return dotted ? fmt::format("simulation.{}", leaf) : std::string(leaf);
    };
    auto path = [&](const char* leaf)
    {
        auto p = prefix;
        p.emplace_back(leaf);
        return p;
    };
    o.add<long>(app, flag("n_individuals"), path("n_individuals"), "simulated individuals");
    o.add<long>(app, flag("n_markers"), path("n_markers"), "simulated markers");
    o.add<long>(app, flag("n_clusters"), path("n_clusters"), "simulated subpopulations");
    o.add<double>(app, flag("divergence"), path("divergence"), "allele-frequency drift F");
    o.add<long>(app, flag("n_qtl"), path("n_qtl"), "number of causal markers");
    o.add<double>(app, flag("h2"), path("h2"), "simulated heritability");
    o.add<long>(app, flag("first_year"), path("first_year"), "year assigned to cluster 1");
}

json default_config_json()
{
    return json::parse(config_to_json(ExperimentConfig{}).dump());
}

std::ostream& open_output(const std::string& path, std::ofstream& file)
{
    if (path.empty() || path == "-")
    {
        return std::cout;
    }
    file.open(path);
    if (!file)
    {
        throw IoError(fmt::format("cannot open '{}' for writing", path));
    }
    return file;
}

int run_select(
    const std::string& markers_path,
    const std::string& format,
    const std::string& test_path,
    const std::string& candidates_path,
    long n_train,
    const json& patch,
    const std::string& output)
{
    // Reuse the config parser for GA and criterion fields.
    json j = default_config_json();
    j.merge_patch(patch);
    const ExperimentConfig cfg = config_from_json(j);
    GAConfig ga = cfg.ga;
    ga.seed = cfg.seed;
    CriterionConfig criterion;
    criterion.include_intercept = cfg.include_intercept;

    const MarkerMatrix raw = load_markers(markers_path, parse_marker_format(format));
    const MarkerMatrix m = center_scale(raw);
    const auto test_ids = read_id_list(test_path);
    std::vector<std::string> candidate_ids;
    if (!candidates_path.empty())
    {
        candidate_ids = read_id_list(candidates_path);
    }
    else
    {
        const std::unordered_set<std::string> test(test_ids.begin(), test_ids.end());
        for (const auto& id : m.ids())
        {
            if (!test.contains(id))
            {
                candidate_ids.push_back(id);
            }
        }
    }
    const PopulationPartition part = partition(m, test_ids, candidate_ids);

    if (cfg.lambda)
    {
        criterion.lambda = *cfg.lambda;
    }
    else if (cfg.h2)
    {
        criterion.lambda = lambda_from_delta(delta_from_heritability(*cfg.h2), m.n_markers());
    }
    const PCBasis basis = cfg.k > 0 ? principal_components(m, cfg.k) : principal_components(m);
    spdlog::info(
        "selecting {} of {} candidates for {} test individuals ({} components, lambda {})",
        n_train,
        part.n_candidates(),
        part.n_test(),
        basis.k(),
        criterion.lambda);
    const GAResult result = optimize(part, basis, n_train, ga, criterion);
    spdlog::info(
        "criterion {} after {} evaluations", result.best_fitness, result.evaluations);

    std::ofstream file;
    std::ostream& out = open_output(output, file);
    for (Index i : result.best_genome.indices())
    {
        out << part.candidate_ids()[static_cast<std::size_t>(i)] << '\n';
    }
    return 0;
}

int run_compare(const std::string& config_path, const json& patch, const std::string& output, std::string format)
{
    json j = default_config_json();
    if (!config_path.empty())
    {
        std::ifstream in(config_path);
        if (!in)
        {
            throw IoError(fmt::format("cannot open config '{}'", config_path));
        }
        try
        {
            j = json::parse(in);
        }
        catch (const json::parse_error& e)
        {
            throw FormatError(fmt::format("{}: {}", config_path, e.what()), 0, e.byte);
        }
    }
    j.merge_patch(patch);
    const ExperimentConfig config = config_from_json(j);
    if (format.empty())
    {
        format = std::filesystem::path(output).extension() == ".csv" ? "csv" : "json";
    }
    const ReportFormat fmt_kind = parse_report_format(format);
    const ComparisonReport report = run_comparison(config);
    for (const auto& s : report.summarize())
    {
        spdlog::info(
            "{} {} n_train={}: mean diff {:.4f}, median diff {:.4f}, criterion wins {:.2f} ({} valid)",
            s.group,
            s.trait,
            s.n_train,
            s.mean_difference,
            s.median_difference,
            s.criterion_win_rate,
            s.n_valid);
    }
    if (output.empty() || output == "-")
    {
        std::cout << (fmt_kind == ReportFormat::Csv ? report_to_csv(report)
                                                    : report_to_json(report).dump(2) + "\n");
    }
    else
    {
        emit_report(report, output, fmt_kind);
    }
    return 0;
}

int run_simulate(const json& patch, std::uint64_t seed, const std::string& out_dir)
{
    json j = json::object();
    j.merge_patch(patch);
    json cfg = default_config_json();
    cfg["data"]["simulation"] = j;
    const SimulationSpec spec = *config_from_json(cfg).data.simulation;
    const SimulatedData sim = simulate_data(spec, seed);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
    {
        throw IoError(fmt::format("cannot create '{}': {}", out_dir, ec.message()));
    }
    const std::filesystem::path dir(out_dir);
    write_markers_csv(dir / "markers.csv", sim.markers);
    write_phenotypes_csv(dir / "phenotypes.csv", {sim.phenotype});
    std::ofstream groups(dir / "groups.csv");
    if (!groups)
    {
        throw IoError(fmt::format("cannot open '{}' for writing", (dir / "groups.csv").string()));
    }
    groups << "id,cluster,year\n";
    for (std::size_t i = 0; i < sim.clusters.ids.size(); ++i)
    {
        const auto& id = sim.clusters.ids[i];
        groups << id << ',' << sim.clusters.labels[i] << ',' << sim.years.at(id) << '\n';
    }
    spdlog::info(
        "wrote {} individuals x {} markers to {}",
        sim.markers.n_individuals(),
        sim.markers.n_markers(),
        out_dir);
    return 0;
}

int run_cluster(const std::string& markers_path, const std::string& format, long n_clusters, const std::string& output)
{
    const MarkerMatrix m = center_scale(load_markers(markers_path, parse_marker_format(format)));
    const ClusterAssignment a = ward_cluster(m, n_clusters);
    std::ofstream file;
    std::ostream& out = open_output(output, file);
    out << "id,cluster\n";
    for (std::size_t i = 0; i < a.ids.size(); ++i)
    {
        out << a.ids[i] << ',' << a.labels[i] << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("trainsel"));
    spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

    CLI::App app{"Training population selection for genomic prediction"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log_level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    // select
    auto* select = app.add_subcommand("select", "choose a training set for a test set");
    std::string sel_markers;
    std::string sel_format = "csv";
    std::string sel_test;
    std::string sel_candidates;
    long sel_n_train = 0;
    std::string sel_output;
    Overrides sel_over;
    select->add_option("--markers", sel_markers, "marker matrix file")->required()->check(CLI::ExistingFile);
    select->add_option("--marker_format", sel_format, "csv or whitespace");
    select->add_option("--test_ids", sel_test, "file with one test id per line")->required();
    select->add_option("--candidate_ids", sel_candidates, "file with candidate ids (default: all non-test)");
    select->add_option("--n_train", sel_n_train, "training set size")->required();
    select->add_option("--output", sel_output, "output file (default stdout)");
    sel_over.add<double>(select, "lambda", {"lambda"}, "ridge penalty");
    sel_over.add<double>(select, "h2", {"h2"}, "heritability used to derive lambda");
    sel_over.add<long>(select, "k", {"k"}, "principal components (0: default rule)");
    sel_over.add<bool>(select, "include_intercept", {"include_intercept"}, "model an intercept");
    sel_over.add<std::uint64_t>(select, "seed", {"seed"}, "random seed");
    add_ga_flags(select, sel_over, "ga");

    // compare
    auto* compare = app.add_subcommand("compare", "optimized versus random training sets");
    std::string cmp_config;
    std::string cmp_output;
    std::string cmp_format;
    Overrides cmp_over;
    compare->add_option("--config", cmp_config, "JSON experiment config");
    compare->add_option("--output", cmp_output, "report file (default stdout)");
    compare->add_option("--format", cmp_format, "json or csv (default from extension)");
    cmp_over.add<std::string>(compare, "markers", {"data", "markers"}, "marker matrix file");
    cmp_over.add<std::string>(compare, "marker_format", {"data", "marker_format"}, "csv or whitespace");
    cmp_over.add<std::string>(compare, "phenotypes", {"data", "phenotypes"}, "phenotype file");
    cmp_over.add<std::string>(compare, "groups", {"data", "groups"}, "integer group table");
    cmp_over.add<std::string>(compare, "year_column", {"data", "year_column"}, "year column in groups");
    cmp_over.add<std::vector<std::string>>(compare, "traits", {"data", "traits"}, "traits to analyse");
    add_simulation_flags(compare, cmp_over, {"data", "simulation"}, true);
    cmp_over.add<std::string>(compare, "scenario", {"scenario"}, "random-split, temporal-split or cross-cluster");
    cmp_over.add<long>(compare, "n_test", {"n_test"}, "test set size");
    cmp_over.add<std::vector<long>>(compare, "n_train", {"n_train"}, "training set sizes");
    cmp_over.add<long>(compare, "n_replications", {"n_replications"}, "replications");
    cmp_over.add<double>(compare, "lambda", {"lambda"}, "ridge penalty");
    cmp_over.add<double>(compare, "h2", {"h2"}, "heritability used to derive lambda");
    cmp_over.add<long>(compare, "k", {"k"}, "principal components (0: default rule)");
    cmp_over.add<bool>(compare, "include_intercept", {"include_intercept"}, "model an intercept");
    add_ga_flags(compare, cmp_over, "ga");
    cmp_over.add<long>(compare, "n_clusters", {"n_clusters"}, "clusters for cross-cluster");
    cmp_over.add<std::vector<long>>(compare, "test_years", {"test_years"}, "test years for temporal-split");
    cmp_over.add<bool>(compare, "shared_selection", {"shared_selection"}, "one selection for all traits");
    cmp_over.add<std::uint64_t>(compare, "seed", {"seed"}, "random seed");
    cmp_over.add<long>(compare, "threads", {"threads"}, "worker threads");
    cmp_over.add<bool>(compare, "report_ids", {"report_ids"}, "include ids in the JSON report");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "write a synthetic clustered dataset");
    std::string sim_dir;
    std::uint64_t sim_seed = 1;
    Overrides sim_over;
    simulate->add_option("--output_dir", sim_dir, "directory for markers/phenotypes/groups CSV")->required();
    simulate->add_option("--seed", sim_seed, "random seed");
    add_simulation_flags(simulate, sim_over, {}, false);

    // cluster
    auto* cluster = app.add_subcommand("cluster", "Ward clustering of marker rows");
    std::string cl_markers;
    std::string cl_format = "csv";
    long cl_k = 5;
    std::string cl_output;
    cluster->add_option("--markers", cl_markers, "marker matrix file")->required()->check(CLI::ExistingFile);
    cluster->add_option("--marker_format", cl_format, "csv or whitespace");
    cluster->add_option("--n_clusters", cl_k, "number of clusters");
    cluster->add_option("--output", cl_output, "output file (default stdout)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));

    try
    {
        if (*select)
        {
            return run_select(sel_markers, sel_format, sel_test, sel_candidates, sel_n_train, sel_over.patch(), sel_output);
        }
        if (*compare)
        {
            return run_compare(cmp_config, cmp_over.patch(), cmp_output, cmp_format);
        }
        if (*simulate)
        {
            return run_simulate(sim_over.patch(), sim_seed, sim_dir);
        }
        if (*cluster)
        {
            return run_cluster(cl_markers, cl_format, cl_k, cl_output);
        }
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return exit_code_for(e);
    }
    return 1;
}
