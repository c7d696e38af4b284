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

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "test_support.h"
#include "trainsel/errors.h"
#include "trainsel/experiment.h"
#include "trainsel/io.h"

namespace trainsel
{

using Catch::Matchers::ContainsSubstring;
using test::TempDir;

namespace
{

ExperimentConfig small_config(Scenario scenario = Scenario::RandomSplit)
{
    ExperimentConfig c;
    SimulationSpec s;
    s.n_individuals = 90;
    s.n_markers = 120;
    s.n_qtl = 20;
    s.n_clusters = 3;
    s.divergence = 0.2;
    c.data.simulation = s;
    c.scenario = scenario;
    c.n_test = 10;
    c.n_train = {8, 15};
    c.n_replications = 3;
    c.k = 15;
    c.n_clusters = 3;
    c.ga.population_size = 30;
    c.ga.n_generations = 20;
    c.report_ids = true;
    return c;
}

bool same_number(double a, double b)
{
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

// ============================================================================
// configuration
// ============================================================================

TEST_CASE("config round-trips through json", "[config]")
{
    ExperimentConfig c = small_config(Scenario::TemporalSplit);
    c.lambda = 2.5;
    c.test_years = {2006, 2007};
    c.seed = 0xfedcba9876543210ULL;
    c.ga.mutation_rate = 0.05;
    const auto j = config_to_json(c);
    const ExperimentConfig back = config_from_json(nlohmann::json::parse(j.dump()));
    REQUIRE(config_to_json(back).dump() == j.dump());
    REQUIRE(back.seed == c.seed);
    REQUIRE(back.scenario == Scenario::TemporalSplit);
    REQUIRE(back.data.simulation->n_clusters == 3);
    REQUIRE_FALSE(back.h2.has_value());
}

TEST_CASE("config rejects unknown keys and bad values", "[config]")
{
    REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"n_tset": 5})")), ContractError);
    REQUIRE_THROWS_AS(
        config_from_json(nlohmann::json::parse(R"({"ga": {"populaton_size": 5}})")), ContractError);
    REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"scenario": "loo"})")), ContractError);
    REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"n_test": "ten"})")), ContractError);

    ExperimentConfig c = small_config();
    c.n_test = 2;
    REQUIRE_THROWS_AS(c.validate(), ContractError);
    c = small_config();
    c.n_replications = 0;
    REQUIRE_THROWS_AS(c.validate(), ContractError);
    c = small_config();
    c.data.simulation.reset();
    REQUIRE_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("load_config reads a file and keeps defaults", "[config]")
{
    TempDir dir;
    const auto p = dir.write("c.json", R"({"scenario": "cross-cluster", "n_train": [5], "seed": 4})");
    const ExperimentConfig c = load_config(p);
    REQUIRE(c.scenario == Scenario::CrossCluster);
    REQUIRE(c.n_train == std::vector<Index>{5});
    REQUIRE(c.n_test == 50);
    REQUIRE(c.ga.population_size == 100);
    REQUIRE_THROWS_AS(load_config(dir.write("bad.json", "{")), FormatError);
    REQUIRE_THROWS_AS(load_config(dir.path() / "missing.json"), IoError);
}

// ============================================================================
// run_comparison
// ============================================================================

TEST_CASE("random-split comparison shape and pairing", "[run_comparison]")
{
    const ExperimentConfig c = small_config();
    const ComparisonReport r = run_comparison(c);
    REQUIRE(r.rows.size() == 3 * 2);
    REQUIRE(r.n_components == 15);
    REQUIRE(r.lambda == 1.0);

    std::set<Index> reps;
    for (const auto& row : r.rows)
    {
        reps.insert(row.replication);
        REQUIRE(row.scenario == "random-split");
        REQUIRE(row.test_ids.size() == 10);
        REQUIRE(static_cast<Index>(row.train_ids_optimized.size()) == row.n_train);
        REQUIRE(static_cast<Index>(row.train_ids_random.size()) == row.n_train);
        for (double acc : {row.accuracy_optimized, row.accuracy_random})
        {
            REQUIRE((std::isnan(acc) || (acc >= -1.0 && acc <= 1.0)));
        }
        const std::set<std::string> te(row.test_ids.begin(), row.test_ids.end());
        for (const auto& id : row.train_ids_optimized)
        {
            REQUIRE_FALSE(te.contains(id));
        }
        for (const auto& id : row.train_ids_random)
        {
            REQUIRE_FALSE(te.contains(id));
        }
    }
    REQUIRE(reps == std::set<Index>{0, 1, 2});
    // both sizes of one replication share the test set
    REQUIRE(r.rows[0].test_ids == r.rows[1].test_ids);
    REQUIRE(r.rows[0].seed == r.rows[1].seed);
}

TEST_CASE("comparison is deterministic and thread-count independent", "[run_comparison][property]")
{
    ExperimentConfig c = small_config(Scenario::CrossCluster);
    const std::string a = report_to_json(run_comparison(c)).dump();
    const std::string b = report_to_json(run_comparison(c)).dump();
    c.threads = 3;
    const std::string t = report_to_json(run_comparison(c)).dump();
    REQUIRE(a == b);
    REQUIRE(a == t);
    c.seed = 2;
    c.threads = 1;
    REQUIRE(report_to_json(run_comparison(c)).dump() != a);
}

TEST_CASE("forced selection gives a zero accuracy difference", "[run_comparison]")
{
    ExperimentConfig c = small_config();
    c.n_train = {80};  // 90 individuals minus 10 test
    const ComparisonReport r = run_comparison(c);
    for (const auto& row : r.rows)
    {
        REQUIRE(row.train_ids_optimized == row.train_ids_random);
        REQUIRE(same_number(row.accuracy_optimized - row.accuracy_random, 0.0));
        REQUIRE(row.criterion_optimized == row.criterion_random);
    }
    for (const auto& s : r.summarize())
    {
        REQUIRE(s.mean_difference == 0.0);
    }
}

TEST_CASE("optimized criterion beats the random draw", "[run_comparison]")
{
    ExperimentConfig c = small_config();
    c.n_replications = 10;
    const ComparisonReport r = run_comparison(c);
    int wins = 0;
    for (const auto& row : r.rows)
    {
        wins += row.criterion_optimized <= row.criterion_random ? 1 : 0;
    }
    REQUIRE(wins >= static_cast<int>(std::ceil(0.95 * static_cast<double>(r.rows.size()))));
}

TEST_CASE("temporal split trains only on earlier years", "[run_comparison][integrity]")
{
    const ExperimentConfig c = small_config(Scenario::TemporalSplit);
    const Dataset data = load_dataset(c.data, c.seed);
    const ComparisonReport r = run_comparison(c, data);
    // years 2005..2007: test years 2006 and 2007
    REQUIRE(r.rows.size() == 2 * 3 * 2);
    for (const auto& row : r.rows)
    {
        long test_year = data.years.at(row.test_ids.front());
        REQUIRE(row.group == fmt::format("year={}", test_year));
        for (const auto& id : row.test_ids)
        {
            REQUIRE(data.years.at(id) == test_year);
        }
        for (const auto* ids : {&row.train_ids_optimized, &row.train_ids_random})
        {
            for (const auto& id : *ids)
            {
                REQUIRE(data.years.at(id) < test_year);
            }
        }
    }
}

TEST_CASE("cross-cluster training never shares the test cluster", "[run_comparison][integrity]")
{
    const ExperimentConfig c = small_config(Scenario::CrossCluster);
    const Dataset data = load_dataset(c.data, c.seed);
    const ClusterAssignment clusters = ward_cluster(center_scale(data.markers), c.n_clusters);
    const ComparisonReport r = run_comparison(c, data);
    REQUIRE(r.rows.size() == 3 * 3 * 2);
    for (const auto& row : r.rows)
    {
        const int test_cluster = clusters.label_of(row.test_ids.front());
        REQUIRE(row.group == fmt::format("cluster={}", test_cluster));
        for (const auto& id : row.test_ids)
        {
            REQUIRE(clusters.label_of(id) == test_cluster);
        }
        for (const auto* ids : {&row.train_ids_optimized, &row.train_ids_random})
        {
            for (const auto& id : *ids)
            {
                REQUIRE(clusters.label_of(id) != test_cluster);
            }
        }
    }
}

TEST_CASE("module errors carry replication context", "[run_comparison]")
{
    ExperimentConfig c = small_config(Scenario::CrossCluster);
    c.n_train = {200};
    try
    {
        run_comparison(c);
        FAIL("expected ContractError");
    }
    catch (const ContractError& e)
    {
        REQUIRE_THAT(std::string(e.what()), ContainsSubstring("replication 0"));
        REQUIRE_THAT(std::string(e.what()), ContainsSubstring("cluster="));
    }
    c = small_config(Scenario::TemporalSplit);
    c.test_years = {1999};
    REQUIRE_THROWS_AS(run_comparison(c), ContractError);
}

TEST_CASE("file-based data with shared selection across traits", "[run_comparison]")
{
    TempDir dir;
    SimulationSpec s;
    s.n_individuals = 60;
    s.n_markers = 80;
    s.n_qtl = 10;
    s.n_clusters = 3;
    const SimulatedData sim = simulate_data(s, 5);
    write_markers_csv(dir.path() / "m.csv", sim.markers);
    const PhenotypeVector second(
        sim.phenotype.ids(), sim.genetic_values * 2.0 + sim.phenotype.values(), "second");
    const PhenotypeVector first(sim.phenotype.ids(), sim.phenotype.values(), "first");
    write_phenotypes_csv(dir.path() / "y.csv", {first, second});
    std::string groups = "id,cluster,year\n";
    for (std::size_t i = 0; i < sim.clusters.ids.size(); ++i)
    {
        groups += fmt::format(
            "{},{},{}\n", sim.clusters.ids[i], sim.clusters.labels[i], sim.years.at(sim.clusters.ids[i]));
    }
    dir.write("g.csv", groups);

    ExperimentConfig c = small_config(Scenario::TemporalSplit);
    c.data = DataSource{};
    c.data.markers = (dir.path() / "m.csv").string();
    c.data.phenotypes = (dir.path() / "y.csv").string();
    c.data.groups = (dir.path() / "g.csv").string();
    c.test_years = {2007};
    c.n_replications = 2;
    c.shared_selection = true;
    const ComparisonReport r = run_comparison(c);
    REQUIRE(r.rows.size() == 2 * 2 * 2);
    REQUIRE(r.rows[0].trait == "first");
    REQUIRE(r.rows[1].trait == "second");
    REQUIRE(r.rows[0].train_ids_optimized == r.rows[1].train_ids_optimized);
    REQUIRE(r.rows[0].test_ids == r.rows[1].test_ids);

    c.shared_selection = false;
    c.data.traits = {"second"};
    const ComparisonReport one = run_comparison(c);
    REQUIRE(one.rows.size() == 2 * 2);
    REQUIRE(one.rows[0].trait == "second");
    c.data.traits = {"third"};
    REQUIRE_THROWS_AS(run_comparison(c), DataError);
}

TEST_CASE("summaries pool per training size", "[summarize]")
{
    ExperimentConfig c = small_config(Scenario::CrossCluster);
    const ComparisonReport r = run_comparison(c);
    const auto s = r.summarize();
    // three clusters x two sizes, then two pooled rows
    REQUIRE(s.size() == 8);
    REQUIRE(s[6].group == "*");
    REQUIRE(s[7].group == "*");
    REQUIRE(s[6].n_train == 8);
    Index valid = 0;
    for (std::size_t i = 0; i < 6; ++i)
    {
        if (s[i].n_train == 8)
        {
            valid += s[i].n_valid;
        }
    }
    REQUIRE(s[6].n_valid == valid);
}

// ============================================================================
// emit_report
// ============================================================================

TEST_CASE("empty report is a header-only csv", "[emit_report]")
{
    TempDir dir;
    ComparisonReport empty;
    emit_report(empty, dir.path() / "r.csv", ReportFormat::Csv);
    const std::string text = read_file(dir.path() / "r.csv");
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 1);
    REQUIRE(text.rfind("scenario,group,trait,n_train,replication,seed,", 0) == 0);
    REQUIRE(rows_from_csv(text).empty());
}

TEST_CASE("csv report round-trips losslessly", "[emit_report]")
{
    TempDir dir;
    ExperimentConfig c = small_config();
    c.n_replications = 2;
    c.n_train = {8};
    ComparisonReport r = run_comparison(c);
    r.rows[1].accuracy_random = std::numeric_limits<double>::quiet_NaN();
    emit_report(r, dir.path() / "r.csv", ReportFormat::Csv);
    const std::string text = read_file(dir.path() / "r.csv");
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 3);

    const auto back = rows_from_csv(text);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
    {
        const auto& a = r.rows[i];
        const auto& b = back[i];
        REQUIRE(a.scenario == b.scenario);
        REQUIRE(a.group == b.group);
        REQUIRE(a.trait == b.trait);
        REQUIRE(a.n_train == b.n_train);
        REQUIRE(a.replication == b.replication);
        REQUIRE(a.seed == b.seed);
        REQUIRE(same_number(a.accuracy_optimized, b.accuracy_optimized));
        REQUIRE(same_number(a.accuracy_random, b.accuracy_random));
        REQUIRE(a.criterion_optimized == b.criterion_optimized);
        REQUIRE(a.criterion_random == b.criterion_random);
        REQUIRE(same_number(a.sigma_g2_optimized, b.sigma_g2_optimized));
        REQUIRE(same_number(a.sigma_e2_random, b.sigma_e2_random));
        REQUIRE(same_number(a.loglik_optimized, b.loglik_optimized));
        REQUIRE(a.ga_evaluations == b.ga_evaluations);
    }
    REQUIRE_THROWS_AS(rows_from_csv("scenario,group\n"), FormatError);
}

TEST_CASE("json report replays from its own echo", "[emit_report]")
{
    TempDir dir;
    const ExperimentConfig c = small_config(Scenario::TemporalSplit);
    emit_report(run_comparison(c), dir.path() / "a.json", ReportFormat::Json);
    const std::string first = read_file(dir.path() / "a.json");

    const auto j = nlohmann::json::parse(first);
    REQUIRE(j.at("seeds").at("master").get<std::uint64_t>() == c.seed);
    REQUIRE(j.at("rows").size() == 12);
    const ExperimentConfig replay = config_from_json(j.at("config"));
    emit_report(run_comparison(replay), dir.path() / "b.json", ReportFormat::Json);
    REQUIRE(read_file(dir.path() / "b.json") == first);
}

TEST_CASE("emit_report reports unwritable paths", "[emit_report]")
{
    ComparisonReport empty;
    REQUIRE_THROWS_AS(
        emit_report(empty, "/nonexistent/dir/r.json", ReportFormat::Json), IoError);
    REQUIRE(parse_report_format("csv") == ReportFormat::Csv);
    REQUIRE_THROWS_AS(parse_report_format("xml"), ContractError);
}

TEST_CASE("exceptions map to exit codes", "[errors]")
{
    REQUIRE(exit_code_for(ContractError("x")) == 1);
    REQUIRE(exit_code_for(RefusalError("x", 10.0)) == 1);
    REQUIRE(exit_code_for(DataError("x")) == 2);
    REQUIRE(exit_code_for(FormatError("x", 1, 1)) == 2);
    REQUIRE(exit_code_for(IoError("x")) == 2);
    REQUIRE(exit_code_for(DegenerateInputError("x")) == 2);
    REQUIRE(exit_code_for(NumericalError("x")) == 3);
    REQUIRE(exit_code_for(std::runtime_error("x")) == 3);
}

}  // namespace trainsel
