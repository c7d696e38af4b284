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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trainsel/cluster.h"
#include "trainsel/criterion.h"
#include "trainsel/ga.h"
#include "trainsel/marker_matrix.h"
#include "trainsel/phenotype.h"
#include "trainsel/simulate.h"

namespace trainsel
{

enum class Scenario
{
    /// Test drawn at random from all phenotyped individuals, candidates are
    /// the rest.
    RandomSplit,
    /// Test drawn from one year, candidates are all earlier years.
    TemporalSplit,
    /// Test drawn from one Ward cluster, candidates are the other clusters.
    CrossCluster,
};

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

/// Where the data comes from: a simulation spec, or files.
struct DataSource
{
    std::optional<SimulationSpec> simulation;
    std::string markers;
    std::string marker_format = "csv";
    std::string phenotypes;
    /// Optional integer table with "id" plus columns such as year/cluster.
    std::string groups;
    std::string year_column = "year";
    /// Traits to analyse; empty means all.
    std::vector<std::string> traits;
};

struct ExperimentConfig
{
    DataSource data;
    Scenario scenario = Scenario::RandomSplit;
    Index n_test = 50;
    std::vector<Index> n_train{25, 50, 80};
    Index n_replications = 30;
    /// Ridge lambda; when absent, derived from h2 (lambda = m (1 - h2) / h2)
    /// or 1.0 when neither is given.
    std::optional<double> lambda;
    std::optional<double> h2;
    /// Principal components; 0 selects the default rule.
    Index k = 0;
    bool include_intercept = true;
    GAConfig ga;
    /// Clusters for the cross-cluster scenario.
    Index n_clusters = 5;
    /// Years to use as test sets in the temporal scenario; empty means every
    /// year that has an earlier year.
    std::vector<long> test_years;
    /// One selection shared by all traits instead of one per trait.
    bool shared_selection = false;
    std::uint64_t seed = 1;
    /// Worker threads over replications; results do not depend on it.
    Index threads = 1;
    /// Include training and test ids of every replication in the JSON report.
    bool report_ids = false;

    void validate() const;
};

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are a ContractError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Loaded (or simulated) inputs of an experiment.
struct Dataset
{
    MarkerMatrix markers;
    std::vector<PhenotypeVector> traits;
    std::map<std::string, long> years;
};

Dataset load_dataset(const DataSource& source, std::uint64_t seed);

struct ComparisonRow
{
    std::string scenario;
    std::string group;
    std::string trait;
    Index n_train = 0;
    Index replication = 0;
    std::uint64_t seed = 0;
    /// NaN when the correlation is undefined (constant predictions).
    double accuracy_optimized = 0.0;
    double accuracy_random = 0.0;
    double criterion_optimized = 0.0;
    double criterion_random = 0.0;
    double sigma_g2_optimized = 0.0;
    double sigma_e2_optimized = 0.0;
    double loglik_optimized = 0.0;
    double sigma_g2_random = 0.0;
    double sigma_e2_random = 0.0;
    double loglik_random = 0.0;
    std::uint64_t ga_evaluations = 0;

    std::vector<std::string> test_ids;
    std::vector<std::string> train_ids_optimized;
    std::vector<std::string> train_ids_random;
};

struct ComparisonSummary
{
    std::string group;
    std::string trait;
    Index n_train = 0;
    Index n_valid = 0;
    double mean_accuracy_optimized = 0.0;
    double mean_accuracy_random = 0.0;
    double mean_difference = 0.0;
    double median_difference = 0.0;
    /// Fraction of replications with criterion_optimized <= criterion_random.
    double criterion_win_rate = 0.0;
};

struct ComparisonReport
{
    ExperimentConfig config;
    Index n_markers = 0;
    Index n_components = 0;
    double lambda = 0.0;
    std::vector<ComparisonRow> rows;

    /// Per (group, trait, n_train), plus group "*" / trait "*" pooled rows
    /// per n_train.
    std::vector<ComparisonSummary> summarize() const;
};

ComparisonReport run_comparison(const ExperimentConfig& config);
ComparisonReport run_comparison(const ExperimentConfig& config, const Dataset& data);

enum class ReportFormat
{
    Json,
    Csv,
};

ReportFormat parse_report_format(std::string_view name);

void emit_report(
    const ComparisonReport& report,
    const std::filesystem::path& path,
    ReportFormat format);

std::string report_to_csv(const ComparisonReport& report);
nlohmann::ordered_json report_to_json(const ComparisonReport& report);

/// Parses the output of report_to_csv back into rows (ids are not part of
/// the CSV).
std::vector<ComparisonRow> rows_from_csv(std::string_view csv);

}  // namespace trainsel
