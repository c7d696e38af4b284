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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "trainsel/marker_matrix.h"
#include "trainsel/phenotype.h"

namespace trainsel
{

enum class MarkerFormat
{
    /// Comma separated, header row "id,<marker>,...".
    Csv,
    /// Whitespace separated, no header, first field is the id.
    Whitespace,
};

MarkerFormat parse_marker_format(std::string_view name);

inline constexpr std::string_view kMissingToken = "NA";

/// Reads a marker file. Missing cells ("NA") are imputed to the mean of the
/// observed entries of their column; zero-variance columns are listed in
/// dropped_markers() but kept until center_scale.
MarkerMatrix load_markers(
    const std::filesystem::path& path,
    MarkerFormat format = MarkerFormat::Csv);

/// Reads "id,<trait>,..." and returns one PhenotypeVector per trait column.
/// Individuals with "NA" for a trait are omitted from that trait's vector.
std::vector<PhenotypeVector> load_phenotypes(const std::filesystem::path& path);

/// Reads "id,<column>,..." where every cell is an integer (cluster labels,
/// years). Returns column name -> (id -> value).
std::map<std::string, std::map<std::string, long>> load_integer_table(
    const std::filesystem::path& path);

void write_markers_csv(const std::filesystem::path& path, const MarkerMatrix& m);

void write_phenotypes_csv(
    const std::filesystem::path& path,
    const std::vector<PhenotypeVector>& traits);

/// Reads one id per line, skipping blank lines.
std::vector<std::string> read_id_list(const std::filesystem::path& path);

}  // namespace trainsel
