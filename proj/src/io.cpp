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

#include "trainsel/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

std::ifstream open_for_read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
    }
    return in;
}

std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    }
    return out;
}

void strip_line(std::string& line, std::size_t line_no)
{
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF"))
    {
        line.erase(0, 3);
    }
    if (!line.empty() && line.back() == '\r')
    {
        line.pop_back();
    }
}

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos)
    {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = line.find(',', start);
        fields.emplace_back(
            trim(std::string_view(line).substr(start, pos - start)));
        if (pos == std::string::npos)
        {
            break;
        }
        start = pos + 1;
    }
    return fields;
}

std::vector<std::string> split_whitespace(const std::string& line)
{
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f)
    {
        fields.push_back(f);
    }
    return fields;
}

bool is_blank(const std::string& line)
{
    return trim(line).empty();
}

/// nullopt for the missing token; throws DataError for anything else that is
/// not a finite number.
std::optional<double> parse_cell(
    std::string_view cell,
    const std::filesystem::path& path,
    std::size_t line,
    std::size_t column)
{
    if (cell == kMissingToken)
    {
        return std::nullopt;
    }
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (!cell.empty() && *begin == '+')
    {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (cell.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
    {
        throw DataError(fmt::format(
            "{}:{}:{}: non-numeric value '{}'",
            path.string(),
            line,
            column,
            cell));
    }
    return v;
}

struct RawTable
{
    std::vector<std::string> header;
    std::vector<std::string> ids;
    std::vector<std::vector<std::optional<double>>> rows;
};

RawTable read_table(
    const std::filesystem::path& path,
    bool has_header,
    bool whitespace)
{
    auto in = open_for_read(path);
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool header_seen = !has_header;
    std::unordered_set<std::string> seen;

    while (std::getline(in, line))
    {
        ++line_no;
        strip_line(line, line_no);
        if (is_blank(line))
        {
            continue;
        }
        auto fields = whitespace ? split_whitespace(line) : split_csv(line);

        if (!header_seen)
        {
            if (fields.empty() || fields[0] != "id")
            {
                throw FormatError(
                    fmt::format(
                        "{}:{}:1: header must start with column 'id'",
                        path.string(),
                        line_no),
                    line_no,
                    1);
            }
            if (fields.size() < 2)
            {
                throw FormatError(
                    fmt::format(
                        "{}:{}:2: header has no data columns",
                        path.string(),
                        line_no),
                    line_no,
                    2);
            }
            width = fields.size();
            table.header.assign(fields.begin() + 1, fields.end());
            header_seen = true;
            continue;
        }

        if (width == 0)
        {
            if (fields.size() < 2)
            {
                throw FormatError(
                    fmt::format(
                        "{}:{}:2: row has no data columns",
                        path.string(),
                        line_no),
                    line_no,
                    2);
            }
            width = fields.size();
        }
        if (fields.size() != width)
        {
            throw FormatError(
                fmt::format(
                    "{}:{}:{}: expected {} fields, found {}",
                    path.string(),
                    line_no,
                    std::min(fields.size(), width) + 1,
                    width,
                    fields.size()),
                line_no,
                std::min(fields.size(), width) + 1);
        }
        if (fields[0].empty())
        {
            throw FormatError(
                fmt::format("{}:{}:1: empty id", path.string(), line_no),
                line_no,
                1);
        }
        if (!seen.insert(fields[0]).second)
        {
            throw DataError(fmt::format(
                "{}:{}:1: duplicate id '{}'", path.string(), line_no, fields[0]));
        }

        std::vector<std::optional<double>> row;
        row.reserve(width - 1);
        for (std::size_t c = 1; c < width; ++c)
        {
            row.push_back(parse_cell(fields[c], path, line_no, c + 1));
        }
        table.ids.push_back(std::move(fields[0]));
        table.rows.push_back(std::move(row));
    }

    if (!header_seen)
    {
        throw FormatError(
            fmt::format("{}: empty file, missing header", path.string()), 1, 1);
    }
    if (!has_header)
    {
        for (std::size_t j = 1; j < width; ++j)
        {
            table.header.push_back(fmt::format("m{}", j));
        }
    }
    return table;
}

std::string format_double(double v)
{
    return fmt::format("{}", v);
}

}  // namespace

MarkerFormat parse_marker_format(std::string_view name)
{
    if (name == "csv")
    {
        return MarkerFormat::Csv;
    }
    if (name == "whitespace" || name == "ws")
    {
        return MarkerFormat::Whitespace;
    }
    throw ContractError(fmt::format(
        "unknown marker format '{}' (expected csv or whitespace)", name));
}

MarkerMatrix load_markers(const std::filesystem::path& path, MarkerFormat format)
{
    const bool ws = format == MarkerFormat::Whitespace;
    RawTable t = read_table(path, !ws, ws);
    const auto n = static_cast<Index>(t.ids.size());
    const auto m = static_cast<Index>(t.header.size());
    if (n == 0)
    {
        throw DataError(fmt::format("{}: no individuals", path.string()));
    }

    Eigen::MatrixXd values(n, m);
    std::vector<std::string> flagged;
    std::size_t n_imputed = 0;
    for (Index j = 0; j < m; ++j)
    {
        double sum = 0.0;
        Index observed = 0;
        for (Index i = 0; i < n; ++i)
        {
            const auto& cell = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (cell)
            {
                sum += *cell;
                ++observed;
            }
        }
        const double mean = observed > 0 ? sum / static_cast<double>(observed) : 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (Index i = 0; i < n; ++i)
        {
            const auto& cell = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            double v = mean;
            if (cell)
            {
                v = *cell;
            }
            else
            {
                ++n_imputed;
            }
            values(i, j) = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi)
        {
            flagged.push_back(t.header[static_cast<std::size_t>(j)]);
        }
    }

    if (n_imputed > 0)
    {
        spdlog::info(
            "{}: imputed {} missing marker cells to column means",
            path.string(),
            n_imputed);
    }
    if (!flagged.empty())
    {
        spdlog::warn(
            "{}: {} zero-variance markers will be dropped: {}",
            path.string(),
            flagged.size(),
            fmt::join(flagged, ","));
    }
    return {
        std::move(t.ids),
        std::move(t.header),
        std::move(values),
        false,
        std::move(flagged)};
}

std::vector<PhenotypeVector> load_phenotypes(const std::filesystem::path& path)
{
    RawTable t = read_table(path, true, false);
    std::vector<PhenotypeVector> traits;
    for (std::size_t j = 0; j < t.header.size(); ++j)
    {
        std::vector<std::string> ids;
        std::vector<double> vals;
        for (std::size_t i = 0; i < t.ids.size(); ++i)
        {
            if (t.rows[i][j])
            {
                ids.push_back(t.ids[i]);
                vals.push_back(*t.rows[i][j]);
            }
        }
        Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(
            vals.data(), static_cast<Index>(vals.size()));
        traits.emplace_back(std::move(ids), std::move(v), t.header[j]);
    }
    return traits;
}

std::map<std::string, std::map<std::string, long>> load_integer_table(
    const std::filesystem::path& path)
{
    RawTable t = read_table(path, true, false);
    std::map<std::string, std::map<std::string, long>> out;
    for (std::size_t j = 0; j < t.header.size(); ++j)
    {
        auto& col = out[t.header[j]];
        for (std::size_t i = 0; i < t.ids.size(); ++i)
        {
            const auto& cell = t.rows[i][j];
            if (!cell)
            {
                continue;
            }
            if (*cell != std::floor(*cell))
            {
                throw DataError(fmt::format(
                    "{}: column '{}' for '{}' is not an integer",
                    path.string(),
                    t.header[j],
                    t.ids[i]));
            }
            col[t.ids[i]] = static_cast<long>(*cell);
        }
    }
    return out;
}

void write_markers_csv(const std::filesystem::path& path, const MarkerMatrix& m)
{
    auto out = open_for_write(path);
    out << "id";
    for (const auto& name : m.marker_names())
    {
        out << ',' << name;
    }
    out << '\n';
    for (Index i = 0; i < m.n_individuals(); ++i)
    {
        out << m.ids()[static_cast<std::size_t>(i)];
        for (Index j = 0; j < m.n_markers(); ++j)
        {
            out << ',' << format_double(m.values()(i, j));
        }
        out << '\n';
    }
    if (!out)
    {
        throw IoError(fmt::format("write to '{}' failed", path.string()));
    }
}

void write_phenotypes_csv(
    const std::filesystem::path& path,
    const std::vector<PhenotypeVector>& traits)
{
    // Union of ids in first-seen order.
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& t : traits)
    {
        for (const auto& id : t.ids())
        {
            if (seen.insert(id).second)
            {
                ids.push_back(id);
            }
        }
    }

    auto out = open_for_write(path);
    out << "id";
    for (const auto& t : traits)
    {
        out << ',' << t.trait_name();
    }
    out << '\n';
    for (const auto& id : ids)
    {
        out << id;
        for (const auto& t : traits)
        {
            out << ',';
            if (t.contains(id))
            {
                out << format_double(t.at(id));
            }
            else
            {
                out << kMissingToken;
            }
        }
        out << '\n';
    }
    if (!out)
    {
        throw IoError(fmt::format("write to '{}' failed", path.string()));
    }
}

std::vector<std::string> read_id_list(const std::filesystem::path& path)
{
    auto in = open_for_read(path);
    std::vector<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        strip_line(line, line_no);
        auto t = trim(line);
        if (!t.empty())
        {
            ids.emplace_back(t);
        }
    }
    return ids;
}

}  // namespace trainsel
