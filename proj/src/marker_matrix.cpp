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

#include "trainsel/marker_matrix.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

std::vector<std::string> default_marker_names(Index m)
{
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j)
    {
        names.push_back(fmt::format("m{}", j + 1));
    }
    return names;
}

// Standard deviations this small relative to the column scale are treated
// as zero variance.
constexpr double kZeroVarianceTol = 1e-12;

}  // namespace

MarkerMatrix::MarkerMatrix(
    std::vector<std::string> ids,
    std::vector<std::string> marker_names,
    Eigen::MatrixXd values,
    bool centered_scaled,
    std::vector<std::string> dropped_markers)
    : ids_(std::move(ids)),
      marker_names_(std::move(marker_names)),
      values_(std::move(values)),
      centered_scaled_(centered_scaled),
      dropped_markers_(std::move(dropped_markers))
{
    if (static_cast<Index>(ids_.size()) != values_.rows())
    {
        throw ContractError(fmt::format(
            "marker matrix has {} rows but {} ids",
            values_.rows(),
            ids_.size()));
    }
    if (static_cast<Index>(marker_names_.size()) != values_.cols())
    {
        throw ContractError(fmt::format(
            "marker matrix has {} columns but {} marker names",
            values_.cols(),
            marker_names_.size()));
    }
    if (!values_.allFinite())
    {
        throw DataError("marker matrix contains non-finite values");
    }
    row_index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
    {
        if (!row_index_.emplace(ids_[i], static_cast<Index>(i)).second)
        {
            throw DataError(fmt::format("duplicate individual id '{}'", ids_[i]));
        }
    }
}

MarkerMatrix::MarkerMatrix(
    std::vector<std::string> ids,
    Eigen::MatrixXd values,
    bool centered_scaled)
    : MarkerMatrix(
          std::move(ids),
          default_marker_names(values.cols()),
          values,
          centered_scaled)
{
}

Index MarkerMatrix::row_of(const std::string& id) const
{
    auto it = row_index_.find(id);
    if (it == row_index_.end())
    {
        throw DataError(fmt::format("unknown individual id '{}'", id));
    }
    return it->second;
}

std::vector<Index> MarkerMatrix::rows_of(std::span<const std::string> ids) const
{
    std::vector<Index> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids)
    {
        rows.push_back(row_of(id));
    }
    return rows;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const Index> rows)
{
    Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

MarkerMatrix center_scale(const MarkerMatrix& m)
{
    const Eigen::MatrixXd& x = m.values();
    const Index n = x.rows();
    if (n == 0)
    {
        throw DegenerateInputError("cannot standardize an empty marker matrix");
    }

    const Eigen::RowVectorXd mean = x.colwise().mean();
    std::vector<Index> keep;
    std::vector<double> sds;
    std::vector<std::string> dropped = m.dropped_markers();
    std::unordered_set<std::string> already(dropped.begin(), dropped.end());

    for (Index j = 0; j < x.cols(); ++j)
    {
        const double var =
            (x.col(j).array() - mean[j]).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        const double scale = std::max(1.0, std::abs(mean[j]));
        if (sd <= kZeroVarianceTol * scale)
        {
            const auto& name = m.marker_names()[static_cast<std::size_t>(j)];
            if (already.insert(name).second)
            {
                dropped.push_back(name);
            }
            continue;
        }
        keep.push_back(j);
        sds.push_back(sd);
    }

    if (keep.empty())
    {
        throw DegenerateInputError(fmt::format(
            "all {} marker columns have zero variance", x.cols()));
    }

    Eigen::MatrixXd out(n, static_cast<Index>(keep.size()));
    std::vector<std::string> names;
    names.reserve(keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c)
    {
        const Index j = keep[c];
        out.col(static_cast<Index>(c)) = (x.col(j).array() - mean[j]) / sds[c];
        names.push_back(m.marker_names()[static_cast<std::size_t>(j)]);
    }

    // Names flagged at load time but still present (nonzero variance after
    // all) are not dropped.
    std::unordered_set<std::string> retained(names.begin(), names.end());
    std::erase_if(
        dropped, [&](const std::string& s) { return retained.contains(s); });

    return {m.ids(), std::move(names), std::move(out), true, std::move(dropped)};
}

Index numerical_rank(const Eigen::MatrixXd& m)
{
    if (m.size() == 0)
    {
        return 0;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double cutoff = s[0] * static_cast<double>(std::max(m.rows(), m.cols()))
                          * std::numeric_limits<double>::epsilon();
    return (s.array() > cutoff).count();
}

}  // namespace trainsel
