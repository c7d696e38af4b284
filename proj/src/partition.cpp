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

#include "trainsel/partition.h"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

std::vector<std::string> ids_at(
    const std::vector<std::string>& ids,
    const std::vector<Index>& rows)
{
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (Index r : rows)
    {
        out.push_back(ids[static_cast<std::size_t>(r)]);
    }
    return out;
}

}  // namespace

PopulationPartition::PopulationPartition(
    std::vector<std::string> ids,
    std::vector<Index> candidate_rows,
    std::vector<Index> test_rows)
    : ids_(std::move(ids)),
      candidate_rows_(std::move(candidate_rows)),
      test_rows_(std::move(test_rows))
{
    if (candidate_rows_.empty())
    {
        throw ContractError("partition needs at least one candidate");
    }
    if (test_rows_.empty())
    {
        throw ContractError("partition needs at least one test individual");
    }
    const auto n = static_cast<Index>(ids_.size());
    std::unordered_set<Index> cand;
    for (Index r : candidate_rows_)
    {
        if (r < 0 || r >= n)
        {
            throw ContractError(fmt::format("candidate row {} out of range", r));
        }
        if (!cand.insert(r).second)
        {
            throw ContractError(fmt::format(
                "candidate '{}' listed twice", ids_[static_cast<std::size_t>(r)]));
        }
    }
    std::unordered_set<Index> test;
    for (Index r : test_rows_)
    {
        if (r < 0 || r >= n)
        {
            throw ContractError(fmt::format("test row {} out of range", r));
        }
        if (!test.insert(r).second)
        {
            throw ContractError(fmt::format(
                "test id '{}' listed twice", ids_[static_cast<std::size_t>(r)]));
        }
        if (cand.contains(r))
        {
            throw ContractError(fmt::format(
                "'{}' is both a candidate and a test individual",
                ids_[static_cast<std::size_t>(r)]));
        }
    }
}

std::vector<std::string> PopulationPartition::candidate_ids() const
{
    return ids_at(ids_, candidate_rows_);
}

std::vector<std::string> PopulationPartition::test_ids() const
{
    return ids_at(ids_, test_rows_);
}

std::vector<std::string> PopulationPartition::train_ids() const
{
    if (!train_rows_)
    {
        return {};
    }
    return ids_at(ids_, *train_rows_);
}

PopulationPartition PopulationPartition::with_training(
    std::vector<Index> train_rows) const
{
    std::unordered_set<Index> cand(candidate_rows_.begin(), candidate_rows_.end());
    std::unordered_set<Index> seen;
    for (Index r : train_rows)
    {
        if (!cand.contains(r))
        {
            throw ContractError(fmt::format("training row {} is not a candidate", r));
        }
        if (!seen.insert(r).second)
        {
            throw ContractError(fmt::format("training row {} listed twice", r));
        }
    }
    PopulationPartition out = *this;
    out.train_rows_ = std::move(train_rows);
    return out;
}

Eigen::MatrixXd PopulationPartition::candidate_block(const Eigen::MatrixXd& m) const
{
    return select_rows(m, candidate_rows_);
}

Eigen::MatrixXd PopulationPartition::test_block(const Eigen::MatrixXd& m) const
{
    return select_rows(m, test_rows_);
}

Eigen::MatrixXd PopulationPartition::train_block(const Eigen::MatrixXd& m) const
{
    if (!train_rows_)
    {
        throw ContractError("partition has no training rows");
    }
    return select_rows(m, *train_rows_);
}

PopulationPartition partition(
    const MarkerMatrix& m,
    std::span<const std::string> test_ids,
    std::span<const std::string> candidate_ids)
{
    if (candidate_ids.empty())
    {
        throw ContractError("candidate list is empty");
    }
    if (test_ids.empty())
    {
        throw ContractError("test list is empty");
    }
    return {m.ids(), m.rows_of(candidate_ids), m.rows_of(test_ids)};
}

}  // namespace trainsel
