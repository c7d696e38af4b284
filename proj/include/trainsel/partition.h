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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trainsel/marker_matrix.h"

namespace trainsel
{

/// Disjoint candidate and test row sets over a MarkerMatrix (or any matrix
/// with the same row order, such as a PCBasis). Training rows, once chosen,
/// are a subset of the candidates.
class PopulationPartition
{
   public:
    PopulationPartition(
        std::vector<std::string> ids,
        std::vector<Index> candidate_rows,
        std::vector<Index> test_rows);

    /// Row identifiers of the partitioned matrix.
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    const std::vector<Index>& candidate_rows() const noexcept
    {
        return candidate_rows_;
    }
    const std::vector<Index>& test_rows() const noexcept { return test_rows_; }
    const std::optional<std::vector<Index>>& train_rows() const noexcept
    {
        return train_rows_;
    }

    std::vector<std::string> candidate_ids() const;
    std::vector<std::string> test_ids() const;
    std::vector<std::string> train_ids() const;

    Index n_candidates() const noexcept
    {
        return static_cast<Index>(candidate_rows_.size());
    }
    Index n_test() const noexcept
    {
        return static_cast<Index>(test_rows_.size());
    }

    /// Copy with training rows set. Every row must be a candidate row
    /// (ContractError otherwise).
    PopulationPartition with_training(std::vector<Index> train_rows) const;

    Eigen::MatrixXd candidate_block(const Eigen::MatrixXd& m) const;
    Eigen::MatrixXd test_block(const Eigen::MatrixXd& m) const;
    Eigen::MatrixXd train_block(const Eigen::MatrixXd& m) const;

   private:
    std::vector<std::string> ids_;
    std::vector<Index> candidate_rows_;
    std::vector<Index> test_rows_;
    std::optional<std::vector<Index>> train_rows_;
};

/// Validates and resolves ids against `m`. Unknown id -> DataError; overlap,
/// duplicates, or an empty list -> ContractError.
PopulationPartition partition(
    const MarkerMatrix& m,
    std::span<const std::string> test_ids,
    std::span<const std::string> candidate_ids);

}  // namespace trainsel
