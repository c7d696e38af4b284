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

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "trainsel/marker_matrix.h"

namespace trainsel
{

/// Symmetric relationship matrix over a set of individuals.
class KinshipMatrix
{
   public:
    /// Throws DataError when values are not square, not symmetric within
    /// 1e-10 (relative to the largest entry), or have a negative diagonal.
    KinshipMatrix(std::vector<std::string> ids, Eigen::MatrixXd values);

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    Index size() const noexcept { return values_.rows(); }

    Index index_of(const std::string& id) const;
    std::vector<Index> indices_of(std::span<const std::string> ids) const;

    /// Principal submatrix over `ids`, in that order.
    KinshipMatrix subset(std::span<const std::string> ids) const;

   private:
    std::vector<std::string> ids_;
    Eigen::MatrixXd values_;
    std::unordered_map<std::string, Index> index_;
};

/// K = M M' / m. Requires a centered and scaled matrix (ContractError
/// otherwise).
KinshipMatrix kinship(const MarkerMatrix& m);

/// True when the smallest eigenvalue is >= -rel_tol * largest.
bool is_positive_semidefinite(const Eigen::MatrixXd& k, double rel_tol = 1e-8);

}  // namespace trainsel
