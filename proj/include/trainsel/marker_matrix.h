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

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace trainsel
{

using Index = Eigen::Index;

/// Individuals x markers score matrix with row identifiers.
///
/// The constructor checks ids (unique, one per row) and that every value is
/// finite. Column statistics are not checked: `centered_scaled` records what
/// the producer guarantees, and center_scale() is the only producer that
/// sets it after actually standardizing.
class MarkerMatrix
{
   public:
    MarkerMatrix(
        std::vector<std::string> ids,
        std::vector<std::string> marker_names,
        Eigen::MatrixXd values,
        bool centered_scaled = false,
        std::vector<std::string> dropped_markers = {});

    /// Marker names default to m1..mM.
    MarkerMatrix(
        std::vector<std::string> ids,
        Eigen::MatrixXd values,
        bool centered_scaled = false);

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<std::string>& marker_names() const noexcept
    {
        return marker_names_;
    }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    bool centered_scaled() const noexcept { return centered_scaled_; }

    /// Names of zero-variance markers. After load_markers these are flagged
    /// but still present; after center_scale they are gone from values().
    const std::vector<std::string>& dropped_markers() const noexcept
    {
        return dropped_markers_;
    }

    Index n_individuals() const noexcept { return values_.rows(); }
    Index n_markers() const noexcept { return values_.cols(); }

    /// Row index of an id; throws DataError if absent.
    Index row_of(const std::string& id) const;
    bool contains(const std::string& id) const noexcept
    {
        return row_index_.contains(id);
    }

    /// Row indices for a list of ids, in the given order.
    std::vector<Index> rows_of(std::span<const std::string> ids) const;

   private:
    std::vector<std::string> ids_;
    std::vector<std::string> marker_names_;
    Eigen::MatrixXd values_;
    bool centered_scaled_;
    std::vector<std::string> dropped_markers_;
    std::unordered_map<std::string, Index> row_index_;
};

/// Copy of the selected rows of `m`, in the order given.
Eigen::MatrixXd select_rows(
    const Eigen::MatrixXd& m,
    std::span<const Index> rows);

/// Standardize every column to mean 0 and population standard deviation 1
/// (divide by n). Zero-variance columns are dropped and their names appended
/// to dropped_markers(). Applying it twice gives the same result as once.
/// Throws DegenerateInputError when every column has zero variance.
MarkerMatrix center_scale(const MarkerMatrix& m);

/// Numerical rank of an arbitrary matrix under the default SVD cutoff
/// (max singular value * max(rows, cols) * machine epsilon).
Index numerical_rank(const Eigen::MatrixXd& m);

}  // namespace trainsel
