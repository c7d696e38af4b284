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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trainsel/marker_matrix.h"

namespace trainsel
{

/// Leading principal component scores of a marker matrix.
///
/// scores = U_k S_k (left singular vectors scaled by singular values), so
/// scores * scores' approximates M M'. explained_variance holds the
/// corresponding eigenvalues of M M' (squared singular values).
struct PCBasis
{
    std::vector<std::string> ids;
    Eigen::MatrixXd scores;
    Eigen::VectorXd explained_variance;
    /// Sum of all eigenvalues of M M' (squared Frobenius norm of M).
    double total_variance = 0.0;

    Index k() const noexcept { return scores.cols(); }
};

enum class PcaMethod
{
    /// SVD when m <= kSvdMarkerThreshold, eigendecomposition of M M'
    /// otherwise.
    Auto,
    Svd,
    Gram,
};

inline constexpr Index kSvdMarkerThreshold = 2000;

/// First k components. Requires 1 <= k <= min(n, m) and a centered, scaled
/// matrix; ContractError otherwise. Component signs are fixed so that the
/// entry of largest magnitude in each score column is positive.
PCBasis principal_components(
    const MarkerMatrix& m,
    Index k,
    PcaMethod method = PcaMethod::Auto);

/// Components chosen by default_component_count().
PCBasis principal_components(
    const MarkerMatrix& m,
    PcaMethod method = PcaMethod::Auto);

/// Smallest k whose leading eigenvalues reach `fraction` of the total,
/// capped at min(cap, number of nonzero eigenvalues). `eigenvalues` must be
/// sorted nonincreasing.
Index default_component_count(
    const Eigen::VectorXd& eigenvalues,
    double total,
    Index n_individuals,
    double fraction = 0.9,
    Index cap = 200);

}  // namespace trainsel
