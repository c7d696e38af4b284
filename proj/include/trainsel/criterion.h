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

#include <Eigen/Core>

#include "trainsel/marker_matrix.h"

namespace trainsel
{

using MatrixView = Eigen::Ref<const Eigen::MatrixXd>;

/// Settings of the training-set criterion.
///
/// The intercept column is appended to the design and penalized by the same
/// lambda as every other column: the Gram matrix is (1, P)'(1, P) + lambda I.
struct CriterionConfig
{
    double lambda = 1.0;
    /// Principal component count; 0 selects the default (90% of marker
    /// variance, at most min(n, 200)).
    Index k = 0;
    bool include_intercept = true;

    /// Throws ContractError unless lambda > 0 and k >= 0.
    void validate_for_pc() const;
};

/// Prediction error variance of the test block, up to the residual variance
/// factor. n_test x n_test, symmetric positive semidefinite.
struct PevMatrix
{
    Eigen::MatrixXd values;

    Index size() const noexcept { return values.rows(); }
};

/// (1, X) when include_intercept, else X.
Eigen::MatrixXd augment(MatrixView x, bool include_intercept);

/// Least squares PEV using the pseudo-inverse of the training Gram matrix:
///
///   B (A'A)^- B',  A = (1, M_train), B = (1, M_test).
///
/// Singular values of A below s_max * max(rows, cols) * eps are treated as
/// zero.
PevMatrix pev_ols(MatrixView train, MatrixView test, bool include_intercept);

/// Ridge PEV B (A'A + lambda I)^{-1} B'. lambda == 0 falls back to pev_ols;
/// lambda < 0 is a ContractError.
PevMatrix pev_ridge(
    MatrixView train,
    MatrixView test,
    double lambda,
    bool include_intercept);

/// Ridge PEV evaluated on principal component scores instead of markers.
/// Requires lambda > 0 and matching component counts.
PevMatrix pev_pc(
    MatrixView train_scores,
    MatrixView test_scores,
    double lambda,
    bool include_intercept);

double criterion_trace(const PevMatrix& pev);

/// Reliability K21 (K11 + delta I)^{-1} K21'. Requires delta > 0.
Eigen::MatrixXd reliability_vanraden(MatrixView k21, MatrixView k11, double delta);

/// delta = (1 - h2) / h2 for h2 in (0, 1).
double delta_from_heritability(double h2);

/// With K = M M' / m on m markers,
///
///   M_te (M_tr'M_tr + lambda I)^{-1} M_te'
///       = (m / lambda) [K22 - K21 (K11 + (lambda / m) I)^{-1} K21'],
///
/// so the reliability shrinkage matching a ridge lambda is lambda / m and
/// the marker-scale lambda for a given delta is m * delta.
double delta_from_lambda(double lambda, Index n_markers);
double lambda_from_delta(double delta, Index n_markers);

/// Trace of pev_pc for many training subsets of a fixed candidate block.
///
/// Everything that does not depend on the subset is precomputed once. When
/// the subset is smaller than the augmented component count the trace is
/// evaluated in the n_train x n_train dual form
///
///   tr(B B')/lambda - tr(X_S' (C_SS + lambda I)^{-1} X_S)/lambda,
///   C = A A', X = A B',
///
/// otherwise via the p x p primal Gram. Immutable after construction and safe
/// to share across threads.
class TraceEvaluator
{
   public:
    TraceEvaluator(
        Eigen::MatrixXd candidate_scores,
        Eigen::MatrixXd test_scores,
        double lambda,
        bool include_intercept,
        Index subset_size);

    /// `subset` holds positions into the candidate block (0-based).
    double operator()(std::span<const Index> subset) const;

    bool uses_dual() const noexcept { return dual_; }
    Index n_candidates() const noexcept { return design_.rows(); }

   private:
    double primal(std::span<const Index> subset) const;
    double dual(std::span<const Index> subset) const;

    Eigen::MatrixXd design_;
    Eigen::MatrixXd test_t_;  // B' (p x n_test)
    double lambda_;
    bool dual_;
    Eigen::MatrixXd cand_gram_;   // A A'
    Eigen::MatrixXd cross_;       // A B'
    double test_sq_norm_ = 0.0;   // tr(B B')
};

}  // namespace trainsel
