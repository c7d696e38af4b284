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

#include "trainsel/criterion.h"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

void check_columns(MatrixView train, MatrixView test)
{
    if (train.cols() != test.cols())
    {
        throw ContractError(fmt::format(
            "training block has {} columns but test block has {}",
            train.cols(),
            test.cols()));
    }
    if (train.rows() == 0)
    {
        throw ContractError("training block is empty");
    }
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& a)
{
    Eigen::MatrixXd g(a.cols(), a.cols());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

// Returns L^{-1} B' where L L' = G + lambda I.
Eigen::MatrixXd whitened_test(Eigen::MatrixXd g, double lambda, const Eigen::MatrixXd& b)
{
    g.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
    {
        throw NumericalError("Cholesky factorization of ridge Gram matrix failed");
    }
    Eigen::MatrixXd y = b.transpose();
    llt.matrixL().solveInPlace(y);
    return y;
}

PevMatrix ridge_primal(MatrixView train, MatrixView test, double lambda, bool intercept)
{
    const Eigen::MatrixXd a = augment(train, intercept);
    const Eigen::MatrixXd b = augment(test, intercept);
    const Eigen::MatrixXd y = whitened_test(gram(a), lambda, b);
    PevMatrix pev;
    pev.values = y.transpose() * y;
    return pev;
}

}  // namespace

void CriterionConfig::validate_for_pc() const
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
    {
        throw ContractError(fmt::format(
            "PC criterion requires lambda > 0, got {}", lambda));
    }
    if (k < 0)
    {
        throw ContractError(fmt::format("component count must be >= 0, got {}", k));
    }
}

Eigen::MatrixXd augment(MatrixView x, bool include_intercept)
{
    if (!include_intercept)
    {
        return x;
    }
    Eigen::MatrixXd out(x.rows(), x.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x.cols()) = x;
    return out;
}

PevMatrix pev_ols(MatrixView train, MatrixView test, bool include_intercept)
{
    check_columns(train, test);
    const Eigen::MatrixXd a = augment(train, include_intercept);
    const Eigen::MatrixXd b = augment(test, include_intercept);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
    {
        throw NumericalError("SVD of training design failed");
    }
    const auto& s = svd.singularValues();
    const double cutoff = (s.size() > 0 ? s[0] : 0.0)
                          * static_cast<double>(std::max(a.rows(), a.cols()))
                          * std::numeric_limits<double>::epsilon();
    const Index rank = (s.array() > cutoff).count();

    // (A'A)^- = V S^-2 V', so B (A'A)^- B' = W W' with W = B V_r S_r^-1.
    Eigen::MatrixXd w = b * svd.matrixV().leftCols(rank);
    for (Index c = 0; c < rank; ++c)
    {
        w.col(c) /= s[c];
    }
    PevMatrix pev;
    pev.values = w * w.transpose();
    return pev;
}

PevMatrix pev_ridge(
    MatrixView train,
    MatrixView test,
    double lambda,
    bool include_intercept)
{
    if (!(lambda >= 0.0))
    {
        throw ContractError(fmt::format("ridge lambda must be >= 0, got {}", lambda));
    }
    check_columns(train, test);
    if (lambda == 0.0)
    {
        return pev_ols(train, test, include_intercept);
    }
    return ridge_primal(train, test, lambda, include_intercept);
}

PevMatrix pev_pc(
    MatrixView train_scores,
    MatrixView test_scores,
    double lambda,
    bool include_intercept)
{
    if (!(lambda > 0.0))
    {
        throw ContractError(fmt::format(
            "PC criterion requires lambda > 0, got {}", lambda));
    }
    if (train_scores.cols() != test_scores.cols())
    {
        throw ContractError(fmt::format(
            "component count mismatch: training {} vs test {}",
            train_scores.cols(),
            test_scores.cols()));
    }
    check_columns(train_scores, test_scores);
    return ridge_primal(train_scores, test_scores, lambda, include_intercept);
}

double criterion_trace(const PevMatrix& pev)
{
    return pev.values.trace();
}

Eigen::MatrixXd reliability_vanraden(MatrixView k21, MatrixView k11, double delta)
{
    if (!(delta > 0.0))
    {
        throw ContractError(fmt::format("delta must be > 0, got {}", delta));
    }
    if (k11.rows() != k11.cols())
    {
        throw ContractError(fmt::format(
            "K11 must be square, got {}x{}", k11.rows(), k11.cols()));
    }
    if (k21.cols() != k11.rows())
    {
        throw ContractError(fmt::format(
            "K21 has {} columns but K11 is {}x{}",
            k21.cols(),
            k11.rows(),
            k11.cols()));
    }
    const Eigen::MatrixXd y = whitened_test(k11, delta, k21);
    return y.transpose() * y;
}

double delta_from_heritability(double h2)
{
    if (!(h2 > 0.0 && h2 < 1.0))
    {
        throw ContractError(fmt::format("heritability must be in (0, 1), got {}", h2));
    }
    return (1.0 - h2) / h2;
}

double delta_from_lambda(double lambda, Index n_markers)
{
    if (n_markers < 1)
    {
        throw ContractError("marker count must be >= 1");
    }
    return lambda / static_cast<double>(n_markers);
}

double lambda_from_delta(double delta, Index n_markers)
{
    if (n_markers < 1)
    {
        throw ContractError("marker count must be >= 1");
    }
    return delta * static_cast<double>(n_markers);
}

TraceEvaluator::TraceEvaluator(
    Eigen::MatrixXd candidate_scores,
    Eigen::MatrixXd test_scores,
    double lambda,
    bool include_intercept,
    Index subset_size)
    : lambda_(lambda)
{
    if (!(lambda > 0.0))
    {
        throw ContractError(fmt::format(
            "PC criterion requires lambda > 0, got {}", lambda));
    }
    if (candidate_scores.cols() != test_scores.cols())
    {
        throw ContractError(fmt::format(
            "component count mismatch: candidates {} vs test {}",
            candidate_scores.cols(),
            test_scores.cols()));
    }
    design_ = augment(candidate_scores, include_intercept);
    const Eigen::MatrixXd b = augment(test_scores, include_intercept);
    test_t_ = b.transpose();
    dual_ = subset_size < design_.cols();
    if (dual_)
    {
        cand_gram_ = design_ * design_.transpose();
        cross_ = design_ * test_t_;
        test_sq_norm_ = b.squaredNorm();
    }
}

double TraceEvaluator::operator()(std::span<const Index> subset) const
{
    if (subset.empty())
    {
        throw ContractError("training subset is empty");
    }
    return dual_ ? dual(subset) : primal(subset);
}

double TraceEvaluator::primal(std::span<const Index> subset) const
{
    const Eigen::MatrixXd a = select_rows(design_, subset);
    Eigen::MatrixXd g = gram(a);
    g.diagonal().array() += lambda_;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
    {
        throw NumericalError("Cholesky factorization of ridge Gram matrix failed");
    }
    Eigen::MatrixXd y = test_t_;
    llt.matrixL().solveInPlace(y);
    return y.squaredNorm();
}

double TraceEvaluator::dual(std::span<const Index> subset) const
{
    const auto s = static_cast<Index>(subset.size());
    Eigen::MatrixXd c(s, s);
    Eigen::MatrixXd x(s, cross_.cols());
    for (Index i = 0; i < s; ++i)
    {
        const Index ri = subset[static_cast<std::size_t>(i)];
        for (Index j = 0; j <= i; ++j)
        {
            c(i, j) = cand_gram_(ri, subset[static_cast<std::size_t>(j)]);
        }
        x.row(i) = cross_.row(ri);
    }
    c.diagonal().array() += lambda_;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(c);
    if (llt.info() != Eigen::Success)
    {
        throw NumericalError("Cholesky factorization of dual ridge kernel failed");
    }
    llt.matrixL().solveInPlace(x);
    return (test_sq_norm_ - x.squaredNorm()) / lambda_;
}

}  // namespace trainsel
