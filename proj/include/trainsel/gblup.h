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

#include "trainsel/kinship.h"
#include "trainsel/phenotype.h"

namespace trainsel
{

/// Restricted likelihood of y = 1 mu + g + e, g ~ N(0, sg2 K), e ~ N(0, se2 I)
/// with se2 profiled out, as a function of the ratio sg2 / se2.
///
/// The kinship block is eigendecomposed once; each evaluation is O(n).
class RemlProblem
{
   public:
    /// Throws DataError when k_train is not PSD, DegenerateInputError when y
    /// is constant, ContractError when fewer than 3 observations are given.
    RemlProblem(const Eigen::VectorXd& y, const Eigen::MatrixXd& k_train);

    double log_likelihood(double ratio) const;
    /// Derivative of log_likelihood with respect to log(ratio).
    double score(double ratio) const;

    struct Estimates
    {
        double mu;
        double sigma_e2;
        /// U diag(1 / (ratio d + 1)) U' (y - mu), so that
        /// V^{-1} (y - mu) = alpha / sigma_e2.
        Eigen::VectorXd alpha;
    };
    Estimates estimates(double ratio) const;

    Index size() const noexcept { return y_rot_.size(); }

   private:
    Eigen::MatrixXd eigenvectors_;
    Eigen::VectorXd eigenvalues_;
    Eigen::VectorXd y_rot_;
    Eigen::VectorXd x_rot_;
};

struct SpmmOptions
{
    double ratio_lower = 1e-5;
    double ratio_upper = 1e5;
    /// Log-spaced starting grid; every interior local maximum is refined.
    Index grid_points = 100;
    /// Times the search range may be widened by 1e5 when the optimum sits on
    /// a bound.
    int max_expansions = 2;
    /// Skip REML and use this sg2 / se2.
    std::optional<double> fixed_ratio;
};

/// Single-kernel mixed model fit. Fixed effects are an intercept only and
/// Z is the identity over the training individuals.
struct MixedModelFit
{
    Eigen::VectorXd beta;
    double sigma_g2 = 0.0;
    double sigma_e2 = 0.0;
    double ratio = 0.0;
    double log_likelihood = 0.0;
    /// True when the optimum stayed on a bound of the widened search range.
    bool hit_bound = false;
    std::vector<std::string> train_ids;
    /// Ids of the kinship matrix, aligned with blups.
    std::vector<std::string> ids;
    Eigen::VectorXd blups;
};

/// REML fit on the individuals of `y_train`, with BLUPs for every individual
/// in `k`.
MixedModelFit fit_spmm(
    const PhenotypeVector& y_train,
    const KinshipMatrix& k,
    const SpmmOptions& options = {});

/// Fit on the `train_ids` subset of `phenotypes`.
MixedModelFit fit_spmm(
    const PhenotypeVector& phenotypes,
    const KinshipMatrix& k,
    std::span<const std::string> train_ids,
    const SpmmOptions& options = {});

/// mu + g for each id. DataError on an id the fit does not cover.
PhenotypeVector predict_gebv(
    const MixedModelFit& fit,
    std::span<const std::string> test_ids);

struct AccuracyReport
{
    double correlation = 0.0;
    Index n_test = 0;
};

/// Pearson correlation of predicted against observed values, matched by id.
/// Requires n >= 3 and nonconstant vectors (DegenerateInputError).
AccuracyReport accuracy(
    const PhenotypeVector& predicted,
    const PhenotypeVector& observed);

}  // namespace trainsel
