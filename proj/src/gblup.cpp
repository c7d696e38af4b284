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

#include "trainsel/gblup.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

constexpr double kPsdTol = 1e-8;

struct Optimum
{
    double log_ratio;
    double value;
};

// Maximizes f over [lo, hi] (log-ratio scale): grid, then each interior
// local maximum of the grid is refined by a root of the derivative df when
// it changes sign across the bracket, else by Brent on f.
template <typename F, typename D>
Optimum maximize_on(F f, D df, double lo, double hi, Index points)
{
    std::vector<double> t(static_cast<std::size_t>(points));
    std::vector<double> v(static_cast<std::size_t>(points));
    for (Index i = 0; i < points; ++i)
    {
        t[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        v[static_cast<std::size_t>(i)] = f(t[static_cast<std::size_t>(i)]);
    }
    Optimum best{t[0], v[0]};
    for (std::size_t i = 1; i < t.size(); ++i)
    {
        if (v[i] > best.value)
        {
            best = {t[i], v[i]};
        }
    }
    const int bits = std::numeric_limits<double>::digits / 2;
    for (std::size_t i = 1; i + 1 < t.size(); ++i)
    {
        if (v[i] >= v[i - 1] && v[i] >= v[i + 1])
        {
            Optimum local{};
            const double d_lo = df(t[i - 1]);
            const double d_hi = df(t[i + 1]);
            if (d_lo > 0.0 && d_hi < 0.0)
            {
                std::uintmax_t iters = 200;
                const auto [a, b] = boost::math::tools::toms748_solve(
                    df,
                    t[i - 1],
                    t[i + 1],
                    d_lo,
                    d_hi,
                    boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 4),
                    iters);
                const double x = 0.5 * (a + b);
                local = {x, f(x)};
            }
            else
            {
                auto [x, neg] = boost::math::tools::brent_find_minima(
                    [&](double s) { return -f(s); }, t[i - 1], t[i + 1], bits);
                local = {x, -neg};
            }
            if (local.value > best.value)
            {
                best = local;
            }
        }
    }
    return best;
}

}  // namespace

RemlProblem::RemlProblem(const Eigen::VectorXd& y, const Eigen::MatrixXd& k_train)
{
    const Index n = y.size();
    if (n < 3)
    {
        throw ContractError(fmt::format(
            "mixed model needs at least 3 training observations, got {}", n));
    }
    if (k_train.rows() != n || k_train.cols() != n)
    {
        throw ContractError(fmt::format(
            "training kinship is {}x{} for {} observations",
            k_train.rows(),
            k_train.cols(),
            n));
    }
    if (!y.allFinite())
    {
        throw DataError("phenotypes must be finite");
    }
    const double range = y.maxCoeff() - y.minCoeff();
    if (range <= 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff()))
    {
        throw DegenerateInputError("training phenotypes have zero variance");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k_train);
    if (es.info() != Eigen::Success)
    {
        throw NumericalError("eigendecomposition of training kinship failed");
    }
    const auto& ev = es.eigenvalues();
    const double largest = std::max(0.0, ev.maxCoeff());
    if (ev.minCoeff() < -kPsdTol * largest)
    {
        throw DataError(fmt::format(
            "training kinship is not positive semidefinite (min eigenvalue {})",
            ev.minCoeff()));
    }
    eigenvalues_ = ev.cwiseMax(0.0);
    eigenvectors_ = es.eigenvectors();
    y_rot_ = eigenvectors_.transpose() * y;
    x_rot_ = eigenvectors_.transpose() * Eigen::VectorXd::Ones(n);
}

double RemlProblem::log_likelihood(double ratio) const
{
    const auto n = static_cast<double>(y_rot_.size());
    const Eigen::ArrayXd h = ratio * eigenvalues_.array() + 1.0;
    const Eigen::ArrayXd w = h.inverse();
    const double xwx = (x_rot_.array().square() * w).sum();
    const double xwy = (x_rot_.array() * y_rot_.array() * w).sum();
    const double mu = xwy / xwx;
    const double ssr = ((y_rot_.array() - x_rot_.array() * mu).square() * w).sum();
    const double dof = n - 1.0;
    const double s2 = ssr / dof;
    return -0.5
           * (dof * (std::log(2.0 * std::numbers::pi * s2) + 1.0)
              + h.log().sum() + std::log(xwx));
}

double RemlProblem::score(double ratio) const
{
    const Eigen::ArrayXd d = eigenvalues_.array();
    const Eigen::ArrayXd w = (ratio * d + 1.0).inverse();
    const Eigen::ArrayXd x = x_rot_.array();
    const double xwx = (x.square() * w).sum();
    const double mu = (x * y_rot_.array() * w).sum() / xwx;
    const Eigen::ArrayXd r2 = (y_rot_.array() - x * mu).square();
    const double ssr = (r2 * w).sum();
    // mu minimizes ssr, so its own derivative drops out.
    const double d_ssr = -(r2 * d * w.square()).sum();
    const double d_xwx = -(x.square() * d * w.square()).sum();
    const auto dof = static_cast<double>(y_rot_.size()) - 1.0;
    const double d_ratio = -0.5 * (dof * d_ssr / ssr + (d * w).sum() + d_xwx / xwx);
    return ratio * d_ratio;
}

RemlProblem::Estimates RemlProblem::estimates(double ratio) const
{
    const auto n = static_cast<double>(y_rot_.size());
    const Eigen::ArrayXd w = (ratio * eigenvalues_.array() + 1.0).inverse();
    const double xwx = (x_rot_.array().square() * w).sum();
    const double xwy = (x_rot_.array() * y_rot_.array() * w).sum();
    const double mu = xwy / xwx;
    const Eigen::ArrayXd resid = y_rot_.array() - x_rot_.array() * mu;
    const double s2 = (resid.square() * w).sum() / (n - 1.0);
    Eigen::VectorXd scaled = (resid * w).matrix();
    return {mu, s2, eigenvectors_ * scaled};
}

MixedModelFit fit_spmm(
    const PhenotypeVector& y_train,
    const KinshipMatrix& k,
    const SpmmOptions& options)
{
    const auto& train_ids = y_train.ids();
    const auto train_idx = k.indices_of(train_ids);
    const Eigen::MatrixXd k_train = k.values()(train_idx, train_idx);
    const RemlProblem problem(y_train.values(), k_train);

    double ratio = 0.0;
    bool hit_bound = false;
    if (options.fixed_ratio)
    {
        if (!(*options.fixed_ratio >= 0.0) || !std::isfinite(*options.fixed_ratio))
        {
            throw ContractError(fmt::format(
                "fixed variance ratio must be finite and >= 0, got {}",
                *options.fixed_ratio));
        }
        ratio = *options.fixed_ratio;
    }
    else
    {
        if (!(options.ratio_lower > 0.0 && options.ratio_lower < options.ratio_upper))
        {
            throw ContractError("invalid variance ratio search bounds");
        }
        if (options.grid_points < 3)
        {
            throw ContractError("variance ratio grid needs at least 3 points");
        }
        auto f = [&](double t) { return problem.log_likelihood(std::exp(t)); };
        auto df = [&](double t) { return problem.score(std::exp(t)); };
        double lo = std::log(options.ratio_lower);
        double hi = std::log(options.ratio_upper);
        Optimum best = maximize_on(f, df, lo, hi, options.grid_points);
        const double widen = std::log(1e5);
        for (int e = 0; e < options.max_expansions; ++e)
        {
            const double step = (hi - lo) / static_cast<double>(options.grid_points - 1);
            const bool at_lo = best.log_ratio <= lo + step;
            const bool at_hi = best.log_ratio >= hi - step;
            if (!at_lo && !at_hi)
            {
                break;
            }
            spdlog::warn(
                "REML variance ratio {:.3g} is at the search bound, widening",
                std::exp(best.log_ratio));
            if (at_lo)
            {
                lo -= widen;
            }
            if (at_hi)
            {
                hi += widen;
            }
            const Optimum wider = maximize_on(f, df, lo, hi, options.grid_points);
            if (wider.value > best.value)
            {
                best = wider;
            }
        }
        const double step = (hi - lo) / static_cast<double>(options.grid_points - 1);
        hit_bound = best.log_ratio <= lo + step || best.log_ratio >= hi - step;
        ratio = std::exp(best.log_ratio);
    }

    const auto est = problem.estimates(ratio);
    MixedModelFit fit;
    fit.beta = Eigen::VectorXd::Constant(1, est.mu);
    fit.sigma_e2 = est.sigma_e2;
    fit.sigma_g2 = ratio * est.sigma_e2;
    fit.ratio = ratio;
    fit.log_likelihood = problem.log_likelihood(ratio);
    fit.hit_bound = hit_bound;
    fit.train_ids = train_ids;
    fit.ids = k.ids();
    // g = sg2 K[., train] V^{-1} (y - mu) = ratio K[., train] alpha.
    Eigen::VectorXd k_alpha = k.values()(Eigen::all, train_idx) * est.alpha;
    fit.blups = ratio * k_alpha;
    if (!std::isfinite(fit.log_likelihood) || !fit.blups.allFinite())
    {
        throw NumericalError("mixed model fit produced non-finite values");
    }
    return fit;
}

MixedModelFit fit_spmm(
    const PhenotypeVector& phenotypes,
    const KinshipMatrix& k,
    std::span<const std::string> train_ids,
    const SpmmOptions& options)
{
    return fit_spmm(phenotypes.subset(train_ids), k, options);
}

PhenotypeVector predict_gebv(
    const MixedModelFit& fit,
    std::span<const std::string> test_ids)
{
    std::unordered_map<std::string, Index> pos;
    pos.reserve(fit.ids.size());
    for (std::size_t i = 0; i < fit.ids.size(); ++i)
    {
        pos.emplace(fit.ids[i], static_cast<Index>(i));
    }
    Eigen::VectorXd out(static_cast<Index>(test_ids.size()));
    for (std::size_t i = 0; i < test_ids.size(); ++i)
    {
        auto it = pos.find(test_ids[i]);
        if (it == pos.end())
        {
            throw DataError(fmt::format(
                "id '{}' is not covered by the fitted kinship", test_ids[i]));
        }
        out[static_cast<Index>(i)] = fit.beta[0] + fit.blups[it->second];
    }
    return {std::vector<std::string>(test_ids.begin(), test_ids.end()), out, "gebv"};
}

AccuracyReport accuracy(const PhenotypeVector& predicted, const PhenotypeVector& observed)
{
    const Index n = predicted.size();
    if (n < 3)
    {
        throw ContractError(fmt::format("accuracy needs at least 3 individuals, got {}", n));
    }
    const Eigen::ArrayXd p = predicted.values().array();
    const Eigen::ArrayXd o = observed.subset(predicted.ids()).values().array();
    const Eigen::ArrayXd pc = p - p.mean();
    const Eigen::ArrayXd oc = o - o.mean();
    const double sp = std::sqrt(pc.square().sum());
    const double so = std::sqrt(oc.square().sum());
    const double scale_p = std::max(1.0, p.abs().maxCoeff());
    const double scale_o = std::max(1.0, o.abs().maxCoeff());
    if (sp <= 1e-12 * scale_p || so <= 1e-12 * scale_o)
    {
        throw DegenerateInputError("correlation undefined for a constant vector");
    }
    const double r = (pc * oc).sum() / (sp * so);
    return {std::clamp(r, -1.0, 1.0), n};
}

}  // namespace trainsel
