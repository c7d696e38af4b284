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

#include "trainsel/pca.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

namespace
{

struct Spectrum
{
    // Columns are component directions in individual space, scaled by the
    // singular value (i.e. full score matrix), sorted by decreasing variance.
    Eigen::MatrixXd scores;
    Eigen::VectorXd eigenvalues;
};

Spectrum spectrum_svd(const Eigen::MatrixXd& x)
{
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
    {
        throw NumericalError("SVD of marker matrix failed");
    }
    return {x * svd.matrixV(), svd.singularValues().array().square().matrix()};
}

Spectrum spectrum_gram(const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd g(x.rows(), x.rows());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(x);
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success)
    {
        throw NumericalError("eigendecomposition of M M' failed");
    }
    const Index n = g.rows();
    const Index r = std::min(x.rows(), x.cols());
    Spectrum s;
    s.scores.resize(n, r);
    s.eigenvalues.resize(r);
    // Eigen returns ascending order.
    for (Index c = 0; c < r; ++c)
    {
        const double ev = std::max(0.0, es.eigenvalues()[n - 1 - c]);
        s.eigenvalues[c] = ev;
        s.scores.col(c) = es.eigenvectors().col(n - 1 - c) * std::sqrt(ev);
    }
    return s;
}

void fix_signs(Eigen::MatrixXd& scores)
{
    for (Index c = 0; c < scores.cols(); ++c)
    {
        Index arg = 0;
        scores.col(c).cwiseAbs().maxCoeff(&arg);
        if (scores(arg, c) < 0.0)
        {
            scores.col(c) *= -1.0;
        }
    }
}

Spectrum full_spectrum(const MarkerMatrix& m, PcaMethod method)
{
    if (!m.centered_scaled())
    {
        throw ContractError(
            "principal components require a centered and scaled marker matrix");
    }
    const bool use_svd = method == PcaMethod::Svd
                         || (method == PcaMethod::Auto
                             && m.n_markers() <= kSvdMarkerThreshold);
    return use_svd ? spectrum_svd(m.values()) : spectrum_gram(m.values());
}

PCBasis truncate(const MarkerMatrix& m, Spectrum s, Index k)
{
    PCBasis basis;
    basis.ids = m.ids();
    basis.scores = s.scores.leftCols(k);
    fix_signs(basis.scores);
    basis.explained_variance = s.eigenvalues.head(k);
    basis.total_variance = m.values().squaredNorm();
    return basis;
}

}  // namespace

PCBasis principal_components(const MarkerMatrix& m, Index k, PcaMethod method)
{
    const Index limit = std::min(m.n_individuals(), m.n_markers());
    if (k < 1 || k > limit)
    {
        throw ContractError(fmt::format(
            "component count {} outside [1, min(n, m) = {}]", k, limit));
    }
    return truncate(m, full_spectrum(m, method), k);
}

PCBasis principal_components(const MarkerMatrix& m, PcaMethod method)
{
    Spectrum s = full_spectrum(m, method);
    const Index k = default_component_count(
        s.eigenvalues, m.values().squaredNorm(), m.n_individuals());
    return truncate(m, std::move(s), k);
}

Index default_component_count(
    const Eigen::VectorXd& eigenvalues,
    double total,
    Index n_individuals,
    double fraction,
    Index cap)
{
    if (eigenvalues.size() == 0 || total <= 0.0)
    {
        throw DegenerateInputError("no variance to decompose");
    }
    const double largest = eigenvalues[0];
    const double cutoff = largest * static_cast<double>(eigenvalues.size())
                          * std::numeric_limits<double>::epsilon();
    const Index nonzero = std::max<Index>(1, (eigenvalues.array() > cutoff).count());
    const Index limit = std::min({cap, n_individuals, nonzero});

    double acc = 0.0;
    for (Index k = 0; k < limit; ++k)
    {
        acc += eigenvalues[k];
        if (acc >= fraction * total)
        {
            return k + 1;
        }
    }
    return limit;
}

}  // namespace trainsel
