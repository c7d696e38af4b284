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

#include "trainsel/kinship.h"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

KinshipMatrix::KinshipMatrix(std::vector<std::string> ids, Eigen::MatrixXd values)
    : ids_(std::move(ids)), values_(std::move(values))
{
    if (values_.rows() != values_.cols())
    {
        throw DataError(fmt::format(
            "kinship matrix is {}x{}, not square", values_.rows(), values_.cols()));
    }
    if (static_cast<Index>(ids_.size()) != values_.rows())
    {
        throw ContractError(fmt::format(
            "kinship matrix has {} rows but {} ids", values_.rows(), ids_.size()));
    }
    if (!values_.allFinite())
    {
        throw DataError("kinship matrix contains non-finite values");
    }
    const double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
    if ((values_ - values_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    {
        throw DataError("kinship matrix is not symmetric");
    }
    if (values_.size() > 0 && values_.diagonal().minCoeff() < 0.0)
    {
        throw DataError("kinship matrix has a negative diagonal entry");
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
    {
        if (!index_.emplace(ids_[i], static_cast<Index>(i)).second)
        {
            throw DataError(fmt::format("duplicate kinship id '{}'", ids_[i]));
        }
    }
}

Index KinshipMatrix::index_of(const std::string& id) const
{
    auto it = index_.find(id);
    if (it == index_.end())
    {
        throw DataError(fmt::format("id '{}' not in kinship matrix", id));
    }
    return it->second;
}

std::vector<Index> KinshipMatrix::indices_of(std::span<const std::string> ids) const
{
    std::vector<Index> out;
    out.reserve(ids.size());
    for (const auto& id : ids)
    {
        out.push_back(index_of(id));
    }
    return out;
}

KinshipMatrix KinshipMatrix::subset(std::span<const std::string> ids) const
{
    const auto idx = indices_of(ids);
    return {std::vector<std::string>(ids.begin(), ids.end()), values_(idx, idx)};
}

KinshipMatrix kinship(const MarkerMatrix& m)
{
    if (!m.centered_scaled())
    {
        throw ContractError("kinship requires a centered and scaled marker matrix");
    }
    if (m.n_markers() < 1)
    {
        throw ContractError("kinship requires at least one marker");
    }
    const Eigen::MatrixXd& x = m.values();
    Eigen::MatrixXd k(x.rows(), x.rows());
    k.setZero();
    k.selfadjointView<Eigen::Lower>().rankUpdate(x);
    k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
    k /= static_cast<double>(m.n_markers());
    return {m.ids(), std::move(k)};
}

bool is_positive_semidefinite(const Eigen::MatrixXd& k, double rel_tol)
{
    if (k.size() == 0)
    {
        return true;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
    {
        throw NumericalError("eigendecomposition of kinship matrix failed");
    }
    const auto& ev = es.eigenvalues();
    const double largest = std::max(0.0, ev.maxCoeff());
    return ev.minCoeff() >= -rel_tol * largest;
}

}  // namespace trainsel
