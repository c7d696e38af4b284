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

#include "trainsel/phenotype.h"

#include <cmath>
#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

PhenotypeVector::PhenotypeVector(
    std::vector<std::string> ids,
    Eigen::VectorXd values,
    std::string trait_name)
    : ids_(std::move(ids)),
      values_(std::move(values)),
      trait_name_(std::move(trait_name))
{
    if (static_cast<Eigen::Index>(ids_.size()) != values_.size())
    {
        throw ContractError(fmt::format(
            "phenotype '{}': {} ids but {} values",
            trait_name_,
            ids_.size(),
            values_.size()));
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ids_.size(); ++i)
    {
        if (!seen.insert(ids_[i]).second)
        {
            throw DataError(fmt::format(
                "phenotype '{}': duplicate id '{}'", trait_name_, ids_[i]));
        }
        if (!std::isfinite(values_[static_cast<Eigen::Index>(i)]))
        {
            throw DataError(fmt::format(
                "phenotype '{}': non-finite value for '{}'",
                trait_name_,
                ids_[i]));
        }
    }
}

bool PhenotypeVector::contains(const std::string& id) const noexcept
{
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

double PhenotypeVector::at(const std::string& id) const
{
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end())
    {
        throw DataError(
            fmt::format("phenotype '{}': unknown id '{}'", trait_name_, id));
    }
    return values_[it - ids_.begin()];
}

PhenotypeVector PhenotypeVector::subset(std::span<const std::string> ids) const
{
    std::unordered_map<std::string, Eigen::Index> pos;
    pos.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
    {
        pos.emplace(ids_[i], static_cast<Eigen::Index>(i));
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
        auto it = pos.find(ids[i]);
        if (it == pos.end())
        {
            throw DataError(fmt::format(
                "phenotype '{}': unknown id '{}'", trait_name_, ids[i]));
        }
        out[static_cast<Eigen::Index>(i)] = values_[it->second];
    }
    return {std::vector<std::string>(ids.begin(), ids.end()), out, trait_name_};
}

}  // namespace trainsel
