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
#include <vector>

#include <Eigen/Core>

namespace trainsel
{

/// Trait measurements for a set of individuals. Ids are unique and every
/// value is finite.
class PhenotypeVector
{
   public:
    PhenotypeVector(
        std::vector<std::string> ids,
        Eigen::VectorXd values,
        std::string trait_name = "trait");

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    const std::string& trait_name() const noexcept { return trait_name_; }
    Eigen::Index size() const noexcept { return values_.size(); }

    /// Value for an id; throws DataError if absent.
    double at(const std::string& id) const;
    bool contains(const std::string& id) const noexcept;

    /// Values for `ids` in that order; throws DataError on an unknown id.
    PhenotypeVector subset(std::span<const std::string> ids) const;

   private:
    std::vector<std::string> ids_;
    Eigen::VectorXd values_;
    std::string trait_name_;
};

}  // namespace trainsel
