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

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <fmt/format.h>

#include "trainsel/criterion.h"
#include "trainsel/ga.h"
#include "trainsel/marker_matrix.h"
#include "trainsel/partition.h"
#include "trainsel/pca.h"

namespace trainsel::test
{

inline Eigen::MatrixXd random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
    {
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

inline Eigen::MatrixXd random_dosages(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> dist(0, 2);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
    {
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

inline std::vector<std::string> make_ids(Eigen::Index n, const std::string& prefix = "L")
{
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        ids.push_back(fmt::format("{}{}", prefix, i + 1));
    }
    return ids;
}

/// Standardized random dosage matrix.
inline MarkerMatrix random_markers(Eigen::Index n, Eigen::Index m, std::mt19937_64& rng)
{
    return center_scale(MarkerMatrix(make_ids(n), random_dosages(n, m, rng)));
}

/// Moore-Penrose inverse via complete orthogonal decomposition.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a)
{
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    return cod.pseudoInverse();
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd out(x.rows(), x.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x.cols()) = x;
    return out;
}

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

/// Standardized markers, full PC basis and a candidate/test partition with
/// the first n_candidates rows as candidates and the rest as test.
struct SelectionInstance
{
    MarkerMatrix markers;
    PCBasis basis;
    PopulationPartition partition;
    CriterionConfig criterion;
};

inline SelectionInstance selection_instance(
    Eigen::Index n_candidates,
    Eigen::Index n_test,
    Eigen::Index n_markers,
    std::uint64_t seed,
    Eigen::Index k = 0)
{
    std::mt19937_64 rng(seed);
    MarkerMatrix m = random_markers(n_candidates + n_test, n_markers, rng);
    PCBasis basis = k > 0 ? principal_components(m, k) : principal_components(m);
    std::vector<Eigen::Index> cand(static_cast<std::size_t>(n_candidates));
    std::iota(cand.begin(), cand.end(), Eigen::Index{0});
    std::vector<Eigen::Index> te(static_cast<std::size_t>(n_test));
    std::iota(te.begin(), te.end(), n_candidates);
    PopulationPartition part(m.ids(), cand, te);
    return {std::move(m), std::move(basis), std::move(part), CriterionConfig{}};
}

/// The 15-choose-5 reference instance: 15 candidates, 5 test rows,
/// 40 markers, default components, lambda 1.
inline SelectionInstance reference_instance()
{
    return selection_instance(15, 5, 40, 20240515);
}

/// GA budget pinned for the reference instance.
inline GAConfig reference_ga_config(std::uint64_t seed)
{
    GAConfig c;
    c.population_size = 100;
    c.n_generations = 50;
    c.mutation_rate = 0.2;
    c.seed = seed;
    return c;
}

/// Temporary directory removed on scope exit.
class TempDir
{
   public:
    TempDir()
    {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path()
                / fmt::format("trainsel_test_{:016x}", rng());
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

    std::filesystem::path write(const std::string& name, const std::string& content) const
    {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p;
    }

   private:
    std::filesystem::path path_;
};

}  // namespace trainsel::test
