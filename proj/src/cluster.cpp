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

#include "trainsel/cluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "trainsel/errors.h"

namespace trainsel
{

std::vector<WardMerge> ward_linkage(const Eigen::MatrixXd& points)
{
    const Index n = points.rows();
    std::vector<WardMerge> merges;
    if (n < 2)
    {
        return merges;
    }
    merges.reserve(static_cast<std::size_t>(n - 1));

    const Eigen::VectorXd sq = points.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * points * points.transpose();
    d2.colwise() += sq;
    d2.rowwise() += sq.transpose();
    d2 = d2.cwiseMax(0.0);

    std::vector<Index> size(static_cast<std::size_t>(n), 1);
    std::vector<Index> cluster_id(static_cast<std::size_t>(n));
    std::iota(cluster_id.begin(), cluster_id.end(), Index{0});
    std::vector<bool> active(static_cast<std::size_t>(n), true);

    for (Index step = 0; step < n - 1; ++step)
    {
        double best = std::numeric_limits<double>::infinity();
        Index bi = -1;
        Index bj = -1;
        for (Index i = 0; i < n; ++i)
        {
            if (!active[static_cast<std::size_t>(i)])
            {
                continue;
            }
            for (Index j = i + 1; j < n; ++j)
            {
                if (active[static_cast<std::size_t>(j)] && d2(i, j) < best)
                {
                    best = d2(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }

        const auto si = static_cast<double>(size[static_cast<std::size_t>(bi)]);
        const auto sj = static_cast<double>(size[static_cast<std::size_t>(bj)]);
        for (Index k = 0; k < n; ++k)
        {
            if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj)
            {
                continue;
            }
            const auto sk = static_cast<double>(size[static_cast<std::size_t>(k)]);
            const double v =
                ((si + sk) * d2(k, bi) + (sj + sk) * d2(k, bj) - sk * best)
                / (si + sj + sk);
            d2(k, bi) = v;
            d2(bi, k) = v;
        }

        Index left = cluster_id[static_cast<std::size_t>(bi)];
        Index right = cluster_id[static_cast<std::size_t>(bj)];
        if (left > right)
        {
            std::swap(left, right);
        }
        const Index merged = size[static_cast<std::size_t>(bi)] + size[static_cast<std::size_t>(bj)];
        merges.push_back({left, right, std::sqrt(best), merged});

        size[static_cast<std::size_t>(bi)] = merged;
        cluster_id[static_cast<std::size_t>(bi)] = n + step;
        active[static_cast<std::size_t>(bj)] = false;
    }
    return merges;
}

std::vector<int> cut_tree(const std::vector<WardMerge>& merges, Index n, Index n_clusters)
{
    if (n_clusters < 1 || n_clusters > n)
    {
        throw ContractError(fmt::format(
            "cluster count {} outside [1, {}]", n_clusters, n));
    }
    // Union-find over dendrogram ids.
    std::vector<Index> parent(static_cast<std::size_t>(2 * n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x)
    {
        while (parent[static_cast<std::size_t>(x)] != x)
        {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (Index s = 0; s < n - n_clusters; ++s)
    {
        const auto& m = merges[static_cast<std::size_t>(s)];
        parent[static_cast<std::size_t>(find(m.left))] = n + s;
        parent[static_cast<std::size_t>(find(m.right))] = n + s;
    }

    std::unordered_map<Index, int> label_of_root;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
    {
        const Index root = find(i);
        auto [it, inserted] =
            label_of_root.emplace(root, static_cast<int>(label_of_root.size()) + 1);
        labels[static_cast<std::size_t>(i)] = it->second;
    }
    return labels;
}

int ClusterAssignment::label_of(const std::string& id) const
{
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end())
    {
        throw DataError(fmt::format("id '{}' has no cluster label", id));
    }
    return labels[static_cast<std::size_t>(it - ids.begin())];
}

ClusterAssignment ward_cluster(const MarkerMatrix& m, Index n_clusters)
{
    const Index n = m.n_individuals();
    if (n_clusters < 1 || n_clusters > n)
    {
        throw ContractError(fmt::format(
            "cluster count {} outside [1, n = {}]", n_clusters, n));
    }
    const auto merges = ward_linkage(m.values());
    return {m.ids(), cut_tree(merges, n, n_clusters), static_cast<int>(n_clusters)};
}

}  // namespace trainsel
