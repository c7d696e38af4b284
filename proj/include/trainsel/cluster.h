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

#include <string>
#include <vector>

#include <Eigen/Core>

#include "trainsel/marker_matrix.h"

namespace trainsel
{

/// One agglomeration step. Cluster ids follow the usual dendrogram
/// convention: 0..n-1 are the original points, merge s creates id n + s.
struct WardMerge
{
    Index left;
    Index right;
    /// sqrt(2 * increase in within-cluster sum of squares).
    double distance;
    Index size;
};

/// Full Ward dendrogram of the rows of `points` under Euclidean distance,
/// via Lance-Williams updates of squared distances. Ties go to the pair with
/// the smallest (left, right) working slots.
std::vector<WardMerge> ward_linkage(const Eigen::MatrixXd& points);

struct ClusterAssignment
{
    std::vector<std::string> ids;
    /// 1-based, numbered in order of first appearance along ids.
    std::vector<int> labels;
    int n_clusters = 0;

    int label_of(const std::string& id) const;
};

/// Labels for the first n - n_clusters merges of `merges` over n points.
std::vector<int> cut_tree(const std::vector<WardMerge>& merges, Index n, Index n_clusters);

/// Ward hierarchical clustering of marker rows cut at n_clusters.
/// ContractError unless 1 <= n_clusters <= n.
ClusterAssignment ward_cluster(const MarkerMatrix& m, Index n_clusters);

}  // namespace trainsel
