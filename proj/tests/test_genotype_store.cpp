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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <catch2/catch_amalgamated.hpp>

#include "test_support.h"
#include "trainsel/errors.h"
#include "trainsel/io.h"
#include "trainsel/kinship.h"
#include "trainsel/marker_matrix.h"
#include "trainsel/partition.h"
#include "trainsel/pca.h"
#include "trainsel/phenotype.h"

namespace trainsel
{

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using test::TempDir;

// ============================================================================
// load_markers
// ============================================================================

TEST_CASE("load_markers reads a small csv back", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.csv", "id,a,b\nL1,0,1\nL2,2,1\nL3,1,1\n");
    const MarkerMatrix m = load_markers(path);

    REQUIRE(m.n_individuals() == 3);
    REQUIRE(m.n_markers() == 2);
    REQUIRE_FALSE(m.centered_scaled());
    REQUIRE(m.ids() == std::vector<std::string>{"L1", "L2", "L3"});
    REQUIRE(m.marker_names() == std::vector<std::string>{"a", "b"});

    Eigen::MatrixXd expected(3, 2);
    expected << 0, 1, 2, 1, 1, 1;
    REQUIRE(m.values() == expected);
    // column b is constant: flagged, not removed yet
    REQUIRE(m.dropped_markers() == std::vector<std::string>{"b"});
}

TEST_CASE("load_markers imputes missing cells to the column mean", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.csv", "id,a,b\nL1,NA,1\nL2,2,0\nL3,1,1\n");
    const MarkerMatrix m = load_markers(path);
    // mean of the remaining column-1 entries (2, 1)
    REQUIRE_THAT(m.values()(0, 0), WithinAbs(1.5, 1e-15));
    REQUIRE(m.values()(1, 0) == 2.0);
}

TEST_CASE("load_markers rejects duplicate ids", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.csv", "id,a\nL1,0\nL2,1\nL1,2\n");
    REQUIRE_THROWS_AS(load_markers(path), DataError);
}

TEST_CASE("load_markers rejects non-numeric cells", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.csv", "id,a,b\nL1,0,1\nL2,x,1\n");
    try
    {
        load_markers(path);
        FAIL("expected DataError");
    }
    catch (const FormatError&)
    {
        FAIL("non-numeric cell should be a data error, not a format error");
    }
    catch (const DataError& e)
    {
        REQUIRE(std::string(e.what()).find(":3:2:") != std::string::npos);
    }
}

TEST_CASE("load_markers reports line and column of a ragged row", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.csv", "id,a,b\nL1,0,1\nL2,1\n");
    try
    {
        load_markers(path);
        FAIL("expected FormatError");
    }
    catch (const FormatError& e)
    {
        REQUIRE(e.line() == 3);
        REQUIRE(e.column() == 3);
    }
}

TEST_CASE("load_markers requires an id header", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.csv", "name,a\nL1,0\n");
    REQUIRE_THROWS_AS(load_markers(path), FormatError);
}

TEST_CASE("load_markers whitespace mode is headerless", "[io]")
{
    TempDir dir;
    const auto path = dir.write("m.txt", "L1 0 1 2\nL2\t2  1 0\n\nL3 1 1 1\n");
    const MarkerMatrix m = load_markers(path, MarkerFormat::Whitespace);
    REQUIRE(m.n_individuals() == 3);
    REQUIRE(m.n_markers() == 3);
    REQUIRE(m.marker_names() == std::vector<std::string>{"m1", "m2", "m3"});
    REQUIRE(m.values()(1, 0) == 2.0);
    REQUIRE(parse_marker_format("ws") == MarkerFormat::Whitespace);
    REQUIRE_THROWS_AS(parse_marker_format("vcf"), ContractError);
}

TEST_CASE("load_markers on a missing file is an io error", "[io]")
{
    REQUIRE_THROWS_AS(load_markers("/nonexistent/markers.csv"), IoError);
}

TEST_CASE("markers and phenotypes round-trip through csv", "[io]")
{
    std::mt19937_64 rng(11);
    TempDir dir;
    const MarkerMatrix m(test::make_ids(6), test::random_normal(6, 4, rng));
    write_markers_csv(dir.path() / "m.csv", m);
    const MarkerMatrix back = load_markers(dir.path() / "m.csv");
    REQUIRE(back.ids() == m.ids());
    REQUIRE(back.values() == m.values());

    const PhenotypeVector y(test::make_ids(6), test::random_normal(6, 1, rng).col(0), "yield");
    write_phenotypes_csv(dir.path() / "y.csv", {y});
    const auto traits = load_phenotypes(dir.path() / "y.csv");
    REQUIRE(traits.size() == 1);
    REQUIRE(traits[0].trait_name() == "yield");
    REQUIRE(traits[0].values() == y.values());
}

TEST_CASE("load_phenotypes keeps one vector per trait and skips NA", "[io]")
{
    TempDir dir;
    const auto path = dir.write("y.csv", "id,height,yield\nL1,1.5,NA\nL2,2.5,3\nL3,NA,4\n");
    const auto traits = load_phenotypes(path);
    REQUIRE(traits.size() == 2);
    REQUIRE(traits[0].trait_name() == "height");
    REQUIRE(traits[0].ids() == std::vector<std::string>{"L1", "L2"});
    REQUIRE(traits[1].ids() == std::vector<std::string>{"L2", "L3"});
    REQUIRE(traits[1].at("L3") == 4.0);
    REQUIRE_THROWS_AS(traits[1].at("L1"), DataError);
}

// ============================================================================
// center_scale
// ============================================================================

TEST_CASE("center_scale standardizes with the population sd", "[center_scale]")
{
    Eigen::MatrixXd v(3, 1);
    v << 1, 2, 3;
    const MarkerMatrix m = center_scale(MarkerMatrix({"a", "b", "c"}, v));
    const double sd = std::sqrt(2.0 / 3.0);

    REQUIRE(m.centered_scaled());
    REQUIRE_THAT(m.values()(0, 0), WithinAbs(-1.0 / sd, 1e-14));
    REQUIRE_THAT(m.values()(1, 0), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(m.values()(2, 0), WithinAbs(1.0 / sd, 1e-14));
}

TEST_CASE("center_scale drops constant columns", "[center_scale]")
{
    Eigen::MatrixXd v(3, 2);
    v << 1, 2, 2, 2, 3, 2;
    const MarkerMatrix m = center_scale(MarkerMatrix({"a", "b", "c"}, {"x", "y"}, v));
    REQUIRE(m.n_markers() == 1);
    REQUIRE(m.dropped_markers() == std::vector<std::string>{"y"});
    REQUIRE(m.marker_names() == std::vector<std::string>{"x"});
}

TEST_CASE("center_scale on all-constant input is degenerate", "[center_scale]")
{
    const MarkerMatrix m({"a", "b"}, Eigen::MatrixXd::Constant(2, 3, 1.0));
    REQUIRE_THROWS_AS(center_scale(m), DegenerateInputError);
}

TEST_CASE("center_scale invariants and idempotence", "[center_scale][property]")
{
    std::mt19937_64 rng(GENERATE(1, 2, 3, 4, 5));
    const MarkerMatrix raw(test::make_ids(15), test::random_dosages(15, 40, rng));
    const MarkerMatrix once = center_scale(raw);

    const Eigen::RowVectorXd mean = once.values().colwise().mean();
    const Eigen::RowVectorXd sd =
        (once.values().array().square().colwise().sum() / 15.0).sqrt().matrix();
    REQUIRE(mean.cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((sd.array() - 1.0).abs().maxCoeff() < 1e-10);

    const MarkerMatrix twice = center_scale(once);
    REQUIRE(twice.n_markers() == once.n_markers());
    REQUIRE((twice.values() - once.values()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(twice.dropped_markers() == once.dropped_markers());
}

TEST_CASE("MarkerMatrix constructor validates ids and values", "[marker_matrix]")
{
    REQUIRE_THROWS_AS(MarkerMatrix({"a", "a"}, Eigen::MatrixXd::Zero(2, 1)), DataError);
    REQUIRE_THROWS_AS(MarkerMatrix({"a"}, Eigen::MatrixXd::Zero(2, 1)), ContractError);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 1);
    bad(1, 0) = std::nan("");
    REQUIRE_THROWS_AS(MarkerMatrix({"a", "b"}, bad), DataError);

    const MarkerMatrix m({"a", "b"}, Eigen::MatrixXd::Zero(2, 1));
    REQUIRE(m.row_of("b") == 1);
    REQUIRE_THROWS_AS(m.row_of("c"), DataError);
}

// ============================================================================
// kinship
// ============================================================================

TEST_CASE("kinship of the 2x2 identity is I/2", "[kinship]")
{
    const MarkerMatrix m({"a", "b"}, Eigen::MatrixXd::Identity(2, 2), true);
    const KinshipMatrix k = kinship(m);
    REQUIRE(k.values().isApprox(0.5 * Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("kinship requires standardized markers", "[kinship]")
{
    const MarkerMatrix m({"a", "b"}, Eigen::MatrixXd::Identity(2, 2));
    REQUIRE_THROWS_AS(kinship(m), ContractError);
}

TEST_CASE("kinship matches the brute-force double loop", "[kinship][oracle]")
{
    std::mt19937_64 rng(GENERATE(10, 20, 30));
    const MarkerMatrix m = test::random_markers(10, 50, rng);
    const KinshipMatrix k = kinship(m);
    const auto& v = m.values();
    const auto n_markers = static_cast<double>(m.n_markers());

    for (Index i = 0; i < v.rows(); ++i)
    {
        for (Index l = 0; l < v.rows(); ++l)
        {
            double sum = 0.0;
            for (Index j = 0; j < v.cols(); ++j)
            {
                sum += v(i, j) * v(l, j);
            }
            REQUIRE_THAT(k.values()(i, l), WithinAbs(sum / n_markers, 1e-10));
        }
    }
    REQUIRE(is_positive_semidefinite(k.values()));
    REQUIRE((k.values() - k.values().transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kinship commutes with row permutation", "[kinship][property]")
{
    std::mt19937_64 rng(99);
    const MarkerMatrix m = test::random_markers(12, 60, rng);
    std::vector<Index> perm(12);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<std::string> ids;
    for (Index p : perm)
    {
        ids.push_back(m.ids()[static_cast<std::size_t>(p)]);
    }
    const MarkerMatrix permuted(ids, select_rows(m.values(), perm), true);
    const Eigen::MatrixXd kp = kinship(permuted).values();
    const Eigen::MatrixXd k = kinship(m).values();
    for (Index i = 0; i < 12; ++i)
    {
        for (Index j = 0; j < 12; ++j)
        {
            REQUIRE_THAT(kp(i, j), WithinAbs(k(perm[i], perm[j]), 1e-12));
        }
    }
}

TEST_CASE("KinshipMatrix validates its input", "[kinship]")
{
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.4, 1;
    REQUIRE_THROWS_AS(KinshipMatrix({"a", "b"}, asym), DataError);
    Eigen::MatrixXd negdiag(2, 2);
    negdiag << -1, 0, 0, 1;
    REQUIRE_THROWS_AS(KinshipMatrix({"a", "b"}, negdiag), DataError);

    Eigen::MatrixXd k(3, 3);
    k << 2, 1, 0, 1, 2, 1, 0, 1, 2;
    const KinshipMatrix km({"a", "b", "c"}, k);
    const std::vector<std::string> sub{"c", "a"};
    const KinshipMatrix s = km.subset(sub);
    REQUIRE(s.values()(0, 1) == 0.0);
    REQUIRE(s.values()(0, 0) == 2.0);
    REQUIRE(s.ids() == sub);
}

// ============================================================================
// principal_components
// ============================================================================

TEST_CASE("principal components reconstruct MM' at full rank", "[pca]")
{
    std::mt19937_64 rng(GENERATE(3, 4));
    const auto method = GENERATE(PcaMethod::Svd, PcaMethod::Gram);
    const MarkerMatrix m = test::random_markers(15, 40, rng);
    const Index rank = numerical_rank(m.values());
    const PCBasis basis = principal_components(m, rank, method);

    const Eigen::MatrixXd mmt = m.values() * m.values().transpose();
    const Eigen::MatrixXd ssT = basis.scores * basis.scores.transpose();
    REQUIRE(test::rel_frobenius(ssT, mmt) < 1e-8);

    // orthogonal columns, nonincreasing variances
    const Eigen::MatrixXd gram = basis.scores.transpose() * basis.scores;
    const double off = (gram - Eigen::MatrixXd(gram.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    REQUIRE(off < 1e-8 * gram.diagonal().maxCoeff());
    for (Index i = 1; i < basis.k(); ++i)
    {
        REQUIRE(basis.explained_variance[i] <= basis.explained_variance[i - 1]);
    }
}

TEST_CASE("identical marker rows get identical scores", "[pca]")
{
    std::mt19937_64 rng(8);
    Eigen::MatrixXd raw = test::random_dosages(10, 30, rng);
    raw.row(7) = raw.row(2);
    const MarkerMatrix m = center_scale(MarkerMatrix(test::make_ids(10), raw));
    const PCBasis basis = principal_components(m, 5);
    REQUIRE((basis.scores.row(7) - basis.scores.row(2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("explained variance matches an independent eigensolve", "[pca][oracle]")
{
    std::mt19937_64 rng(GENERATE(21, 22, 23));
    const MarkerMatrix m = test::random_markers(20, 100, rng);
    const PCBasis basis = principal_components(m, 5);

    const Eigen::MatrixXd mmt = m.values() * m.values().transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mmt, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues().reverse();
    for (Index i = 0; i < 5; ++i)
    {
        REQUIRE_THAT(basis.explained_variance[i], WithinRel(ev[i], 1e-8));
    }
    REQUIRE_THAT(basis.total_variance, WithinRel(mmt.trace(), 1e-10));
}

TEST_CASE("svd and gram routes agree", "[pca]")
{
    std::mt19937_64 rng(31);
    const MarkerMatrix m = test::random_markers(25, 60, rng);
    const PCBasis a = principal_components(m, 6, PcaMethod::Svd);
    const PCBasis b = principal_components(m, 6, PcaMethod::Gram);
    REQUIRE((a.scores - b.scores).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("principal_components rejects bad k and raw input", "[pca]")
{
    std::mt19937_64 rng(5);
    const MarkerMatrix m = test::random_markers(6, 10, rng);
    REQUIRE_THROWS_AS(principal_components(m, 0), ContractError);
    REQUIRE_THROWS_AS(principal_components(m, 7), ContractError);
    const MarkerMatrix raw(test::make_ids(6), test::random_dosages(6, 10, rng));
    REQUIRE_THROWS_AS(principal_components(raw, 2), ContractError);
}

TEST_CASE("default component count reaches the variance fraction", "[pca]")
{
    Eigen::VectorXd ev(5);
    ev << 50, 30, 15, 4, 1;
    REQUIRE(default_component_count(ev, 100.0, 10) == 3);
    REQUIRE(default_component_count(ev, 100.0, 10, 0.5) == 1);
    REQUIRE(default_component_count(ev, 100.0, 2) == 2);
    REQUIRE(default_component_count(ev, 100.0, 10, 0.99, 2) == 2);

    std::mt19937_64 rng(6);
    const MarkerMatrix m = test::random_markers(30, 80, rng);
    const PCBasis basis = principal_components(m);
    REQUIRE(basis.explained_variance.sum() >= 0.9 * basis.total_variance);
    REQUIRE(basis.explained_variance.head(basis.k() - 1).sum() < 0.9 * basis.total_variance);
}

// ============================================================================
// partition
// ============================================================================

TEST_CASE("partition accepts disjoint sets and leaves others unused", "[partition]")
{
    const MarkerMatrix m({"A", "B", "C", "D", "E"}, Eigen::MatrixXd::Identity(5, 5));
    const std::vector<std::string> test{"A"};
    const std::vector<std::string> cand{"B", "C", "D"};
    const PopulationPartition p = partition(m, test, cand);
    REQUIRE(p.n_test() == 1);
    REQUIRE(p.n_candidates() == 3);
    REQUIRE(p.candidate_ids() == cand);
    REQUIRE(p.test_block(m.values()).row(0) == m.values().row(0));

    const auto trained = p.with_training({1, 3});
    REQUIRE(trained.train_ids() == std::vector<std::string>{"B", "D"});
    REQUIRE_THROWS_AS(p.with_training({0}), ContractError);
}

TEST_CASE("partition rejects overlap, empty and unknown ids", "[partition]")
{
    const MarkerMatrix m({"A", "B", "C"}, Eigen::MatrixXd::Identity(3, 3));
    const std::vector<std::string> a{"A"};
    const std::vector<std::string> ab{"A", "B"};
    const std::vector<std::string> none;
    const std::vector<std::string> unknown{"Z"};
    REQUIRE_THROWS_AS(partition(m, a, ab), ContractError);
    REQUIRE_THROWS_AS(partition(m, a, none), ContractError);
    REQUIRE_THROWS_AS(partition(m, unknown, ab), DataError);
}

}  // namespace trainsel
