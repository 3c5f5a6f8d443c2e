#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gdon/geometry.hpp"

using namespace gdon;

namespace {

// Exhaustive neighbor sets: sort all (wrapped distance, index) pairs.
std::vector<std::set<int>> brute_force_knn(const SensorSet& s, int k) {
    const auto n = static_cast<int>(s.size());
    std::vector<std::set<int>> out(n);
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> all;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (int c = 0; c < s.dim(); ++c) {
                double d = std::abs(s.positions(i, c) - s.positions(j, c));
                if (s.domain.periodic[c]) d = std::min(d, s.domain.extent(c) - d);
                d2 += d * d;
            }
            all.emplace_back(d2, j);
        }
        std::sort(all.begin(), all.end());
        for (int m = 0; m < k; ++m) out[i].insert(all[m].second);
    }
    return out;
}

SensorSet random_sensors(const DomainSpec& dom, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RowMatrixXd x(n, dom.dim());
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < dom.dim(); ++c)
            x(i, c) = std::uniform_real_distribution<double>(dom.lower[c], dom.upper[c])(rng);
    return SensorSet(x, dom);
}

}  // namespace

TEST(MinimumImage, WrapsAcrossPeriodicBoundary) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    Eigen::VectorXd a(1), b(1);
    a << 0.5;
    b << 15.5;
    EXPECT_DOUBLE_EQ(minimum_image_displacement(a, b, dom)(0), 1.0);
}

TEST(MinimumImage, PlainDifferenceOnOpenAxis) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, false);
    Eigen::VectorXd a(1), b(1);
    a << 0.3;
    b << 0.1;
    EXPECT_NEAR(minimum_image_displacement(a, b, dom)(0), 0.2, 1e-15);
}

TEST(MinimumImage, WrapsBothAxes) {
    const auto dom = DomainSpec::box(2, 0.0, 2.5, true);
    Eigen::VectorXd a(2), b(2);
    a << 0.1, 2.4;
    b << 2.4, 0.1;
    const auto d = minimum_image_displacement(a, b, dom);
    EXPECT_NEAR(d(0), 0.2, 1e-12);
    EXPECT_NEAR(d(1), -0.2, 1e-12);
}

TEST(MinimumImage, DimensionMismatchThrows) {
    const auto dom = DomainSpec::box(2, 0.0, 1.0, true);
    Eigen::VectorXd a(1), b(2);
    a << 0.1;
    b << 0.1, 0.2;
    EXPECT_THROW(minimum_image_displacement(a, b, dom), InvalidArgument);
}

TEST(MinimumImage, Antisymmetric) {
    const auto dom = DomainSpec::box(2, -2.5, 2.5, true);
    const auto s = random_sensors(dom, 40, 3);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            const auto dij = minimum_image_displacement(s.positions.row(i).transpose(), s.positions.row(j).transpose(), dom);
            const auto dji = minimum_image_displacement(s.positions.row(j).transpose(), s.positions.row(i).transpose(), dom);
            for (int c = 0; c < 2; ++c) {
                if (std::abs(std::abs(dij(c)) - 2.5) < 1e-12) continue;
                EXPECT_NEAR(dij(c), -dji(c), 1e-12);
            }
        }
}

TEST(Domain, RejectsEmptyExtent) {
    EXPECT_THROW(DomainSpec({1.0}, {1.0}, {true}).validate(), InvalidArgument);
}

TEST(SensorSet, RejectsOutOfDomainAndDuplicates) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    RowMatrixXd x(2, 1);
    x << 1.0, 16.0;
    EXPECT_THROW(SensorSet(x, dom), InvalidArgument);
    x << 1.0, 1.0;
    EXPECT_THROW(SensorSet(x, dom), InvalidArgument);
}

TEST(Knn, RegularLineHasThreeNeighborsEachSide) {
    const auto s = regular_grid(DomainSpec::box(1, 0.0, 16.0, true), 50);
    const auto g = build_knn_graph(s, 6);
    for (int i = 0; i < 50; ++i) {
        auto nb = g.neighbors(i);
        std::set<int> got(nb.begin(), nb.end());
        std::set<int> want;
        for (int o : {-3, -2, -1, 1, 2, 3}) want.insert(((i + o) % 50 + 50) % 50);
        EXPECT_EQ(got, want) << "node " << i;
    }
}

TEST(Knn, DefaultKByDimension) {
    EXPECT_EQ(default_k(1), 6);
    EXPECT_EQ(default_k(2), 8);
    EXPECT_EQ(build_knn_graph(regular_grid(DomainSpec::box(1, 0.0, 16.0, true), 20)).k, 6);
    EXPECT_EQ(build_knn_graph(regular_grid(DomainSpec::box(2, 0.0, 1.0, true), 5)).k, 8);
}

TEST(Knn, TieGoesToLowerIndex) {
    RowMatrixXd x(3, 1);
    x << 0.0, 1.0, 2.0;
    const SensorSet s(x, DomainSpec::box(1, 0.0, 10.0, false));
    const auto g = build_knn_graph(s, 1);
    EXPECT_EQ(g.neighbors(1), std::vector<int>{0});
}

TEST(Knn, RejectsTooFewNodes) {
    const auto s = regular_grid(DomainSpec::box(1, 0.0, 1.0, true), 6);
    EXPECT_THROW(build_knn_graph(s, 6), InvalidArgument);
}

TEST(Knn, StructuralInvariants) {
    const auto dom = DomainSpec::box(2, -2.5, 2.5, true);
    const auto s = random_sensors(dom, 60, 11);
    const auto g = build_knn_graph(s);
    std::vector<int> indeg(60, 0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        EXPECT_NE(g.receiver[e], g.sender[e]);
        ++indeg[g.receiver[e]];
        for (int c = 0; c < 2; ++c) EXPECT_LE(std::abs(g.rel_pos(e, c)), 2.5);
    }
    for (int d : indeg) EXPECT_EQ(d, 8);
}

class KnnOracle : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(KnnOracle, MatchesBruteForce) {
    const auto [dim, n, seed] = GetParam();
    const auto dom = dim == 1 ? DomainSpec::box(1, 0.0, 16.0, true) : DomainSpec::box(2, -2.5, 2.5, true);
    const auto s = random_sensors(dom, n, static_cast<std::uint64_t>(seed));
    const int k = default_k(dim);
    const auto g = build_knn_graph(s, k);
    const auto want = brute_force_knn(s, k);
    for (int i = 0; i < n; ++i) {
        auto nb = g.neighbors(i);
        EXPECT_EQ(std::set<int>(nb.begin(), nb.end()), want[i]);
    }
}

INSTANTIATE_TEST_SUITE_P(RandomClouds, KnnOracle,
                         ::testing::Values(std::make_tuple(1, 9, 1), std::make_tuple(1, 33, 2), std::make_tuple(1, 64, 3),
                                           std::make_tuple(2, 12, 4), std::make_tuple(2, 40, 5), std::make_tuple(2, 64, 6)));

TEST(Knn, PureFunction) {
    const auto s = random_sensors(DomainSpec::box(2, 0.0, 1.0, true), 30, 8);
    const auto a = build_knn_graph(s);
    const auto b = build_knn_graph(s);
    EXPECT_EQ(a.receiver, b.receiver);
    EXPECT_EQ(a.sender, b.sender);
    EXPECT_EQ(a.rel_pos, b.rel_pos);
}

TEST(Knn, TranslationLeavesEdgeFeaturesUnchanged) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    const auto s = random_sensors(dom, 25, 9);
    RowMatrixXd shifted = s.positions;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted(i, 0) = dom.wrap(0, shifted(i, 0) + 5.25);
    const auto a = build_knn_graph(s);
    const auto b = build_knn_graph(SensorSet(shifted, dom));
    ASSERT_EQ(a.receiver, b.receiver);
    ASSERT_EQ(a.sender, b.sender);
    EXPECT_LT((a.rel_pos - b.rel_pos).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IrregularSensors, DeterministicSubsetOfCandidates) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    const auto a = sample_irregular_sensors(dom, 100, 50, 42);
    const auto b = sample_irregular_sensors(dom, 100, 50, 42);
    EXPECT_EQ(a.positions, b.positions);
    EXPECT_EQ(a.size(), 50u);
    for (Eigen::Index i = 0; i < 50; ++i) {
        const double idx = a.positions(i, 0) / 0.16;
        EXPECT_NEAR(idx, std::round(idx), 1e-9);
    }
    EXPECT_NE(sample_irregular_sensors(dom, 100, 50, 43).positions, a.positions);
}

TEST(IrregularSensors, FullSelectionIsTheGrid) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    const auto a = sample_irregular_sensors(dom, 100, 100, 1);
    EXPECT_EQ(a.positions, regular_grid(dom, 100).positions);
}

TEST(IrregularSensors, TwoDimensional) {
    const auto dom = DomainSpec::box(2, -2.5, 2.5, true);
    const auto a = sample_irregular_sensors(dom, 128 * 128, 1024, 5);
    EXPECT_EQ(a.size(), 1024u);
}

TEST(IrregularSensors, RejectsOverSelection) {
    EXPECT_THROW(sample_irregular_sensors(DomainSpec::box(1, 0.0, 16.0, true), 10, 11, 0), InvalidArgument);
}

TEST(TranslationSymmetries, RegularLineHasOneShiftPerNode) {
    const auto s = regular_grid(DomainSpec::box(1, 0.0, 16.0, true), 50);
    const auto perms = translation_symmetries(s);
    ASSERT_EQ(perms.size(), 50u);
    for (std::size_t j = 0; j < perms.size(); ++j)
        for (int i = 0; i < 50; ++i) EXPECT_EQ(perms[j][i], (i + static_cast<int>(j)) % 50);
}

TEST(TranslationSymmetries, RegularPlaneAndOpenAxis) {
    const auto plane = regular_grid(DomainSpec::box(2, -1.0, 1.0, true), std::vector<int>{6, 4});
    const auto perms = translation_symmetries(plane);
    ASSERT_EQ(perms.size(), 24u);
    for (const auto& p : perms) {
        const Eigen::RowVectorXd shift = plane.positions.row(p[0]) - plane.positions.row(0);
        std::vector<int> sorted(p);
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < 24; ++i) {
            EXPECT_EQ(sorted[i], i);
            const auto d = minimum_image_displacement(plane.positions.row(p[i]).transpose(),
                                                      (plane.positions.row(i) + shift).transpose(), plane.domain);
            EXPECT_LT(d.norm(), 1e-9);
        }
    }
    EXPECT_EQ(translation_symmetries(regular_grid(DomainSpec::box(1, 0.0, 1.0, false), 8)).size(), 1u);
}

TEST(TranslationSymmetries, IrregularSubsetKeepsOnlyValidShifts) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    const auto s = sample_irregular_sensors(dom, 100, 50, 8);
    const auto perms = translation_symmetries(s);
    ASSERT_GE(perms.size(), 1u);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(perms[0][i], i);
    for (const auto& p : perms) {
        const double shift = s.positions(p[0], 0) - s.positions(0, 0);
        for (int i = 0; i < 50; ++i) EXPECT_NEAR(s.positions(p[i], 0), dom.wrap(0, s.positions(i, 0) + shift), 1e-9);
    }
}

TEST(TranslateGraph, MovesPositionsAndKeepsEdges) {
    const auto dom = DomainSpec::box(1, 0.0, 16.0, true);
    const auto g = build_knn_graph(sample_irregular_sensors(dom, 100, 50, 8));
    Eigen::RowVectorXd shift(1);
    shift << 7.3;
    const auto t = translate_graph(g, shift);
    EXPECT_EQ(t.receiver, g.receiver);
    EXPECT_EQ(t.sender, g.sender);
    EXPECT_EQ(t.rel_pos, g.rel_pos);
    for (Eigen::Index i = 0; i < 50; ++i)
        EXPECT_NEAR(t.sensors.positions(i, 0), dom.wrap(0, g.sensors.positions(i, 0) + 7.3), 1e-12);
    // Offsets recomputed from the moved positions agree with the kept ones.
    const auto recomputed = make_graph(t.sensors, t.receiver, t.sender, t.k);
    EXPECT_LT((recomputed.rel_pos - t.rel_pos).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_THROW(translate_graph(build_knn_graph(regular_grid(DomainSpec::box(1, 0.0, 1.0, false), 8)), shift),
                 InvalidArgument);
}
