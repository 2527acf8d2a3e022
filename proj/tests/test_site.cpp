#include "oracles.hpp"

#include <xmodal/site.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace xmodal;

namespace {

Graph path3() { return Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

Graph from_oracle(int n, const std::vector<oracle::WEdge>& es) {
    std::vector<Edge> edges;
    for (const auto& e : es) edges.push_back({e.u, e.v, e.w});
    return Graph(n, edges);
}

}  // namespace

TEST(Graph, RejectsSelfLoopsDuplicatesAndBadWeights) {
    EXPECT_THROW(Graph(2, {{0, 0, 1.0}}), Error);
    EXPECT_THROW(Graph(2, {{0, 1, 1.0}, {1, 0, 1.0}}), Error);
    EXPECT_THROW(Graph(2, {{0, 1, -1.0}}), Error);
    EXPECT_THROW(Graph(2, {{0, 2, 1.0}}), Error);
    EXPECT_NO_THROW(Graph(2, {{0, 1, 0.0}}));
}

TEST(KnnSite, LineIsPath) {
    Matrix pts(3, 1);
    pts << 0, 1, 2;
    SiteConfig cfg;
    cfg.k_nn = 1;
    const Graph g = build_knn_site(pts, cfg);
    ASSERT_EQ(g.n_edges(), 2);
    EXPECT_EQ(g.edges()[0], (Edge{0, 1, 1.0}));
    EXPECT_EQ(g.edges()[1], (Edge{1, 2, 1.0}));
}

TEST(KnnSite, RbfWeights) {
    Matrix pts(3, 1);
    pts << 0, 1, 2;
    SiteConfig cfg;
    cfg.k_nn = 1;
    cfg.rbf_sigma = 1.0;
    const Graph g = build_knn_site(pts, cfg);
    for (const auto& e : g.edges()) EXPECT_DOUBLE_EQ(e.weight, std::exp(-1.0));
}

TEST(KnnSite, TwoClustersTwoComponents) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    Matrix pts(8, 2);
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < 8; ++i) {
        const double off = i < 4 ? 0.0 : 10.0;
        pts(i, 0) = off + u(rng);
        pts(i, 1) = off + u(rng);
        raw.push_back({pts(i, 0), pts(i, 1)});
    }
    SiteConfig cfg;
    cfg.k_nn = 2;
    const Graph g = build_knn_site(pts, cfg);
    const auto expected = oracle::knn_union_edges(raw, 2);
    ASSERT_EQ(static_cast<std::size_t>(g.n_edges()), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_EQ(g.edges()[i].u, expected[i].first);
        EXPECT_EQ(g.edges()[i].v, expected[i].second);
    }
    EXPECT_EQ(oracle::components(8, expected), 2);
    EXPECT_EQ(algebraic_connectivity(g).n_components, 2);
    EXPECT_EQ(algebraic_connectivity(g).lambda2, 0.0);
}

TEST(KnnSite, TiesBrokenByLowerIndex) {
    // vertex 1 is equidistant from 0 and 2
    Matrix pts(4, 1);
    pts << 0, 1, 2, 10;
    SiteConfig cfg;
    cfg.k_nn = 1;
    cfg.symmetrization = Symmetrization::mutual;
    const Graph g = build_knn_site(pts, cfg);
    // 0 <-> 1 mutual (1 picks 0 over 2), 2 picks 1 but 1 does not pick 2
    ASSERT_EQ(g.n_edges(), 1);
    EXPECT_EQ(g.edges()[0].u, 0);
    EXPECT_EQ(g.edges()[0].v, 1);
}

TEST(KnnSite, PreconditionsAndDeterminism) {
    Matrix pts = Rng(1).uniform_matrix(30, 3);
    SiteConfig cfg;
    cfg.k_nn = 30;
    EXPECT_THROW(build_knn_site(pts, cfg), Error);
    cfg.k_nn = 4;
    EXPECT_EQ(build_knn_site(pts, cfg), build_knn_site(pts, cfg));
    EXPECT_THROW(build_knn_site(Matrix::Zero(1, 2), cfg), Error);
}

TEST(KnnSite, UnionIsSupergraphOfMutual) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Matrix pts = Rng(seed).uniform_matrix(25, 2);
        SiteConfig cfg;
        cfg.k_nn = 3;
        const Graph uni = build_knn_site(pts, cfg);
        cfg.symmetrization = Symmetrization::mutual;
        const Graph mut = build_knn_site(pts, cfg);
        for (const auto& e : mut.edges())
            EXPECT_NE(std::find(uni.edges().begin(), uni.edges().end(), e), uni.edges().end());
    }
}

TEST(Laplacian, SmallGraphs) {
    Matrix expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    EXPECT_EQ(graph_laplacian(path3()), expected);

    Matrix edge(2, 2);
    edge << 1, -1, -1, 1;
    EXPECT_EQ(graph_laplacian(Graph(2, {{0, 1, 1.0}})), edge);

    const Matrix k3 = graph_laplacian(Graph(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(k3(i, j), i == j ? 2.0 : -1.0);
}

TEST(Laplacian, QuadraticFormIsDirichletSum) {
    std::mt19937_64 rng(11);
    const auto es = oracle::random_connected(15, 20, rng, true);
    const Graph g = from_oracle(15, es);
    const Matrix l = graph_laplacian(g);
    EXPECT_LE((l * Vector::Ones(15)).cwiseAbs().maxCoeff(), 1e-12);
    Rng r(5);
    for (int t = 0; t < 100; ++t) {
        Vector x(15);
        for (int i = 0; i < 15; ++i) x(i) = r.normal();
        double direct = 0.0;
        for (const auto& e : es) direct += e.w * (x(e.u) - x(e.v)) * (x(e.u) - x(e.v));
        EXPECT_NEAR(x.dot(l * x), direct, 1e-10);
    }
}

TEST(AlgebraicConnectivity, KnownValues) {
    EXPECT_NEAR(algebraic_connectivity(Graph(2, {{0, 1, 1.0}})).lambda2, 2.0, 1e-12);
    const Graph k3(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}});
    const auto ev = oracle::jacobi_eigenvalues(oracle::laplacian(3, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}}));
    EXPECT_NEAR(ev[1], 3.0, 1e-12);
    EXPECT_NEAR(algebraic_connectivity(k3).lambda2, ev[1], 1e-12);
    const auto two = algebraic_connectivity(Graph(4, {{0, 1, 1.0}, {2, 3, 1.0}}));
    EXPECT_EQ(two.lambda2, 0.0);
    EXPECT_EQ(two.n_components, 2);
    EXPECT_EQ(two.component_labels, (std::vector<int>{0, 0, 1, 1}));
}

TEST(AlgebraicConnectivity, MatchesJacobiOracle) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 40; ++t) {
        const int n = 2 + static_cast<int>(rng() % 49);
        const auto es = oracle::random_connected(n, n, rng, t % 2 == 0);
        const auto ev = oracle::jacobi_eigenvalues(oracle::laplacian(n, es));
        const auto s = algebraic_connectivity(from_oracle(n, es));
        EXPECT_EQ(s.n_components, 1);
        EXPECT_GT(s.lambda2, 0.0);
        EXPECT_NEAR(s.lambda2, ev[1], 1e-9) << "n=" << n;
    }
}

TEST(AlgebraicConnectivity, ZeroWeightEdgesDoNotConnect) {
    const auto s = algebraic_connectivity(Graph(3, {{0, 1, 1.0}, {1, 2, 0.0}}));
    EXPECT_EQ(s.n_components, 2);
    EXPECT_EQ(s.lambda2, 0.0);
}

TEST(CutEdges, Examples) {
    EXPECT_EQ(cut_edges(path3(), {true, true, false}), (std::vector<Index>{1}));
    EXPECT_TRUE(cut_edges(path3(), {true, true, true}).empty());
    EXPECT_THROW(cut_edges(path3(), {true}), Error);

    // two K4 joined by 3 edges
    std::vector<Edge> edges;
    for (int base : {0, 4})
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) edges.push_back({base + i, base + j, 1.0});
    const std::vector<std::pair<int, int>> bridges{{0, 4}, {1, 6}, {3, 7}};
    for (auto [u, v] : bridges) edges.push_back({u, v, 1.0});
    const Graph g(8, edges);
    std::vector<bool> part(8, false);
    for (int i = 0; i < 4; ++i) part[i] = true;
    const auto cut = cut_edges(g, part);
    // brute-force scan
    std::vector<Index> expected;
    for (Index i = 0; i < g.n_edges(); ++i) {
        const auto& e = g.edges()[static_cast<std::size_t>(i)];
        if ((e.u < 4) != (e.v < 4)) expected.push_back(i);
    }
    EXPECT_EQ(cut, expected);
    EXPECT_EQ(cut.size(), 3u);
}
