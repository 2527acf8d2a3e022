#include "oracles.hpp"

#include <xmodal/sheaf.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace xmodal;

namespace {

Graph random_graph(int n, int extra, std::mt19937_64& rng, bool weighted) {
    std::vector<Edge> edges;
    for (const auto& e : oracle::random_connected(n, extra, rng, weighted)) edges.push_back({e.u, e.v, e.w});
    return Graph(n, edges);
}

/// Random stalk dims in 1..3 and random restrictions on g.
CellularSheaf random_sheaf(const Graph& g, Rng& r) {
    std::vector<int> vd, ed;
    for (Index v = 0; v < g.n_vertices(); ++v) vd.push_back(1 + static_cast<int>(r.below(3)));
    std::vector<EdgeRestrictions> rest;
    for (const auto& e : g.edges()) {
        const int de = 1 + static_cast<int>(r.below(3));
        ed.push_back(de);
        const Index lo = std::min(e.u, e.v), hi = std::max(e.u, e.v);
        rest.push_back({lo, r.normal_matrix(de, vd[static_cast<std::size_t>(lo)]),
                        r.normal_matrix(de, vd[static_cast<std::size_t>(hi)])});
    }
    return CellularSheaf(g, vd, ed, rest);
}

Cochain0 random_cochain(const CellularSheaf& s, Rng& r) {
    Cochain0 c;
    for (Index v = 0; v < s.graph().n_vertices(); ++v) c.push_back(r.normal_matrix(s.vertex_dim(v), 1));
    return c;
}

Cochain0 scalars(std::initializer_list<double> xs) {
    Cochain0 c;
    for (double x : xs) c.push_back(Vector::Constant(1, x));
    return c;
}

Matrix kron_identity(const Matrix& l, int p) {
    Matrix out = Matrix::Zero(l.rows() * p, l.cols() * p);
    for (Index i = 0; i < l.rows(); ++i)
        for (Index j = 0; j < l.cols(); ++j) out.block(i * p, j * p, p, p) = l(i, j) * Matrix::Identity(p, p);
    return out;
}

}  // namespace

TEST(Coboundary, ConstantSheafSingleEdge) {
    const auto s = constant_sheaf(Graph(2, {{0, 1, 1.0}}), 1);
    EXPECT_EQ(coboundary(s, scalars({3, 3}))[0](0), 0.0);
    EXPECT_EQ(coboundary(s, scalars({1, -1}))[0](0), 2.0);
}

TEST(Coboundary, GeneralRestrictions) {
    const Graph g(2, {{0, 1, 1.0}});
    const CellularSheaf s(g, {1, 1}, {1}, {{0, Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0)}});
    // 2·1 − 1·2 = 0
    EXPECT_EQ(coboundary(s, scalars({1, 2}))[0](0), 0.0);
}

TEST(Coboundary, ShapeErrorsNameIncidence) {
    const Graph g(2, {{0, 1, 1.0}});
    try {
        CellularSheaf(g, {2, 1}, {1}, {{0, Matrix::Ones(1, 1), Matrix::Ones(1, 1)}});
        FAIL() << "expected a dimension error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), codes::dimension);
        EXPECT_NE(std::string(e.what()).find("vertex 0 <= edge 0"), std::string::npos) << e.what();
    }
    const auto s = constant_sheaf(g, 2);
    EXPECT_THROW(coboundary(s, scalars({1, 2})), Error);
}

TEST(SheafLaplacian, ReducesToGraphLaplacian) {
    const Graph edge(2, {{0, 1, 1.0}});
    Matrix expected(2, 2);
    expected << 1, -1, -1, 1;
    EXPECT_EQ(sheaf_laplacian(constant_sheaf(edge, 1)), expected);

    const Graph path(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    EXPECT_EQ(sheaf_laplacian(constant_sheaf(path, 2)), kron_identity(graph_laplacian(path), 2));

    const Graph k3(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}});
    EXPECT_EQ(sheaf_laplacian(constant_sheaf(k3, 1)), graph_laplacian(k3));
}

TEST(SheafLaplacian, ConstantSheafIsKroneckerOnRandomGraphs) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + static_cast<int>(rng() % 29);
        const Graph g = random_graph(n, n, rng, t % 2 == 1);
        for (int p : {1, 2, 5}) {
            const Matrix diff = sheaf_laplacian(constant_sheaf(g, p)) - kron_identity(graph_laplacian(g), p);
            EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(SheafLaplacian, QuadraticFormMatchesCoboundaryNorm) {
    const Graph tri(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
    Rng r(3);
    const auto s = random_sheaf(tri, r);
    const Matrix lap = sheaf_laplacian(s);
    const Matrix d = coboundary_matrix(s);
    EXPECT_LE((d.transpose() * d - lap).cwiseAbs().maxCoeff(), 1e-12);
    for (int t = 0; t < 20; ++t) {
        const Cochain0 c = random_cochain(s, r);
        double direct = 0.0;
        for (const auto& e : coboundary(s, c)) direct += e.squaredNorm();
        const Vector x = stack(c);
        EXPECT_NEAR(x.dot(lap * x), direct, 1e-10);
        EXPECT_NEAR(energy(s, c), direct, 1e-10);
    }
}

TEST(Energy, SectionsScalingAndCut) {
    const Graph path(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    const auto s = constant_sheaf(path, 1);
    EXPECT_EQ(energy(s, scalars({2.5, 2.5, 2.5})), 0.0);
    const Cochain0 c = scalars({0.3, -1.0, 2.0});
    Cochain0 c2;
    for (const auto& x : c) c2.push_back(2.0 * x);
    EXPECT_NEAR(energy(s, c2), 4.0 * energy(s, c), 1e-12);

    // two triangles joined by two edges; sign field ±1
    const Graph g(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}, {0, 3, 1}, {2, 5, 1}});
    EXPECT_EQ(energy(constant_sheaf(g, 1), scalars({1, 1, 1, -1, -1, -1})), 8.0);
}

TEST(Energy, WeightsScaleEdgeTerms) {
    const Graph g(2, {{0, 1, 0.25}});
    EXPECT_NEAR(energy(constant_sheaf(g, 1), scalars({1, -1})), 1.0, 1e-15);
}

TEST(GlobalSections, ConstantSheafDimensions) {
    EXPECT_EQ(global_section_dim(constant_sheaf(Graph(2, {{0, 1, 1.0}}), 3)), 3);
    EXPECT_EQ(sheaf_laplacian(constant_sheaf(Graph(2, {{0, 1, 1.0}}), 3)).rows(), 6);
    const Graph two(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    EXPECT_EQ(global_section_dim(constant_sheaf(two, 2)), 4);
    std::mt19937_64 rng(1);
    const Graph g = random_graph(12, 10, rng, true);
    EXPECT_EQ(global_section_dim(constant_sheaf(g, 4)), 4);
}

TEST(GlobalSections, TwistedEdge) {
    const Graph g(2, {{0, 1, 1.0}});
    const CellularSheaf s(g, {1, 1}, {1}, {{0, Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, -1.0)}});
    EXPECT_EQ(global_section_dim(s), 1);
    // kernel by hand: c(0) = −c(1)
    EXPECT_EQ(energy(s, scalars({1.5, -1.5})), 0.0);
}

TEST(SpectralGap, Examples) {
    EXPECT_NEAR(sheaf_spectral_gap(constant_sheaf(Graph(2, {{0, 1, 1.0}}), 1)), 2.0, 1e-12);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 5; ++t) {
        const Graph g = random_graph(10, 8, rng, true);
        const double l2 = algebraic_connectivity(g).lambda2;
        for (int p : {1, 3}) EXPECT_NEAR(sheaf_spectral_gap(constant_sheaf(g, p)), l2, 1e-9);
    }
    // disconnected: path of 3 plus an edge; gap = min nonzero over components
    const Graph dis(5, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}});
    const auto ev_path = oracle::jacobi_eigenvalues(oracle::laplacian(3, {{0, 1, 1}, {1, 2, 1}}));
    const double expected = std::min(ev_path[1], 2.0);
    EXPECT_NEAR(sheaf_spectral_gap(constant_sheaf(dis, 2)), expected, 1e-12);
    EXPECT_EQ(sheaf_spectral_gap(constant_sheaf(Graph(3, {}), 1)), 0.0);
}

TEST(Orientation, FlipsLeaveEnergyAndSpectrumUnchanged) {
    std::mt19937_64 rng(9);
    Rng r(9);
    const Graph g = random_graph(8, 8, rng, true);
    CellularSheaf s = random_sheaf(g, r);
    const Vector spec0 = symmetric_eigenvalues(sheaf_laplacian(s));
    const Cochain0 c = random_cochain(s, r);
    const double e0 = energy(s, c);
    CellularSheaf flipped = s;
    for (int t = 0; t < 50; ++t) {
        flipped = flipped.with_flipped(static_cast<Index>(r.below(static_cast<std::uint64_t>(g.n_edges()))));
        EXPECT_NEAR(energy(flipped, c), e0, 1e-10);
        EXPECT_LE((symmetric_eigenvalues(sheaf_laplacian(flipped)) - spec0).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(EnergyKernel, ZeroEnergyIffKernel) {
    std::mt19937_64 rng(2);
    const Graph g = random_graph(9, 6, rng, false);
    const auto s = constant_sheaf(g, 2);
    const Matrix lap = sheaf_laplacian(s);
    Rng r(2);
    Cochain0 constant(9, r.normal_matrix(2, 1));
    EXPECT_LE(energy(s, constant), 1e-20);
    EXPECT_LE((lap * stack(constant)).norm(), 1e-8 * stack(constant).norm());
    const Cochain0 c = random_cochain(s, r);
    EXPECT_GT(energy(s, c), 0.0);
    EXPECT_GT((lap * stack(c)).norm(), 1e-8 * stack(c).norm());
    EXPECT_NEAR(stack(c).dot(lap * stack(c)), energy(s, c), 1e-10);
}
