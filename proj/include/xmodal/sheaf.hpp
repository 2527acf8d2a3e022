#pragma once

// Cellular sheaves on the 1-skeleton of the site: coboundary, degree-0 sheaf
// Laplacian, inconsistency energy and section counting. Edge weights scale
// the coboundary rows by sqrt(w_e), so energies are sum_e w_e * |.|^2.

#include "xmodal/common.hpp"
#include "xmodal/site.hpp"

#include <string>
#include <vector>

namespace xmodal {

/// A 0-cochain: one vector per vertex stalk.
using Cochain0 = std::vector<Vector>;
/// A 1-cochain: one vector per edge stalk, in graph edge order.
using Cochain1 = std::vector<Vector>;

/// Restriction maps of one edge, keyed by endpoint vertex id rather than by
/// orientation, so flipping an edge does not reassign them.
struct EdgeRestrictions {
    Index low_vertex = 0;  // min(u, v)
    Matrix at_low;         // rho_{e <- low_vertex}
    Matrix at_high;        // rho_{e <- high vertex}
};

class CellularSheaf {
public:
    CellularSheaf(Graph graph, std::vector<int> vertex_dims, std::vector<int> edge_dims,
                  std::vector<EdgeRestrictions> restrictions)
        : graph_(std::move(graph)),
          vertex_dims_(std::move(vertex_dims)),
          edge_dims_(std::move(edge_dims)),
          restrictions_(std::move(restrictions)) {
        const auto nv = static_cast<std::size_t>(graph_.n_vertices());
        const auto ne = static_cast<std::size_t>(graph_.n_edges());
        require(vertex_dims_.size() == nv, codes::dimension, "one vertex stalk dim per vertex");
        require(edge_dims_.size() == ne, codes::dimension, "one edge stalk dim per edge");
        require(restrictions_.size() == ne, codes::dimension, "one restriction pair per edge");
        for (int d : vertex_dims_) require(d >= 1, codes::dimension, "stalk dims must be positive");
        for (int d : edge_dims_) require(d >= 1, codes::dimension, "stalk dims must be positive");

        vertex_offset_.assign(nv + 1, 0);
        for (std::size_t v = 0; v < nv; ++v) vertex_offset_[v + 1] = vertex_offset_[v] + vertex_dims_[v];
        edge_offset_.assign(ne + 1, 0);
        for (std::size_t e = 0; e < ne; ++e) edge_offset_[e + 1] = edge_offset_[e] + edge_dims_[e];

        for (std::size_t i = 0; i < ne; ++i) {
            const auto& e = graph_.edges()[i];
            const auto& r = restrictions_[i];
            require(r.low_vertex == std::min(e.u, e.v), codes::dimension,
                    "restriction pair of edge " + std::to_string(i) + " keyed to wrong vertex");
            check_shape(i, std::min(e.u, e.v), r.at_low);
            check_shape(i, std::max(e.u, e.v), r.at_high);
        }
    }

    const Graph& graph() const noexcept { return graph_; }
    int vertex_dim(Index v) const { return vertex_dims_.at(static_cast<std::size_t>(v)); }
    int edge_dim(Index e) const { return edge_dims_.at(static_cast<std::size_t>(e)); }
    const std::vector<int>& vertex_dims() const noexcept { return vertex_dims_; }
    const std::vector<int>& edge_dims() const noexcept { return edge_dims_; }
    const std::vector<EdgeRestrictions>& restrictions() const noexcept { return restrictions_; }
    Index total_vertex_dim() const noexcept { return vertex_offset_.back(); }
    Index total_edge_dim() const noexcept { return edge_offset_.back(); }
    Index vertex_offset(Index v) const { return vertex_offset_.at(static_cast<std::size_t>(v)); }
    Index edge_offset(Index e) const { return edge_offset_.at(static_cast<std::size_t>(e)); }

    /// rho_{e <- v} for an endpoint v of edge e.
    const Matrix& restriction(Index e, Index v) const {
        const auto& r = restrictions_.at(static_cast<std::size_t>(e));
        return v == r.low_vertex ? r.at_low : r.at_high;
    }

    CellularSheaf with_flipped(Index e) const {
        return CellularSheaf(graph_.with_flipped(e), vertex_dims_, edge_dims_, restrictions_);
    }

private:
    void check_shape(std::size_t e, Index v, const Matrix& m) const {
        const int rows = edge_dims_[e];
        const int cols = vertex_dims_[static_cast<std::size_t>(v)];
        require(m.rows() == rows && m.cols() == cols, codes::dimension,
                "restriction at incidence (vertex " + std::to_string(v) + " <= edge " +
                    std::to_string(e) + ") has shape " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
    }

    Graph graph_;
    std::vector<int> vertex_dims_;
    std::vector<int> edge_dims_;
    std::vector<EdgeRestrictions> restrictions_;
    std::vector<Index> vertex_offset_;
    std::vector<Index> edge_offset_;
};

/// Constant sheaf: every stalk R^p, every restriction the identity.
inline CellularSheaf constant_sheaf(const Graph& g, int p) {
    require(p >= 1, codes::precondition, "constant sheaf needs p >= 1");
    const auto nv = static_cast<std::size_t>(g.n_vertices());
    const auto ne = static_cast<std::size_t>(g.n_edges());
    std::vector<EdgeRestrictions> r;
    r.reserve(ne);
    const Matrix id = Matrix::Identity(p, p);
    for (const auto& e : g.edges()) r.push_back({std::min(e.u, e.v), id, id});
    return CellularSheaf(g, std::vector<int>(nv, p), std::vector<int>(ne, p), std::move(r));
}

inline void check_cochain0(const CellularSheaf& sheaf, const Cochain0& c) {
    require(static_cast<Index>(c.size()) == sheaf.graph().n_vertices(), codes::dimension,
            "0-cochain has " + std::to_string(c.size()) + " entries, expected " +
                std::to_string(sheaf.graph().n_vertices()));
    for (std::size_t v = 0; v < c.size(); ++v)
        require(c[v].size() == sheaf.vertex_dim(static_cast<Index>(v)), codes::dimension,
                "0-cochain value at vertex " + std::to_string(v) + " has dimension " +
                    std::to_string(c[v].size()) + ", stalk has " +
                    std::to_string(sheaf.vertex_dim(static_cast<Index>(v))));
}

inline Vector stack(const Cochain0& c) {
    Index total = 0;
    for (const auto& x : c) total += x.size();
    Vector out(total);
    Index off = 0;
    for (const auto& x : c) {
        out.segment(off, x.size()) = x;
        off += x.size();
    }
    return out;
}

inline Cochain0 unstack(const CellularSheaf& sheaf, const Vector& flat) {
    require(flat.size() == sheaf.total_vertex_dim(), codes::dimension, "flat cochain length mismatch");
    Cochain0 c;
    for (Index v = 0; v < sheaf.graph().n_vertices(); ++v)
        c.push_back(flat.segment(sheaf.vertex_offset(v), sheaf.vertex_dim(v)));
    return c;
}

/// (δ⁰c)(e = u→v) = sqrt(w_e) (ρ_{e←u} c(u) − ρ_{e←v} c(v)).
inline Cochain1 coboundary(const CellularSheaf& sheaf, const Cochain0& c) {
    check_cochain0(sheaf, c);
    Cochain1 out;
    const auto& edges = sheaf.graph().edges();
    out.reserve(edges.size());
    for (Index i = 0; i < static_cast<Index>(edges.size()); ++i) {
        const auto& e = edges[static_cast<std::size_t>(i)];
        Vector diff = sheaf.restriction(i, e.u) * c[static_cast<std::size_t>(e.u)] -
                      sheaf.restriction(i, e.v) * c[static_cast<std::size_t>(e.v)];
        out.push_back(std::sqrt(e.weight) * diff);
    }
    return out;
}

/// Dense coboundary matrix acting on stacked 0-cochains.
inline Matrix coboundary_matrix(const CellularSheaf& sheaf) {
    Matrix d = Matrix::Zero(sheaf.total_edge_dim(), sheaf.total_vertex_dim());
    const auto& edges = sheaf.graph().edges();
    for (Index i = 0; i < static_cast<Index>(edges.size()); ++i) {
        const auto& e = edges[static_cast<std::size_t>(i)];
        const double s = std::sqrt(e.weight);
        const Index r0 = sheaf.edge_offset(i);
        const Index de = sheaf.edge_dim(i);
        d.block(r0, sheaf.vertex_offset(e.u), de, sheaf.vertex_dim(e.u)) += s * sheaf.restriction(i, e.u);
        d.block(r0, sheaf.vertex_offset(e.v), de, sheaf.vertex_dim(e.v)) -= s * sheaf.restriction(i, e.v);
    }
    return d;
}

/// Δ⁰ = (δ⁰)ᵀδ⁰, assembled blockwise so that weights enter unrounded.
inline Matrix sheaf_laplacian(const CellularSheaf& sheaf) {
    const Index n = sheaf.total_vertex_dim();
    Matrix lap = Matrix::Zero(n, n);
    const auto& edges = sheaf.graph().edges();
    for (Index i = 0; i < static_cast<Index>(edges.size()); ++i) {
        const auto& e = edges[static_cast<std::size_t>(i)];
        const Matrix& ru = sheaf.restriction(i, e.u);
        const Matrix& rv = sheaf.restriction(i, e.v);
        const Index ou = sheaf.vertex_offset(e.u), ov = sheaf.vertex_offset(e.v);
        const Index du = sheaf.vertex_dim(e.u), dv = sheaf.vertex_dim(e.v);
        lap.block(ou, ou, du, du) += e.weight * (ru.transpose() * ru);
        lap.block(ov, ov, dv, dv) += e.weight * (rv.transpose() * rv);
        lap.block(ou, ov, du, dv) -= e.weight * (ru.transpose() * rv);
        lap.block(ov, ou, dv, du) -= e.weight * (rv.transpose() * ru);
    }
    return lap;
}

/// Inconsistency energy ‖δ⁰c‖².
inline double energy(const CellularSheaf& sheaf, const Cochain0& c) {
    double total = 0.0;
    for (const auto& x : coboundary(sheaf, c)) total += x.squaredNorm();
    return total;
}

/// Eigenvalues at or below this are treated as kernel.
inline double kernel_tolerance(const Matrix& lap) {
    const double scale = lap.size() == 0 ? 0.0 : lap.cwiseAbs().maxCoeff();
    return 1e-9 * (scale + 1.0);
}

/// dim ker Δ⁰, i.e. the dimension of the space of global sections.
inline int global_section_dim(const CellularSheaf& sheaf) {
    const Matrix lap = sheaf_laplacian(sheaf);
    const double tol = kernel_tolerance(lap);
    const Vector ev = symmetric_eigenvalues(lap);
    int k = 0;
    for (Index i = 0; i < ev.size(); ++i)
        if (ev(i) <= tol) ++k;
    return k;
}

/// Smallest eigenvalue of Δ⁰ above the kernel tolerance (0 if none).
inline double sheaf_spectral_gap(const CellularSheaf& sheaf) {
    const Matrix lap = sheaf_laplacian(sheaf);
    const double tol = kernel_tolerance(lap);
    const Vector ev = symmetric_eigenvalues(lap);
    for (Index i = 0; i < ev.size(); ++i)
        if (ev(i) > tol) return ev(i);
    return 0.0;
}

}  // namespace xmodal
