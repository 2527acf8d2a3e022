#pragma once

// The fixed, modality-independent neighborhood graph ("site") on sample
// indices, plus the spectral quantities the stability bounds depend on.

#include "xmodal/common.hpp"

#include <algorithm>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace xmodal {

struct Edge {
    Index u = 0;  // tail of the fixed orientation u -> v
    Index v = 0;
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph with a fixed per-edge orientation.
/// Immutable after construction; "modifying" helpers return a new graph.
class Graph {
public:
    Graph() = default;

    Graph(Index n_vertices, std::vector<Edge> edges) : n_(n_vertices), edges_(std::move(edges)) {
        require(n_ >= 1, codes::precondition, "graph needs at least one vertex");
        std::set<std::pair<Index, Index>> seen;
        for (const auto& e : edges_) {
            require(e.u >= 0 && e.u < n_ && e.v >= 0 && e.v < n_, codes::range,
                    "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                        ") references a vertex outside 0.." + std::to_string(n_ - 1));
            require(e.u != e.v, codes::precondition,
                    "self-loop at vertex " + std::to_string(e.u));
            require(std::isfinite(e.weight) && e.weight >= 0.0, codes::precondition,
                    "edge weight must be finite and >= 0");
            auto key = std::minmax(e.u, e.v);
            require(seen.insert(key).second, codes::precondition,
                    "duplicate undirected edge (" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ")");
        }
    }

    Index n_vertices() const noexcept { return n_; }
    Index n_edges() const noexcept { return static_cast<Index>(edges_.size()); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// Same graph with edge `i` oriented the other way.
    Graph with_flipped(Index i) const {
        auto edges = edges_;
        std::swap(edges.at(static_cast<std::size_t>(i)).u, edges.at(static_cast<std::size_t>(i)).v);
        return Graph(n_, std::move(edges));
    }

    /// Same topology, all weights set to 1.
    Graph with_unit_weights() const {
        auto edges = edges_;
        for (auto& e : edges) e.weight = 1.0;
        return Graph(n_, std::move(edges));
    }

    friend bool operator==(const Graph&, const Graph&) = default;

private:
    Index n_ = 0;
    std::vector<Edge> edges_;
};

enum class Symmetrization { union_, mutual };

struct SiteConfig {
    int k_nn = 5;
    std::optional<double> rbf_sigma;  // edge weight exp(-d^2/sigma^2) when set, else 1
    Symmetrization symmetrization = Symmetrization::union_;
};

struct SpectralSummary {
    double lambda2 = 0.0;
    int n_components = 1;
    std::vector<int> component_labels;
};

namespace detail {

/// Indices of the k nearest neighbours of row i, ties broken by lower index.
inline std::vector<Index> knn_of(const Matrix& points, Index i, int k) {
    const Index n = points.rows();
    std::vector<std::pair<double, Index>> d;
    d.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        d.emplace_back((points.row(i) - points.row(j)).squaredNorm(), j);
    }
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    std::vector<Index> out;
    for (int t = 0; t < k; ++t) out.push_back(d[static_cast<std::size_t>(t)].second);
    return out;
}

}  // namespace detail

/// k-nearest-neighbour site on the rows of `points` (Euclidean metric).
/// Edges are oriented from the smaller to the larger vertex id and listed in
/// lexicographic order, so the output is a deterministic function of the input.
inline Graph build_knn_site(const Matrix& points, const SiteConfig& config) {
    const Index n = points.rows();
    require(n >= 2, codes::precondition, "kNN site needs at least 2 points");
    require(config.k_nn >= 1 && config.k_nn < n, codes::precondition,
            "k_nn must satisfy 1 <= k_nn < n (k_nn=" + std::to_string(config.k_nn) +
                ", n=" + std::to_string(n) + ")");
    require(!config.rbf_sigma || *config.rbf_sigma > 0.0, codes::precondition,
            "rbf sigma must be positive");
    require(points.allFinite(), codes::precondition, "points must be finite");

    std::vector<std::vector<char>> is_nn(static_cast<std::size_t>(n),
                                         std::vector<char>(static_cast<std::size_t>(n), 0));
    for (Index i = 0; i < n; ++i)
        for (Index j : detail::knn_of(points, i, config.k_nn))
            is_nn[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;

    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const bool a = is_nn[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const bool b = is_nn[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            const bool keep = config.symmetrization == Symmetrization::union_ ? (a || b) : (a && b);
            if (!keep) continue;
            double w = 1.0;
            if (config.rbf_sigma) {
                const double s = *config.rbf_sigma;
                w = std::exp(-(points.row(i) - points.row(j)).squaredNorm() / (s * s));
            }
            edges.push_back({i, j, w});
        }
    }
    return Graph(n, std::move(edges));
}

/// Weighted combinatorial Laplacian L = D - W.
inline Matrix graph_laplacian(const Graph& g) {
    const Index n = g.n_vertices();
    Matrix l = Matrix::Zero(n, n);
    for (const auto& e : g.edges()) {
        l(e.u, e.u) += e.weight;
        l(e.v, e.v) += e.weight;
        l(e.u, e.v) -= e.weight;
        l(e.v, e.u) -= e.weight;
    }
    return l;
}

/// Connected components over edges of positive weight, labelled 0.. in
/// order of their smallest vertex.
inline std::vector<int> component_labels(const Graph& g, int* n_components = nullptr) {
    const auto n = static_cast<std::size_t>(g.n_vertices());
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : g.edges()) {
        if (e.weight <= 0.0) continue;
        adj[static_cast<std::size_t>(e.u)].push_back(static_cast<std::size_t>(e.v));
        adj[static_cast<std::size_t>(e.v)].push_back(static_cast<std::size_t>(e.u));
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::queue<std::size_t> q;
        q.push(s);
        label[s] = next;
        while (!q.empty()) {
            const auto x = q.front();
            q.pop();
            for (auto y : adj[x])
                if (label[y] < 0) {
                    label[y] = next;
                    q.push(y);
                }
        }
        ++next;
    }
    if (n_components) *n_components = next;
    return label;
}

/// λ₂ of the weighted Laplacian plus component structure. λ₂ is reported as
/// exactly 0 whenever the graph is disconnected.
inline SpectralSummary algebraic_connectivity(const Graph& g) {
    require(g.n_vertices() >= 2, codes::precondition, "algebraic connectivity needs n >= 2");
    SpectralSummary s;
    s.component_labels = component_labels(g, &s.n_components);
    if (s.n_components > 1) {
        s.lambda2 = 0.0;
        return s;
    }
    const Vector ev = symmetric_eigenvalues(graph_laplacian(g));
    s.lambda2 = std::max(ev(1), 0.0);
    return s;
}

inline bool is_connected(const Graph& g) {
    int k = 0;
    component_labels(g, &k);
    return k == 1;
}

/// Edge indices whose endpoints fall on different sides of `positive`.
inline std::vector<Index> cut_edges(const Graph& g, const std::vector<bool>& positive) {
    require(static_cast<Index>(positive.size()) == g.n_vertices(), codes::dimension,
            "partition must label every vertex");
    std::vector<Index> out;
    for (Index i = 0; i < g.n_edges(); ++i) {
        const auto& e = g.edges()[static_cast<std::size_t>(i)];
        if (positive[static_cast<std::size_t>(e.u)] != positive[static_cast<std::size_t>(e.v)])
            out.push_back(i);
    }
    return out;
}

}  // namespace xmodal
