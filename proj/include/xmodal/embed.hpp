#pragma once

// Embedding containers, canonical whitening and the synthetic scenarios
// (latent cube, two-cluster sign flip, ReLU bridge).

#include "xmodal/common.hpp"
#include "xmodal/pwl.hpp"
#include "xmodal/site.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace xmodal {

struct EmbeddingSet {
    std::string modality_id;
    Matrix data;  // n x d, one row per sample
    bool whitened = false;

    Index n() const noexcept { return data.rows(); }
    Index dim() const noexcept { return data.cols(); }
};

struct Whitener {
    Vector mean;
    Matrix transform;  // (Σ + τI)^{-1/2}, symmetric
    double ridge = 0.0;
};

/// Default ridge 1e-8 * trace(Σ) / d.
inline double default_ridge(const Matrix& data) {
    const Index n = data.rows();
    const Vector mu = data.colwise().mean();
    const Matrix c = data.rowwise() - mu.transpose();
    return 1e-8 * c.squaredNorm() / static_cast<double>(n) / static_cast<double>(data.cols());
}

/// Fit mean and ridge-regularized inverse square root of the empirical
/// covariance (1/n normalization) on `e`; rows listed in `rows` only, when given.
inline Whitener fit_whitener(const EmbeddingSet& e, std::optional<double> ridge = std::nullopt,
                             const std::vector<Index>* rows = nullptr) {
    Matrix data = e.data;
    if (rows) {
        data.resize(static_cast<Index>(rows->size()), e.dim());
        for (Index i = 0; i < data.rows(); ++i) data.row(i) = e.data.row((*rows)[static_cast<std::size_t>(i)]);
    }
    require(data.rows() >= 2, codes::precondition, "whitening needs at least 2 samples");
    require(data.allFinite(), codes::precondition, "embeddings must be finite");
    const double tau = ridge ? *ridge : default_ridge(data);
    require(tau >= 0.0, codes::precondition, "ridge must be >= 0");

    Whitener w;
    w.ridge = tau;
    w.mean = data.colwise().mean();
    const Matrix centered = data.rowwise() - w.mean.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    Vector ev = es.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    for (Index i = 0; i < ev.size(); ++i) {
        if (tau == 0.0)
            require(ev(i) > 1e-12 * std::max(top, 1e-300), codes::singular,
                    "covariance of modality '" + e.modality_id +
                        "' is singular; whiten with a positive ridge (e.g. --ridge 1e-6)");
        ev(i) = std::max(ev(i), 0.0) + tau;
    }
    const Matrix& u = es.eigenvectors();
    w.transform = u * ev.cwiseInverse().cwiseSqrt().asDiagonal() * u.transpose();
    w.transform = 0.5 * (w.transform + w.transform.transpose()).eval();
    return w;
}

/// Rows mapped to transform * (z - mean).
inline EmbeddingSet apply_whitener(const Whitener& w, const EmbeddingSet& e) {
    require(e.dim() == w.mean.size(), codes::dimension,
            "whitener dimension " + std::to_string(w.mean.size()) + " does not match embedding dimension " +
                std::to_string(e.dim()));
    EmbeddingSet out{e.modality_id, Matrix(), true};
    out.data = (e.data.rowwise() - w.mean.transpose()) * w.transform;  // transform is symmetric
    return out;
}

/// Seeded shuffle; the first round(fraction * n) indices (at least 2) form the
/// training split, returned sorted.
inline std::vector<Index> train_split(Index n, double fraction, std::uint64_t seed) {
    require(fraction > 0.0 && fraction <= 1.0, codes::precondition, "train fraction must be in (0, 1]");
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    Rng rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, std::min<std::size_t>(2, idx.size()), idx.size());
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

struct SyntheticScenario {
    std::string name;
    Matrix latent;
    std::vector<EmbeddingSet> modalities;
    Graph site;
    std::uint64_t seed = 0;
    std::vector<bool> partition;      // sign flip: true on V+
    std::optional<PwlFunction> g, h;  // ReLU bridge: c = g(a), b = h(c)

    const EmbeddingSet& modality(const std::string& id) const {
        for (const auto& m : modalities)
            if (m.modality_id == id) return m;
        throw Error(codes::missing_input, "scenario '" + name + "' has no modality '" + id + "'");
    }
};

/// n points uniform in the unit cube [0,1]^q.
inline Matrix gen_latent_manifold(Index n, Index q, std::uint64_t seed) {
    require(n >= 1 && q >= 1, codes::precondition, "latent manifold needs n, q >= 1");
    Rng rng(seed);
    return rng.uniform_matrix(n, q);
}

/// Two clusters V+ = {0..n_plus-1}, V- = {n_plus..n-1}. Each cluster is a
/// random spanning tree plus as many extra random internal edges as it has
/// vertices; n_cut distinct edges cross the cut. Modality "a" holds values
/// z_v with |z_v| in [0.5, 1.5]; "b" = z_v on V+ and -z_v on V-. Within each
/// cluster magnitudes come in ± pairs, so both modalities have exactly zero
/// mean and equal variance when cluster sizes are even (whitening then
/// rescales a and b identically and keeps b = ±a exact).
inline SyntheticScenario gen_signflip_scenario(Index n_plus, Index n_minus, Index n_cut,
                                               std::uint64_t seed) {
    require(n_plus >= 1 && n_minus >= 1, codes::precondition, "both clusters must be nonempty");
    require(n_cut >= 1 && n_cut <= n_plus * n_minus, codes::precondition,
            "n_cut must be in [1, n_plus * n_minus]");
    Rng rng(seed);
    const Index n = n_plus + n_minus;
    std::set<std::pair<Index, Index>> es;
    auto add = [&](Index u, Index v) { return es.insert(std::minmax(u, v)).second; };

    auto build_cluster = [&](Index base, Index size) {
        for (Index i = 1; i < size; ++i) add(base + i, base + static_cast<Index>(rng.below(static_cast<std::uint64_t>(i))));
        const Index max_edges = size * (size - 1) / 2;
        Index extra = std::min(size, max_edges - (size - 1));
        while (extra > 0) {
            const Index u = base + static_cast<Index>(rng.below(static_cast<std::uint64_t>(size)));
            const Index v = base + static_cast<Index>(rng.below(static_cast<std::uint64_t>(size)));
            if (u != v && add(u, v)) --extra;
        }
    };
    build_cluster(0, n_plus);
    build_cluster(n_plus, n_minus);
    for (Index c = n_cut; c > 0;) {
        const Index u = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n_plus)));
        const Index v = n_plus + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n_minus)));
        if (add(u, v)) --c;
    }
    std::vector<Edge> edges;
    for (const auto& [u, v] : es) edges.push_back({u, v, 1.0});

    Vector z(n);
    auto fill_values = [&](Index base, Index size) {
        std::vector<double> vals;
        for (Index i = 0; i + 1 < size; i += 2) {
            const double m = rng.uniform(0.5, 1.5);
            vals.push_back(m);
            vals.push_back(-m);
        }
        if (size % 2 == 1) vals.push_back((rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5));
        for (std::size_t i = vals.size(); i > 1; --i) std::swap(vals[i - 1], vals[rng.below(i)]);
        for (Index i = 0; i < size; ++i) z(base + i) = vals[static_cast<std::size_t>(i)];
    };
    fill_values(0, n_plus);
    fill_values(n_plus, n_minus);

    SyntheticScenario s;
    s.name = "signflip";
    s.seed = seed;
    s.partition.assign(static_cast<std::size_t>(n), false);
    for (Index v = 0; v < n_plus; ++v) s.partition[static_cast<std::size_t>(v)] = true;
    s.latent.resize(n, 2);
    Matrix a(n, 1), b(n, 1);
    for (Index v = 0; v < n; ++v) {
        const double sign = v < n_plus ? 1.0 : -1.0;
        s.latent(v, 0) = sign;
        s.latent(v, 1) = z(v);
        a(v, 0) = z(v);
        b(v, 0) = sign * z(v);
    }
    s.modalities = {{"a", a, false}, {"b", b, false}};
    s.site = Graph(n, std::move(edges));
    return s;
}

/// Sawtooth on [0,1] with w breakpoints at k/(w+1), alternating between 0 and 1.
inline PwlFunction sawtooth(int w) {
    std::vector<double> xs, ys;
    for (int k = 0; k <= w + 1; ++k) {
        xs.push_back(static_cast<double>(k) / (w + 1));
        ys.push_back(static_cast<double>(k % 2));
    }
    return PwlFunction::through_points(xs, ys);
}

/// Outer map of the bridge: flat on [0, 1/(w+1)] and on [w/(w+1), 1], with
/// alternating ramps in between, so it has exactly w breakpoints and zero
/// slope at both ends (the sawtooth's turning points then add no breakpoints).
inline PwlFunction flat_ended_zigzag(int w) {
    std::vector<double> xs{0.0}, ys{0.0};
    for (int j = 1; j <= w; ++j) {
        xs.push_back(static_cast<double>(j) / (w + 1));
        ys.push_back(static_cast<double>((j - 1) % 2));
    }
    xs.push_back(1.0);
    ys.push_back(ys.back());
    return PwlFunction::through_points(xs, ys);
}

/// a = x_i (grid plus jitter on [0,1]), c = g(x_i), b = (h∘g)(x_i), with g a
/// w-breakpoint sawtooth and h a w-breakpoint flat-ended zigzag; h∘g has
/// exactly (w+1)·w breakpoints. The site is the kNN graph on x.
inline SyntheticScenario gen_relu_bridge_scenario(int w, Index n, std::uint64_t seed, int k_nn = 4) {
    require(w >= 2, codes::precondition, "relu bridge needs w >= 2");
    require(n >= 2, codes::precondition, "relu bridge needs n >= 2");
    const PwlFunction g = sawtooth(w);
    const PwlFunction h = flat_ended_zigzag(w);
    const PwlFunction hg = compose(h, g);
    require(2 * hg.breakpoint_count() >= w * w, codes::check_failed,
            "composition has " + std::to_string(hg.breakpoint_count()) + " breakpoints, below w^2/2");

    Rng rng(seed);
    Matrix x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = (static_cast<double>(i) + rng.uniform(0.25, 0.75)) / static_cast<double>(n);

    // every linear piece of h∘g must hold at least 2 samples
    std::vector<int> count(static_cast<std::size_t>(hg.piece_count()), 0);
    for (Index i = 0; i < n; ++i) ++count[hg.piece_of(x(i, 0))];
    for (int c : count)
        require(c >= 2, codes::precondition,
                "n=" + std::to_string(n) + " leaves a linear piece of h∘g with fewer than 2 samples; increase n");

    SyntheticScenario s;
    s.name = "relu";
    s.seed = seed;
    s.latent = x;
    Matrix c(n, 1), b(n, 1);
    for (Index i = 0; i < n; ++i) {
        c(i, 0) = g.value(x(i, 0));
        b(i, 0) = h.value(c(i, 0));
    }
    s.modalities = {{"a", x, false}, {"c", c, false}, {"b", b, false}};
    s.g = g;
    s.h = h;
    SiteConfig cfg;
    cfg.k_nn = static_cast<int>(std::min<Index>(k_nn, n - 1));
    s.site = build_knn_site(x, cfg);
    return s;
}

}  // namespace xmodal
