#pragma once

// The nested projection ladder: orthogonal maps, rank- and norm-bounded
// linear maps, Lipschitz-bounded ReLU MLPs, and the scalar family g_w(x) = w x.
// Every map is a FamilySpec plus a flat parameter vector theta.
//
// theta layouts:
//   orthogonal  Q (d_out x d_in), row-major
//   lowrank     W (d_out x d_in), row-major
//   scalar      (w)
//   mlp         per layer l = 1..D+1: W_l row-major, then b_l

#include "xmodal/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace xmodal {

enum class FamilyClass { orthogonal, lowrank, mlp, scalar };

inline std::string to_string(FamilyClass c) {
    switch (c) {
        case FamilyClass::orthogonal: return "orthogonal";
        case FamilyClass::lowrank: return "lowrank";
        case FamilyClass::mlp: return "mlp";
        case FamilyClass::scalar: return "scalar";
    }
    return "?";
}

inline FamilyClass family_class_from_string(const std::string& s) {
    if (s == "orthogonal") return FamilyClass::orthogonal;
    if (s == "lowrank") return FamilyClass::lowrank;
    if (s == "mlp") return FamilyClass::mlp;
    if (s == "scalar") return FamilyClass::scalar;
    throw Error(codes::config, "unknown family class '" + s + "'");
}

struct FamilySpec {
    FamilyClass cls = FamilyClass::orthogonal;
    int rank = 1;            // lowrank
    int width = 1;           // mlp hidden width
    int depth = 1;           // mlp hidden layers
    double lipschitz = 10.0; // lowrank: ‖W‖₂ bound; mlp: global Lipschitz bound
    std::optional<double> alpha_override;

    static FamilySpec of(FamilyClass c) {
        FamilySpec s;
        s.cls = c;
        return s;
    }

    static FamilySpec orthogonal() { return of(FamilyClass::orthogonal); }
    static FamilySpec scalar() { return of(FamilyClass::scalar); }
    static FamilySpec lowrank(int r, double l = 10.0) {
        FamilySpec s = of(FamilyClass::lowrank);
        s.rank = r;
        s.lipschitz = l;
        return s;
    }
    static FamilySpec mlp(int w, int depth = 1, double l = 10.0) {
        FamilySpec s = of(FamilyClass::mlp);
        s.width = w;
        s.depth = depth;
        s.lipschitz = l;
        return s;
    }

    /// Ladder position: orthogonal 0, lowrank(r) r, mlp(w) d + w, scalar 0.
    double alpha(Index d) const {
        if (alpha_override) return *alpha_override;
        switch (cls) {
            case FamilyClass::orthogonal: return 0.0;
            case FamilyClass::lowrank: return rank;
            case FamilyClass::mlp: return static_cast<double>(d) + width;
            case FamilyClass::scalar: return 0.0;
        }
        return 0.0;
    }

    /// Per-weight-matrix spectral norm bound of an mlp: the D+1 layers share
    /// the global bound evenly, L^{1/(D+1)}.
    double layer_norm_bound() const { return std::pow(lipschitz, 1.0 / (depth + 1)); }

    std::string label() const {
        switch (cls) {
            case FamilyClass::orthogonal: return "orthogonal";
            case FamilyClass::lowrank: return "lowrank(r=" + std::to_string(rank) + ")";
            case FamilyClass::mlp: return "mlp(w=" + std::to_string(width) + ",D=" + std::to_string(depth) + ")";
            case FamilyClass::scalar: return "scalar";
        }
        return "?";
    }

    friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

inline Index parameter_count(const FamilySpec& s, Index d_in, Index d_out) {
    switch (s.cls) {
        case FamilyClass::orthogonal:
        case FamilyClass::lowrank: return d_in * d_out;
        case FamilyClass::scalar: return 1;
        case FamilyClass::mlp: {
            Index p = 0, prev = d_in;
            for (int l = 0; l < s.depth; ++l) {
                p += s.width * prev + s.width;
                prev = s.width;
            }
            return p + d_out * prev + d_out;
        }
    }
    return 0;
}

inline void check_spec(const FamilySpec& s, Index d_in, Index d_out) {
    require(d_in >= 1 && d_out >= 1, codes::dimension, "map dimensions must be positive");
    switch (s.cls) {
        case FamilyClass::orthogonal:
            require(d_in == d_out, codes::dimension, "orthogonal maps need equal input/output dims");
            break;
        case FamilyClass::scalar:
            require(d_in == d_out, codes::dimension, "scalar maps need equal input/output dims");
            break;
        case FamilyClass::lowrank:
            require(s.rank >= 1 && s.rank <= std::min(d_in, d_out), codes::precondition,
                    "lowrank rank must be in [1, min(d_in, d_out)]");
            require(s.lipschitz > 0.0, codes::precondition, "lowrank norm bound must be positive");
            break;
        case FamilyClass::mlp:
            require(s.width >= 1, codes::precondition, "mlp width must be >= 1");
            require(s.depth >= 1, codes::precondition, "mlp depth must be >= 1");
            require(s.lipschitz > 0.0, codes::precondition, "mlp Lipschitz bound must be positive");
            break;
    }
}

// ---------------------------------------------------------------------------
// MLP parameter views

struct MlpParams {
    std::vector<Matrix> weights;  // D+1 matrices, layer l maps prev -> next
    std::vector<Vector> biases;
};

inline MlpParams unpack_mlp(const FamilySpec& s, Index d_in, Index d_out, const Vector& theta) {
    MlpParams p;
    Index off = 0, prev = d_in;
    for (int l = 0; l <= s.depth; ++l) {
        const Index rows = l == s.depth ? d_out : s.width;
        Matrix w(rows, prev);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < prev; ++j) w(i, j) = theta(off++);
        Vector b = theta.segment(off, rows);
        off += rows;
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
        prev = rows;
    }
    return p;
}

inline Vector pack_mlp(const MlpParams& p) {
    Index total = 0;
    for (std::size_t l = 0; l < p.weights.size(); ++l) total += p.weights[l].size() + p.biases[l].size();
    Vector theta(total);
    Index off = 0;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const auto& w = p.weights[l];
        for (Index i = 0; i < w.rows(); ++i)
            for (Index j = 0; j < w.cols(); ++j) theta(off++) = w(i, j);
        theta.segment(off, p.biases[l].size()) = p.biases[l];
        off += p.biases[l].size();
    }
    return theta;
}

inline Matrix unpack_row_major(const Vector& theta, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = theta(i * cols + j);
    return m;
}

inline Vector pack_row_major(const Matrix& m) {
    Vector theta(m.size());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) theta(i * m.cols() + j) = m(i, j);
    return theta;
}

// ---------------------------------------------------------------------------

class ProjectionMap {
public:
    ProjectionMap(FamilySpec spec, Index d_in, Index d_out, Vector theta)
        : spec_(spec), d_in_(d_in), d_out_(d_out), theta_(std::move(theta)) {
        check_spec(spec_, d_in_, d_out_);
        require(theta_.size() == parameter_count(spec_, d_in_, d_out_), codes::dimension,
                "parameter vector has length " + std::to_string(theta_.size()) + ", " + spec_.label() +
                    " needs " + std::to_string(parameter_count(spec_, d_in_, d_out_)));
    }

    const FamilySpec& spec() const noexcept { return spec_; }
    Index d_in() const noexcept { return d_in_; }
    Index d_out() const noexcept { return d_out_; }
    const Vector& theta() const noexcept { return theta_; }

    /// Linear part for orthogonal/lowrank/scalar maps.
    Matrix linear() const {
        if (spec_.cls == FamilyClass::scalar) return theta_(0) * Matrix::Identity(d_out_, d_in_);
        require(spec_.cls != FamilyClass::mlp, codes::precondition, "mlp maps have no single linear part");
        return unpack_row_major(theta_, d_out_, d_in_);
    }

    MlpParams mlp() const {
        require(spec_.cls == FamilyClass::mlp, codes::precondition, "not an mlp map");
        return unpack_mlp(spec_, d_in_, d_out_, theta_);
    }

    /// Row-wise application to an n x d_in matrix.
    Matrix predict(const Matrix& x) const {
        require(x.cols() == d_in_, codes::dimension,
                "input has " + std::to_string(x.cols()) + " columns, map expects " + std::to_string(d_in_));
        if (spec_.cls == FamilyClass::scalar) return theta_(0) * x;
        if (spec_.cls != FamilyClass::mlp) return x * linear().transpose();
        const MlpParams p = mlp();
        Matrix h = x;
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            Matrix z = (h * p.weights[l].transpose()).rowwise() + p.biases[l].transpose();
            h = l + 1 < p.weights.size() ? Matrix(z.cwiseMax(0.0)) : z;
        }
        return h;
    }

private:
    FamilySpec spec_;
    Index d_in_, d_out_;
    Vector theta_;
};

inline Vector flatten(const ProjectionMap& g) { return g.theta(); }

inline ProjectionMap unflatten(const FamilySpec& spec, Index d_in, Index d_out, const Vector& theta) {
    return ProjectionMap(spec, d_in, d_out, theta);
}

/// Mean squared error (1/n) Σ ‖g(x_i) − y_i‖².
inline double err(const ProjectionMap& g, const Matrix& x, const Matrix& y) {
    require(x.rows() == y.rows(), codes::dimension, "input/target row counts differ");
    require(y.cols() == g.d_out(), codes::dimension, "target dimension does not match map output");
    if (x.rows() == 0) return 0.0;
    return (g.predict(x) - y).squaredNorm() / static_cast<double>(x.rows());
}

struct FitReport {
    double final_err = 0.0;
    int iterations = 0;
    int restarts_used = 0;
    std::uint64_t seed = 0;
    bool converged = true;
    bool non_unique = false;  // procrustes with rank-deficient cross-covariance
};

struct FitResult {
    ProjectionMap map;
    FitReport report;
};

// ---------------------------------------------------------------------------
// Constraint projections (Frobenius-nearest member of the family)

inline Matrix project_low_rank(const Matrix& w, int r, double l) {
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = svd.singularValues();
    for (Index i = 0; i < s.size(); ++i) s(i) = i < r ? std::min(s(i), l) : 0.0;
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

inline Matrix project_orthogonal(const Matrix& w) {
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

inline void project_mlp(MlpParams& p, double layer_bound) {
    for (auto& w : p.weights) {
        const double s = spectral_norm(w);
        if (s > layer_bound) w *= layer_bound / s;
    }
}

/// Nearest parameters inside the family's constraint set.
inline Vector project_parameters(const FamilySpec& s, Index d_in, Index d_out, const Vector& theta) {
    switch (s.cls) {
        case FamilyClass::scalar: return theta;
        case FamilyClass::orthogonal:
            return pack_row_major(project_orthogonal(unpack_row_major(theta, d_out, d_in)));
        case FamilyClass::lowrank:
            return pack_row_major(project_low_rank(unpack_row_major(theta, d_out, d_in), s.rank, s.lipschitz));
        case FamilyClass::mlp: {
            MlpParams p = unpack_mlp(s, d_in, d_out, theta);
            project_mlp(p, s.layer_norm_bound());
            return pack_mlp(p);
        }
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Loss and gradient in parameter space

/// Mean loss (1/n)Σ‖g_θ(x_i) − y_i‖² and its gradient with respect to θ.
inline double loss_and_gradient(const FamilySpec& s, Index d_in, Index d_out, const Vector& theta,
                                const Matrix& x, const Matrix& y, Vector& grad) {
    const double n = static_cast<double>(x.rows());
    grad = Vector::Zero(theta.size());
    switch (s.cls) {
        case FamilyClass::scalar: {
            const Matrix r = theta(0) * x - y;
            grad(0) = 2.0 * (r.array() * x.array()).sum() / n;
            return r.squaredNorm() / n;
        }
        case FamilyClass::orthogonal:
        case FamilyClass::lowrank: {
            const Matrix w = unpack_row_major(theta, d_out, d_in);
            const Matrix r = x * w.transpose() - y;
            grad = pack_row_major(2.0 / n * r.transpose() * x);
            return r.squaredNorm() / n;
        }
        case FamilyClass::mlp: {
            const MlpParams p = unpack_mlp(s, d_in, d_out, theta);
            const std::size_t layers = p.weights.size();
            std::vector<Matrix> acts{x};  // inputs to each layer
            std::vector<Matrix> pre;
            for (std::size_t l = 0; l < layers; ++l) {
                Matrix z = (acts.back() * p.weights[l].transpose()).rowwise() + p.biases[l].transpose();
                pre.push_back(z);
                if (l + 1 < layers) acts.push_back(z.cwiseMax(0.0));
                else acts.push_back(z);
            }
            const Matrix r = acts.back() - y;
            MlpParams gp = p;
            Matrix delta = 2.0 / n * r;
            for (std::size_t l = layers; l-- > 0;) {
                gp.weights[l] = delta.transpose() * acts[l];
                gp.biases[l] = delta.colwise().sum().transpose();
                if (l > 0) {
                    delta = delta * p.weights[l];
                    delta = delta.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
                }
            }
            grad = pack_mlp(gp);
            return r.squaredNorm() / n;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Fitting

/// Closed-form scalar fit w = <x, y> / <x, x> (0 when x vanishes).
inline FitResult fit_scalar(const Matrix& x, const Matrix& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols(), codes::dimension, "scalar fit needs equal shapes");
    const double xx = x.squaredNorm();
    Vector theta(1);
    theta(0) = xx > 0.0 ? (x.array() * y.array()).sum() / xx : 0.0;
    ProjectionMap m(FamilySpec::scalar(), x.cols(), y.cols(), theta);
    FitReport rep;
    rep.final_err = err(m, x, y);
    return {std::move(m), rep};
}

/// Orthogonal Procrustes: Q = U Vᵀ from the SVD U Σ Vᵀ of YᵀX minimizes
/// ‖X Qᵀ − Y‖_F over the full orthogonal group (no determinant constraint).
inline FitResult fit_procrustes(const Matrix& x, const Matrix& y) {
    require(x.rows() == y.rows(), codes::dimension, "procrustes needs equal row counts");
    require(x.cols() == y.cols(), codes::dimension, "procrustes needs equal dimensions");
    const Matrix m = y.transpose() * x;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix q = svd.matrixU() * svd.matrixV().transpose();
    ProjectionMap g(FamilySpec::orthogonal(), x.cols(), y.cols(), pack_row_major(q));
    FitReport rep;
    rep.final_err = err(g, x, y);
    const Vector& sv = svd.singularValues();
    rep.non_unique = sv.size() > 0 && sv(sv.size() - 1) <= 1e-12 * std::max(sv(0), 1e-300);
    return {std::move(g), rep};
}

/// Projected gradient descent on ‖X Wᵀ − Y‖²/n over {rank W ≤ r, ‖W‖₂ ≤ L},
/// step 1/(2σ_max(X)²/n), started from the projected least-squares solution.
inline FitResult fit_low_rank(const Matrix& x, const Matrix& y, int r, double l, int max_iter = 10000,
                              double tol = 1e-9) {
    const FamilySpec spec = FamilySpec::lowrank(r, l);
    check_spec(spec, x.cols(), y.cols());
    require(x.rows() == y.rows(), codes::dimension, "low-rank fit needs equal row counts");
    const double n = static_cast<double>(x.rows());
    const double smax = spectral_norm(x);
    FitReport rep;
    if (smax == 0.0) {
        ProjectionMap g(spec, x.cols(), y.cols(), Vector::Zero(x.cols() * y.cols()));
        rep.final_err = err(g, x, y);
        return {std::move(g), rep};
    }
    const double step = 1.0 / (2.0 * smax * smax / n);
    Matrix w = x.completeOrthogonalDecomposition().solve(y).transpose();
    w = project_low_rank(w, r, l);
    rep.converged = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        const Matrix grad = 2.0 / n * (x * w.transpose() - y).transpose() * x;
        const Matrix next = project_low_rank(w - step * grad, r, l);
        const double resid = (next - w).norm() / step;
        w = next;
        if (resid <= tol) {
            rep.converged = true;
            ++it;
            break;
        }
    }
    rep.iterations = it;
    ProjectionMap g(spec, x.cols(), y.cols(), pack_row_major(w));
    rep.final_err = err(g, x, y);
    return {std::move(g), rep};
}

struct MlpOptions {
    int max_iter = 4000;
    double initial_step = 0.05;
    double grad_tol = 1e-10;
    double target_err = 0.0;  // stop a restart early once reached
};

/// Random initial mlp parameters (He-scaled), projected into the family.
inline Vector init_mlp(const FamilySpec& s, Index d_in, Index d_out, Rng& rng) {
    MlpParams p;
    Index prev = d_in;
    for (int l = 0; l <= s.depth; ++l) {
        const Index rows = l == s.depth ? d_out : s.width;
        const double scale = std::sqrt(2.0 / static_cast<double>(prev));
        p.weights.push_back(scale * rng.normal_matrix(rows, prev));
        Vector b(rows);
        for (Index i = 0; i < rows; ++i) b(i) = 0.1 * rng.normal();
        p.biases.push_back(b);
        prev = rows;
    }
    project_mlp(p, s.layer_norm_bound());
    return pack_mlp(p);
}

/// Full-batch gradient descent from `theta0`: accept a step and grow it by
/// 10% when the loss drops, otherwise halve it; every accepted iterate is
/// projected back to the spectral-norm constraints.
inline FitReport descend_mlp(const FamilySpec& s, Index d_in, Index d_out, const Matrix& x, const Matrix& y,
                             Vector& theta, const MlpOptions& opt) {
    FitReport rep;
    Vector grad;
    double loss = loss_and_gradient(s, d_in, d_out, theta, x, y, grad);
    double step = opt.initial_step;
    rep.converged = false;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (grad.norm() <= opt.grad_tol || loss <= opt.target_err) {
            rep.converged = true;
            break;
        }
        const Vector cand = project_parameters(s, d_in, d_out, theta - step * grad);
        Vector cgrad;
        const double closs = loss_and_gradient(s, d_in, d_out, cand, x, y, cgrad);
        if (closs < loss) {
            theta = cand;
            grad = std::move(cgrad);
            loss = closs;
            step *= 1.1;
        } else {
            step *= 0.5;
            if (step < 1e-14) {
                rep.converged = true;  // stationary up to the constraint projection
                break;
            }
        }
    }
    rep.iterations = it;
    rep.final_err = loss;
    return rep;
}

/// Best of n_restarts seeded descents, ties to the lower restart index.
inline FitResult fit_mlp(const Matrix& x, const Matrix& y, const FamilySpec& spec, std::uint64_t seed,
                         int n_restarts = 4, const MlpOptions& opt = {}) {
    require(spec.cls == FamilyClass::mlp, codes::precondition, "fit_mlp needs an mlp family spec");
    check_spec(spec, x.cols(), y.cols());
    require(x.rows() == y.rows(), codes::dimension, "mlp fit needs equal row counts");
    require(n_restarts >= 1, codes::precondition, "need at least one restart");
    std::optional<FitResult> best;
    for (int r = 0; r < n_restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        Vector theta = init_mlp(spec, x.cols(), y.cols(), rng);
        FitReport rep = descend_mlp(spec, x.cols(), y.cols(), x, y, theta, opt);
        ProjectionMap g(spec, x.cols(), y.cols(), theta);
        rep.final_err = err(g, x, y);
        rep.seed = seed;
        rep.restarts_used = r + 1;
        if (!best || rep.final_err < best->report.final_err) best = FitResult{std::move(g), rep};
        if (best->report.final_err <= opt.target_err) break;
    }
    return *best;
}

struct FitOptions {
    std::uint64_t seed = 0;
    int n_restarts = 4;
    MlpOptions mlp;
};

/// Dispatch to the class-specific fitter.
inline FitResult fit_map(const Matrix& x, const Matrix& y, const FamilySpec& spec, const FitOptions& opt = {}) {
    switch (spec.cls) {
        case FamilyClass::orthogonal: return fit_procrustes(x, y);
        case FamilyClass::lowrank: return fit_low_rank(x, y, spec.rank, spec.lipschitz);
        case FamilyClass::scalar: return fit_scalar(x, y);
        case FamilyClass::mlp: return fit_mlp(x, y, spec, opt.seed, opt.n_restarts, opt.mlp);
    }
    throw Error(codes::precondition, "unknown family");
}

/// Embed a map into a wider member of the same class (mlp: zero units; lowrank:
/// the same matrix). Used to carry best-so-far fits up a nested ladder.
inline std::optional<ProjectionMap> embed_into(const ProjectionMap& g, const FamilySpec& wider) {
    const FamilySpec& s = g.spec();
    if (s.cls != wider.cls) return std::nullopt;
    if (s.cls == FamilyClass::lowrank) {
        if (wider.rank < s.rank || wider.lipschitz < s.lipschitz) return std::nullopt;
        return ProjectionMap(wider, g.d_in(), g.d_out(), g.theta());
    }
    if (s.cls == FamilyClass::mlp) {
        if (wider.depth != 1 || s.depth != 1 || wider.width < s.width || wider.lipschitz < s.lipschitz)
            return std::nullopt;
        const MlpParams p = g.mlp();
        MlpParams q;
        q.weights = {Matrix::Zero(wider.width, g.d_in()), Matrix::Zero(g.d_out(), wider.width)};
        q.biases = {Vector::Zero(wider.width), p.biases[1]};
        q.weights[0].topRows(s.width) = p.weights[0];
        q.biases[0].head(s.width) = p.biases[0];
        q.weights[1].leftCols(s.width) = p.weights[1];
        return ProjectionMap(wider, g.d_in(), g.d_out(), pack_mlp(q));
    }
    if (s == wider) return g;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

/// Post-fit family membership check.
inline bool satisfies_family(const ProjectionMap& g, double tol = 1e-8) {
    const FamilySpec& s = g.spec();
    switch (s.cls) {
        case FamilyClass::scalar: return std::isfinite(g.theta()(0));
        case FamilyClass::orthogonal: {
            const Matrix q = g.linear();
            return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff() <= tol;
        }
        case FamilyClass::lowrank: {
            const Vector sv = Eigen::JacobiSVD<Matrix>(g.linear()).singularValues();
            for (Index i = s.rank; i < sv.size(); ++i)
                if (sv(i) > tol) return false;
            return sv(0) <= s.lipschitz + tol;
        }
        case FamilyClass::mlp: {
            const double bound = s.layer_norm_bound() + 1e-6;
            for (const auto& w : g.mlp().weights)
                if (spectral_norm(w) > bound) return false;
            return true;
        }
    }
    return false;
}

struct LipschitzEstimate {
    double value = 0.0;
    bool analytic = true;  // false: sampled estimate, inflated x1.5
};

/// Upper bound L_w on |ℓ(g_w(x),y) − ℓ(g_w'(x),y)| / ‖w − w'‖ over the data
/// rows and the parameter ball ‖w‖ ≤ radius. For linear-in-x classes
/// ∇_w ℓ = 2(Wx − y)xᵀ, so L_w = max_i 2(radius‖x_i‖ + ‖y_i‖)‖x_i‖.
inline LipschitzEstimate estimate_parameter_lipschitz(const FamilySpec& spec, const Matrix& x, const Matrix& y,
                                                      double radius, std::uint64_t seed = 0,
                                                      int n_pairs = 10000) {
    require(x.rows() == y.rows(), codes::dimension, "data row counts differ");
    require(radius >= 0.0, codes::precondition, "parameter radius must be >= 0");
    LipschitzEstimate out;
    if (spec.cls != FamilyClass::mlp) {
        for (Index i = 0; i < x.rows(); ++i) {
            const double nx = x.row(i).norm(), ny = y.row(i).norm();
            out.value = std::max(out.value, 2.0 * (radius * nx + ny) * nx);
        }
        return out;
    }
    out.analytic = false;
    const Index p = parameter_count(spec, x.cols(), y.cols());
    Rng rng(seed);
    auto in_ball = [&]() {
        Vector v(p);
        for (Index i = 0; i < p; ++i) v(i) = rng.normal();
        const double nv = v.norm();
        if (nv == 0.0) return Vector(Vector::Zero(p));
        return Vector(v * (radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(p)) / nv));
    };
    for (int k = 0; k < n_pairs; ++k) {
        const Vector w1 = in_ball(), w2 = in_ball();
        const double dw = (w1 - w2).norm();
        if (dw == 0.0) continue;
        const Matrix r1 = ProjectionMap(spec, x.cols(), y.cols(), w1).predict(x) - y;
        const Matrix r2 = ProjectionMap(spec, x.cols(), y.cols(), w2).predict(x) - y;
        for (Index i = 0; i < x.rows(); ++i)
            out.value = std::max(out.value, std::abs(r1.row(i).squaredNorm() - r2.row(i).squaredNorm()) / dw);
    }
    out.value *= 1.5;
    return out;
}

/// Orthogonal, lowrank(1..d), mlp(1..max_width) with shared L.
inline std::vector<FamilySpec> default_ladder(Index d, int max_width, double l = 10.0) {
    std::vector<FamilySpec> ladder{FamilySpec::orthogonal()};
    for (int r = 1; r <= d; ++r) ladder.push_back(FamilySpec::lowrank(r, l));
    for (int w = 1; w <= max_width; ++w) ladder.push_back(FamilySpec::mlp(w, 1, l));
    return ladder;
}

}  // namespace xmodal
