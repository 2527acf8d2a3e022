#pragma once

// Compatibility invariants on a fixed site: projection hardness H(ε),
// sheaf-regularized parameter fields, the obstruction C(ε), their bridged
// (two-stage) variants, thresholded compatibility relations, and executable
// checks of the Poincaré and obstruction-to-global-error bounds.
//
// All reported errors are means over vertices; the field objective
// Σ_v ℓ_v(w_v) + λ Σ_e w_e‖w_u − w_v‖² is optimized in sum form.

#include "xmodal/common.hpp"
#include "xmodal/families.hpp"
#include "xmodal/pwl.hpp"
#include "xmodal/sheaf.hpp"
#include "xmodal/site.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace xmodal {

// ---------------------------------------------------------------------------
// Parameter fields

/// One parameter vector per vertex: a 0-cochain of constant_sheaf(G, p).
struct ParameterField {
    FamilySpec spec;
    Index d_in = 0;
    Index d_out = 0;
    Cochain0 w;

    Index p() const { return parameter_count(spec, d_in, d_out); }
    Index n() const { return static_cast<Index>(w.size()); }

    Vector mean() const {
        Vector m = Vector::Zero(p());
        for (const auto& x : w) m += x;
        return w.empty() ? m : Vector(m / static_cast<double>(w.size()));
    }

    ProjectionMap map_at(Index v) const { return ProjectionMap(spec, d_in, d_out, w[static_cast<std::size_t>(v)]); }

    static ParameterField constant(const ProjectionMap& g, Index n) {
        return {g.spec(), g.d_in(), g.d_out(), Cochain0(static_cast<std::size_t>(n), g.theta())};
    }
};

inline void check_pair(const Matrix& xa, const Matrix& xb) {
    require(xa.rows() == xb.rows(), codes::dimension,
            "modalities have different sample counts (" + std::to_string(xa.rows()) + " vs " +
                std::to_string(xb.rows()) + ")");
}

/// Per-vertex losses ‖g_{w_v}(x_v) − y_v‖².
inline Vector vertex_losses(const ParameterField& f, const Matrix& xa, const Matrix& xb) {
    check_pair(xa, xb);
    require(f.n() == xa.rows(), codes::dimension, "field and data have different vertex counts");
    Vector out(f.n());
    for (Index v = 0; v < f.n(); ++v) out(v) = (f.map_at(v).predict(xa.row(v)) - xb.row(v)).squaredNorm();
    return out;
}

/// Mean per-vertex loss of a locally varying field.
inline double local_error(const ParameterField& f, const Matrix& xa, const Matrix& xb) {
    return f.n() == 0 ? 0.0 : vertex_losses(f, xa, xb).mean();
}

/// Dirichlet energy Σ_e w_e‖w_u − w_v‖² of the field over the site.
inline double variation_energy(const ParameterField& f, const Graph& g) {
    require(f.n() == g.n_vertices(), codes::dimension, "field and graph have different vertex counts");
    double e = 0.0;
    for (const auto& ed : g.edges())
        e += ed.weight * (f.w[static_cast<std::size_t>(ed.u)] - f.w[static_cast<std::size_t>(ed.v)]).squaredNorm();
    return e;
}

struct FieldOptions {
    FitOptions fit;           // used for the initial global fit (non-quadratic classes)
    int max_iter = 3000;      // projected-gradient iterations
    double rel_tol = 1e-12;   // relative objective decrease that counts as converged
};

struct FieldFit {
    ParameterField field;
    bool exact = false;  // solved as a linear system
    bool converged = true;
    int iterations = 0;
    double objective = 0.0;
};

/// Σ_v ℓ_v(w_v) + λ Σ_e w_e‖w_u − w_v‖².
inline double field_objective(const ParameterField& f, const Matrix& xa, const Matrix& xb, const Graph& g,
                              double lambda) {
    return vertex_losses(f, xa, xb).sum() + lambda * variation_energy(f, g);
}

namespace detail {

/// True when the class is linear in its parameters with no active constraint
/// to worry about a priori (scalar; lowrank whose rank bound is vacuous).
inline bool quadratic_field_class(const FamilySpec& s, Index d_in, Index d_out) {
    if (s.cls == FamilyClass::scalar) return true;
    return s.cls == FamilyClass::lowrank && s.rank >= std::min(d_in, d_out);
}

/// Exact minimizer of the quadratic field objective: per-vertex data Hessians
/// plus λ (L ⊗ I_p), solved as one dense SPD system.
inline std::optional<ParameterField> solve_quadratic_field(const Matrix& xa, const Matrix& xb,
                                                           const FamilySpec& spec, const Graph& g,
                                                           double lambda) {
    const Index n = xa.rows(), din = xa.cols(), dout = xb.cols();
    const Index p = parameter_count(spec, din, dout);
    Matrix a = Matrix::Zero(n * p, n * p);
    Vector rhs = Vector::Zero(n * p);
    for (Index v = 0; v < n; ++v) {
        const Vector x = xa.row(v).transpose(), y = xb.row(v).transpose();
        if (spec.cls == FamilyClass::scalar) {
            a(v, v) = x.squaredNorm();
            rhs(v) = x.dot(y);
        } else {
            // row-major W: row i of W couples to x through x xᵀ
            for (Index i = 0; i < dout; ++i) {
                a.block(v * p + i * din, v * p + i * din, din, din) = x * x.transpose();
                rhs.segment(v * p + i * din, din) = y(i) * x;
            }
        }
    }
    for (const auto& e : g.edges()) {
        const double c = lambda * e.weight;
        for (Index k = 0; k < p; ++k) {
            a(e.u * p + k, e.u * p + k) += c;
            a(e.v * p + k, e.v * p + k) += c;
            a(e.u * p + k, e.v * p + k) -= c;
            a(e.v * p + k, e.u * p + k) -= c;
        }
    }
    Vector sol;
    Eigen::LDLT<Matrix> ldlt(a);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
        sol = ldlt.solve(rhs);
        const double scale = a.cwiseAbs().maxCoeff() * std::max(sol.cwiseAbs().maxCoeff(), 1.0) + rhs.norm();
        ok = sol.allFinite() && (a * sol - rhs).norm() <= 1e-8 * std::max(scale, 1.0);
    }
    if (!ok) sol = a.completeOrthogonalDecomposition().solve(rhs);  // minimum-norm minimizer

    ParameterField f{spec, din, dout, {}};
    for (Index v = 0; v < n; ++v) f.w.push_back(sol.segment(v * p, p));
    if (spec.cls == FamilyClass::lowrank)
        for (Index v = 0; v < n; ++v)
            if (spectral_norm(f.map_at(v).linear()) > spec.lipschitz) return std::nullopt;
    return f;
}

}  // namespace detail

/// Projected gradient descent on the field objective from `start`.
inline FieldFit relax_field(ParameterField start, const Matrix& xa, const Matrix& xb, const Graph& g,
                            double lambda, const FieldOptions& opt) {
    const Index n = start.n(), p = start.p();
    const FamilySpec spec = start.spec;
    auto gradient = [&](const ParameterField& f, Cochain0& grad) {
        double obj = 0.0;
        grad.assign(static_cast<std::size_t>(n), Vector::Zero(p));
        for (Index v = 0; v < n; ++v) {
            Vector gv;
            obj += loss_and_gradient(spec, f.d_in, f.d_out, f.w[static_cast<std::size_t>(v)], xa.row(v), xb.row(v), gv);
            grad[static_cast<std::size_t>(v)] = gv;
        }
        for (const auto& e : g.edges()) {
            const Vector diff = f.w[static_cast<std::size_t>(e.u)] - f.w[static_cast<std::size_t>(e.v)];
            obj += lambda * e.weight * diff.squaredNorm();
            grad[static_cast<std::size_t>(e.u)] += 2.0 * lambda * e.weight * diff;
            grad[static_cast<std::size_t>(e.v)] -= 2.0 * lambda * e.weight * diff;
        }
        return obj;
    };

    FieldFit out{std::move(start), false, false, 0, 0.0};
    Cochain0 grad;
    double obj = gradient(out.field, grad);
    // initial step from the curvature scale of the coupling term
    double max_deg = 0.0;
    {
        std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
        for (const auto& e : g.edges()) {
            deg[static_cast<std::size_t>(e.u)] += e.weight;
            deg[static_cast<std::size_t>(e.v)] += e.weight;
        }
        for (double d : deg) max_deg = std::max(max_deg, d);
    }
    double step = 0.5 / (1.0 + 4.0 * lambda * max_deg);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        ParameterField cand = out.field;
        for (Index v = 0; v < n; ++v) {
            auto& wv = cand.w[static_cast<std::size_t>(v)];
            wv = project_parameters(spec, cand.d_in, cand.d_out, wv - step * grad[static_cast<std::size_t>(v)]);
        }
        Cochain0 cgrad;
        const double cobj = gradient(cand, cgrad);
        if (cobj < obj) {
            const double rel = (obj - cobj) / std::max(std::abs(obj), 1e-300);
            out.field = std::move(cand);
            grad = std::move(cgrad);
            obj = cobj;
            step *= 1.1;
            if (rel <= opt.rel_tol) {
                out.converged = true;
                ++it;
                break;
            }
        } else {
            step *= 0.5;
            if (step < 1e-16) {
                out.converged = true;
                break;
            }
        }
    }
    out.iterations = it;
    out.objective = obj;
    return out;
}

/// Minimizer w*(λ) of the sheaf-regularized objective. Quadratic classes are
/// solved exactly; other classes start from the constant field of the global
/// fit and relax by projected gradient descent.
inline FieldFit fit_parameter_field(const Matrix& xa, const Matrix& xb, const FamilySpec& spec, const Graph& g,
                                    double lambda, const FieldOptions& opt = {}) {
    check_pair(xa, xb);
    require(g.n_vertices() == xa.rows(), codes::dimension, "site and data have different vertex counts");
    require(lambda >= 0.0 && std::isfinite(lambda), codes::precondition, "lambda must be finite and >= 0");
    check_spec(spec, xa.cols(), xb.cols());
    if (detail::quadratic_field_class(spec, xa.cols(), xb.cols())) {
        if (auto f = detail::solve_quadratic_field(xa, xb, spec, g, lambda)) {
            FieldFit out{std::move(*f), true, true, 1, 0.0};
            out.objective = field_objective(out.field, xa, xb, g, lambda);
            return out;
        }
    }
    const FitResult global = fit_map(xa, xb, spec, opt.fit);
    return relax_field(ParameterField::constant(global.map, xa.rows()), xa, xb, g, lambda, opt);
}

// ---------------------------------------------------------------------------
// Global error and hardness

/// Best mean error of a single (constant) map from the family.
inline double global_map_error(const Matrix& xa, const Matrix& xb, const FamilySpec& spec,
                               const FitOptions& opt = {}) {
    check_pair(xa, xb);
    return fit_map(xa, xb, spec, opt).report.final_err;
}

enum class LevelStatus { feasible, failed_to_fit, not_applicable, certified_infeasible };

inline std::string to_string(LevelStatus s) {
    switch (s) {
        case LevelStatus::feasible: return "feasible";
        case LevelStatus::failed_to_fit: return "failed-to-fit";
        case LevelStatus::not_applicable: return "not-applicable";
        case LevelStatus::certified_infeasible: return "certified-infeasible";
    }
    return "?";
}

struct LevelRecord {
    double alpha = 0.0;
    std::string label;
    double err = 0.0;
    LevelStatus status = LevelStatus::failed_to_fit;
    bool converged = true;
};

struct HardnessResult {
    std::optional<double> value;        // α of the first feasible level; empty = infeasible-at-max
    double best_err = std::numeric_limits<double>::infinity();
    bool certified = false;             // value/lower_bound backed by exact certificates
    std::optional<double> lower_bound;  // certified lower bound on α, when known
    std::vector<LevelRecord> per_level;

    std::string status() const { return value ? "feasible" : "infeasible-at-max"; }
};

namespace detail {

inline bool applicable(const FamilySpec& s, Index din, Index dout) {
    try {
        check_spec(s, din, dout);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace detail

/// Smallest ladder level whose best fit reaches err ≤ eps, scanning in ladder
/// order. Within one class, the best map so far is carried up the nesting, so
/// reported per-level errors are non-increasing along each class.
inline HardnessResult hardness(const Matrix& xa, const Matrix& xb, const std::vector<FamilySpec>& ladder,
                               double eps, const FitOptions& opt = {}) {
    check_pair(xa, xb);
    require(!ladder.empty(), codes::precondition, "ladder must be nonempty");
    HardnessResult out;
    std::optional<ProjectionMap> carried;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        const FamilySpec& s = ladder[k];
        LevelRecord rec{s.alpha(xa.cols()), s.label(), 0.0, LevelStatus::not_applicable, true};
        if (!detail::applicable(s, xa.cols(), xb.cols())) {
            rec.err = std::numeric_limits<double>::infinity();
            out.per_level.push_back(rec);
            continue;
        }
        FitOptions o = opt;
        o.seed = derive_seed(opt.seed, k);
        o.mlp.target_err = std::max(opt.mlp.target_err, 0.0);
        FitResult fit = fit_map(xa, xb, s, o);
        ProjectionMap best = fit.map;
        double e = fit.report.final_err;
        if (carried) {
            if (auto up = embed_into(*carried, s)) {
                const double ce = err(*up, xa, xb);
                if (ce < e) {
                    best = *up;
                    e = ce;
                }
            }
        }
        carried = best;
        rec.err = e;
        rec.converged = fit.report.converged;
        rec.status = e <= eps ? LevelStatus::feasible : LevelStatus::failed_to_fit;
        out.best_err = std::min(out.best_err, e);
        out.per_level.push_back(rec);
        if (e <= eps) {
            out.value = rec.alpha;
            break;
        }
    }
    return out;
}

/// Certified width bounds for one-hidden-layer ReLU maps between 1-d
/// modalities. Lower bound: a width-w net has at most w breakpoints, so the
/// minimal breakpoint count of any continuous PWL reaching eps bounds the
/// width from below. Upper bound: width of the exact ReLU realization of an
/// explicit PWL fit reaching eps. α here is the hidden width itself.
inline HardnessResult hardness_certified_relu(const Matrix& xa, const Matrix& xb, double eps) {
    check_pair(xa, xb);
    require(xa.cols() == 1 && xb.cols() == 1, codes::dimension, "certified ReLU hardness needs 1-d modalities");
    std::vector<Sample1D> s;
    for (Index i = 0; i < xa.rows(); ++i) s.push_back({xa(i, 0), xb(i, 0)});
    std::sort(s.begin(), s.end(), [](const Sample1D& p, const Sample1D& q) {
        return p.x < q.x || (p.x == q.x && p.y < q.y);
    });
    const BreakpointFit bf = minimal_breakpoints_fit(s, eps);
    const ReluNet1D net = pwl_to_relu_net(bf.fit);

    HardnessResult out;
    out.certified = true;
    out.lower_bound = bf.breakpoints;
    // error of the realized net itself, not of the PWL it came from
    double net_sse = 0.0;
    for (const auto& p : s) net_sse += (net(p.x) - p.y) * (net(p.x) - p.y);
    const double net_mse = net_sse / static_cast<double>(s.size());
    require(net_mse <= eps + 1e-12 * (1.0 + net_sse), codes::check_failed,
            "ReLU realization misses the tolerance (mse " + std::to_string(net_mse) + ")");
    out.value = net.width();
    out.best_err = net_mse;
    for (int w = 0; w < bf.breakpoints; ++w)
        out.per_level.push_back({static_cast<double>(w), "relu(w=" + std::to_string(w) + ")",
                                 std::numeric_limits<double>::infinity(), LevelStatus::certified_infeasible, true});
    for (int w = bf.breakpoints; w < net.width(); ++w)
        out.per_level.push_back({static_cast<double>(w), "relu(w=" + std::to_string(w) + ")",
                                 std::numeric_limits<double>::infinity(), LevelStatus::failed_to_fit, true});
    out.per_level.push_back({static_cast<double>(net.width()), "relu(w=" + std::to_string(net.width()) + ")",
                             net_mse, LevelStatus::feasible, true});
    return out;
}

/// Two-stage hardness: at each ladder level fit a→c and c→b independently,
/// compose, and test err(g_cb ∘ g_ac; a→b) ≤ eps.
inline HardnessResult composed_hardness(const Matrix& xa, const Matrix& xc, const Matrix& xb,
                                        const std::vector<FamilySpec>& ladder, double eps,
                                        const FitOptions& opt = {}) {
    check_pair(xa, xc);
    check_pair(xa, xb);
    HardnessResult out;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        const FamilySpec& s = ladder[k];
        LevelRecord rec{s.alpha(xa.cols()), s.label(), std::numeric_limits<double>::infinity(),
                        LevelStatus::not_applicable, true};
        if (!detail::applicable(s, xa.cols(), xc.cols()) || !detail::applicable(s, xc.cols(), xb.cols())) {
            out.per_level.push_back(rec);
            continue;
        }
        FitOptions o1 = opt, o2 = opt;
        o1.seed = derive_seed(opt.seed, 2 * k);
        o2.seed = derive_seed(opt.seed, 2 * k + 1);
        const FitResult f1 = fit_map(xa, xc, s, o1);
        const FitResult f2 = fit_map(xc, xb, s, o2);
        const Matrix pred = f2.map.predict(f1.map.predict(xa));
        rec.err = (pred - xb).squaredNorm() / static_cast<double>(xa.rows());
        rec.converged = f1.report.converged && f2.report.converged;
        rec.status = rec.err <= eps ? LevelStatus::feasible : LevelStatus::failed_to_fit;
        out.best_err = std::min(out.best_err, rec.err);
        out.per_level.push_back(rec);
        if (rec.err <= eps) {
            out.value = rec.alpha;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Obstruction

struct PathRecord {
    double lambda = 0.0;
    double err_local = 0.0;
    double variation = 0.0;
    bool converged = true;
    ParameterField field;
};

struct ObstructionResult {
    std::optional<double> value;       // empty = infeasible-on-grid
    std::optional<std::size_t> index;  // grid position of the minimizer
    std::vector<PathRecord> path;

    std::string status() const { return value ? "feasible" : "infeasible-on-grid"; }
};

inline std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 16; ++k) grid.push_back(std::pow(10.0, -4.0 + 0.5 * k));
    return grid;
}

inline void check_grid(const std::vector<double>& grid) {
    require(!grid.empty(), codes::precondition, "lambda grid must be nonempty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] >= 0.0 && std::isfinite(grid[i]), codes::precondition, "lambda values must be finite, >= 0");
        require(i == 0 || grid[i] > grid[i - 1], codes::precondition, "lambda grid must be strictly ascending");
    }
}

/// Solved path w*(λ) over the grid.
inline std::vector<PathRecord> field_path(const Matrix& xa, const Matrix& xb, const FamilySpec& spec, const Graph& g,
                                          const std::vector<double>& grid, const FieldOptions& opt = {}) {
    check_grid(grid);
    std::vector<PathRecord> path;
    for (double lambda : grid) {
        FieldFit f = fit_parameter_field(xa, xb, spec, g, lambda, opt);
        PathRecord r;
        r.lambda = lambda;
        r.err_local = local_error(f.field, xa, xb);
        r.variation = variation_energy(f.field, g);
        r.converged = f.converged;
        r.field = std::move(f.field);
        path.push_back(std::move(r));
    }
    return path;
}

/// Minimum variation along a solved path among points with err_local ≤ eps
/// (ties to the smallest λ).
inline ObstructionResult obstruction_from_path(std::vector<PathRecord> path, double eps) {
    ObstructionResult out;
    out.path = std::move(path);
    for (std::size_t i = 0; i < out.path.size(); ++i) {
        const auto& r = out.path[i];
        if (r.err_local > eps) continue;
        if (!out.value || r.variation < *out.value) {
            out.value = r.variation;
            out.index = i;
        }
    }
    return out;
}

/// C(ε) = min { Var(λ) : Err_local(λ) ≤ ε } over the λ grid.
inline ObstructionResult obstruction(const Matrix& xa, const Matrix& xb, const FamilySpec& spec, const Graph& g,
                                     double eps, const std::vector<double>& grid, const FieldOptions& opt = {}) {
    return obstruction_from_path(field_path(xa, xb, spec, g, grid, opt), eps);
}

struct StagewiseResult {
    std::optional<double> value;  // empty = infeasible-on-grid
    double lambda1 = 0.0, lambda2 = 0.0;
    double variation1 = 0.0, variation2 = 0.0;
    double composed_err = 0.0;
    std::vector<PathRecord> path1, path2;
};

/// Stagewise obstruction for a→c→b: independent stage paths, composed
/// per-vertex predictions g_{w2_v}(g_{w1_v}(x_v)), min Var1 + Var2 over
/// (λ1, λ2) pairs whose composed mean error is ≤ eps.
inline StagewiseResult stagewise_obstruction(const Matrix& xa, const Matrix& xc, const Matrix& xb,
                                             const FamilySpec& spec, const Graph& g, double eps,
                                             const std::vector<double>& grid1, const std::vector<double>& grid2,
                                             const FieldOptions& opt = {}) {
    check_pair(xa, xc);
    check_pair(xa, xb);
    StagewiseResult out;
    out.path1 = field_path(xa, xc, spec, g, grid1, opt);
    out.path2 = field_path(xc, xb, spec, g, grid2, opt);
    const Index n = xa.rows();
    for (const auto& r1 : out.path1) {
        Matrix mid(n, xc.cols());
        for (Index v = 0; v < n; ++v) mid.row(v) = r1.field.map_at(v).predict(xa.row(v));
        for (const auto& r2 : out.path2) {
            double e = 0.0;
            for (Index v = 0; v < n; ++v) e += (r2.field.map_at(v).predict(mid.row(v)) - xb.row(v)).squaredNorm();
            e /= static_cast<double>(n);
            if (e > eps) continue;
            const double total = r1.variation + r2.variation;
            if (!out.value || total < *out.value) {
                out.value = total;
                out.lambda1 = r1.lambda;
                out.lambda2 = r2.lambda;
                out.variation1 = r1.variation;
                out.variation2 = r2.variation;
                out.composed_err = e;
            }
        }
    }
    return out;
}

struct SignflipVariation {
    double closed_form = 0.0;  // 4 Σ_{cut} w_e
    double direct = 0.0;       // energy of the ±1 field on constant_sheaf(g, 1)
    std::size_t cut_size = 0;
};

/// Minimum variation among perfect-fitting sign-flip fields. The constraint
/// set {w = +1 on V+, −1 on V−} is a single point, so the minimum is that
/// field's energy; `direct` recomputes it through the sheaf machinery.
inline SignflipVariation signflip_min_variation(const Graph& g, const std::vector<bool>& positive) {
    const auto cut = cut_edges(g, positive);
    SignflipVariation out;
    out.cut_size = cut.size();
    for (Index i : cut) out.closed_form += 4.0 * g.edges()[static_cast<std::size_t>(i)].weight;
    Cochain0 c;
    for (bool s : positive) c.push_back(Vector::Constant(1, s ? 1.0 : -1.0));
    out.direct = energy(constant_sheaf(g, 1), c);
    return out;
}

// ---------------------------------------------------------------------------
// Stability checks

struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Σ_v‖w_v − w̄‖² ≤ Var(w) / λ₂(G).
inline BoundCheck check_poincare(const ParameterField& f, const Graph& g) {
    const SpectralSummary s = algebraic_connectivity(g);
    require(s.n_components == 1, codes::disconnected,
            "Poincare bound needs a connected site (lambda2 = 0, " + std::to_string(s.n_components) + " components)");
    const Vector mean = f.mean();
    BoundCheck out;
    for (const auto& w : f.w) out.lhs += (w - mean).squaredNorm();
    const double var = variation_energy(f, g);
    out.rhs = var / s.lambda2;
    out.holds = out.lhs <= out.rhs + 1e-9 * std::max({1.0, out.lhs, out.rhs});
    return out;
}

/// mean ℓ at w̄  ≤  mean ℓ of the field + L_w sqrt(Var / (n λ₂)).
inline BoundCheck check_global_bound(const ParameterField& f, const Matrix& xa, const Matrix& xb, const Graph& g,
                                     double lipschitz_w) {
    const SpectralSummary s = algebraic_connectivity(g);
    require(s.n_components == 1, codes::disconnected, "global-error bound needs a connected site");
    const ProjectionMap mean_map(f.spec, f.d_in, f.d_out, f.mean());
    BoundCheck out;
    out.lhs = err(mean_map, xa, xb);
    const double n = static_cast<double>(f.n());
    out.rhs = local_error(f, xa, xb) + lipschitz_w * std::sqrt(variation_energy(f, g) / (n * s.lambda2));
    out.holds = out.lhs <= out.rhs + 1e-9 * std::max({1.0, out.lhs, out.rhs});
    return out;
}

/// Largest ‖w_v‖ and ‖w̄‖: the parameter ball the Lipschitz constant must cover.
inline double field_radius(const ParameterField& f) {
    double r = f.mean().norm();
    for (const auto& w : f.w) r = std::max(r, w.norm());
    return r;
}

// ---------------------------------------------------------------------------
// Profiles and relations

struct CompatibilityProfile {
    std::string source, target;
    double epsilon = 0.0;
    HardnessResult hardness;
    std::optional<ObstructionResult> obstruction;  // empty = not evaluated
};

struct CompatibilityRelation {
    double alpha0 = 0.0;
    std::optional<double> tau0;  // empty = hardness-only relation
    std::vector<std::pair<std::string, std::string>> edges;

    bool contains(const std::string& a, const std::string& b) const {
        return std::find(edges.begin(), edges.end(), std::make_pair(a, b)) != edges.end();
    }
};

/// Directed edge a→b iff H ≤ α₀ and (when τ₀ is given) C ≤ τ₀.
inline CompatibilityRelation compatibility_relation(const std::vector<CompatibilityProfile>& profiles, double alpha0,
                                                    std::optional<double> tau0 = std::nullopt) {
    if (!profiles.empty())
        for (const auto& p : profiles)
            require(p.epsilon == profiles.front().epsilon, codes::precondition, "profiles must share epsilon");
    CompatibilityRelation rel{alpha0, tau0, {}};
    for (const auto& p : profiles) {
        if (!p.hardness.value || *p.hardness.value > alpha0) continue;
        if (tau0) {
            if (!p.obstruction || !p.obstruction->value || *p.obstruction->value > *tau0) continue;
        }
        rel.edges.emplace_back(p.source, p.target);
    }
    return rel;
}

/// Triples (a, c, b) with a→c and c→b in the relation but not a→b.
inline std::vector<std::tuple<std::string, std::string, std::string>> transitivity_violations(
    const CompatibilityRelation& rel) {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& [a, c] : rel.edges)
        for (const auto& [c2, b] : rel.edges)
            if (c == c2 && a != b && !rel.contains(a, b)) out.emplace_back(a, c, b);
    return out;
}

}  // namespace xmodal
