// Acceptance report: one PASS/FAIL line per criterion. Reference values come
// from tests/oracles.hpp or closed forms, never from the code under test.
// Exit status is 0 unless --strict is given and some criterion fails (or an
// unexpected exception escapes), so ctest tracks "the report ran" while the
// printed lines carry the verdicts.

#include "oracles.hpp"

#include <xmodal/pipeline.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace xmodal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Graph to_graph(int n, const std::vector<oracle::WEdge>& es) {
    std::vector<Edge> edges;
    for (const auto& e : es) edges.push_back({e.u, e.v, e.w});
    return Graph(n, edges);
}

ParameterField random_field(const FamilySpec& s, Index din, Index dout, Index n, Rng& r) {
    ParameterField f{s, din, dout, {}};
    for (Index v = 0; v < n; ++v) f.w.push_back(r.normal_matrix(f.p(), 1));
    return f;
}

// 1 -------------------------------------------------------------------------
Outcome constant_sheaf_reduction() {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + static_cast<int>(rng() % 29);
        const auto es = oracle::random_connected(n, n, rng, t % 2 == 1);
        const auto lap = oracle::laplacian(n, es);
        const Graph g = to_graph(n, es);
        for (int p : {1, 2, 5}) {
            const Matrix d0 = sheaf_laplacian(constant_sheaf(g, p));
            for (int i = 0; i < n * p; ++i)
                for (int j = 0; j < n * p; ++j) {
                    const double ref = (i % p == j % p) ? lap[i / p][j / p] : 0.0;
                    worst = std::max(worst, std::abs(d0(i, j) - ref));
                }
        }
    }
    return {worst <= 1e-12, "max |entry diff| " + num(worst) + " over 20 graphs x p in {1,2,5}"};
}

// 2 -------------------------------------------------------------------------
Outcome poincare_sweep() {
    std::mt19937_64 rng(102);
    Rng r(102);
    int failures = 0;
    for (int t = 0; t < 500; ++t) {
        const int n = 2 + static_cast<int>(rng() % 25);
        const Graph g = to_graph(n, oracle::random_connected(n, static_cast<int>(rng() % (n + 1)), rng, t % 2 == 0));
        const Index d = 1 + static_cast<Index>(t % 3);
        if (!check_poincare(random_field(FamilySpec::lowrank(1), d, d, n, r), g).holds) ++failures;
    }
    // single edge, field (0, t): Σ|w-w̄|² = t²/2, Var = t², λ₂ = 2
    ParameterField f{FamilySpec::scalar(), 1, 1, {Vector::Constant(1, 0.0), Vector::Constant(1, 1.3)}};
    const auto eq = check_poincare(f, Graph(2, {{0, 1, 1.0}}));
    const double expect = 1.3 * 1.3 / 2;
    const bool tight = std::abs(eq.lhs - expect) <= 1e-14 && std::abs(eq.rhs - expect) <= 1e-14;
    return {failures == 0 && tight && eq.holds,
            std::to_string(failures) + "/500 violations; single-edge lhs " + num(eq.lhs) + " rhs " + num(eq.rhs)};
}

// 3 -------------------------------------------------------------------------
Outcome global_bound_sweep() {
    std::mt19937_64 rng(103);
    Rng r(103);
    int failures = 0;
    int analytic = 0;
    for (int t = 0; t < 200; ++t) {
        const int n = 3 + static_cast<int>(rng() % 25);
        const Graph g = to_graph(n, oracle::random_connected(n, n, rng, t % 2 == 1));
        const Index d = 1 + static_cast<Index>(t % 3);
        const Matrix x = r.normal_matrix(n, d), y = r.normal_matrix(n, d);
        const auto f = random_field(FamilySpec::scalar(), d, d, n, r);
        const auto lw = estimate_parameter_lipschitz(FamilySpec::scalar(), x, y, field_radius(f));
        analytic += lw.analytic ? 1 : 0;
        if (!check_global_bound(f, x, y, g, lw.value).holds) ++failures;
    }
    return {failures == 0 && analytic == 200,
            std::to_string(failures) + "/200 violations, " + std::to_string(analytic) + "/200 analytic L_w"};
}

// 4 -------------------------------------------------------------------------
Outcome cut_obstruction(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (int cut : {1, 3, 5}) {
        pipeline::SignflipParams p;
        p.cut = cut;
        const auto r = pipeline::demo_signflip(p, out);
        const double target = 4.0 * cut;
        const auto& sf = r.report.at("signflip");
        const bool exact = sf.at("min_variation_closed_form").get<double>() == target &&
                           std::abs(sf.at("min_variation_sheaf_energy").get<double>() - target) <= 1e-12 &&
                           sf.at("cut_size").get<int>() == cut;
        const auto& c = r.report.at("profile").at("obstruction").at("value");
        const double cv = c.is_null() ? INFINITY : c.get<double>();
        const double gap = std::abs(cv - target) / target;
        ok = ok && exact && gap <= 0.05;
        detail += "cut " + std::to_string(cut) + ": min var " + (exact ? "exact" : "WRONG") + ", C=" + num(cv) +
                  " (gap " + num(100 * gap) + "%); ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 30.0;
    return {ok, detail + "runtime " + num(secs) + " s"};
}

// 5 -------------------------------------------------------------------------
Outcome breakpoint_lemma() {
    std::mt19937_64 rng(105);
    std::normal_distribution<double> nd;
    int violations = 0;
    for (int t = 0; t < 200; ++t) {
        const int w = 1 + t % 10;
        ReluNet1D net;
        net.bias = nd(rng);
        for (int j = 0; j < w; ++j) net.units.push_back({nd(rng), nd(rng), nd(rng)});
        const int exact = relu_net_to_pwl(net, -4.0, 4.0).breakpoint_count();
        const int grid = oracle::grid_breakpoints([&](double x) { return net(x); }, -4.0, 4.0, 40000, 1e-7);
        if (exact > w || grid > w) ++violations;
    }
    return {violations == 0, std::to_string(violations) + "/200 nets exceed w (exact and grid counts)"};
}

// 6 -------------------------------------------------------------------------
Outcome composition_count() {
    auto count = [](int w, int& exact, int& grid) {
        const auto g = sawtooth(w), h = flat_ended_zigzag(w);
        exact = compose(h, g).breakpoint_count();
        grid = oracle::grid_breakpoints([&](double x) { return h.value(g.value(x)); }, 0.0, 1.0, 100003);
    };
    int e2, g2, e4, g4;
    count(2, e2, g2);
    count(4, e4, g4);
    return {e2 == 6 && g2 == 6 && e4 >= 8 && g4 >= 8,
            "w=2: compose " + std::to_string(e2) + ", grid " + std::to_string(g2) + "; w=4: compose " +
                std::to_string(e4) + ", grid " + std::to_string(g4)};
}

// 7 -------------------------------------------------------------------------
Outcome non_transitivity(const fs::path& out) {
    pipeline::ReluParams p;  // w = 2, eps = 1e-6, alpha0 = 3
    const auto r = pipeline::demo_relu(p, out);
    const auto& ps = r.report.at("profiles");
    auto h = [&](int i, const char* key) {
        const auto& v = ps[static_cast<std::size_t>(i)].at("hardness").at(key);
        return v.is_null() ? INFINITY : v.get<double>();
    };
    const double hac = h(0, "value"), hcb = h(1, "value"), hab_lb = h(2, "lower_bound");
    const auto& edges = r.report.at("relation").at("edges");
    auto has = [&](const char* a, const char* b) {
        for (const auto& e : edges)
            if (e[0] == a && e[1] == b) return true;
        return false;
    };
    const bool rel = has("a", "c") && has("c", "b") && !has("a", "b");
    return {hac <= 3 && hcb <= 3 && hab_lb >= 6 && rel,
            "H(a->c)=" + num(hac) + ", H(c->b)=" + num(hcb) + ", H(a->b) >= " + num(hab_lb) +
                ", relation at alpha0=3 " + (rel ? "{a->c, c->b}, no a->b" : "WRONG")};
}

// 8 -------------------------------------------------------------------------
Outcome whitening() {
    Rng r(108);
    const Matrix mix = r.normal_matrix(5, 5) + 2.0 * Matrix::Identity(5, 5);
    Matrix data = r.normal_matrix(200, 5) * mix;
    data.rowwise() += r.normal_matrix(1, 5).row(0) * 3.0;
    const EmbeddingSet e{"x", data, false};
    const Matrix z = apply_whitener(fit_whitener(e, 0.0), e).data;
    // moments recomputed by plain loops
    double worst_mean = 0.0, worst_cov = 0.0;
    const int n = 200;
    std::vector<double> mean(5, 0.0);
    for (int j = 0; j < 5; ++j) {
        for (int i = 0; i < n; ++i) mean[j] += z(i, j);
        mean[j] /= n;
        worst_mean = std::max(worst_mean, std::abs(mean[j]));
    }
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += (z(i, a) - mean[a]) * (z(i, b) - mean[b]);
            worst_cov = std::max(worst_cov, std::abs(s / n - (a == b ? 1.0 : 0.0)));
        }
    return {worst_mean <= 1e-10 && worst_cov <= 1e-8,
            "max |mean| " + num(worst_mean) + ", max |cov - I| " + num(worst_cov)};
}

// 9 -------------------------------------------------------------------------
Outcome large_lambda_collapse() {
    std::mt19937_64 rng(109);
    Rng r(109);
    double spread = 0.0, gap = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int n = 3 + static_cast<int>(rng() % 28);
        const Graph g = to_graph(n, oracle::random_connected(n, n / 2, rng, t % 2 == 0));
        const Index d = 1 + static_cast<Index>(t % 3);
        const Matrix x = r.normal_matrix(n, d), y = r.normal_matrix(n, d);
        const auto f = fit_parameter_field(x, y, FamilySpec::scalar(), g, 1e9).field;
        const Vector m = f.mean();
        for (const auto& w : f.w) spread = std::max(spread, (w - m).norm());
        // global scalar LS by its closed form <x,y>/<x,x>
        const double s = (x.array() * y.array()).sum() / x.squaredNorm();
        const double ref = (y - s * x).squaredNorm() / n;
        gap = std::max(gap, std::abs(local_error(f, x, y) - ref));
    }
    return {spread <= 1e-6 && gap <= 1e-6, "max |w_v - mean| " + num(spread) + ", max |err - global| " + num(gap)};
}

// 10 ------------------------------------------------------------------------
Outcome exact_solver_cross_check() {
    Rng r(110);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const double w01 = r.uniform(0.1, 2.0), w12 = r.uniform(0.1, 2.0), w02 = (t % 2) ? r.uniform(0.1, 2.0) : 0.0;
        std::vector<Edge> es{{0, 1, w01}, {1, 2, w12}};
        if (w02 > 0) es.push_back({0, 2, w02});
        const Graph g(3, es);
        Matrix x(3, 1), y(3, 1);
        for (int i = 0; i < 3; ++i) x(i, 0) = r.uniform(0.3, 2.0) * (r.uniform() < 0.5 ? -1 : 1), y(i, 0) = r.normal();
        for (double lam : default_lambda_grid()) {
            const auto fit = fit_parameter_field(x, y, FamilySpec::scalar(), g, lam);
            const auto lap = oracle::laplacian(3, {{0, 1, w01}, {1, 2, w12}, {0, 2, w02}});
            oracle::Dense a(3, std::vector<double>(3));
            std::vector<double> b(3);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) a[i][j] = lam * lap[i][j] + (i == j ? x(i, 0) * x(i, 0) : 0.0);
                b[i] = x(i, 0) * y(i, 0);
            }
            const auto w = oracle::cramer3(a, b);
            for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(fit.field.w[i](0) - w[i]));
        }
    }
    return {worst <= 1e-10, "max |w - closed form| " + num(worst) + " over 10 instances x 17 lambdas"};
}

// 11 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism(const fs::path& root) {
    const fs::path a = root / "rerun_a", b = root / "rerun_b";
    fs::remove_all(a);
    fs::remove_all(b);
    for (const fs::path& dir : {a, b}) {
        for (int cut : {1, 3, 5}) {
            pipeline::SignflipParams p;
            p.cut = cut;
            pipeline::demo_signflip(p, dir);
        }
        pipeline::demo_relu({}, dir);
    }
    int files = 0, reports = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), a);
        ++files;
        reports += rel.filename() == "report.json" ? 1 : 0;
        if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) ++differ;
    }
    return {differ == 0 && reports == 4,
            std::to_string(reports) + " demo reports, " + std::to_string(files) + " files compared, " +
                std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
    const fs::path out = fs::path("acceptance_out");
    fs::remove_all(out);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"constant-sheaf Laplacian equals L (x) I", constant_sheaf_reduction},
        {"Poincare inequality sweep and equality case", poincare_sweep},
        {"global-error bound sweep (scalar family)", global_bound_sweep},
        {"sign-flip cut obstruction", [&] { return cut_obstruction(out / "signflip"); }},
        {"ReLU breakpoints <= width", breakpoint_lemma},
        {"bridge composition breakpoint count", composition_count},
        {"non-transitivity certificate", [&] { return non_transitivity(out / "relu"); }},
        {"whitening moments", whitening},
        {"large-lambda collapse to a global map", large_lambda_collapse},
        {"3-vertex exact solver cross-check", exact_solver_cross_check},
        {"demo determinism (byte-identical reruns)", [&] { return determinism(out); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass" << std::endl;
    return strict && failed ? 1 : 0;
}
