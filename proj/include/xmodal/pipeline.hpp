#pragma once

// Batch pipeline behind the CLI: site → whiten → hardness / obstruction /
// bridge → report, plus the two scenario demos. Every step reads and writes
// files under one output directory so steps can be run separately; all JSON
// is emitted with sorted keys and no timestamps or absolute paths, so equal
// config + seed gives byte-identical output.

#include "xmodal/embed.hpp"
#include "xmodal/families.hpp"
#include "xmodal/invariants.hpp"
#include "xmodal/io.hpp"
#include "xmodal/svg.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace xmodal::pipeline {

namespace fs = std::filesystem;
using io::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutEnv = "XMODAL_OUT";

/// Output root: explicit value, else $XMODAL_OUT, else ./xmodal_out.
inline fs::path default_output_dir(const std::optional<std::string>& explicit_dir = std::nullopt) {
    if (explicit_dir && !explicit_dir->empty()) return *explicit_dir;
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return "xmodal_out";
}

/// FNV-1a 64-bit, hex.
inline std::string fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Config

struct SiteSource {
    std::optional<std::string> points;  // latent CSV
    std::optional<std::string> edges;   // explicit edge list
    SiteConfig knn;
};

struct RunConfig {
    fs::path output_dir;
    fs::path base_dir = ".";  // relative input paths resolve against this
    SiteSource site;
    bool use_weights = true;
    std::map<std::string, std::string> modalities;  // id -> CSV path
    std::optional<double> ridge;
    double train_fraction = 0.8;
    int max_width = 4;
    double lipschitz = 10.0;
    std::optional<std::vector<FamilySpec>> ladder;  // explicit ladder overrides max_width
    std::optional<FamilySpec> field_family;
    std::vector<double> epsilons{1e-4};
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::array<std::string, 3>> bridges;
    bool certified_relu = false;
    std::optional<double> alpha0;
    std::optional<double> tau0;
    std::uint64_t seed = 0;
    int n_restarts = 4;

    fs::path resolve(const std::string& p) const {
        const fs::path q(p);
        return q.is_absolute() ? q : base_dir / q;
    }
};

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
    throw Error(codes::config, "config: '" + where + "' " + what);
}

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) bad(where, "must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) bad(where + "." + it.key(), "is not a recognised key");
    }
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) bad(where, "must be a number");
    return j.get<double>();
}

inline std::string string(const json& j, const std::string& where) {
    if (!j.is_string()) bad(where, "must be a string");
    return j.get<std::string>();
}

inline int integer(const json& j, const std::string& where, int lo) {
    if (!j.is_number_integer()) bad(where, "must be an integer");
    const auto v = j.get<long long>();
    if (v < lo) bad(where, "must be >= " + std::to_string(lo));
    return static_cast<int>(v);
}

inline bool boolean(const json& j, const std::string& where) {
    if (!j.is_boolean()) bad(where, "must be true or false");
    return j.get<bool>();
}

inline void check_id(const std::string& id, const std::string& where) {
    static const std::regex re("[A-Za-z0-9_-]+");
    if (!std::regex_match(id, re)) bad(where, "modality id '" + id + "' must match [A-Za-z0-9_-]+");
}

inline FamilySpec spec_checked(const json& j, const std::string& where) {
    only_keys(j, where, {"class", "rank", "width", "depth", "lipschitz", "alpha"});
    if (!j.contains("class")) bad(where + ".class", "is required");
    FamilySpec s;
    try {
        s = io::spec_from_json(j);
    } catch (const std::exception& e) {
        bad(where, std::string("is malformed: ") + e.what());
    }
    if (s.rank < 1 || s.width < 1 || s.depth < 1 || !(s.lipschitz > 0)) bad(where, "has a non-positive field");
    return s;
}

}  // namespace detail

/// Schema-validate and load a config object. Unknown keys are errors.
inline RunConfig config_from_json(const json& j, const fs::path& base_dir = ".") {
    using namespace detail;
    only_keys(j, "config",
              {"output_dir", "site", "use_weights", "modalities", "whitening", "ladder", "field_family", "epsilons",
               "lambda_grid", "pairs", "bridges", "certified_relu", "alpha0", "tau0", "seed", "n_restarts"});
    RunConfig c;
    c.base_dir = base_dir;
    if (j.contains("output_dir")) c.output_dir = string(j["output_dir"], "output_dir");
    if (j.contains("site")) {
        const json& s = j["site"];
        only_keys(s, "site", {"points", "edges", "k_nn", "rbf_sigma", "symmetrization"});
        if (s.contains("points")) c.site.points = string(s["points"], "site.points");
        if (s.contains("edges")) c.site.edges = string(s["edges"], "site.edges");
        if (c.site.points && c.site.edges) bad("site", "must give either 'points' or 'edges', not both");
        if (s.contains("k_nn")) c.site.knn.k_nn = integer(s["k_nn"], "site.k_nn", 1);
        if (s.contains("rbf_sigma") && !s["rbf_sigma"].is_null()) {
            c.site.knn.rbf_sigma = number(s["rbf_sigma"], "site.rbf_sigma");
            if (!(*c.site.knn.rbf_sigma > 0)) bad("site.rbf_sigma", "must be > 0");
        }
        if (s.contains("symmetrization")) {
            const auto m = string(s["symmetrization"], "site.symmetrization");
            if (m == "union") c.site.knn.symmetrization = Symmetrization::union_;
            else if (m == "mutual") c.site.knn.symmetrization = Symmetrization::mutual;
            else bad("site.symmetrization", "must be 'union' or 'mutual'");
        }
    }
    if (j.contains("use_weights")) c.use_weights = boolean(j["use_weights"], "use_weights");
    if (j.contains("modalities")) {
        if (!j["modalities"].is_object()) bad("modalities", "must map modality ids to CSV paths");
        for (auto it = j["modalities"].begin(); it != j["modalities"].end(); ++it) {
            check_id(it.key(), "modalities");
            c.modalities[it.key()] = string(it.value(), "modalities." + it.key());
        }
    }
    if (j.contains("whitening")) {
        const json& w = j["whitening"];
        only_keys(w, "whitening", {"ridge", "train_fraction"});
        if (w.contains("ridge") && !w["ridge"].is_null()) {
            c.ridge = number(w["ridge"], "whitening.ridge");
            if (*c.ridge < 0) bad("whitening.ridge", "must be >= 0");
        }
        if (w.contains("train_fraction")) {
            c.train_fraction = number(w["train_fraction"], "whitening.train_fraction");
            if (!(c.train_fraction > 0 && c.train_fraction <= 1)) bad("whitening.train_fraction", "must be in (0, 1]");
        }
    }
    if (j.contains("ladder")) {
        const json& l = j["ladder"];
        if (l.is_array()) {
            std::vector<FamilySpec> ladder;
            for (std::size_t i = 0; i < l.size(); ++i) ladder.push_back(spec_checked(l[i], "ladder[" + std::to_string(i) + "]"));
            if (ladder.empty()) bad("ladder", "must not be empty");
            c.ladder = ladder;
        } else {
            only_keys(l, "ladder", {"max_width", "lipschitz"});
            if (l.contains("max_width")) c.max_width = integer(l["max_width"], "ladder.max_width", 0);
            if (l.contains("lipschitz")) {
                c.lipschitz = number(l["lipschitz"], "ladder.lipschitz");
                if (!(c.lipschitz > 0)) bad("ladder.lipschitz", "must be > 0");
            }
        }
    }
    if (j.contains("field_family")) c.field_family = spec_checked(j["field_family"], "field_family");
    if (j.contains("epsilons")) {
        if (!j["epsilons"].is_array() || j["epsilons"].empty()) bad("epsilons", "must be a nonempty array");
        c.epsilons.clear();
        for (const auto& e : j["epsilons"]) {
            c.epsilons.push_back(number(e, "epsilons[]"));
            if (!(c.epsilons.back() > 0)) bad("epsilons[]", "must be > 0");
        }
    }
    if (j.contains("lambda_grid")) {
        if (!j["lambda_grid"].is_array()) bad("lambda_grid", "must be an array");
        c.lambda_grid.clear();
        for (const auto& e : j["lambda_grid"]) c.lambda_grid.push_back(number(e, "lambda_grid[]"));
        try {
            check_grid(c.lambda_grid);
        } catch (const Error& e) {
            bad("lambda_grid", e.what());
        }
    }
    if (j.contains("pairs")) {
        if (!j["pairs"].is_array()) bad("pairs", "must be an array of [source, target]");
        for (const auto& p : j["pairs"]) {
            if (!p.is_array() || p.size() != 2) bad("pairs[]", "must be [source, target]");
            c.pairs.emplace_back(string(p[0], "pairs[][0]"), string(p[1], "pairs[][1]"));
        }
    }
    if (j.contains("bridges")) {
        if (!j["bridges"].is_array()) bad("bridges", "must be an array of [a, c, b]");
        for (const auto& b : j["bridges"]) {
            if (!b.is_array() || b.size() != 3) bad("bridges[]", "must be [source, bridge, target]");
            c.bridges.push_back({string(b[0], "bridges[][0]"), string(b[1], "bridges[][1]"), string(b[2], "bridges[][2]")});
        }
    }
    if (j.contains("certified_relu")) c.certified_relu = boolean(j["certified_relu"], "certified_relu");
    if (j.contains("alpha0") && !j["alpha0"].is_null()) c.alpha0 = number(j["alpha0"], "alpha0");
    if (j.contains("tau0") && !j["tau0"].is_null()) c.tau0 = number(j["tau0"], "tau0");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            bad("seed", "must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("n_restarts")) c.n_restarts = integer(j["n_restarts"], "n_restarts", 1);
    return c;
}

inline RunConfig load_config(const fs::path& p) {
    json j;
    try {
        j = json::parse(io::read_text(p));
    } catch (const json::parse_error& e) {
        throw Error(codes::config, "config '" + p.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, p.has_parent_path() ? p.parent_path() : fs::path("."));
}

/// Canonical serialized config (input paths as given) used for the hash.
inline json config_to_json(const RunConfig& c) {
    json j;
    json site;
    if (c.site.points) site["points"] = *c.site.points;
    if (c.site.edges) site["edges"] = *c.site.edges;
    site["k_nn"] = c.site.knn.k_nn;
    site["rbf_sigma"] = c.site.knn.rbf_sigma ? json(*c.site.knn.rbf_sigma) : json(nullptr);
    site["symmetrization"] = c.site.knn.symmetrization == Symmetrization::mutual ? "mutual" : "union";
    j["site"] = site;
    j["use_weights"] = c.use_weights;
    j["modalities"] = c.modalities;
    j["whitening"] = {{"ridge", c.ridge ? json(*c.ridge) : json(nullptr)}, {"train_fraction", c.train_fraction}};
    if (c.ladder) {
        json l = json::array();
        for (const auto& s : *c.ladder) l.push_back(io::spec_to_json(s));
        j["ladder"] = l;
    } else {
        j["ladder"] = {{"max_width", c.max_width}, {"lipschitz", c.lipschitz}};
    }
    j["field_family"] = c.field_family ? io::spec_to_json(*c.field_family) : json(nullptr);
    j["epsilons"] = c.epsilons;
    j["lambda_grid"] = c.lambda_grid;
    json pairs = json::array();
    for (const auto& [a, b] : c.pairs) pairs.push_back({a, b});
    j["pairs"] = pairs;
    json bridges = json::array();
    for (const auto& b : c.bridges) bridges.push_back({b[0], b[1], b[2]});
    j["bridges"] = bridges;
    j["certified_relu"] = c.certified_relu;
    j["alpha0"] = c.alpha0 ? json(*c.alpha0) : json(nullptr);
    j["tau0"] = c.tau0 ? json(*c.tau0) : json(nullptr);
    j["seed"] = c.seed;
    j["n_restarts"] = c.n_restarts;
    return j;
}

inline std::string config_hash(const RunConfig& c) { return "fnv1a64:" + fnv1a64(config_to_json(c).dump()); }

inline json stamp(const RunConfig& c) {
    return {{"tool", "xmodal"}, {"version", kVersion}, {"seed", c.seed}, {"config_hash", config_hash(c)}};
}

// ---------------------------------------------------------------------------
// Workspace layout under the output directory

struct Layout {
    fs::path root;
    fs::path site_edges() const { return root / "site.edges"; }
    fs::path spectral() const { return root / "spectral.json"; }
    fs::path whitened(const std::string& id) const { return root / "whitened" / (id + ".csv"); }
    fs::path whitener(const std::string& id) const { return root / "whitened" / (id + ".whitener.json"); }
    fs::path hardness() const { return root / "hardness.json"; }
    fs::path obstruction() const { return root / "obstruction.json"; }
    fs::path bridge() const { return root / "bridge.json"; }
    fs::path report() const { return root / "report.json"; }
    fs::path plot(const std::string& a, const std::string& b) const { return root / "plots" / (a + "_to_" + b + ".svg"); }
};

namespace detail {

inline void require_file(const fs::path& p, const std::string& prerequisite) {
    require(fs::exists(p), codes::missing_input,
            "missing '" + p.string() + "'; run `xmodal " + prerequisite + "` first");
}

inline std::vector<std::pair<std::string, std::string>> pairs_of(const RunConfig& c) {
    if (!c.pairs.empty()) return c.pairs;
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [a, pa] : c.modalities)
        for (const auto& [b, pb] : c.modalities)
            if (a != b) out.emplace_back(a, b);
    return out;
}

inline std::vector<FamilySpec> ladder_of(const RunConfig& c, Index d) {
    return c.ladder ? *c.ladder : default_ladder(d, c.max_width, c.lipschitz);
}

inline FitOptions fit_options(const RunConfig& c) {
    FitOptions o;
    o.seed = c.seed;
    o.n_restarts = c.n_restarts;
    return o;
}

inline std::string pair_key(const std::string& a, const std::string& b) { return a + "->" + b; }

}  // namespace detail

/// Whitened modality matrix written by the whiten step.
inline Matrix load_whitened(const Layout& l, const std::string& id) {
    detail::require_file(l.whitened(id), "whiten");
    return io::read_csv(l.whitened(id));
}

/// Site from the site step; weights dropped unless use_weights.
inline Graph load_site(const Layout& l, bool use_weights) {
    detail::require_file(l.site_edges(), "site");
    Graph g = io::read_edges(l.site_edges());
    return use_weights ? g : g.with_unit_weights();
}

inline void check_vertices(const Graph& g, const Matrix& x, const std::string& id) {
    require(g.n_vertices() == x.rows(), codes::dimension,
            "modality '" + id + "' has " + std::to_string(x.rows()) + " rows but the site has " +
                std::to_string(g.n_vertices()) + " vertices");
}

// ---------------------------------------------------------------------------
// Steps

/// Step 1: fix the base graph.
inline json run_site(const RunConfig& c) {
    const Layout l{c.output_dir};
    Graph g;
    if (c.site.edges) {
        g = io::read_edges(c.resolve(*c.site.edges));
    } else {
        require(c.site.points.has_value(), codes::config, "config: 'site' needs 'points' (latent CSV) or 'edges'");
        g = build_knn_site(io::read_csv(c.resolve(*c.site.points)), c.site.knn);
    }
    io::write_edges(l.site_edges(), g);
    json spec = io::spectral_to_json(algebraic_connectivity(g));
    spec["n_vertices"] = g.n_vertices();
    spec["n_edges"] = g.n_edges();
    if (!spec["connected"].get<bool>())
        spec["warning"] = "site is disconnected (lambda2 = 0): Poincare and global-error bounds are undefined";
    io::write_text(l.spectral(), dump(spec));
    return spec;
}

/// Step 3: whiten each modality on a seeded training split.
inline json run_whiten(const RunConfig& c) {
    const Layout l{c.output_dir};
    require(!c.modalities.empty(), codes::config, "config: 'modalities' is empty; nothing to whiten");
    json out = json::object();
    for (const auto& [id, path] : c.modalities) {
        const EmbeddingSet e{id, io::read_csv(c.resolve(path)), false};
        const auto train = train_split(e.data.rows(), c.train_fraction, derive_seed(c.seed, 0x77));
        const Whitener w = fit_whitener(e, c.ridge, &train);
        io::write_csv(l.whitened(id), apply_whitener(w, e).data);
        json wj = io::whitener_to_json(w);
        wj["train_rows"] = train;
        io::write_text(l.whitener(id), dump(wj));
        out[id] = {{"rows", e.data.rows()}, {"dim", e.dim()}, {"ridge", w.ridge}, {"train_rows", train.size()}};
    }
    return out;
}

/// Step 4: global hardness per pair and ε.
inline json run_hardness(const RunConfig& c) {
    const Layout l{c.output_dir};
    json out = json::object();
    for (const auto& [a, b] : detail::pairs_of(c)) {
        const Matrix xa = load_whitened(l, a), xb = load_whitened(l, b);
        json per = json::array();
        for (double eps : c.epsilons) {
            const HardnessResult h = c.certified_relu
                                         ? hardness_certified_relu(xa, xb, eps)
                                         : hardness(xa, xb, detail::ladder_of(c, xa.cols()), eps, detail::fit_options(c));
            json hj = io::hardness_to_json(h);
            hj["epsilon"] = eps;
            per.push_back(hj);
        }
        out[detail::pair_key(a, b)] = {{"pair", {a, b}}, {"results", per}};
    }
    io::write_text(l.hardness(), dump(out));
    return out;
}

inline FamilySpec field_family_for(const RunConfig& c, Index din, Index dout) {
    if (c.field_family) return *c.field_family;
    return FamilySpec::lowrank(static_cast<int>(std::min(din, dout)), c.lipschitz);
}

inline std::string path_plot(const std::string& a, const std::string& b, const std::vector<PathRecord>& path,
                             std::optional<double> eps) {
    std::vector<double> lam, err, var;
    for (const auto& r : path) {
        lam.push_back(r.lambda);
        err.push_back(r.err_local);
        var.push_back(r.variation);
    }
    std::vector<svg::Panel> panels{{"err_local (mean)", {{"err_local", err, "#1f77b4"}}},
                                   {"variation", {{"variation", var, "#d62728"}}}};
    if (eps) panels[0].curves.push_back({"epsilon", std::vector<double>(lam.size(), *eps), "#7f7f7f"});
    return svg::line_plot("lambda path " + a + " -> " + b, "lambda (log scale)", lam, panels);
}

/// Steps 5–6: field path and C(ε) per pair; one SVG per pair.
inline json run_obstruction(const RunConfig& c) {
    const Layout l{c.output_dir};
    const Graph g = load_site(l, c.use_weights);
    FieldOptions fo;
    fo.fit = detail::fit_options(c);
    json out = json::object();
    for (const auto& [a, b] : detail::pairs_of(c)) {
        const Matrix xa = load_whitened(l, a), xb = load_whitened(l, b);
        check_vertices(g, xa, a);
        check_vertices(g, xb, b);
        const FamilySpec spec = field_family_for(c, xa.cols(), xb.cols());
        const auto path = field_path(xa, xb, spec, g, c.lambda_grid, fo);
        json per = json::array();
        for (double eps : c.epsilons) {
            json oj = io::obstruction_to_json(obstruction_from_path(path, eps));
            oj["epsilon"] = eps;
            per.push_back(oj);
        }
        io::write_text(l.plot(a, b), path_plot(a, b, path, c.epsilons.front()));
        out[detail::pair_key(a, b)] = {{"pair", {a, b}},
                                       {"field_family", io::spec_to_json(spec)},
                                       {"weights_in_energy", c.use_weights},
                                       {"note", "C is a minimum over the lambda grid only"},
                                       {"results", per}};
    }
    io::write_text(l.obstruction(), dump(out));
    return out;
}

/// Bridge comparison a→c→b vs a→b: hardness (direct, stages, composed) and
/// obstruction (direct vs stagewise) with ratios; verdicts left to the user.
inline json run_bridge(const RunConfig& c) {
    const Layout l{c.output_dir};
    require(!c.bridges.empty(), codes::config, "config: 'bridges' is empty; give [source, bridge, target] triples");
    const Graph g = load_site(l, c.use_weights);
    FieldOptions fo;
    fo.fit = detail::fit_options(c);
    json rows = json::array();
    for (const auto& [a, m, b] : c.bridges) {
        const Matrix xa = load_whitened(l, a), xc = load_whitened(l, m), xb = load_whitened(l, b);
        for (double eps : c.epsilons) {
            json row{{"chain", {a, m, b}}, {"epsilon", eps}};
            auto hard = [&](const Matrix& x, const Matrix& y) {
                return c.certified_relu ? hardness_certified_relu(x, y, eps)
                                        : hardness(x, y, detail::ladder_of(c, x.cols()), eps, detail::fit_options(c));
            };
            const HardnessResult hd = hard(xa, xb), h1 = hard(xa, xc), h2 = hard(xc, xb);
            row["hardness_direct"] = io::hardness_to_json(hd);
            row["hardness_stage1"] = io::hardness_to_json(h1);
            row["hardness_stage2"] = io::hardness_to_json(h2);
            if (!c.certified_relu) {
                row["hardness_composed"] = io::hardness_to_json(
                    composed_hardness(xa, xc, xb, detail::ladder_of(c, xa.cols()), eps, detail::fit_options(c)));
            }
            const double stage = std::max(h1.value.value_or(INFINITY), h2.value.value_or(INFINITY));
            row["hardness_ratio_direct_over_stages"] =
                hd.value && std::isfinite(stage) && stage > 0 ? json(*hd.value / stage) : json(nullptr);
            const Matrix* mats[3] = {&xa, &xc, &xb};
            bool dims_ok = true;
            for (const Matrix* x : mats) dims_ok = dims_ok && x->rows() == g.n_vertices();
            if (dims_ok) {
                const FamilySpec spec = field_family_for(c, xa.cols(), xb.cols());
                const auto direct = obstruction(xa, xb, spec, g, eps, c.lambda_grid, fo);
                const auto staged = stagewise_obstruction(xa, xc, xb, spec, g, eps, c.lambda_grid, c.lambda_grid, fo);
                row["obstruction_direct"] = direct.value ? json(*direct.value) : json("infeasible-on-grid");
                row["obstruction_stagewise"] = staged.value ? json(*staged.value) : json("infeasible-on-grid");
                row["obstruction_ratio_direct_over_stagewise"] =
                    direct.value && staged.value && *staged.value > 0 ? json(*direct.value / *staged.value)
                                                                      : json(nullptr);
            }
            rows.push_back(row);
        }
    }
    json out{{"rows", rows}, {"note", "no bridging verdict: compare the ratios against your own thresholds"}};
    io::write_text(l.bridge(), dump(out));
    return out;
}

/// Human-readable bridge table (stdout of the bridge command).
inline std::string bridge_table(const json& bridge) {
    auto cell = [](const json& h) {
        if (h.is_null()) return std::string("-");
        if (h.is_object()) {
            const json& v = h.at("value");
            return v.is_null() ? std::string("inf") : io::format_double(v.get<double>());
        }
        if (h.is_string()) return h.get<std::string>();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", h.get<double>());
        return std::string(buf);
    };
    std::string s = "chain\tepsilon\tH_direct\tH_stage1\tH_stage2\tH_composed\tC_direct\tC_stagewise\n";
    for (const auto& r : bridge.at("rows")) {
        const auto& ch = r.at("chain");
        s += ch[0].get<std::string>() + ">" + ch[1].get<std::string>() + ">" + ch[2].get<std::string>() + "\t";
        s += cell(r.at("epsilon")) + "\t" + cell(r.at("hardness_direct")) + "\t" + cell(r.at("hardness_stage1")) +
             "\t" + cell(r.at("hardness_stage2")) + "\t" + cell(r.value("hardness_composed", json())) + "\t" +
             cell(r.value("obstruction_direct", json())) + "\t" + cell(r.value("obstruction_stagewise", json())) +
             "\n";
    }
    return s;
}

/// Final report: per-pair profiles, relation per ε (when α₀ is set), stamp.
inline json run_report(const RunConfig& c) {
    const Layout l{c.output_dir};
    detail::require_file(l.hardness(), "hardness");
    const json hard = json::parse(io::read_text(l.hardness()));
    const json obst = fs::exists(l.obstruction()) ? json::parse(io::read_text(l.obstruction())) : json::object();
    json profiles = json::array();
    std::map<double, std::vector<CompatibilityProfile>> by_eps;
    for (auto it = hard.begin(); it != hard.end(); ++it) {
        const json& pair = it.value().at("pair");
        const std::string a = pair[0], b = pair[1];
        for (const auto& hj : it.value().at("results")) {
            const double eps = hj.at("epsilon");
            json p{{"pair", pair}, {"epsilon", eps}, {"error_convention", "mean over vertices"}, {"hardness", hj}};
            p["hardness"].erase("epsilon");
            CompatibilityProfile cp{a, b, eps, {}, std::nullopt};
            if (!hj.at("value").is_null()) cp.hardness.value = hj.at("value").get<double>();
            json oj = io::obstruction_to_json(std::nullopt);
            if (obst.contains(it.key())) {
                for (const auto& o : obst[it.key()].at("results"))
                    if (o.at("epsilon").get<double>() == eps) {
                        oj = o;
                        oj.erase("epsilon");
                        ObstructionResult r;
                        if (!o.at("value").is_null()) r.value = o.at("value").get<double>();
                        cp.obstruction = r;
                    }
            }
            p["obstruction"] = oj;
            profiles.push_back(p);
            by_eps[eps].push_back(cp);
        }
    }
    json rel = json::array();
    if (c.alpha0) {
        for (const auto& [eps, ps] : by_eps) {
            json r = io::relation_to_json(compatibility_relation(ps, *c.alpha0, c.tau0));
            r["epsilon"] = eps;
            rel.push_back(r);
        }
    }
    json out{{"stamp", stamp(c)}, {"profiles", profiles}, {"relations", rel}};
    if (!c.alpha0) out["relations_note"] = "set alpha0 (and optionally tau0) to emit the thresholded relation";
    if (fs::exists(l.bridge())) out["bridge"] = json::parse(io::read_text(l.bridge()));
    io::write_text(l.report(), dump(out));
    return out;
}

// ---------------------------------------------------------------------------
// Demos

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline json checks_json(const std::vector<Check>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return a;
}

inline bool all_pass(const std::vector<Check>& cs) {
    return std::all_of(cs.begin(), cs.end(), [](const Check& c) { return c.pass; });
}

/// Scenario bundle: latent.csv, <modality>.csv, site.edges, meta.json.
inline void write_bundle(const fs::path& dir, const SyntheticScenario& s, const json& params) {
    io::write_csv(dir / "latent.csv", s.latent);
    json mods = json::array();
    for (const auto& m : s.modalities) {
        io::write_csv(dir / (m.modality_id + ".csv"), m.data);
        mods.push_back(m.modality_id);
    }
    io::write_edges(dir / "site.edges", s.site);
    json meta{{"scenario", s.name}, {"seed", s.seed}, {"params", params}, {"modalities", mods},
              {"n_vertices", s.site.n_vertices()}};
    if (!s.partition.empty()) {
        std::vector<int> part;
        for (bool b : s.partition) part.push_back(b ? 1 : 0);
        meta["partition"] = part;
    }
    if (s.g) meta["g"] = io::pwl_to_json(*s.g);
    if (s.h) meta["h"] = io::pwl_to_json(*s.h);
    io::write_text(dir / "meta.json", dump(meta));
}

struct DemoResult {
    json report;
    std::vector<Check> checks;
    fs::path dir;
    bool ok() const { return all_pass(checks); }
};

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct SignflipParams {
    int cut = 1;
    Index n_plus = 30, n_minus = 30;
    double eps = 1e-4;
    std::uint64_t seed = 0;
    double tolerance = 0.05;  // relative, for C vs 4|cut|
};

/// Two-cluster sign flip: scalar family, whitened on all rows.
inline DemoResult demo_signflip(const SignflipParams& p, const fs::path& out_root) {
    DemoResult r;
    r.dir = out_root / ("demo_signflip_cut" + std::to_string(p.cut));
    const json params{{"cut", p.cut}, {"n_plus", p.n_plus}, {"n_minus", p.n_minus}, {"epsilon", p.eps},
                      {"tolerance", p.tolerance}};
    const SyntheticScenario s = gen_signflip_scenario(p.n_plus, p.n_minus, p.cut, p.seed);
    write_bundle(r.dir / "bundle", s, params);

    // whitening on all rows keeps b = ±a exact (both are centred, same variance)
    const Matrix a = apply_whitener(fit_whitener(s.modality("a"), 0.0), s.modality("a")).data;
    const Matrix b = apply_whitener(fit_whitener(s.modality("b"), 0.0), s.modality("b")).data;
    const FamilySpec spec = FamilySpec::scalar();
    const auto grid = default_lambda_grid();

    const auto minvar = signflip_min_variation(s.site, s.partition);
    const double target = 4.0 * static_cast<double>(p.cut);
    const auto obs = obstruction(a, b, spec, s.site, p.eps, grid);
    const double gerr = global_map_error(a, b, spec);
    HardnessResult hard = hardness(a, b, {FamilySpec::orthogonal(), FamilySpec::scalar()}, p.eps);

    r.checks.push_back({"perfect-fit minimum variation = 4|cut|", minvar.closed_form == target &&
                                                                       std::abs(minvar.direct - target) <= 1e-12,
                        "closed form " + fmt(minvar.closed_form) + ", sheaf energy " + fmt(minvar.direct) +
                            ", target " + fmt(target)});
    const double rel = obs.value ? std::abs(*obs.value - target) / target : INFINITY;
    r.checks.push_back({"path obstruction within tolerance of 4|cut|", obs.value && rel <= p.tolerance,
                        obs.value ? "C = " + fmt(*obs.value) + " at lambda " + fmt(obs.path[*obs.index].lambda) +
                                        ", relative gap " + fmt(rel)
                                  : std::string("infeasible on grid")});
    r.checks.push_back({"constant map errs on one cluster", gerr > 0.0, "global error " + fmt(gerr)});
    if (obs.index) {
        const ParameterField& f = obs.path[*obs.index].field;
        const auto pc = check_poincare(f, s.site);
        const double lw = estimate_parameter_lipschitz(spec, a, b, field_radius(f)).value;
        const auto gb = check_global_bound(f, a, b, s.site, lw);
        r.checks.push_back({"Poincare bound", pc.holds, fmt(pc.lhs) + " <= " + fmt(pc.rhs)});
        r.checks.push_back({"global-error bound", gb.holds, fmt(gb.lhs) + " <= " + fmt(gb.rhs)});
    }

    CompatibilityProfile prof{"a", "b", p.eps, hard, obs};
    json rep;
    rep["stamp"] = {{"tool", "xmodal"}, {"version", kVersion}, {"seed", p.seed},
                    {"config_hash", "fnv1a64:" + fnv1a64(params.dump())}};
    rep["scenario"] = "signflip";
    rep["params"] = params;
    rep["profile"] = io::profile_to_json(prof);
    rep["signflip"] = {{"cut_size", minvar.cut_size}, {"min_variation_closed_form", minvar.closed_form},
                       {"min_variation_sheaf_energy", minvar.direct}, {"global_map_error", gerr},
                       {"whitening", "fit on all rows, ridge 0"}};
    rep["checks"] = checks_json(r.checks);
    rep["all_checks_pass"] = r.ok();
    r.report = rep;
    io::write_text(r.dir / "report.json", dump(rep));
    io::write_text(r.dir / "plots" / "a_to_b.svg", path_plot("a", "b", obs.path, p.eps));
    return r;
}

struct ReluParams {
    int w = 2;
    Index n = 300;
    double eps = 1e-6;
    std::uint64_t seed = 0;
    std::optional<double> alpha0;  // default w + 1
};

/// ReLU bridge: certified widths for a→c, c→b, a→b and the thresholded relation.
inline DemoResult demo_relu(const ReluParams& p, const fs::path& out_root) {
    DemoResult r;
    r.dir = out_root / ("demo_relu_w" + std::to_string(p.w));
    const double alpha0 = p.alpha0.value_or(p.w + 1.0);
    const json params{{"w", p.w}, {"n", p.n}, {"epsilon", p.eps}, {"alpha0", alpha0}};
    const SyntheticScenario s = gen_relu_bridge_scenario(p.w, p.n, p.seed);
    write_bundle(r.dir / "bundle", s, params);

    const Matrix& a = s.modality("a").data;
    const Matrix& c = s.modality("c").data;
    const Matrix& b = s.modality("b").data;
    const auto hac = hardness_certified_relu(a, c, p.eps);
    const auto hcb = hardness_certified_relu(c, b, p.eps);
    const auto hab = hardness_certified_relu(a, b, p.eps);
    const std::vector<CompatibilityProfile> profiles{{"a", "c", p.eps, hac, std::nullopt},
                                                     {"c", "b", p.eps, hcb, std::nullopt},
                                                     {"a", "b", p.eps, hab, std::nullopt}};
    const auto rel = compatibility_relation(profiles, alpha0);
    const int composed_bp = compose(*s.h, *s.g).breakpoint_count();

    r.checks.push_back({"composed breakpoints = (w+1)w", composed_bp == (p.w + 1) * p.w,
                        std::to_string(composed_bp) + " breakpoints"});
    r.checks.push_back({"stage a->c width <= w+1", hac.value && *hac.value <= p.w + 1,
                        "certified width " + fmt(hac.value.value_or(-1)) + ", lower bound " + fmt(*hac.lower_bound)});
    r.checks.push_back({"stage c->b width <= w+1", hcb.value && *hcb.value <= p.w + 1,
                        "certified width " + fmt(hcb.value.value_or(-1)) + ", lower bound " + fmt(*hcb.lower_bound)});
    r.checks.push_back({"direct a->b lower bound >= (w+1)w", *hab.lower_bound >= (p.w + 1.0) * p.w,
                        "lower bound " + fmt(*hab.lower_bound) + " (w=" + std::to_string(p.w) + ")"});
    r.checks.push_back({"relation contains a->c and c->b but not a->b",
                        rel.contains("a", "c") && rel.contains("c", "b") && !rel.contains("a", "b"),
                        "alpha0 = " + fmt(alpha0)});

    json rep;
    rep["stamp"] = {{"tool", "xmodal"}, {"version", kVersion}, {"seed", p.seed},
                    {"config_hash", "fnv1a64:" + fnv1a64(params.dump())}};
    rep["scenario"] = "relu";
    rep["params"] = params;
    json ps = json::array();
    for (const auto& pr : profiles) ps.push_back(io::profile_to_json(pr));
    rep["profiles"] = ps;
    rep["relation"] = io::relation_to_json(rel);
    rep["composed_breakpoints"] = composed_bp;
    rep["alpha_convention"] = "alpha is the hidden width of a one-hidden-layer ReLU net";
    rep["checks"] = checks_json(r.checks);
    rep["all_checks_pass"] = r.ok();
    r.report = rep;
    io::write_text(r.dir / "report.json", dump(rep));
    return r;
}

}  // namespace xmodal::pipeline
