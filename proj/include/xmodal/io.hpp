#pragma once

// File formats: matrix CSV, edge lists, and JSON encodings of sheaves, PWL
// functions, fitted maps, whiteners and compatibility profiles.

#include "xmodal/common.hpp"
#include "xmodal/embed.hpp"
#include "xmodal/families.hpp"
#include "xmodal/invariants.hpp"
#include "xmodal/pwl.hpp"
#include "xmodal/sheaf.hpp"
#include "xmodal/site.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace xmodal::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), codes::io, "cannot open '" + p.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    require(static_cast<bool>(out), codes::io, "cannot open '" + p.string() + "' for writing");
    out << text;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& v) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    v = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

/// n rows x d columns; an optional non-numeric first line is taken as header.
inline Matrix parse_csv(const std::string& text, const std::string& origin = "<csv>") {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        std::vector<double> row;
        bool numeric = true;
        for (const auto& c : cells) {
            double v = 0.0;
            if (!detail::parse_double(c, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            require(first, codes::io, origin + ":" + std::to_string(lineno) + ": non-numeric cell");
            first = false;
            continue;  // header
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(codes::io, origin + ":" + std::to_string(lineno) + ": expected " +
                                       std::to_string(rows.front().size()) + " columns, got " +
                                       std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), codes::io, origin + ": no data rows");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

inline Matrix read_csv(const std::filesystem::path& p) { return parse_csv(read_text(p), p.string()); }

/// Header `dim_0..dim_{d-1}`, values printed with round-trip precision.
inline std::string to_csv(const Matrix& m) {
    std::string s;
    for (Index j = 0; j < m.cols(); ++j) s += (j ? ",dim_" : "dim_") + std::to_string(j);
    s += '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) s += ',';
            s += format_double(m(i, j));
        }
        s += '\n';
    }
    return s;
}

inline void write_csv(const std::filesystem::path& p, const Matrix& m) { write_text(p, to_csv(m)); }

// ---------------------------------------------------------------------------
// Edge lists: `u v weight` per line, 0-based, `#` comments.

inline Graph parse_edges(const std::string& text, std::optional<Index> n_vertices = std::nullopt,
                         const std::string& origin = "<edges>") {
    std::istringstream in(text);
    std::string line;
    std::vector<Edge> edges;
    Index max_id = -1;
    std::optional<Index> declared = n_vertices;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            // "# n_vertices: N" records isolated trailing vertices
            const std::string comment = line.substr(hash + 1);
            const auto key = comment.find("n_vertices:");
            if (key != std::string::npos && !declared) declared = std::stoll(comment.substr(key + 11));
            line = line.substr(0, hash);
        }
        std::istringstream ls(line);
        std::string a, b, w;
        if (!(ls >> a)) continue;
        require(static_cast<bool>(ls >> b), codes::io, origin + ":" + std::to_string(lineno) + ": expected 'u v [weight]'");
        double u = 0, v = 0, wt = 1.0;
        require(detail::parse_double(a, u) && detail::parse_double(b, v), codes::io,
                origin + ":" + std::to_string(lineno) + ": vertex ids must be integers");
        if (ls >> w)
            require(detail::parse_double(w, wt), codes::io, origin + ":" + std::to_string(lineno) + ": bad weight");
        edges.push_back({static_cast<Index>(u), static_cast<Index>(v), wt});
        max_id = std::max({max_id, static_cast<Index>(u), static_cast<Index>(v)});
    }
    const Index n = declared ? *declared : max_id + 1;
    return Graph(n, std::move(edges));
}

inline Graph read_edges(const std::filesystem::path& p, std::optional<Index> n_vertices = std::nullopt) {
    return parse_edges(read_text(p), n_vertices, p.string());
}

inline std::string to_edges(const Graph& g) {
    std::string s = "# n_vertices: " + std::to_string(g.n_vertices()) + "\n# u v weight\n";
    for (const auto& e : g.edges())
        s += std::to_string(e.u) + " " + std::to_string(e.v) + " " + format_double(e.weight) + "\n";
    return s;
}

inline void write_edges(const std::filesystem::path& p, const Graph& g) { write_text(p, to_edges(g)); }

// ---------------------------------------------------------------------------
// JSON helpers

inline json matrix_rows(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Matrix matrix_from_rows(const json& j) {
    require(j.is_array() && !j.empty(), codes::io, "matrix must be a nonempty array of rows");
    const auto cols = j.front().size();
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].size() == cols, codes::io, "ragged matrix rows");
        for (std::size_t k = 0; k < cols; ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
    return m;
}

inline json vector_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vector vector_from_json(const json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

/// JSON numbers cannot be infinite; non-finite values become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Sheaf JSON: graph, stalk dims, restriction matrices as row-major lists.

inline json sheaf_to_json(const CellularSheaf& s) {
    json j;
    j["n_vertices"] = s.graph().n_vertices();
    json edges = json::array();
    for (const auto& e : s.graph().edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"weight", e.weight}});
    j["edges"] = edges;
    j["vertex_stalk_dims"] = s.vertex_dims();
    j["edge_stalk_dims"] = s.edge_dims();
    json r = json::array();
    for (Index i = 0; i < s.graph().n_edges(); ++i) {
        const auto& e = s.graph().edges()[static_cast<std::size_t>(i)];
        r.push_back({{"edge", i}, {"tail", matrix_rows(s.restriction(i, e.u))}, {"head", matrix_rows(s.restriction(i, e.v))}});
    }
    j["restrictions"] = r;
    return j;
}

inline CellularSheaf sheaf_from_json(const json& j) {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
        edges.push_back({e.at("u").get<Index>(), e.at("v").get<Index>(), e.value("weight", 1.0)});
    Graph g(j.at("n_vertices").get<Index>(), edges);
    std::vector<EdgeRestrictions> r(edges.size());
    for (const auto& x : j.at("restrictions")) {
        const auto i = x.at("edge").get<std::size_t>();
        require(i < edges.size(), codes::io, "restriction refers to unknown edge");
        const Matrix tail = matrix_from_rows(x.at("tail")), head = matrix_from_rows(x.at("head"));
        const auto& e = edges[i];
        r[i] = e.u < e.v ? EdgeRestrictions{e.u, tail, head} : EdgeRestrictions{e.v, head, tail};
    }
    return CellularSheaf(g, j.at("vertex_stalk_dims").get<std::vector<int>>(),
                         j.at("edge_stalk_dims").get<std::vector<int>>(), r);
}

// ---------------------------------------------------------------------------
// PWL JSON: {domain, breakpoints[], left_value, slopes[]}

inline json pwl_to_json(const PwlFunction& f) {
    return {{"domain", {f.lo(), f.hi()}}, {"breakpoints", f.breakpoints()}, {"left_value", f.left_value()},
            {"slopes", f.slopes()}};
}

inline PwlFunction pwl_from_json(const json& j) {
    const auto d = j.at("domain").get<std::vector<double>>();
    require(d.size() == 2, codes::io, "pwl domain must be [lo, hi]");
    return PwlFunction(d[0], d[1], j.at("breakpoints").get<std::vector<double>>(), j.at("left_value").get<double>(),
                       j.at("slopes").get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// Maps and family specs: {spec, d_in, d_out, theta[]}

inline json spec_to_json(const FamilySpec& s) {
    json j{{"class", to_string(s.cls)}};
    if (s.cls == FamilyClass::lowrank) {
        j["rank"] = s.rank;
        j["lipschitz"] = s.lipschitz;
    }
    if (s.cls == FamilyClass::mlp) {
        j["width"] = s.width;
        j["depth"] = s.depth;
        j["lipschitz"] = s.lipschitz;
    }
    if (s.alpha_override) j["alpha"] = *s.alpha_override;
    return j;
}

inline FamilySpec spec_from_json(const json& j) {
    FamilySpec s;
    s.cls = family_class_from_string(j.at("class").get<std::string>());
    s.rank = j.value("rank", 1);
    s.width = j.value("width", 1);
    s.depth = j.value("depth", 1);
    s.lipschitz = j.value("lipschitz", 10.0);
    if (j.contains("alpha")) s.alpha_override = j.at("alpha").get<double>();
    return s;
}

inline json map_to_json(const ProjectionMap& g) {
    return {{"spec", spec_to_json(g.spec())}, {"d_in", g.d_in()}, {"d_out", g.d_out()}, {"theta", vector_json(g.theta())}};
}

inline ProjectionMap map_from_json(const json& j) {
    return ProjectionMap(spec_from_json(j.at("spec")), j.at("d_in").get<Index>(), j.at("d_out").get<Index>(),
                         vector_from_json(j.at("theta")));
}

inline json whitener_to_json(const Whitener& w) {
    return {{"mean", vector_json(w.mean)}, {"transform", matrix_rows(w.transform)}, {"ridge", w.ridge}};
}

inline Whitener whitener_from_json(const json& j) {
    return {vector_from_json(j.at("mean")), matrix_from_rows(j.at("transform")), j.at("ridge").get<double>()};
}

inline json spectral_to_json(const SpectralSummary& s) {
    return {{"lambda2", s.lambda2}, {"n_components", s.n_components}, {"connected", s.n_components == 1},
            {"component_labels", s.component_labels}};
}

// ---------------------------------------------------------------------------
// Profile JSON:
// {pair, epsilon,
//  hardness: {value|status, certified, per_level: [{alpha, err}]},
//  obstruction: {value|status, path: [{lambda, err_local, variation}]}}

inline json hardness_to_json(const HardnessResult& h) {
    json j;
    j["status"] = h.status();
    j["value"] = h.value ? json(*h.value) : json(nullptr);
    j["certified"] = h.certified;
    if (h.lower_bound) j["lower_bound"] = *h.lower_bound;
    j["best_err"] = number_or_null(h.best_err);
    json levels = json::array();
    for (const auto& l : h.per_level)
        levels.push_back({{"alpha", l.alpha}, {"label", l.label}, {"err", number_or_null(l.err)},
                          {"status", to_string(l.status)}, {"converged", l.converged}});
    j["per_level"] = levels;
    return j;
}

inline json obstruction_to_json(const std::optional<ObstructionResult>& o) {
    json j;
    if (!o) {
        j["status"] = "not-evaluated";
        j["value"] = nullptr;
        j["path"] = json::array();
        return j;
    }
    j["status"] = o->status();
    j["value"] = o->value ? json(*o->value) : json(nullptr);
    if (o->index) j["lambda"] = o->path[*o->index].lambda;
    json path = json::array();
    for (const auto& r : o->path)
        path.push_back({{"lambda", r.lambda}, {"err_local", r.err_local}, {"variation", r.variation},
                        {"converged", r.converged}});
    j["path"] = path;
    return j;
}

inline json profile_to_json(const CompatibilityProfile& p) {
    json j;
    j["pair"] = {p.source, p.target};
    j["epsilon"] = p.epsilon;
    j["error_convention"] = "mean over vertices";
    j["hardness"] = hardness_to_json(p.hardness);
    j["obstruction"] = obstruction_to_json(p.obstruction);
    return j;
}

inline json relation_to_json(const CompatibilityRelation& r) {
    json j;
    j["alpha0"] = r.alpha0;
    j["tau0"] = r.tau0 ? json(*r.tau0) : json(nullptr);
    json e = json::array();
    for (const auto& [a, b] : r.edges) e.push_back({a, b});
    j["edges"] = e;
    json v = json::array();
    for (const auto& [a, c, b] : transitivity_violations(r)) v.push_back({a, c, b});
    j["transitivity_violations"] = v;
    return j;
}

}  // namespace xmodal::io
