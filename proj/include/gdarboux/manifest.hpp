#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "darboux.hpp"
#include "parse.hpp"
#include "print.hpp"
#include "straighten.hpp"

namespace gdarboux {

using json = nlohmann::ordered_json;

/// Schema or name-resolution problem in a manifest (exit code 2).
class ManifestError : public Error {
public:
    explicit ManifestError(const std::string& what) : Error("manifest: " + what) {}
};

struct Task {
    std::string name;
    std::string cmd;
    json args;
};

struct Manifest {
    std::map<std::string, ChartPtr> charts;
    std::map<std::string, VectorField> fields;
    std::map<std::string, Expr> forms;
    std::map<std::string, ChartMap> maps;
    std::vector<Task> tasks;
    std::optional<std::uint64_t> seed;

    std::optional<std::string> chart_name(const ChartPtr& c) const {
        for (const auto& [n, p] : charts)
            if (p == c) return n;
        return std::nullopt;
    }
};

inline const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> cmds = {
        "check-chart", "degree",       "lift",      "classify", "presymplectic",  "reeb",       "liouville", "poincare",
        "log-primitive", "pde-solve", "linear-darboux", "darboux", "straighten", "verify-darboux", "dist"};
    return cmds;
}

namespace detail {

inline std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const json& member(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw ManifestError(where + ": missing key '" + key + "'");
    return obj.at(key);
}

inline std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ManifestError(where + ": expected a string");
    return v.get<std::string>();
}

inline Parity parse_parity(const json& v, const std::string& where) {
    if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return Parity(v.get<int>());
    if (v.is_string() && v.get<std::string>() == "even") return Parity::even();
    if (v.is_string() && v.get<std::string>() == "odd") return Parity::odd();
    throw ManifestError(where + ": parity must be \"even\", \"odd\", 0 or 1");
}

inline Weight parse_weight(const json& v, const std::string& where) {
    try {
        if (v.is_number_integer()) return Weight(v.get<long>());
        if (v.is_string()) return parse_rational(v.get<std::string>());
    } catch (const Error&) {
    }
    throw ManifestError(where + ": weight must be an integer or a rational string");
}

inline Expr parse_in(const std::string& text, const ChartPtr& chart, const std::string& where) {
    try {
        return parse_expr(text, chart);
    } catch (const Error& e) {
        throw ManifestError(where + ": " + e.what());
    }
}

inline ChartPtr parse_chart(const json& j, const std::string& where) {
    const json& coords = member(j, "coordinates", where);
    if (!coords.is_array() || coords.empty()) throw ManifestError(where + ": coordinates must be a non-empty array");
    std::vector<CoordinateDecl> decls;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        std::string w = where + ".coordinates[" + std::to_string(i) + "]";
        const json& c = coords[i];
        decls.push_back({as_string(member(c, "name", w), w + ".name"), parse_parity(c.value("parity", json("even")), w),
                         parse_weight(c.value("weight", json(0)), w)});
    }
    std::vector<Interval> box(decls.size());
    if (j.contains("box")) {
        const json& b = j.at("box");
        auto read = [&](const json& v, const std::string& w) {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() || !(v[0].get<double>() < v[1].get<double>()))
                throw ManifestError(w + ": box entries are [lo, hi] with lo < hi");
            return Interval{v[0].get<double>(), v[1].get<double>()};
        };
        if (b.is_object()) {
            for (const auto& [k, v] : b.items()) {
                auto it = std::find_if(decls.begin(), decls.end(), [&](const CoordinateDecl& d) { return d.name == k; });
                if (it == decls.end()) throw ManifestError(where + ".box: unknown coordinate '" + k + "'");
                box[static_cast<std::size_t>(it - decls.begin())] = read(v, where + ".box." + k);
            }
        } else if (b.is_array() && b.size() == decls.size()) {
            for (std::size_t i = 0; i < b.size(); ++i) box[i] = read(b[i], where + ".box");
        } else {
            throw ManifestError(where + ".box: expected an object or one interval per coordinate");
        }
    }
    try {
        return make_chart(std::move(decls), std::move(box));
    } catch (const Error& e) {
        throw ManifestError(where + ": " + e.what());
    }
}

/// Components keyed by the coordinates of `keys`, given either as
/// {coordinate: expr} (missing ones are zero) or as a list; parsed on `chart`.
inline std::vector<Expr> parse_components(const json& j, const ChartPtr& keys, const ChartPtr& chart, const std::string& where) {
    std::vector<Expr> out(keys->dim(), Expr(chart));
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            auto i = keys->find(k);
            if (!i) throw ManifestError(where + ": unknown coordinate '" + k + "'");
            out[*i] = parse_in(as_string(v, where + "." + k), chart, where + "." + k);
        }
    } else if (j.is_array() && j.size() == keys->dim()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            out[i] = parse_in(as_string(j[i], where), chart, where + "[" + std::to_string(i) + "]");
    } else {
        throw ManifestError(where + ": expected an object or one entry per coordinate");
    }
    return out;
}

} // namespace detail

inline Manifest parse_manifest(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError("JSON syntax error at " + detail::line_column(text, e.byte) + ": " + e.what());
    }
    if (!j.is_object()) throw ManifestError("top level must be an object");
    for (const auto& [k, v] : j.items())
        if (k != "charts" && k != "fields" && k != "forms" && k != "maps" && k != "tasks" && k != "seed" && k != "description")
            throw ManifestError("unknown top-level key '" + k + "'");

    Manifest m;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ManifestError("seed must be a non-negative integer");
        m.seed = j["seed"].get<std::uint64_t>();
    }
    auto chart_of = [&](const json& v, const std::string& where) {
        std::string n = detail::as_string(v, where);
        auto it = m.charts.find(n);
        if (it == m.charts.end()) throw ManifestError(where + ": unknown chart '" + n + "'");
        return it->second;
    };
    const json charts_j = j.value("charts", json::object()), fields_j = j.value("fields", json::object());
    const json forms_j = j.value("forms", json::object()), maps_j = j.value("maps", json::object());
    for (const auto& [n, c] : charts_j.items()) m.charts[n] = detail::parse_chart(c, "charts." + n);
    for (const auto& [n, f] : fields_j.items()) {
        std::string w = "fields." + n;
        ChartPtr c = chart_of(detail::member(f, "chart", w), w + ".chart");
        Parity p = detail::parse_parity(f.value("parity", json("even")), w);
        auto comps = detail::parse_components(detail::member(f, "components", w), c, c, w + ".components");
        try {
            m.fields.emplace(n, VectorField(c, p, std::move(comps)));
        } catch (const Error& e) {
            throw ManifestError(w + ": " + e.what());
        }
    }
    for (const auto& [n, f] : forms_j.items()) {
        std::string w = "forms." + n;
        ChartPtr c = chart_of(detail::member(f, "chart", w), w + ".chart");
        m.forms.emplace(n, detail::parse_in(detail::as_string(detail::member(f, "expr", w), w + ".expr"), c, w + ".expr"));
    }
    for (const auto& [n, f] : maps_j.items()) {
        std::string w = "maps." + n;
        ChartPtr src = chart_of(detail::member(f, "source", w), w + ".source");
        ChartPtr tgt = chart_of(detail::member(f, "target", w), w + ".target");
        auto imgs = detail::parse_components(detail::member(f, "images", w), tgt, src, w + ".images");
        std::optional<std::vector<Expr>> inv;
        if (f.contains("inverse")) inv = detail::parse_components(f["inverse"], src, tgt, w + ".inverse");
        try {
            m.maps.emplace(n, ChartMap(src, tgt, std::move(imgs), std::move(inv)));
        } catch (const Error& e) {
            throw ManifestError(w + ": " + e.what());
        }
    }
    const json tasks = j.value("tasks", json::array());
    if (!tasks.is_array()) throw ManifestError("tasks must be an array");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        std::string w = "tasks[" + std::to_string(i) + "]";
        const json& t = tasks[i];
        std::string cmd = detail::as_string(detail::member(t, "cmd", w), w + ".cmd");
        const auto& cmds = known_commands();
        if (std::find(cmds.begin(), cmds.end(), cmd) == cmds.end()) throw ManifestError(w + ": unknown command '" + cmd + "'");
        json args = t.value("args", json::object());
        if (!args.is_object()) throw ManifestError(w + ".args must be an object");
        std::string name = t.contains("name") ? detail::as_string(t["name"], w + ".name") : cmd + "#" + std::to_string(i);
        m.tasks.push_back({name, cmd, std::move(args)});
    }
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

// ------------------------------------------------------------------ runner

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<double> tol;
};

struct RunOutcome {
    json reports = json::array();
    std::vector<std::string> lines;  // one human-readable line per task
    int exit_code = 0;
};

namespace detail {

class TaskContext {
public:
    TaskContext(const Manifest& m, const Task& t, const RunOptions& o) : m_(m), t_(t) {
        seed = o.seed ? *o.seed : m.seed.value_or(0);
        eq.seed = seed;
        cl.seed = seed;
        sp.seed = seed;
        if (o.samples) {
            eq.samples = *o.samples;
            cl.samples = *o.samples;
            sp.samples = *o.samples;
        }
        if (o.tol) eq.tol = cl.tol = sp.tol = *o.tol;
    }

    std::uint64_t seed;
    EqualityPolicy eq;
    ClassifyPolicy cl;
    SpanPolicy sp;

    std::string where(const std::string& key) const { return "task '" + t_.name + "' argument '" + key + "'"; }
    bool has(const std::string& key) const { return t_.args.contains(key); }
    const json& arg(const std::string& key) const {
        if (!has(key)) throw ManifestError("task '" + t_.name + "' needs argument '" + key + "'");
        return t_.args.at(key);
    }
    std::string str(const std::string& key) const { return as_string(arg(key), where(key)); }

    const Expr& form(const std::string& key) const {
        std::string n = str(key);
        auto it = m_.forms.find(n);
        if (it == m_.forms.end()) throw ManifestError(where(key) + ": unknown form '" + n + "'");
        return it->second;
    }
    bool names_form(const std::string& key) const { return m_.forms.count(str(key)) > 0; }
    const VectorField& field_named(const std::string& n, const std::string& key) const {
        auto it = m_.fields.find(n);
        if (it == m_.fields.end()) throw ManifestError(where(key) + ": unknown field '" + n + "'");
        return it->second;
    }
    const VectorField& field(const std::string& key) const { return field_named(str(key), key); }
    std::vector<VectorField> field_list(const std::string& key) const {
        const json& v = arg(key);
        if (!v.is_array() || v.empty()) throw ManifestError(where(key) + ": expected a non-empty list of fields");
        std::vector<VectorField> out;
        for (const auto& n : v) out.push_back(field_named(as_string(n, where(key)), key));
        return out;
    }
    const ChartMap& map(const std::string& key) const {
        std::string n = str(key);
        auto it = m_.maps.find(n);
        if (it == m_.maps.end()) throw ManifestError(where(key) + ": unknown map '" + n + "'");
        return it->second;
    }
    const ChartPtr& chart(const std::string& key) const {
        std::string n = str(key);
        auto it = m_.charts.find(n);
        if (it == m_.charts.end()) throw ManifestError(where(key) + ": unknown chart '" + n + "'");
        return it->second;
    }
    /// Named weight field, or the one of the declared chart weights.
    WeightVectorField nabla(const ChartPtr& chart) const {
        if (!has("nabla")) return weight_field_of_chart(chart);
        const VectorField& v = field("nabla");
        if (!same_chart(v.chart(), chart)) throw ManifestError(where("nabla") + ": field lives on another chart");
        if (v.parity().is_odd()) throw ManifestError(where("nabla") + ": a weight field must be even");
        return as_weight_field(v);
    }
    std::size_t coordinate(const ChartPtr& c, const json& v, const std::string& key) const {
        std::string n = as_string(v, where(key));
        auto i = c->find(n);
        if (!i) throw ManifestError(where(key) + ": unknown coordinate '" + n + "'");
        return *i;
    }

    json chart_ref(const ChartPtr& c) const {
        if (auto n = m_.chart_name(c)) return *n;
        json coords = json::array();
        for (const auto& d : c->coords()) {
            json e;
            e["name"] = d.name;
            e["parity"] = d.parity.str();
            e["weight"] = d.weight.get_str();
            coords.push_back(std::move(e));
        }
        json out;
        out["coordinates"] = std::move(coords);
        return out;
    }

private:
    const Manifest& m_;
    const Task& t_;
};

inline json field_exprs(const VectorField& X) {
    json o = json::object();
    for (std::size_t i = 0; i < X.chart()->dim(); ++i) o[X.chart()->name(i)] = to_string(X[i]);
    return o;
}

inline json map_exprs(const ChartMap& m) {
    json o = json::object();
    for (std::size_t i = 0; i < m.target->dim(); ++i) o[m.target->name(i)] = to_string(m.images[i]);
    return o;
}

inline std::string degree_string(const DegreeReport& d) { return d.homogeneous ? d.degree->str() : "inhomogeneous"; }

inline std::string normalize_degree(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    return s;
}

inline bool expect_degree(const TaskContext& ctx, const DegreeReport& d) {
    if (!ctx.has("expect")) return true;
    return d.homogeneous && normalize_degree(d.degree->str()) == normalize_degree(ctx.str("expect"));
}

inline void put_witness(json& r, const std::optional<std::vector<double>>& w) {
    if (w) r["witness"] = *w;
}

struct Outcome {
    bool pass = false;
    std::string summary;
};

inline NormalFormSpec spec_from_args(const TaskContext& ctx, const ChartPtr& target, Variant variant) {
    NormalFormSpec s;
    s.variant = variant;
    const json& pairs = ctx.arg("pairs");
    if (!pairs.is_array()) throw ManifestError(ctx.where("pairs") + ": expected a list of [q, p] pairs");
    for (const auto& pr : pairs) {
        if (!pr.is_array() || pr.size() != 2) throw ManifestError(ctx.where("pairs") + ": expected [q, p]");
        s.q.push_back(ctx.coordinate(target, pr[0], "pairs"));
        s.p.push_back(ctx.coordinate(target, pr[1], "pairs"));
    }
    if (ctx.has("eps")) {
        for (const auto& e : ctx.arg("eps")) {
            if (!e.is_array() || e.size() != 2 || !e[1].is_number_integer())
                throw ManifestError(ctx.where("eps") + ": expected [y, +1 or -1]");
            s.y.push_back(ctx.coordinate(target, e[0], "eps"));
            s.eps.push_back(e[1].get<int>());
        }
    }
    if (ctx.has("z")) s.z = ctx.coordinate(target, ctx.arg("z"), "z");
    s.r = static_cast<int>(s.q.size());
    s.s = static_cast<int>(s.y.size());
    s.k = static_cast<int>(target->dim()) - 2 * s.r - s.s - (s.z ? 1 : 0);
    try {
        check_spec(s, *target);
    } catch (const Error& e) {
        throw ManifestError(ctx.where("pairs") + ": " + e.what());
    }
    return s;
}

inline Variant parse_variant(const TaskContext& ctx) {
    std::string v = ctx.str("variant");
    for (Variant c : {Variant::contact, Variant::contact_log, Variant::potential, Variant::presymplectic})
        if (v == variant_name(c)) return c;
    throw ManifestError(ctx.where("variant") + ": unknown variant '" + v + "'");
}

inline json spec_json(const NormalFormSpec& s, const Chart& t) {
    json o;
    o["variant"] = variant_name(s.variant);
    o["r"] = s.r;
    o["s"] = s.s;
    o["k"] = s.k;
    json pairs = json::array();
    for (int i = 0; i < s.r; ++i) pairs.push_back({t.name(s.q[i]), t.name(s.p[i])});
    o["pairs"] = pairs;
    json eps = json::array();
    for (int l = 0; l < s.s; ++l) eps.push_back({t.name(s.y[l]), s.eps[l]});
    o["eps"] = eps;
    if (s.z) o["z"] = t.name(*s.z);
    return o;
}

inline std::string problems_text(const std::vector<std::string>& p) {
    std::string out;
    for (const auto& s : p) out += (out.empty() ? "" : "; ") + s;
    return out;
}

using Command = std::function<Outcome(const TaskContext&, json&)>;

inline const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table = {
        {"check-chart",
         [](const TaskContext& ctx, json& r) {
             const ChartPtr& c = ctx.chart("chart");
             auto [ev, od] = c->weight_set();
             json ws;
             ws["even"] = json::array();
             ws["odd"] = json::array();
             for (const auto& w : ev) ws["even"].push_back(w.get_str());
             for (const auto& w : od) ws["odd"].push_back(w.get_str());
             r["weights"] = ws;
             if (!ctx.has("nabla")) return Outcome{true, "dimension (" + std::to_string(c->even_dim()) + "|" + std::to_string(c->odd_dim()) + ")"};
             WeightVectorField n = ctx.nabla(c);
             Linearization lin = linearization_at_zero(n.field, std::vector<double>(c->dim(), 0.0));
             r["verdict"] = verdict_name(lin.verdict);
             bool adapted = n.canonical;
             if (!adapted) {
                 EqualityReport e = equal(n.field, weight_field_of_chart(c).field, ctx.eq);
                 r["mode"] = mode_name(e.mode);
                 r["residual"] = e.max_error;
                 put_witness(r, e.witness);
                 adapted = e.equal;
             }
             r["adapted"] = adapted;
             bool ok = adapted;
             if (ctx.has("expect")) {
                 const json& e = ctx.arg("expect");
                 ok = (!e.contains("adapted") || e["adapted"] == adapted) && (!e.contains("verdict") || e["verdict"] == verdict_name(lin.verdict));
             }
             return Outcome{ok, std::string(adapted ? "weight field matches the declared weights" : "declared weights do not match the field") +
                                    ", linearization " + verdict_name(lin.verdict)};
         }},
        {"degree",
         [](const TaskContext& ctx, json& r) {
             std::string n = ctx.str("of");
             DegreeReport d;
             if (ctx.names_form("of")) {
                 const Expr& e = ctx.form("of");
                 d = degree_of(e, ctx.nabla(e.chart()), ctx.eq);
             } else {
                 const VectorField& X = ctx.field("of");
                 d = degree_of(X, ctx.nabla(X.chart()), ctx.eq);
             }
             r["mode"] = mode_name(d.evidence.mode);
             r["degree"] = degree_string(d);
             r["residual"] = d.evidence.max_error;
             put_witness(r, d.evidence.witness);
             bool ok = d.homogeneous && expect_degree(ctx, d);
             return Outcome{ok, n + " has degree " + degree_string(d)};
         }},
        {"lift",
         [](const TaskContext& ctx, json& r) {
             std::string kind = ctx.str("kind");
             if (kind != "tangent" && kind != "cotangent") throw ManifestError(ctx.where("kind") + ": tangent or cotangent");
             ChartPtr c = ctx.has("nabla") ? ctx.field("nabla").chart() : ctx.chart("chart");
             WeightVectorField n = ctx.nabla(c);
             Lift l = kind == "tangent" ? tangent_lift(n) : cotangent_lift(n);
             r["chart"] = ctx.chart_ref(l.chart);
             json out = json::object();
             json comps = field_exprs(l.field.field);
             for (const auto& [k, v] : comps.items()) out["nabla." + k] = v;
             if (kind == "cotangent") {
                 Expr a = canonical_one_form(l);
                 out["canonical_form"] = to_string(a);
                 DegreeReport d = degree_of(a, l.field);
                 r["degree"] = degree_string(d);
             }
             r["output_exprs"] = out;
             return Outcome{true, kind + " lift on " + std::to_string(l.chart->dim()) + " coordinates"};
         }},
        {"classify",
         [](const TaskContext& ctx, json& r) {
             const Expr& a = ctx.form("of");
             ClassificationReport c = characteristic_class(a, ctx.cl);
             r["mode"] = c.mode;
             r["class"] = c.cls;
             r["kind"] = kind_name(c.kind);
             DegreeReport d = degree_of(a, ctx.nabla(a.chart()), ctx.eq);
             r["degree"] = degree_string(d);
             put_witness(r, c.witness);
             bool ok = c.kind != PfaffKind::irregular;
             if (ctx.has("expect")) {
                 const json& e = ctx.arg("expect");
                 if (e.contains("class")) ok = ok && e["class"] == c.cls;
                 if (e.contains("kind")) ok = (e["kind"] == kind_name(c.kind)) && (ok || c.kind == PfaffKind::irregular);
                 if (e.contains("degree")) ok = ok && d.homogeneous && normalize_degree(d.degree->str()) == normalize_degree(e["degree"].get<std::string>());
             }
             return Outcome{ok, std::string(kind_name(c.kind)) + ", class " + std::to_string(c.cls) + ", degree " + degree_string(d)};
         }},
        {"presymplectic",
         [](const TaskContext& ctx, json& r) {
             const Expr& w = ctx.form("of");
             PresymplecticReport p = presymplectic_check(w, ctx.cl);
             r["mode"] = p.mode;
             r["rank"] = p.rank;
             if (p.split) {
                 r["even_rank"] = p.even_rank;
                 r["odd_rank"] = p.odd_rank;
             }
             put_witness(r, p.witness);
             if (!p.closed) r["output_exprs"] = json{{"d_omega", to_string(p.residual)}};
             bool ok = p.presymplectic();
             if (ctx.has("expect") && ctx.arg("expect").contains("rank")) ok = ok && ctx.arg("expect")["rank"] == p.rank;
             std::string s = !p.closed ? "not closed" : !p.constant ? "rank is not constant" : "presymplectic of rank " + std::to_string(p.rank);
             return Outcome{ok, s};
         }},
        {"reeb",
         [](const TaskContext& ctx, json& r) {
             const Expr& a = ctx.form("of");
             ReebField R = reeb(a, ctx.eq);
             r["mode"] = mode_name(R.normalization.mode);
             r["residual"] = std::max(R.normalization.max_error, R.kernel.max_error);
             r["chart"] = ctx.chart_ref(a.chart());
             r["output_exprs"] = field_exprs(R.field);
             DegreeReport d = degree_of(R.field, ctx.nabla(a.chart()), ctx.eq);
             r["degree"] = degree_string(d);
             return Outcome{R.verified(), "Reeb field " + to_string(R.field)};
         }},
        {"liouville",
         [](const TaskContext& ctx, json& r) {
             const Expr& a = ctx.form("of");
             Expr w = ctx.has("omega") ? ctx.form("omega") : exterior_d(a);
             VectorField L = liouville(w, a, ctx.eq);
             r["chart"] = ctx.chart_ref(a.chart());
             r["output_exprs"] = field_exprs(L);
             EqualityReport chk = equal(interior(L, w), a, ctx.eq);
             bool ok = chk.equal;
             r["mode"] = mode_name(chk.mode);
             r["residual"] = chk.max_error;
             if (ctx.has("nabla")) {
                 EqualityReport c = commutes_with(L, ctx.nabla(a.chart()), ctx.eq);
                 r["commutes"] = c.equal;
                 if (c.mode == EqualityMode::randomized) r["mode"] = mode_name(c.mode);
                 put_witness(r, c.witness);
                 ok = ok && c.equal;
             }
             return Outcome{ok, "Liouville field " + to_string(L)};
         }},
        {"poincare",
         [](const TaskContext& ctx, json& r) {
             const Expr& w = ctx.form("of");
             PrimitiveResult p = poincare_primitive(w, ctx.nabla(w.chart()), ctx.eq);
             r["mode"] = "exact";
             r["chart"] = ctx.chart_ref(w.chart());
             r["output_exprs"] = json{{"primitive", to_string(p.alpha)}};
             if (p.primitive_degree) r["degree"] = p.primitive_degree->str();
             bool ok = identical(exterior_d(p.alpha), w) && (!p.form_degree || p.primitive_degree == p.form_degree);
             return Outcome{ok, "primitive " + to_string(p.alpha)};
         }},
        {"log-primitive",
         [](const TaskContext& ctx, json& r) {
             const Expr& w = ctx.form("of");
             LogPrimitive l = log_primitive(w, ctx.nabla(w.chart()), ctx.eq);
             r["mode"] = l.c.is_float() || !l.g.is_exact_laurent() ? "randomized" : "exact";
             r["chart"] = ctx.chart_ref(w.chart());
             r["output_exprs"] = json{{"c", l.c.str()}, {"g", to_string(l.g)}};
             return Outcome{true, "c = " + l.c.str() + ", g = " + to_string(l.g)};
         }},
        {"pde-solve",
         [](const TaskContext& ctx, json& r) {
             const Expr& g = ctx.form("rhs");
             std::size_t k = ctx.coordinate(g.chart(), ctx.arg("coord"), "coord");
             PdeSolution s = homog_solve_pde(g, k, ctx.eq);
             r["mode"] = mode_name(s.check.mode);
             r["residual"] = s.check.max_error;
             r["chart"] = ctx.chart_ref(g.chart());
             r["output_exprs"] = json{{"f", to_string(s.f)}};
             if (s.degree) r["degree"] = s.degree->str();
             if (!s.warning.empty()) r["detail"] = s.warning;
             return Outcome{s.check.equal, "f = " + to_string(s.f)};
         }},
        {"linear-darboux",
         [](const TaskContext& ctx, json& r) {
             const Expr& w = ctx.form("of");
             LinearDarboux l = linear_darboux(w);
             r["mode"] = "numeric";
             r["residual"] = l.residual;
             r["chart"] = ctx.chart_ref(w.chart());
             r["target"] = ctx.chart_ref(l.map.target);
             r["normal_form"] = spec_json(l.spec, *l.map.target);
             r["output_exprs"] = map_exprs(l.map);
             return Outcome{l.residual < 1e-12, "r = " + std::to_string(l.spec.r) + ", s = " + std::to_string(l.spec.s)};
         }},
        {"darboux",
         [](const TaskContext& ctx, json& r) {
             const Expr& a = ctx.form("of");
             const ChartMap& m = ctx.map("map");
             NormalFormSpec base = spec_from_args(ctx, m.target, Variant::presymplectic);
             PresympChart pc{m, {}, {}};
             for (int i = 0; i < base.r; ++i) pc.pairs.push_back({base.q[i], base.p[i]});
             for (int l = 0; l < base.s; ++l) pc.eps.push_back({base.y[l], base.eps[l]});
             DarbouxResult d = one_form_darboux(a, pc, ctx.nabla(a.chart()), ctx.eq);
             r["darboux_status"] = status_name(d.status);
             r["mode"] = d.verification ? mode_name(d.verification->equality.mode) : "exact";
             if (d.map) {
                 r["chart"] = ctx.chart_ref(a.chart());
                 r["target"] = ctx.chart_ref(d.map->target);
                 r["normal_form"] = spec_json(d.spec, *d.map->target);
                 r["output_exprs"] = map_exprs(*d.map);
             }
             if (d.verification) {
                 r["residual"] = d.verification->equality.max_error;
                 put_witness(r, d.verification->equality.witness);
                 if (!d.verification->problems.empty()) r["detail"] = problems_text(d.verification->problems);
             }
             if (!d.detail.empty()) r["detail"] = d.detail;
             bool ok = d.status == DarbouxStatus::constructed && d.verification && d.verification->pass;
             if (ctx.has("expect")) ok = ctx.str("expect") == status_name(d.status) && (d.status != DarbouxStatus::constructed || ok);
             return Outcome{ok, std::string(status_name(d.status))};
         }},
        {"straighten",
         [](const TaskContext& ctx, json& r) {
             std::vector<VectorField> fs = ctx.field_list("fields");
             const ChartPtr& c = fs.front().chart();
             std::vector<double> base(c->dim(), 0.0);
             if (ctx.has("base")) {
                 const json& b = ctx.arg("base");
                 if (b.is_number()) base.assign(c->dim(), b.get<double>());
                 else if (b.is_array() && b.size() == c->dim()) base = b.get<std::vector<double>>();
                 else throw ManifestError(ctx.where("base") + ": a number or one value per coordinate");
             }
             StraightenParams p;
             if (ctx.has("extent")) p.extent = ctx.arg("extent").get<double>();
             if (ctx.has("nodes")) p.nodes = ctx.arg("nodes").get<int>();
             if (ctx.has("step")) p.step = ctx.arg("step").get<double>();
             StraighteningGrid g = straighten_commuting(fs, base, p, ctx.eq);
             r["mode"] = "numeric";
             r["residual"] = g.max_error;
             r["csv"] = g.csv();
             std::ostringstream s;
             s << g.points.size() << " nodes, certified error " << g.max_error;
             return Outcome{g.certified(), s.str()};
         }},
        {"verify-darboux",
         [](const TaskContext& ctx, json& r) {
             const Expr& a = ctx.form("of");
             const ChartMap& m = ctx.map("map");
             NormalFormSpec s = spec_from_args(ctx, m.target, parse_variant(ctx));
             VerifyReport v = verify_normal_form(a, m, s, ctx.nabla(a.chart()), ctx.eq);
             r["mode"] = mode_name(v.equality.mode);
             r["residual"] = v.equality.max_error;
             if (v.form_degree) r["degree"] = v.form_degree->str();
             put_witness(r, v.equality.witness);
             r["normal_form"] = spec_json(s, *m.target);
             if (!v.problems.empty()) r["detail"] = problems_text(v.problems);
             return Outcome{v.pass, v.pass ? "normal form verified" : problems_text(v.problems)};
         }},
        {"dist",
         [](const TaskContext& ctx, json& r) {
             std::string kind = ctx.str("kind");
             if (kind != "homogeneous" && kind != "involutive")
                 throw ManifestError(ctx.where("kind") + ": homogeneous or involutive");
             std::vector<VectorField> fs = ctx.field_list("fields");
             const ChartPtr& c = fs.front().chart();
             std::optional<std::size_t> rank;
             if (ctx.has("rank")) rank = ctx.arg("rank").get<std::size_t>();
             Distribution D(c, fs, rank);
             SpanReport s = kind == "homogeneous" ? distribution_homogeneous(D, ctx.nabla(c), ctx.sp) : involutive_check(D, ctx.sp);
             r["mode"] = s.mode;
             r["residual"] = s.max_residual;
             put_witness(r, s.witness);
             if (!s.detail.empty()) r["detail"] = s.detail;
             return Outcome{s.result, kind + (s.result ? ": yes" : ": no")};
         }},
    };
    return table;
}

} // namespace detail

/// Runs one task. Library errors become failed reports; manifest problems
/// (unknown names, malformed arguments) propagate as ManifestError.
inline json run_task(const Manifest& m, const Task& t, const RunOptions& opt, std::string* line = nullptr) {
    detail::TaskContext ctx(m, t, opt);
    json r;
    r["task"] = t.name;
    r["status"] = "fail";
    detail::Outcome o;
    try {
        o = detail::commands().at(t.cmd)(ctx, r);
    } catch (const ManifestError&) {
        throw;
    } catch (const json::exception& e) {
        throw ManifestError("task '" + t.name + "': " + e.what());
    } catch (const Error& e) {
        o = {false, e.what()};
        r["detail"] = e.what();
    }
    r["status"] = o.pass ? "pass" : "fail";
    r["seed"] = ctx.seed;
    if (!r.contains("mode")) r["mode"] = "exact";
    if (o.summary.size() > 160) o.summary = o.summary.substr(0, 157) + "...";
    if (line) *line = std::string(o.pass ? "pass" : "FAIL") + "  " + t.name + "  " + o.summary;
    return r;
}

inline RunOutcome run_manifest(const Manifest& m, const RunOptions& opt = {}) {
    RunOutcome out;
    for (const Task& t : m.tasks) {
        std::string line;
        json r = run_task(m, t, opt, &line);
        if (r["status"] != "pass") out.exit_code = 1;
        out.reports.push_back(std::move(r));
        out.lines.push_back(std::move(line));
    }
    return out;
}

} // namespace gdarboux
