#include "heisvisc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace heisvisc::io {

std::string fmt(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    (void)ec;
    return std::string(buf, p);
}

namespace {

// JSON has no infinities; emit them as strings.
json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) throw IoError("bad number '" + s + "' in " + what);
    return v;
}

long to_long(const std::string& s, const std::string& what) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError("bad integer '" + s + "' in " + what);
    return v;
}

}  // namespace

void write_grid_csv(std::ostream& os, const GridField& g) {
    const int d = g.dim();
    os << "# n=" << g.n() << '\n' << "# box=";
    for (int a = 0; a < d; ++a) os << (a ? "," : "") << fmt(g.domain().lo[a]) << ".." << fmt(g.domain().hi[a]);
    os << '\n' << "# res=";
    for (int a = 0; a < d; ++a) os << (a ? "," : "") << g.res()[a];
    os << '\n';
    std::string line;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.index_of(i);
        line.clear();
        for (int a = 0; a < d; ++a) {
            line += std::to_string(idx[a]);
            line += ',';
        }
        for (int a = 0; a < d; ++a) {
            line += fmt(g.coord(a, idx[a]));
            line += ',';
        }
        line += fmt(g[i]);
        line += '\n';
        os << line;
    }
}

GridField read_grid_csv(std::istream& is) {
    std::string line;
    int n = -1;
    std::vector<double> lo, hi;
    std::vector<int> res;
    long lineno = 0;
    while (true) {
        if (!std::getline(is, line)) break;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] != '#') break;
        std::string body = line.substr(1);
        while (!body.empty() && body[0] == ' ') body.erase(0, 1);
        if (body.rfind("n=", 0) == 0) {
            n = static_cast<int>(to_long(body.substr(2), "header n"));
        } else if (body.rfind("box=", 0) == 0) {
            for (const auto& r : split(body.substr(4), ',')) {
                const auto pos = r.find("..");
                if (pos == std::string::npos) throw IoError("bad box range '" + r + "'");
                lo.push_back(to_double(r.substr(0, pos), "header box"));
                hi.push_back(to_double(r.substr(pos + 2), "header box"));
            }
        } else if (body.rfind("res=", 0) == 0) {
            for (const auto& r : split(body.substr(4), ',')) res.push_back(static_cast<int>(to_long(r, "header res")));
        }
    }
    if (n < 1) throw IoError("grid CSV lacks a '# n=' header");
    const int d = 2 * n + 1;
    if (static_cast<int>(lo.size()) != d || static_cast<int>(res.size()) != d)
        throw IoError("grid CSV header does not describe " + std::to_string(d) + " axes");
    GridField g(Domain(n, lo, hi), res);
    std::vector<std::uint8_t> seen(g.size(), 0);
    std::size_t rows = 0;
    bool have = !line.empty() && line[0] != '#';
    while (have) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) {
            const auto f = split(line, ',');
            if (static_cast<int>(f.size()) != 2 * d + 1)
                throw IoError("grid CSV line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                              " fields, expected " + std::to_string(2 * d + 1));
            std::array<int, kMaxDim> idx{};
            for (int a = 0; a < d; ++a) {
                idx[a] = static_cast<int>(to_long(f[a], "line " + std::to_string(lineno)));
                if (idx[a] < 0 || idx[a] >= res[a]) throw IoError("index out of range on line " + std::to_string(lineno));
            }
            const std::size_t flat = g.flat_of({idx.data(), static_cast<std::size_t>(d)});
            if (seen[flat]) throw IoError("duplicate node on line " + std::to_string(lineno));
            seen[flat] = 1;
            g[flat] = to_double(f[2 * d], "line " + std::to_string(lineno));
            ++rows;
        }
        have = static_cast<bool>(std::getline(is, line));
        ++lineno;
    }
    if (rows != g.size())
        throw IoError("grid CSV has " + std::to_string(rows) + " rows, expected " + std::to_string(g.size()));
    return g;
}

void write_grid_csv(const std::string& path, const GridField& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    write_grid_csv(os, g);
    if (!os) throw IoError("write failed for " + path);
}

GridField read_grid_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    return read_grid_csv(is);
}

void write_witness_csv(std::ostream& os, const std::vector<std::size_t>& witness) {
    os << "node,witness\n";
    for (std::size_t i = 0; i < witness.size(); ++i) os << i << ',' << witness[i] << '\n';
}

void write_classification_csv(std::ostream& os, const Classification& c) {
    os << "node,tag,margin\n";
    for (std::size_t i = 0; i < c.tags.size(); ++i) os << i << ',' << to_string(c.tags[i]) << ',' << fmt(c.margin[i]) << '\n';
}

void write_history_csv(std::ostream& os, const std::vector<double>& history) {
    os << "iteration,residual\n";
    for (std::size_t k = 0; k < history.size(); ++k) os << k << ',' << fmt(history[k]) << '\n';
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os << text;
    if (!os) throw IoError("write failed for " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path, std::string("invalid JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------- schema

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(join(path, key), "missing required field");
    return *it;
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
    return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

Coefficient parse_coefficient(const json& j, int n, const std::string& path) {
    try {
        if (j.is_number()) return Coefficient(j.get<double>());
        if (j.is_string()) return Coefficient::parse(j.get<std::string>(), n);
    } catch (const ParseError& e) {
        throw SchemaError(path, e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(path, e.what());
    }
    throw SchemaError(path, "expected a number or an expression string");
}

AnalyticField parse_expr_field(const json& j, int n, const std::string& path) {
    try {
        return AnalyticField::parse(get_string(j, path), n);
    } catch (const ParseError& e) {
        throw SchemaError(path, e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(path, e.what());
    }
}

}  // namespace

OperatorSpec parse_operator(const json& j, int n, const std::string& path) {
    OperatorSpec s;
    s.alpha = parse_coefficient(require(j, "alpha", path), n, join(path, "alpha"));
    s.beta = parse_coefficient(require(j, "beta", path), n, join(path, "beta"));
    s.gamma = parse_coefficient(require(j, "gamma", path), n, join(path, "gamma"));
    if (j.contains("m")) {
        s.m = get_number(j["m"], join(path, "m"));
        if (s.m < 0.0) throw SchemaError(join(path, "m"), "must be >= 0");
    }
    return s;
}

ConeSpec parse_cone(const json& j, const std::string& path) {
    const std::string fam = get_string(require(j, "family", path), join(path, "family"));
    double tol = 1e-9;
    if (j.contains("tol")) {
        tol = get_number(j["tol"], join(path, "tol"));
        if (!(tol > 0.0)) throw SchemaError(join(path, "tol"), "must be positive");
    }
    if (fam == "trace") return ConeSpec::trace(tol);
    if (fam == "posdef") return ConeSpec::posdef(tol);
    if (fam == "sigma_k") {
        const int k = get_int(require(j, "k", path), join(path, "k"));
        if (k < 1 || k > 2 * kMaxN) throw SchemaError(join(path, "k"), "out of range");
        return ConeSpec::sigma_k(k, tol);
    }
    if (fam == "spectral") {
        const std::string g = get_string(require(j, "g", path), join(path, "g"));
        try {
            return ConeSpec::spectral(g, tol);
        } catch (const ParseError& e) {
            throw SchemaError(join(path, "g"), e.what());
        }
    }
    throw SchemaError(join(path, "family"), "unknown cone family '" + fam + "'");
}

Domain parse_domain(const json& j, std::vector<int>* res, const std::string& path) {
    const int n = get_int(require(j, "n", path), join(path, "n"));
    if (n < 1 || n > kMaxN) throw SchemaError(join(path, "n"), "must lie in 1.." + std::to_string(kMaxN));
    const int d = 2 * n + 1;
    const json& box = require(j, "box", path);
    const std::string bp = join(path, "box");
    if (!box.is_array() || static_cast<int>(box.size()) != d)
        throw SchemaError(bp, "expected " + std::to_string(d) + " [lo, hi] pairs");
    std::vector<double> lo, hi;
    for (int a = 0; a < d; ++a) {
        const std::string ap = bp + "[" + std::to_string(a) + "]";
        if (!box[a].is_array() || box[a].size() != 2) throw SchemaError(ap, "expected [lo, hi]");
        lo.push_back(get_number(box[a][0], ap + "[0]"));
        hi.push_back(get_number(box[a][1], ap + "[1]"));
        if (!(lo.back() < hi.back())) throw SchemaError(ap, "needs lo < hi");
    }
    const json& r = require(j, "res", path);
    const std::string rp = join(path, "res");
    res->clear();
    if (r.is_number_integer()) {
        res->assign(d, r.get<int>());
    } else if (r.is_array() && static_cast<int>(r.size()) == d) {
        for (int a = 0; a < d; ++a) res->push_back(get_int(r[a], rp + "[" + std::to_string(a) + "]"));
    } else {
        throw SchemaError(rp, "expected an integer or " + std::to_string(d) + " integers");
    }
    for (int v : *res)
        if (v < 3) throw SchemaError(rp, "resolution must be >= 3 per axis");
    return Domain(n, lo, hi);
}

GridField parse_field(const json& j, const Domain& d, const std::vector<int>& res, const std::string& base_dir,
                      const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (j.contains("expr")) {
        const AnalyticField f = parse_expr_field(j["expr"], d.n, join(path, "expr"));
        try {
            return sample(f, d, res);
        } catch (const EvalError& e) {
            throw SchemaError(join(path, "expr"), e.what());
        }
    }
    if (j.contains("const")) return GridField(d, res, get_number(j["const"], join(path, "const")));
    if (j.contains("grid")) {
        std::string file = get_string(j["grid"], join(path, "grid"));
        if (!file.empty() && file[0] != '/' && !base_dir.empty()) file = base_dir + "/" + file;
        GridField g = read_grid_csv(file);
        if (!(g.domain() == d) || g.res() != res) throw SchemaError(join(path, "grid"), "lattice differs from the problem");
        return g;
    }
    throw SchemaError(path, "expected one of expr, const, grid");
}

Problem parse_problem(const json& j, const std::string& base_dir, SolveOptions* opts) {
    std::vector<int> res;
    const Domain d = parse_domain(j, &res, "");
    Problem p;
    p.domain = d;
    p.res = res;
    p.spec = parse_operator(require(j, "operator", ""), d.n, "operator");
    p.cone = parse_cone(require(j, "cone", ""), "cone");
    p.boundary = parse_expr_field(require(j, "boundary", ""), d.n, "boundary");
    GridField g;
    try {
        g = sample(p.boundary, d, res);
    } catch (const EvalError& e) {
        throw SchemaError("boundary", e.what());
    }
    auto side = [&](const char* key, double sign) {
        const json& f = require(j, key, "");
        if (f.is_object() && f.contains("bump")) {
            const double B = get_number(f["bump"], std::string(key) + ".bump");
            if (B < 0.0) throw SchemaError(std::string(key) + ".bump", "must be >= 0");
            const GridField b = bump(d, res, B);
            GridField out = g;
            for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] + sign * b[i];
            return out;
        }
        return parse_field(f, d, res, base_dir, key);
    };
    p.sub = side("sub", -1.0);
    p.super = side("super", 1.0);
    if (opts && j.contains("solver")) {
        const json& s = j["solver"];
        if (!s.is_object()) throw SchemaError("solver", "expected an object");
        if (s.contains("dt")) {
            if (s["dt"].is_string() && s["dt"].get<std::string>() == "auto")
                opts->dt = 0.0;
            else
                opts->dt = get_number(s["dt"], "solver.dt");
        }
        if (s.contains("tol")) opts->tol = get_number(s["tol"], "solver.tol");
        if (s.contains("max_iter")) opts->max_iter = get_int(s["max_iter"], "solver.max_iter");
        if (s.contains("start")) {
            const std::string st = get_string(s["start"], "solver.start");
            if (st == "ascend")
                opts->start = Start::Ascend;
            else if (st == "descend")
                opts->start = Start::Descend;
            else
                throw SchemaError("solver.start", "expected ascend or descend");
        }
    }
    return p;
}

// ---------------------------------------------------------------- reports

namespace {

json witness_json(const StructuralWitness& w) {
    json o;
    o["xi"] = w.xi;
    o["s"] = w.s;
    o["s2"] = w.s2;
    o["p"] = w.p;
    o["theta"] = w.theta;
    return o;
}

}  // namespace

json to_json(const StructuralReport& r) {
    json o;
    o["passed"] = r.passed;
    o["beta_branch"] = r.beta_branch;
    o["lipschitz_estimate"] = num(r.lipschitz_estimate);
    json conds = json::array();
    for (const auto& c : r.conditions) {
        json e;
        e["name"] = c.name;
        e["passed"] = c.passed;
        e["margin"] = num(c.margin);
        e["violations"] = c.violations;
        e["witness"] = witness_json(c.witness);
        if (!c.note.empty()) e["note"] = c.note;
        conds.push_back(e);
    }
    o["conditions"] = conds;
    return o;
}

json to_json(const AxiomReport& r) {
    json o;
    o["cone"] = r.cone;
    o["passed"] = r.passed;
    o["rejected_draws"] = r.rejected_draws;
    json ax = json::array();
    for (const auto& a : r.axioms) {
        json e;
        e["name"] = a.name;
        e["passed"] = a.passed;
        e["checked"] = a.checked;
        e["violations"] = a.violations;
        if (a.violations > 0) {
            json w;
            json A = json::array();
            for (double x : a.witness_A) A.push_back(num(x));
            w["A"] = A;
            if (!a.witness_B.empty()) {
                json B = json::array();
                for (double x : a.witness_B) B.push_back(num(x));
                w["B"] = B;
            }
            w["c"] = num(a.witness_c);
            e["witness"] = w;
        }
        ax.push_back(e);
    }
    o["axioms"] = ax;
    return o;
}

json to_json(const CheckReport& r) {
    json o;
    o["name"] = r.name;
    o["passed"] = r.passed;
    o["checked"] = r.checked;
    o["violations"] = r.violations;
    o["worst"] = num(r.worst);
    o["witness_node"] = r.witness_node;
    if (!r.note.empty()) o["note"] = r.note;
    if (!r.series.empty()) {
        json s = json::array();
        for (double x : r.series) s.push_back(num(x));
        o["series"] = s;
    }
    return o;
}

json to_json(const Classification& c, bool with_nodes) {
    json o;
    json counts;
    for (int t = 0; t < 6; ++t) counts[to_string(static_cast<Tag>(t))] = c.counts[t];
    o["counts"] = counts;
    o["ok"] = c.ok();
    o["worst_sub"] = num(c.worst_sub);
    o["worst_sub_node"] = c.worst_sub_node;
    o["worst_super"] = num(c.worst_super);
    o["worst_super_node"] = c.worst_super_node;
    if (with_nodes) {
        json tags = json::array();
        for (Tag t : c.tags) tags.push_back(to_string(t));
        o["tags"] = tags;
    }
    return o;
}

json to_json(const KeyLemmaReport& r) {
    json o;
    o["a"] = num(r.a);
    o["eps"] = num(r.eps);
    o["testable"] = r.testable;
    o["passing"] = r.passing;
    o["fraction"] = num(r.fraction);
    o["failing_interior"] = r.failing_interior;
    o["minimal_a"] = num(r.minimal_a);
    o["passing_at_minimal"] = r.passing_at_minimal;
    o["fraction_at_minimal"] = num(r.fraction_at_minimal);
    o["failures_confined_to_collar"] = r.failures_confined_to_collar;
    o["failing_nodes"] = r.failing_nodes;
    o["skipped_M"] = r.skipped_M;
    o["skipped_boundary_witness"] = r.skipped_boundary_witness;
    return o;
}

json to_json(const Lemma35Report& r) {
    json o;
    o["mirrored"] = r.mirrored;
    o["nodes"] = r.nodes;
    o["excluded"] = r.excluded;
    o["margin"] = num(r.margin);
    o["worst_node"] = r.worst_node;
    o["passed"] = r.passed;
    o["largest_K0"] = num(r.largest_K0);
    o["capped"] = r.capped;
    o["tol"] = num(r.tol);
    return o;
}

json to_json(const TouchingReport& r) {
    json o;
    o["boundary_gap"] = num(r.boundary_gap);
    o["min_gap"] = num(r.min_gap);
    o["touch_tol"] = num(r.touch_tol);
    o["touching_count"] = r.touching_count;
    o["interior_touching_count"] = r.interior_touching_count;
    json comps = json::array();
    for (const auto& c : r.components) {
        json e;
        e["size"] = c.size;
        e["touches_boundary"] = c.touches_boundary;
        e["first_node"] = c.first_node;
        comps.push_back(e);
    }
    o["components"] = comps;
    o["all_components_touch_boundary"] = r.all_components_touch_boundary;
    o["precondition_ok"] = r.precondition_ok;
    o["verdict"] = r.verdict;
    o["w_classification"] = to_json(r.w_class);
    o["v_classification"] = to_json(r.v_class);
    return o;
}

json to_json(const SolveResult& r) {
    json o;
    o["converged"] = r.converged;
    o["iterations"] = r.iterations;
    o["final_residual"] = num(r.final_residual);
    o["initial_residual"] = num(r.residual_history.empty() ? 0.0 : r.residual_history.front());
    o["dt"] = num(r.dt);
    o["halvings"] = r.halvings;
    o["monotone"] = r.monotone;
    o["monotone_violations"] = r.monotone_violations;
    return o;
}

json to_json(const UniquenessReport& r) {
    json o;
    o["gap"] = num(r.gap);
    o["tol"] = num(r.tol);
    o["passed"] = r.passed;
    o["ascend"] = to_json(r.up);
    o["descend"] = to_json(r.down);
    return o;
}

}  // namespace heisvisc::io
