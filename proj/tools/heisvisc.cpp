// heisvisc: command-line front end.
//
// Exit codes: 0 success, 1 property or convergence failure, 2 usage / I/O /
// schema error.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heisvisc/comparison.hpp"
#include "heisvisc/core.hpp"
#include "heisvisc/envelopes.hpp"
#include "heisvisc/error.hpp"
#include "heisvisc/io.hpp"
#include "heisvisc/perron.hpp"
#include "heisvisc/suites.hpp"
#include "heisvisc/viscosity.hpp"

namespace fs = std::filesystem;
using namespace heisvisc;
using io::json;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct UsageError : Error {
    using Error::Error;
};

Point parse_point(const std::string& text, int n, const std::string& flag) {
    std::vector<double> c;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        double v = 0.0;
        const char* b = tok.data();
        const char* e = b + tok.size();
        while (b < e && *b == ' ') ++b;
        if (b < e && *b == '+') ++b;
        const auto r = std::from_chars(b, e, v);
        if (tok.empty() || r.ec != std::errc() || r.ptr != e)
            throw UsageError(flag + ": malformed coordinate '" + tok + "'");
        c.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (c.size() % 2 == 0 || c.size() < 3 || c.size() > static_cast<std::size_t>(kMaxDim))
        throw UsageError(flag + ": expected 2n+1 coordinates, got " + std::to_string(c.size()));
    if (n > 0 && static_cast<int>(c.size()) != 2 * n + 1)
        throw UsageError(flag + ": expected " + std::to_string(2 * n + 1) + " coordinates for n=" +
                         std::to_string(n));
    return Point::from_coords(c);
}

json coords(const Point& p) {
    json a = json::array();
    for (int k = 0; k < p.dim(); ++k) a.push_back(p[k]);
    return a;
}

void emit(const json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty())
        std::cout << text;
    else
        io::write_text(path, text);
}

template <class Fn>
void write_stream(const std::string& path, Fn&& fn) {
    std::ostringstream os;
    fn(os);
    io::write_text(path, os.str());
}

std::string dir_of(const std::string& path) {
    const fs::path p = fs::path(path).parent_path();
    return p.empty() ? std::string(".") : p.string();
}

struct Config {
    OperatorSpec spec;
    ConeSpec cone;
};

// {"n": int?, "operator": {...}, "cone": {...}}
Config load_config(const std::string& path, int n) {
    const json j = io::read_json_file(path);
    if (!j.is_object()) throw SchemaError("", "expected an object");
    if (!j.contains("operator")) throw SchemaError("operator", "missing");
    if (!j.contains("cone")) throw SchemaError("cone", "missing");
    return {io::parse_operator(j.at("operator"), n), io::parse_cone(j.at("cone"))};
}

Side parse_side(const std::string& s) {
    if (s == "sub") return Side::Sub;
    if (s == "super") return Side::Super;
    if (s == "both") return Side::Both;
    throw UsageError("--side: expected sub, super or both");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Viscosity-solution toolkit on the Heisenberg group"};
    app.require_subcommand(1);

    // gauge
    auto* gauge_cmd = app.add_subcommand("gauge", "Koranyi gauge of one or more points");
    int g_n = 0;
    std::vector<std::string> g_points;
    gauge_cmd->add_option("--n", g_n, "Heisenberg dimension n");
    gauge_cmd->add_option("--point", g_points, "Point x1..xn,y1..yn,t")->required();

    // group
    auto* group_cmd = app.add_subcommand("group", "Group operations");
    group_cmd->require_subcommand(1);
    int gr_n = 0;
    std::string gr_a, gr_b;
    auto* mul_cmd = group_cmd->add_subcommand("mul", "a * b");
    auto* inv_cmd = group_cmd->add_subcommand("inv", "a^-1");
    auto* dist_cmd = group_cmd->add_subcommand("dist", "d_H(a, b)");
    for (auto* c : {mul_cmd, inv_cmd, dist_cmd}) {
        c->add_option("--n", gr_n, "Heisenberg dimension n");
        c->add_option("--a", gr_a, "First point")->required();
    }
    mul_cmd->add_option("--b", gr_b, "Second point")->required();
    dist_cmd->add_option("--b", gr_b, "Second point")->required();

    // envelope
    auto* env_cmd = app.add_subcommand("envelope", "Upper / lower envelope of a grid field");
    std::string e_in, e_out, e_witness, e_report, e_mode = "upper";
    double e_eps = 0.0;
    env_cmd->add_option("--in", e_in, "Input grid CSV")->required();
    env_cmd->add_option("--eps", e_eps, "Envelope parameter (> 0)")->required();
    env_cmd->add_option("--mode", e_mode, "upper or lower");
    env_cmd->add_option("--out", e_out, "Envelope grid CSV")->required();
    env_cmd->add_option("--witness", e_witness, "Witness CSV");
    env_cmd->add_option("--report", e_report, "Property report JSON");

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "Nodewise viscosity classification of a grid field");
    std::string c_grid, c_config, c_out, c_report, c_side = "both";
    cls_cmd->add_option("--grid", c_grid, "Grid CSV")->required();
    cls_cmd->add_option("--config", c_config, "JSON with operator and cone")->required();
    cls_cmd->add_option("--side", c_side, "sub, super or both");
    cls_cmd->add_option("--out", c_out, "Classification CSV");
    cls_cmd->add_option("--report", c_report, "Report JSON");

    // check
    auto* chk_cmd = app.add_subcommand("check", "Run packaged verification suites");
    std::string k_suite = "all", k_cone, k_out;
    std::uint64_t k_seed = 42;
    chk_cmd->add_option("--suite", k_suite, "core|calculus|cones|envelopes|structural|lemma35|keylemma|all");
    chk_cmd->add_option("--seed", k_seed, "Seed for every sampled check");
    chk_cmd->add_option("--cone", k_cone, "Cone JSON replacing the shipped cone list");
    chk_cmd->add_option("--out", k_out, "Report JSON (stdout if absent)");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Touching-point harness for w >= v");
    std::string m_w, m_v, m_config, m_report;
    cmp_cmd->add_option("--w", m_w, "Supersolution grid CSV")->required();
    cmp_cmd->add_option("--v", m_v, "Subsolution grid CSV")->required();
    cmp_cmd->add_option("--config", m_config, "JSON with operator and cone")->required();
    cmp_cmd->add_option("--report", m_report, "Report JSON (stdout if absent)");

    // solve
    auto* sol_cmd = app.add_subcommand("solve", "Perron iteration between barriers");
    std::string s_problem, s_out, s_report, s_history, s_start;
    double s_tol = 0.0, s_dt = -1.0;
    long s_max_iter = -1;
    bool s_uniq = false;
    sol_cmd->add_option("--problem", s_problem, "Problem JSON")->required();
    sol_cmd->add_option("--out", s_out, "Solution grid CSV");
    sol_cmd->add_option("--report", s_report, "Report JSON (stdout if absent)");
    sol_cmd->add_option("--history", s_history, "Residual history CSV");
    sol_cmd->add_option("--tol", s_tol, "Residual tolerance");
    sol_cmd->add_option("--dt", s_dt, "Step size (0 for automatic)");
    sol_cmd->add_option("--max-iter", s_max_iter, "Iteration cap");
    sol_cmd->add_option("--start", s_start, "ascend or descend");
    sol_cmd->add_flag("--uniqueness", s_uniq, "Run both starts and report the gap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*gauge_cmd) {
            for (const auto& s : g_points) {
                const Point p = parse_point(s, g_n, "--point");
                json j;
                j["point"] = coords(p);
                j["gauge"] = gauge(p);
                std::cout << j.dump() << "\n";
            }
            return kOk;
        }

        if (*group_cmd) {
            const Point a = parse_point(gr_a, gr_n, "--a");
            json j;
            if (*mul_cmd) {
                const Point b = parse_point(gr_b, a.n(), "--b");
                j["result"] = coords(group_mul(a, b));
            } else if (*inv_cmd) {
                j["result"] = coords(group_inv(a));
            } else {
                const Point b = parse_point(gr_b, a.n(), "--b");
                j["dist"] = dist(a, b);
            }
            std::cout << j.dump() << "\n";
            return kOk;
        }

        if (*env_cmd) {
            if (!(e_eps > 0.0)) throw UsageError("--eps: must be positive");
            EnvelopeMode mode;
            if (e_mode == "upper")
                mode = EnvelopeMode::Upper;
            else if (e_mode == "lower")
                mode = EnvelopeMode::Lower;
            else
                throw UsageError("--mode: expected upper or lower");
            const GridField v = io::read_grid_csv(e_in);
            const EnvelopeResult r = envelope(v, e_eps, mode);
            io::write_grid_csv(e_out, r.out);
            if (!e_witness.empty())
                write_stream(e_witness, [&](std::ostream& os) { io::write_witness_csv(os, r.witness); });
            const CheckReport opt = check_optimality(r, v);
            const CheckReport wb = check_witness_bound(r, v);
            const CheckReport sc = check_semiconvexity(r, v);
            json rep;
            rep["eps"] = e_eps;
            rep["mode"] = to_string(mode);
            rep["checks"] = json::array({io::to_json(opt), io::to_json(wb), io::to_json(sc)});
            const bool ok = opt.passed && wb.passed && sc.passed;
            rep["passed"] = ok;
            if (!e_report.empty()) emit(rep, e_report);
            return ok ? kOk : kFail;
        }

        if (*cls_cmd) {
            const Side side = parse_side(c_side);
            const GridField g = io::read_grid_csv(c_grid);
            const Config cfg = load_config(c_config, g.n());
            const Classification c = classify_grid(g, cfg.spec, cfg.cone, side);
            if (!c_out.empty())
                write_stream(c_out, [&](std::ostream& os) { io::write_classification_csv(os, c); });
            json rep = io::to_json(c);
            rep["side"] = to_string(side);
            emit(rep, c_report);
            return c.ok() ? kOk : kFail;
        }

        if (*chk_cmd) {
            SuiteOptions opt;
            opt.seed = k_seed;
            if (!k_cone.empty()) opt.cone = io::parse_cone(io::read_json_file(k_cone));
            const auto& names = suite_names();
            if (std::find(names.begin(), names.end(), k_suite) == names.end())
                throw UsageError("--suite: unknown suite '" + k_suite + "'");
            bool passed = false;
            const json rep = run_suite(k_suite, opt, &passed);
            emit(rep, k_out);
            return passed ? kOk : kFail;
        }

        if (*cmp_cmd) {
            const GridField w = io::read_grid_csv(m_w);
            const GridField v = io::read_grid_csv(m_v);
            const Config cfg = load_config(m_config, w.n());
            const TouchingReport r = touching_harness(w, v, cfg.spec, cfg.cone);
            emit(io::to_json(r), m_report);
            return r.verdict == "CONSISTENT" ? kOk : kFail;
        }

        if (*sol_cmd) {
            SolveOptions opt;
            const Problem p = io::parse_problem(io::read_json_file(s_problem), dir_of(s_problem), &opt);
            if (s_tol > 0.0) opt.tol = s_tol;
            if (s_dt >= 0.0) opt.dt = s_dt;
            if (s_max_iter >= 0) opt.max_iter = s_max_iter;
            if (!s_start.empty()) {
                if (s_start == "ascend")
                    opt.start = Start::Ascend;
                else if (s_start == "descend")
                    opt.start = Start::Descend;
                else
                    throw UsageError("--start: expected ascend or descend");
            }
            json rep;
            bool ok;
            const SolveResult* main_run;
            UniquenessReport u;
            SolveResult r;
            if (s_uniq) {
                u = uniqueness_gap(p, opt);
                rep = io::to_json(u);
                ok = u.passed;
                main_run = opt.start == Start::Ascend ? &u.up : &u.down;
            } else {
                r = solve(p, opt);
                rep = io::to_json(r);
                ok = r.converged;
                main_run = &r;
            }
            if (!s_out.empty()) io::write_grid_csv(s_out, main_run->u);
            if (!s_history.empty())
                write_stream(s_history,
                             [&](std::ostream& os) { io::write_history_csv(os, main_run->residual_history); });
            emit(rep, s_report);
            return ok ? kOk : kFail;
        }
    } catch (const SchemaError& e) {
        std::cerr << "schema error at " << (e.path().empty() ? "<root>" : e.path()) << ": " << e.what() << "\n";
        return kUsage;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
