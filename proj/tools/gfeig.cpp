// gfeig: command-line front end (audit, solve, evolve, study, table1).
//
// Exit codes: 0 ok, 1 evolution threshold missed, 2 audit violation,
// 3 no eigenelements (verdict), 64 usage / config syntax, 65 config semantics.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gfeig/gfeig.hpp"

namespace fs = std::filesystem;
using namespace gfeig;

namespace {

constexpr int kExitThreshold = 1;
constexpr int kExitAudit = 2;
constexpr int kExitNoEigen = 3;
constexpr int kExitUsage = 64;
constexpr int kExitConfig = 65;

struct Context {
    RunConfig cfg;
    fs::path out;
    bool csv = true;
    bool json = true;
};

Context prepare(const std::string& config_path, const std::vector<std::string>& sets, const std::string& out_flag) {
    Context c;
    c.cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& s : sets) c.cfg.set_assignment(s);
    std::string dir = c.cfg.str("output.dir");
    if (const char* env = std::getenv("GFEIG_OUTPUT_DIR"); env && *env) dir = env;
    if (!out_flag.empty()) dir = out_flag;
    c.cfg.set("output.dir", dir);
    c.csv = c.json = false;
    for (const auto& f : split(c.cfg.str("output.formats"), ',')) {
        if (f == "csv")
            c.csv = true;
        else if (f == "json")
            c.json = true;
        else
            throw ConfigurationError("output.formats accepts csv and json");
    }
    c.out = dir;
    fs::create_directories(c.out);
    io::write_text((c.out / "manifest.cfg").string(), c.cfg.manifest());
    return c;
}

void write_json(const Context& c, const std::string& name, const nlohmann::json& j) {
    if (c.json) io::write_text((c.out / name).string(), j.dump(2) + "\n");
}

template <typename F>
void write_csv(const Context& c, const std::string& name, F&& body) {
    if (!c.csv) return;
    std::ofstream os(c.out / name);
    if (!os) throw ConfigurationError("cannot write " + (c.out / name).string());
    body(os);
}

void print_audit(const AssumptionReport& r) {
    for (const auto& e : r.entries)
        std::printf("%-18s %-12s %-14.6g %s\n", e.id.c_str(), std::string(to_string(e.status)).c_str(), e.witness,
                    e.detail.c_str());
}

double probe_R(const ProblemSpec& p, const RunConfig& cfg) {
    return std::max({1000.0, 10.0 * cfg.num("grid.R"), 10.0 * p.x_min});
}

AssumptionReport run_audit(const ProblemSpec& p, const RunConfig& cfg) {
    return audit(p, probe_R(p, cfg), 2000);
}

int cmd_audit(Context& c) {
    const auto p = problem_from(c.cfg);
    const auto r = run_audit(p, c.cfg);
    print_audit(r);
    write_json(c, "audit.json", to_json(r));
    if (auto f = r.first_failure()) {
        std::printf("audit failed: %s\n", f->c_str());
        return kExitAudit;
    }
    return 0;
}

int cmd_solve(Context& c, const std::string& export_path) {
    const auto p = problem_from(c.cfg);
    const auto rep = run_audit(p, c.cfg);
    write_json(c, "audit.json", to_json(rep));
    if (auto f = rep.first_failure(); f && !c.cfg.flag("solver.override_audit")) {
        print_audit(rep);
        std::printf("audit failed: %s (set solver.override_audit = true to solve anyway)\n", f->c_str());
        return kExitAudit;
    }
    const auto sched = schedule_from(c.cfg);
    const auto scfg = solver_from(c.cfg);
    const auto res = continuation_solve(p, sched, scfg);

    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["audit_passed"] = rep.passed();
    j["continuation"] = io::continuation_summary(res);
    write_csv(c, "stages.csv", [&](std::ostream& os) { io::write_stages_csv(os, res); });

    for (const auto& s : res.stages)
        std::printf("R=%-10g N=%-6zu eta=%-10g lambda=%.12g  int xU=%.6g\n", s.stage.R, s.stage.N, s.stage.eta,
                    s.lambda, s.first_moment);
    if (!res.triples.empty()) {
        const auto& t = res.triples.back();
        const auto& last = res.stages.back().stage;
        const Grid grid = build_grid(last.R, last.N, sched.kind, sched.ratio, p.x_min);
        const auto trunc = TruncationParams::standard(p, last.R, last.eta);
        const auto op = assemble_direct(p, grid, trunc);
        const auto b = verify_bounds(t, p, op);
        j["triple"] = io::triple_summary(t);
        j["bounds"] = {{"half_max_tau_u", b.half_max_tau_u}, {"lower_ok", b.lower_ok},
                       {"upper_bound", b.upper_bound},       {"upper_ok", b.upper_ok},
                       {"balance_gap", b.balance_gap},       {"eps_grid", b.eps_grid}};
        const std::size_t restarts = c.cfg.count("solver.restarts");
        if (restarts > 0) {
            const auto adj = assemble_adjoint(op);
            double worst = 0.0;
            for (std::size_t i = 0; i < restarts; ++i) {
                SolverConfig rc = scfg;
                rc.initial = random_start(grid.size(), c.cfg.count("solver.seed") + i);
                worst = std::max(worst, std::abs(solve_truncated(op, adj, rc).lambda - t.lambda));
            }
            j["restarts"] = {{"count", restarts}, {"max_lambda_deviation", worst}};
            std::printf("restarts: %zu, max |lambda difference| = %.3g\n", restarts, worst);
        }
        write_csv(c, "eigentriple.csv", [&](std::ostream& os) { io::write_triple_csv(os, t); });
        if (!export_path.empty()) {
            std::ofstream os(export_path);
            if (!os) throw ConfigurationError("cannot write " + export_path);
            write_coordinate(os, op);
        }
        std::printf("lambda = %.12g (dual %.12g), extrapolated %.12g\n", t.lambda, t.lambda_dual,
                    res.extrapolated_lambda);
    }
    write_json(c, "summary.json", j);
    std::printf("verdict: %s (%s)\n", std::string(to_string(res.verdict)).c_str(), res.message.c_str());
    return res.verdict == Verdict::converged ? 0 : kExitNoEigen;
}

int cmd_evolve(Context& c) {
    const auto p = problem_from(c.cfg);
    const Grid grid = grid_from(c.cfg);
    const auto op = evolution_operator(p, grid);

    EigenTriple triple;
    const auto& triple_path = c.cfg.str("evolve.triple");
    if (!triple_path.empty()) {
        std::ifstream in(triple_path);
        if (!in) throw ConfigurationError("cannot read evolve.triple '" + triple_path + "'");
        auto s = io::read_triple_csv(in);
        if (s.x.size() != grid.size()) throw ConfigurationError("evolve.triple was computed on a different grid");
        for (std::size_t j = 0; j < s.x.size(); ++j)
            if (std::abs(s.x[j] - grid.centers[j]) > 1e-9 * grid.R)
                throw ConfigurationError("evolve.triple was computed on a different grid");
        triple = sampled_triple(grid, s.lambda, std::move(s.U), std::move(s.phi));
    } else if (c.cfg.flag("evolve.solve")) {
        triple = evolution_triple(op, solver_from(c.cfg));
    } else {
        throw ConfigurationError("evolve needs an eigentriple: set evolve.triple or evolve.solve = true");
    }

    std::vector<double> u0;
    const auto& kind = c.cfg.str("evolve.u0");
    if (kind == "gaussian")
        u0 = gaussian_profile(grid, c.cfg.num("evolve.center"), c.cfg.num("evolve.width"));
    else if (kind == "random")
        u0 = random_profile(grid, c.cfg.count("evolve.seed"));
    else if (kind == "eigen")
        u0 = triple.U;
    else
        throw ConfigurationError("evolve.u0 must be gaussian, random or eigen");

    EvolutionConfig ec;
    ec.T = c.cfg.num("evolve.T");
    ec.cfl = c.cfg.num("evolve.cfl");
    ec.stride = c.cfg.count("output.stride");
    ec.keep_snapshots = c.csv;
    const auto s = evolve(op, u0, ec, &triple);

    const double H0 = s.entropy_series.front().H, HT = s.entropy_series.back().H;
    const double c0 = s.pairing_u0;
    const double ratio = HT / std::max(H0, 1e-12 * std::abs(c0));
    double drift = 0.0;
    for (const auto& e : s.entropy_series) drift = std::max(drift, std::abs(e.pairing - c0) / std::abs(c0));
    const double threshold = c.cfg.num("evolve.threshold");

    write_csv(c, "ledger.csv", [&](std::ostream& os) { io::write_ledger_csv(os, s); });
    write_csv(c, "entropy.csv", [&](std::ostream& os) { io::write_entropy_csv(os, s, ec.stride); });
    write_csv(c, "trajectory.csv", [&](std::ostream& os) { io::write_trajectory_csv(os, s); });
    nlohmann::json j = {{"schema_version", io::kSchemaVersion},
                        {"lambda", triple.lambda},
                        {"steps", s.steps},
                        {"dt", s.dt},
                        {"H0", H0},
                        {"HT", HT},
                        {"H_ratio", ratio},
                        {"worst_H_increase", s.worst_h_increase},
                        {"pairing_u0", c0},
                        {"pairing_drift", drift},
                        {"threshold", threshold},
                        {"passed", ratio < threshold}};
    write_json(c, "evolve.json", j);
    std::printf("steps=%zu dt=%.4g lambda=%.12g H(T)/H(0)=%.3e pairing drift=%.3e\n", s.steps, s.dt, triple.lambda,
                ratio, drift);
    return ratio < threshold ? 0 : kExitThreshold;
}

/// Runs `tasks` on at most `workers` threads; results are written by index.
void run_pool(std::vector<std::function<void()>>& tasks, std::size_t workers) {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    const std::size_t W = std::max<std::size_t>(1, std::min(workers, tasks.size()));
    for (std::size_t w = 0; w < W; ++w)
        pool.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < tasks.size(); i = next++) tasks[i]();
        }));
    for (auto& f : pool) f.get();
}

int cmd_study(Context& c) {
    const auto p = problem_from(c.cfg);
    const double R = c.cfg.num("grid.R");
    const double eta = c.cfg.num("truncation.eta");
    const auto kind = grid_kind_from(c.cfg);
    const double ratio = c.cfg.num("grid.ratio");
    const auto scfg = solver_from(c.cfg);
    const auto Ns = c.cfg.list("study.N_list");
    const auto rs = c.cfg.list("study.r_list");
    const std::size_t stages = c.cfg.count("schedule.stages");
    if (Ns.empty() && rs.empty() && stages < 2)
        throw ConfigurationError("study has nothing to run: empty N_list, r_list and a single stage");
    const auto trunc = TruncationParams::standard(p, R, eta);

    struct Row {
        double param = 0.0;
        double lambda = 0.0, first_moment = 0.0, moment_lambda = 0.0;
        std::string error;
    };
    std::vector<Row> refine(Ns.size()), sweep(rs.size());
    std::optional<ContinuationResult> cont;
    std::vector<std::function<void()>> tasks;
    for (std::size_t i = 0; i < Ns.size(); ++i)
        tasks.push_back([&, i] {
            auto& row = refine[i];
            row.param = Ns[i];
            try {
                const Grid g = build_grid(R, static_cast<std::size_t>(Ns[i]), kind, ratio, p.x_min);
                const auto t = solve_problem(p, g, trunc, scfg);
                row.lambda = t.lambda;
                row.first_moment = t.first_moment();
                row.moment_lambda = moment_balance_lambda(t, p);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        });
    for (std::size_t i = 0; i < rs.size(); ++i)
        tasks.push_back([&, i] {
            auto& row = sweep[i];
            row.param = rs[i];
            try {
                ProblemSpec q = p;
                q.kernel = KernelSpec::mitosis(rs[i]);
                const auto t = solve_problem(q, grid_from(c.cfg), TruncationParams::standard(q, R, eta), scfg);
                row.lambda = t.lambda;
                row.first_moment = t.first_moment();
                row.moment_lambda = moment_balance_lambda(t, q);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        });
    if (stages >= 2) tasks.push_back([&] { cont = continuation_solve(p, schedule_from(c.cfg), scfg); });
    run_pool(tasks, c.cfg.count("study.workers"));

    double order = std::numeric_limits<double>::quiet_NaN();
    if (refine.size() >= 3) {
        const auto& a = refine[refine.size() - 3];
        const auto& b = refine[refine.size() - 2];
        const auto& d = refine[refine.size() - 1];
        const double q1 = b.param / a.param, q2 = d.param / b.param;
        const double num = a.lambda - b.lambda, den = b.lambda - d.lambda;
        if (std::abs(q1 - q2) < 1e-12 * q1 && num / den > 0.0) order = std::log(num / den) / std::log(q1);
    }

    write_csv(c, "study_refinement.csv", [&](std::ostream& os) {
        io::csv_header(os, "study_refinement", "N,lambda,first_moment,moment_lambda,error");
        for (const auto& r : refine)
            os << r.param << ',' << r.lambda << ',' << r.first_moment << ',' << r.moment_lambda << ',' << r.error << '\n';
    });
    write_csv(c, "study_order.csv", [&](std::ostream& os) {
        io::csv_header(os, "study_order", "observed_order");
        os << order << '\n';
    });
    if (!sweep.empty())
        write_csv(c, "study_mitosis.csv", [&](std::ostream& os) {
            io::csv_header(os, "study_mitosis", "r,lambda,first_moment,moment_lambda,error");
            for (const auto& r : sweep)
                os << r.param << ',' << r.lambda << ',' << r.first_moment << ',' << r.moment_lambda << ',' << r.error
                   << '\n';
        });
    if (cont) write_csv(c, "study_stages.csv", [&](std::ostream& os) { io::write_stages_csv(os, *cont); });

    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["observed_order"] = io::number(order);
    for (const auto& r : refine) {
        std::printf("N=%-8g lambda=%.12g %s\n", r.param, r.lambda, r.error.c_str());
        j["refinement"].push_back({{"N", r.param}, {"lambda", r.lambda}, {"error", r.error}});
    }
    for (const auto& r : sweep) {
        std::printf("r=%-8g lambda=%.12g %s\n", r.param, r.lambda, r.error.c_str());
        j["mitosis"].push_back({{"r", r.param}, {"lambda", r.lambda}, {"error", r.error}});
    }
    if (cont) j["continuation"] = io::continuation_summary(*cont);
    std::printf("observed order: %.4g\n", order);
    write_json(c, "study.json", j);
    return 0;
}

int cmd_table1(Context& c) {
    const double R = c.cfg.num("grid.R");
    const std::size_t N = c.cfg.count("grid.N");
    const double eta = c.cfg.num("truncation.eta");
    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    double worst_lambda = 0.0, worst_u = 0.0, worst_slope = 0.0;
    std::printf("%-3s %-16s %-12s %-12s %-12s\n", "n", "lambda", "|dlambda|", "L1(U)", "slope dev");
    for (unsigned n = 1; n <= 4; ++n) {
        ProblemSpec p;
        p.tau = RateSpec::power_law(1.0, 1.0);
        p.beta = RateSpec::power_law(1.0, n);
        p.kernel = KernelSpec::uniform();
        const Grid g = build_grid(R, N);
        const auto t = solve_problem(p, g, TruncationParams::standard(p, R, eta), solver_from(c.cfg));
        const auto ex = oracles::example_linear_tau(1.0, 1.0, n);
        const double dl = std::abs(t.lambda - ex.lambda);
        const double du = oracles::l1_distance(g, t.U, ex.sample_U(g));
        const double ds = std::abs(oracles::weighted_slope(g, t.phi, t.U) / ex.phi(1.0) - 1.0);
        worst_lambda = std::max(worst_lambda, dl);
        worst_u = std::max(worst_u, du);
        worst_slope = std::max(worst_slope, ds);
        std::printf("%-3u %-16.12g %-12.3e %-12.3e %-12.3e\n", n, t.lambda, dl, du, ds);
        j["rows"].push_back({{"n", n}, {"lambda", t.lambda}, {"lambda_error", dl}, {"U_l1", du}, {"slope_dev", ds}});
    }
    std::printf("max deviations: lambda %.3e, U %.3e, slope %.3e\n", worst_lambda, worst_u, worst_slope);
    j["max"] = {{"lambda", worst_lambda}, {"U_l1", worst_u}, {"slope", worst_slope}};
    write_json(c, "table1.json", j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gfeig: principal eigenelements of growth-fragmentation equations"};
    app.require_subcommand(1);
    std::string config_path, out_flag, export_path;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("config", config_path, "config file (key = value)");
        if (config_required) opt->required();
        sub->add_option("--set", sets, "override a config key: key=value");
        sub->add_option("-o,--output-dir", out_flag, "output directory");
    };
    auto* audit_cmd = app.add_subcommand("audit", "check the standing assumptions");
    auto* solve_cmd = app.add_subcommand("solve", "continuation solve for (lambda, U, phi)");
    auto* evolve_cmd = app.add_subcommand("evolve", "time evolution and relative entropy");
    auto* study_cmd = app.add_subcommand("study", "grid refinement and parameter sweeps");
    auto* table_cmd = app.add_subcommand("table1", "compare tau = x, beta = x^n against closed forms");
    add_common(audit_cmd, true);
    add_common(solve_cmd, true);
    add_common(evolve_cmd, true);
    add_common(study_cmd, true);
    add_common(table_cmd, false);
    solve_cmd->add_option("--export-operator", export_path, "write the assembled operator (coordinate format)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        Context c = prepare(config_path, sets, out_flag);
        if (audit_cmd->parsed()) return cmd_audit(c);
        if (solve_cmd->parsed()) return cmd_solve(c, export_path);
        if (evolve_cmd->parsed()) return cmd_evolve(c);
        if (study_cmd->parsed()) return cmd_study(c);
        if (table_cmd->parsed()) return cmd_table1(c);
    } catch (const ConfigSyntaxError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const ConfigurationError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const InvalidSpec& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 70;
    }
    return kExitUsage;
}
