// Acceptance run: one PASS/FAIL line per criterion, numbers alongside.
//
//   gfeig_acceptance [--known-failures=a,b,...]
//
// Exit status is 0 when the set of failing criteria equals the known-failures list.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gfeig/gfeig.hpp"

using namespace gfeig;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
    std::string what;
    bool ok;
};

struct Criterion {
    int id;
    std::vector<Check> checks;
    void expect(bool ok, const char* fmt, auto... args) {
        char buf[512];
        std::snprintf(buf, sizeof buf, fmt, args...);
        checks.push_back({buf, ok});
    }
    bool passed() const {
        for (const auto& c : checks)
            if (!c.ok) return false;
        return true;
    }
};

ProblemSpec first_example() {
    ProblemSpec p;
    p.tau = RateSpec::constant(1.0);
    p.beta = RateSpec::power_law(1.0, 1.0);
    p.kernel = KernelSpec::uniform();
    return p;
}

ProblemSpec linear_tau(unsigned n) {
    ProblemSpec p;
    p.tau = RateSpec::power_law(1.0, 1.0);
    p.beta = RateSpec::power_law(1.0, n);
    p.kernel = KernelSpec::uniform();
    return p;
}

struct Solve {
    ProblemSpec problem;
    DiscreteOperator op;
    EigenTriple t;
};

std::vector<Solve> converged;  // every converged solve feeds criterion 5

Solve solve(const ProblemSpec& p, double R, std::size_t N, double eta) {
    const Grid g = build_grid(R, N);
    Solve s{p, assemble_direct(p, g, TruncationParams::standard(p, R, eta)), {}};
    s.t = solve_truncated(s.op, assemble_adjoint(s.op));
    converged.push_back(s);
    return s;
}

// -- 1 ------------------------------------------------------------------------

Criterion criterion1() {
    Criterion c{1, {}};
    const auto p = first_example();
    const auto sched = Schedule::ending_at(20.0, 2000, 1e-6, 2, 2.0, 0.1);
    const auto res = continuation_solve(p, sched);
    const auto& st = res.stages.back();
    const auto& t = res.triples.back();
    const auto ex = oracles::example_linear_beta(1.0, 1.0);
    const double l1 = oracles::l1_distance(t.grid, t.U, ex.sample_U(t.grid));
    const double dphi = oracles::max_relative_deviation(t.grid, t.phi, ex.sample_phi(t.grid), 0.0, 10.0);
    double slowest = 0.0;
    for (const auto& s : res.stages) slowest = std::max(slowest, s.seconds);
    c.expect(res.verdict == Verdict::converged, "verdict %s", std::string(to_string(res.verdict)).c_str());
    c.expect(std::abs(st.lambda - 1.0) < 1e-2, "|lambda - 1| = %.3e (< 1e-2)", std::abs(st.lambda - 1.0));
    c.expect(std::abs(st.lambda_richardson - 1.0) < 1e-3, "|richardson - 1| = %.3e (< 1e-3)",
             std::abs(st.lambda_richardson - 1.0));
    c.expect(l1 < 1e-2, "L1(U) = %.3e (< 1e-2)", l1);
    c.expect(dphi < 2e-2, "max rel dev phi on [0,10] = %.3e (< 2e-2)", dphi);
    c.expect(slowest < 10.0, "slowest stage %.2f s (< 10 s)", slowest);
    Solve s{p, assemble_direct(p, t.grid, TruncationParams::standard(p, 20.0, 1e-6)), t};
    converged.push_back(s);
    return c;
}

// -- 2 ------------------------------------------------------------------------

Criterion criterion2() {
    Criterion c{2, {}};
    const double slope_exact[] = {1.0, std::sqrt(M_PI / 2.0)};
    for (unsigned n : {1u, 2u}) {
        const auto t0 = Clock::now();
        const auto s = solve(linear_tau(n), 20.0, 2000, 1e-3);
        const double secs = seconds_since(t0);
        const auto ex = oracles::example_linear_tau(1.0, 1.0, n);
        const double dl = std::abs(s.t.lambda - ex.lambda);
        const double l1 = oracles::l1_distance(s.t.grid, s.t.U, ex.sample_U(s.t.grid));
        const double slope = oracles::weighted_slope(s.t.grid, s.t.phi, s.t.U);
        const double ds = std::abs(slope / slope_exact[n - 1] - 1.0);
        c.expect(dl < 1e-2, "n=%u |lambda - 1| = %.3e (< 1e-2)", n, dl);
        c.expect(l1 < 1e-2, "n=%u L1(U) = %.3e (< 1e-2)", n, l1);
        c.expect(ds < 2e-2, "n=%u slope %.5f vs %.5f, rel dev %.3e (< 2e-2)", n, slope, slope_exact[n - 1], ds);
        c.expect(secs < 10.0, "n=%u %.2f s (< 10 s)", n, secs);
    }
    return c;
}

// -- 3 ------------------------------------------------------------------------

Criterion criterion3() {
    Criterion c{3, {}};
    const auto t0 = Clock::now();
    for (std::size_t N : {50u, 100u, 200u}) {
        const auto s = solve(first_example(), 20.0, N, 1e-6);
        const auto d = oracles::dense_spectrum(s.op);
        const double dl = std::abs(s.t.lambda - d.perron_value);
        const double l1 = oracles::l1_distance(s.t.grid, s.t.U, d.perron_vector);
        c.expect(dl < 1e-10, "N=%zu |lambda - dense| = %.3e (< 1e-10)", N, dl);
        c.expect(l1 < 1e-8, "N=%zu L1(U - dense) = %.3e (< 1e-8)", N, l1);
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 5.0, "%.2f s (< 5 s)", secs);
    return c;
}

// -- 4 ------------------------------------------------------------------------

Criterion criterion4() {
    Criterion c{4, {}};
    auto with_kernel = [](KernelSpec k) {
        ProblemSpec p = first_example();
        p.kernel = std::move(k);
        return audit(p);
    };
    const auto uni = with_kernel(KernelSpec::uniform());
    c.expect(std::abs(uni.second_moment_c - 1.0 / 3.0) < 1e-10, "uniform c = %.15f (1/3 +- 1e-10)",
             uni.second_moment_c);
    const auto mit = with_kernel(KernelSpec::equal_mitosis());
    c.expect(mit.second_moment_c == 0.25, "equal mitosis c = %.17g (exactly 1/4)", mit.second_moment_c);
    const auto ren = with_kernel(KernelSpec::renewal());
    const auto* k3 = ren.find("kappa3");
    c.expect(k3 && k3->status == Status::violated && ren.second_moment_c == 0.5,
             "renewal: kappa3 %s, c = %.17g (flagged, 1/2)", k3 ? std::string(to_string(k3->status)).c_str() : "?",
             ren.second_moment_c);
    const double r = 0.25, rho = 0.5;
    const auto mix = with_kernel(KernelSpec::mixture(r, rho));
    const double expect = (1.0 - 2.0 * r * (1.0 - r) * (1.0 - rho)) / 2.0;
    c.expect(std::abs(mix.second_moment_c - expect) < 1e-12, "mixture(0.25, 0.5) c = %.15f vs %.15f (1e-12)",
             mix.second_moment_c, expect);
    return c;
}

// -- 5 ------------------------------------------------------------------------

Criterion criterion5() {
    Criterion c{5, {}};
    std::size_t bad_sign = 0, bad_lower = 0, bad_dual = 0, bad_nonneg = 0, bad_strict = 0;
    double worst_dual = 0.0, worst_slack = std::numeric_limits<double>::infinity();
    for (const auto& s : converged) {
        const auto& t = s.t;
        const auto b = verify_bounds(t, s.problem, s.op);
        if (!(t.lambda > 0.0)) ++bad_sign;
        if (!b.lower_ok) ++bad_lower;
        worst_slack = std::min(worst_slack, b.lower_slack);
        const double dd = std::abs(t.lambda_dual - t.lambda) / std::abs(t.lambda);
        worst_dual = std::max(worst_dual, dd);
        if (dd > 1e-11) ++bad_dual;
        for (std::size_t j = 0; j < t.U.size(); ++j) {
            if (t.U[j] < 0.0 || t.phi[j] < 0.0) ++bad_nonneg;
            if ((t.grid.edges[j] >= t.support_infimum_m && !(t.U[j] > 0.0)) || !(t.phi[j] > 0.0)) ++bad_strict;
        }
    }
    c.expect(!converged.empty(), "%zu converged solves checked", converged.size());
    c.expect(bad_sign == 0, "lambda > 0 (%zu violations)", bad_sign);
    c.expect(bad_lower == 0, "lambda >= max(tau U)/2 - 5 dx scale (%zu violations, min slack %.3e)", bad_lower,
             worst_slack);
    c.expect(bad_dual == 0, "adjoint lambda within 1e-11 relative (worst %.3e)", worst_dual);
    c.expect(bad_nonneg == 0, "U, phi >= 0 (%zu negative entries)", bad_nonneg);
    c.expect(bad_strict == 0, "U > 0 beyond m, phi > 0 (%zu zero entries)", bad_strict);

    const auto p = first_example();
    const Grid g = build_grid(20.0, 2000);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 20.0, 1e-6));
    const auto adj = assemble_adjoint(op);
    const double ref = solve_truncated(op, adj).lambda;
    double spread = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SolverConfig cfg;
        cfg.initial = random_start(g.size(), seed);
        spread = std::max(spread, std::abs(solve_truncated(op, adj, cfg).lambda - ref));
    }
    c.expect(spread < 1e-10, "10 random restarts: max |lambda difference| = %.3e (< 1e-10)", spread);
    return c;
}

// -- 6 ------------------------------------------------------------------------

struct CliRun {
    int code = -1;
    std::string verdict;
};

CliRun run_cli(const std::string& config, const fs::path& out) {
    fs::remove_all(out);
    const std::string cmd = std::string(GFEIG_CLI) + " solve '" + config + "' -o '" + out.string() + "' > '" +
                            (out.string() + ".log") + "' 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out / "summary.json");
    if (in) r.verdict = nlohmann::json::parse(in).at("continuation").at("verdict").get<std::string>();
    return r;
}

Criterion criterion6() {
    Criterion c{6, {}};
    const fs::path base = fs::temp_directory_path() / ("gfeig_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(base);
    const auto affine = run_cli(std::string(GFEIG_CONFIG_DIR) + "/affine_nonexistence.cfg", base / "affine");
    c.expect(affine.verdict == "diverging_first_moment" && affine.code == 3,
             "tau = 1 + 2x, beta = 1, 4 stages: verdict %s, exit %d", affine.verdict.c_str(), affine.code);
    const auto lin = run_cli(std::string(GFEIG_CONFIG_DIR) + "/linear_tau_nonexistence.cfg", base / "linear");
    c.expect(lin.verdict == "lambda_not_settling" && lin.code == 3, "tau = x/2, beta = 1, 4 stages: verdict %s, exit %d",
             lin.verdict.c_str(), lin.code);
    fs::remove_all(base);
    return c;
}

// -- 7 ------------------------------------------------------------------------

struct EvolveRun {
    double h_ratio = 0.0, worst_rise = 0.0, drift_exact = 0.0, drift_discrete = 0.0, seconds = 0.0;
};

EvolveRun evolve_random(std::size_t N) {
    const auto t0 = Clock::now();
    const auto p = first_example();
    const Grid g = build_grid(20.0, N);
    const auto op = evolution_operator(p, g);
    const auto discrete = evolution_triple(op);
    const auto ex = oracles::example_linear_beta(1.0, 1.0);
    const auto exact = sampled_triple(g, ex.lambda, ex.sample_U(g), ex.sample_phi(g));
    const auto u0 = random_profile(g, 7);
    EvolutionConfig cfg;
    cfg.T = 40.0;
    cfg.stride = 1;
    const auto s = evolve(op, u0, cfg, &discrete);
    EvolveRun r;
    const double H0 = s.entropy_series.front().H;
    r.h_ratio = s.entropy_series.back().H / H0;
    r.worst_rise = s.worst_h_increase / H0;
    for (const auto& e : s.entropy_series)
        r.drift_discrete = std::max(r.drift_discrete, std::abs(e.pairing / s.pairing_u0 - 1.0));
    // the continuum pairing <u, phi> e^{-t} with the closed-form phi, from the recorded profiles
    const double c0 = pairing(g, u0, exact.phi);
    for (const auto& row : s.ledger) {
        // phi = (1 + x)/2 makes the pairing (number + mass)/2
        const double pe = 0.5 * (row.number + row.mass) * std::exp(-ex.lambda * row.t);
        r.drift_exact = std::max(r.drift_exact, std::abs(pe / c0 - 1.0));
    }
    r.seconds = seconds_since(t0);
    return r;
}

Criterion criterion7() {
    Criterion c{7, {}};
    const auto a = evolve_random(1000);
    const auto b = evolve_random(2000);
    c.expect(b.h_ratio < 1e-3, "N=2000: H(T)/H(0) = %.3e (< 1e-3)", b.h_ratio);
    c.expect(b.worst_rise < 1e-6, "N=2000: worst one-step H increase = %.3e H(0) (< 1e-6)", b.worst_rise);
    c.expect(b.drift_exact < 1e-3, "N=2000: drift of <u, (1+x)/2> e^{-t} = %.3e (< 1e-3)", b.drift_exact);
    c.expect(b.drift_exact <= 0.55 * a.drift_exact, "drift N=1000 -> 2000: %.3e -> %.3e (ratio %.2f, <= 0.55)",
             a.drift_exact, b.drift_exact, b.drift_exact / a.drift_exact);
    c.expect(true, "for reference, drift against the discrete triple: %.3e (N=1000), %.3e (N=2000)",
             a.drift_discrete, b.drift_discrete);
    c.expect(b.seconds < 60.0, "N=2000: %.2f s (< 60 s)", b.seconds);
    return c;
}

// -- 8 ------------------------------------------------------------------------

double three_grid_order(const ProblemSpec& p, double eta) {
    double l[3];
    const std::size_t Ns[] = {500, 1000, 2000};
    for (int k = 0; k < 3; ++k) l[k] = solve(p, 20.0, Ns[k], eta).t.lambda;
    return std::log2((l[0] - l[1]) / (l[1] - l[2]));
}

Criterion criterion8() {
    Criterion c{8, {}};
    const double q1 = three_grid_order(first_example(), 1e-6);
    const double q2 = three_grid_order(linear_tau(1), 1e-3);
    c.expect(q1 >= 0.8 && q1 <= 1.2, "tau = 1, beta = x: observed order %.4f (in [0.8, 1.2])", q1);
    c.expect(q2 >= 0.8 && q2 <= 1.2, "tau = x, beta = x: observed order %.4f (in [0.8, 1.2])", q2);
    return c;
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    for (const auto& part : split(s, ','))
        if (!part.empty()) out.insert(std::stoi(part));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> known;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        const std::string flag = "--known-failures=";
        if (a.rfind(flag, 0) == 0)
            known = parse_list(a.substr(flag.size()));
        else {
            std::fprintf(stderr, "usage: %s [--known-failures=a,b,...]\n", argv[0]);
            return 64;
        }
    }

    const std::vector<std::function<Criterion()>> all = {criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8};
    std::set<int> failed;
    for (const auto& f : all) {
        Criterion c;
        try {
            c = f();
        } catch (const std::exception& e) {
            c.id = static_cast<int>(&f - all.data()) + 1;
            c.checks.push_back({std::string("exception: ") + e.what(), false});
        }
        std::printf("%s %d\n", c.passed() ? "PASS" : "FAIL", c.id);
        for (const auto& ch : c.checks) std::printf("    [%s] %s\n", ch.ok ? "ok" : "!!", ch.what.c_str());
        std::fflush(stdout);
        if (!c.passed()) failed.insert(c.id);
    }
    if (failed == known) {
        std::printf("failing criteria match the documented list\n");
        return 0;
    }
    std::printf("failing criteria differ from the documented list\n");
    return 1;
}
