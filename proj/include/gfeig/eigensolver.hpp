#ifndef GFEIG_EIGENSOLVER_HPP
#define GFEIG_EIGENSOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gfeig/discretization.hpp"
#include "gfeig/errors.hpp"
#include "gfeig/hessenberg_lu.hpp"

namespace gfeig {

struct SolverConfig {
    double shift_nu = 0.0;  ///< initial shift; 0 picks 2 x the largest |diagonal| entry
    double tol_lambda = 1e-12;
    std::size_t max_iter = 100000;
    bool contraction_monitor = true;
    bool adaptive_shift = true;  ///< lower nu towards lambda using Collatz-Wielandt bounds
    double m_threshold = 1e-8;
    std::optional<std::vector<double>> initial;  ///< start vector, must be >= 0 and nonzero
};

/// phi_j <= C x_j^k + theta on the grid.
struct DualGrowth {
    double k = 0.0;
    double theta = 0.0;
    double C = 0.0;
    bool holds = false;
};

struct EigenTriple {
    Grid grid;
    double lambda = 0.0;
    double lambda_dual = 0.0;
    std::vector<double> U;    ///< cell averages, sum U_j w_j = 1
    std::vector<double> phi;  ///< sum phi_j U_j w_j = 1
    std::vector<double> tau;  ///< tau_eta at cell centers
    double delta = 0.0;
    double support_infimum_m = 0.0;
    double residual_direct = 0.0;
    double residual_dual = 0.0;
    DualGrowth dual_growth;
    std::size_t iterations = 0;
    double shift = 0.0;
    double contraction_ratio = 0.0;  ///< largest observed ratio of successive iterate changes (after warm-up)

    std::vector<double> tau_u() const {
        std::vector<double> r(U.size());
        for (std::size_t j = 0; j < U.size(); ++j) r[j] = tau[j] * U[j];
        return r;
    }
    double first_moment() const {
        double s = 0.0;
        for (std::size_t j = 0; j < U.size(); ++j) s += grid.centers[j] * U[j] * grid.widths[j];
        return s;
    }
};

namespace detail {

struct IterationOutcome {
    double lambda = 0.0;
    std::vector<double> v;
    std::size_t iterations = 0;
    double nu = 0.0;
    double contraction = 0.0;
    double residual = 0.0;
};

inline double weighted_sum(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s;
}

/// Inverse power iteration on (nu I - G)^-1. For nu above the principal eigenvalue
/// the inverse is a nonnegative matrix whose dominant eigenvalue 1/(nu - lambda)
/// belongs to the Perron vector. With adaptive_shift the shift follows the
/// Collatz-Wielandt upper bound max_i (G v)_i / v_i of the current positive iterate.
inline IterationOutcome shifted_inverse_iteration(const DiscreteOperator& op, double nu0, const SolverConfig& cfg,
                                                  std::vector<double> v) {
    const std::size_t N = op.size();
    const auto& w = op.grid.widths;
    const double diag = op.diagonal_scale();
    const double eps = std::numeric_limits<double>::epsilon();

    HessenbergLU::RowMatrix G = op.adjoint ? HessenbergLU::RowMatrix(op.dense().transpose())
                                           : HessenbergLU::RowMatrix(op.dense());
    HessenbergLU lu;
    double nu = nu0;
    lu.factor_shifted(G, nu);

    double s0 = weighted_sum(v, w);
    if (!(s0 > 0.0)) throw DomainError("start vector must be nonnegative and nonzero");
    for (double& x : v) x /= s0;

    IterationOutcome out;
    std::vector<double> x(N), gx(N);
    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    double prev_diff = 0.0;
    std::size_t settled = 0;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        x = v;
        if (op.adjoint)
            lu.solve_transpose(x);
        else
            lu.solve(x);
        const double s = weighted_sum(x, w);
        if (!(std::abs(s) > 0.0) || !std::isfinite(s))
            throw NonConvergence("shifted solve lost the iterate", lambda_prev, v);
        for (double& xi : x) xi /= s;

        op.apply(x, gx);
        const double lambda = weighted_sum(gx, w);
        const double lscale = std::max(std::abs(lambda), 1e-12 * diag);
        double res = 0.0;
        double xmax = 0.0;
        double xmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < N; ++i) {
            res += std::abs(gx[i] - lambda * x[i]) * w[i];
            xmax = std::max(xmax, std::abs(x[i]));
            xmin = std::min(xmin, x[i]);
        }
        double hi = -std::numeric_limits<double>::infinity();
        const double floor = 1e-280 * xmax;
        for (std::size_t i = 0; i < N; ++i)
            if (x[i] > floor) hi = std::max(hi, gx[i] / x[i]);

        double diff = 0.0;
        for (std::size_t i = 0; i < N; ++i) diff += std::abs(x[i] - v[i]) * w[i];
        if (cfg.contraction_monitor && it > 3 && prev_diff > 0.0 && diff > 1e3 * eps)
            out.contraction = std::max(out.contraction, diff / prev_diff);
        prev_diff = diff;

        v.swap(x);
        const double res_tol = std::max(10.0 * cfg.tol_lambda, 64.0 * eps * diag / lscale);
        const bool lambda_ok = std::isfinite(lambda_prev) &&
                               std::abs(lambda - lambda_prev) <= std::max(cfg.tol_lambda * lscale, 16.0 * eps * diag);
        lambda_prev = lambda;
        if (lambda_ok && res / lscale <= res_tol) {
            if (++settled >= 2) {
                out.lambda = lambda;
                out.v = std::move(v);
                out.iterations = it;
                out.nu = nu;
                out.residual = res / lscale;
                return out;
            }
        } else {
            settled = 0;
        }

        if (cfg.adaptive_shift && xmin >= 0.0 && std::isfinite(hi)) {
            const double margin = std::max(hi - lambda, 1e-10 * lscale);
            const double candidate = hi + margin;
            if (candidate < nu) {
                nu = candidate;
                lu.factor_shifted(G, nu);
            }
        }
    }
    throw NonConvergence("shifted inverse iteration exceeded max_iter", lambda_prev, v);
}

inline void enforce_nonnegative(std::vector<double>& v, std::string_view what) {
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    for (double& x : v) {
        if (x < -1e-14 * vmax) throw PositivityViolation(std::string(what) + " has a negative component");
        if (x < 0.0) x = 0.0;
    }
}

/// Fit phi <= C x^k + theta: theta covers [0, 1], k is the smallest half-integer for
/// which phi / x^k does not peak in the last quarter of [1, R].
inline DualGrowth fit_dual_growth(const Grid& g, const std::vector<double>& phi) {
    DualGrowth d;
    const std::size_t N = g.size();
    const double x0 = std::max(1.0, g.origin);
    for (std::size_t j = 0; j < N; ++j)
        if (g.centers[j] <= x0) d.theta = std::max(d.theta, phi[j]);
    const double cutoff = x0 + 0.75 * (g.R - x0);
    for (int step = 1; step <= 40; ++step) {
        const double k = 0.5 * step;
        double best = 0.0;
        double arg = x0;
        for (std::size_t j = 0; j < N; ++j) {
            if (g.centers[j] <= x0) continue;
            const double r = phi[j] / std::pow(g.centers[j], k);
            if (r > best) {
                best = r;
                arg = g.centers[j];
            }
        }
        d.k = k;
        d.C = best;
        if (arg <= cutoff) break;
    }
    d.holds = true;
    for (std::size_t j = 0; j < N; ++j) {
        const double bound = d.C * std::pow(g.centers[j], d.k) + d.theta;
        if (phi[j] > bound * (1.0 + 1e-12)) d.holds = false;
    }
    return d;
}

}  // namespace detail

/// Smallest left cell edge at which tau U exceeds threshold * max(tau U).
inline double support_infimum(const EigenTriple& t, double threshold = 1e-8) {
    const auto tu = t.tau_u();
    double mx = 0.0;
    for (double v : tu) mx = std::max(mx, v);
    if (!(mx > 0.0)) return t.grid.R;
    for (std::size_t j = 0; j < tu.size(); ++j)
        if (tu[j] > threshold * mx) return t.grid.edges[j];
    return t.grid.R;
}

inline double default_shift(const DiscreteOperator& op) {
    return std::max(2.0 * op.diagonal_scale(), op.column_sum_bound() + 1e-3 * op.diagonal_scale());
}

/// Principal eigentriple of the truncated problem: lambda and U from the direct
/// operator, phi from the adjoint at the converged shift.
inline EigenTriple solve_truncated(const DiscreteOperator& op, const DiscreteOperator& adj,
                                   const SolverConfig& cfg = {}) {
    if (op.adjoint || !adj.adjoint) throw DomainError("solve_truncated needs (direct, adjoint) operators");
    if (op.size() != adj.size() || op.grid.edges != adj.grid.edges)
        throw DomainError("direct and adjoint operators live on different grids");
    op.trunc.validate();
    const std::size_t N = op.size();
    const auto& w = op.grid.widths;

    std::vector<double> start = cfg.initial.value_or(std::vector<double>(N, 1.0));
    if (start.size() != N) throw DomainError("initial vector has the wrong size");
    const double nu0 = cfg.shift_nu > 0.0 ? cfg.shift_nu : default_shift(op);

    auto direct = detail::shifted_inverse_iteration(op, nu0, cfg, std::move(start));
    detail::enforce_nonnegative(direct.v, "direct eigenvector");

    SolverConfig dual_cfg = cfg;
    auto dual = detail::shifted_inverse_iteration(adj, direct.nu, dual_cfg, std::vector<double>(N, 1.0));
    detail::enforce_nonnegative(dual.v, "dual eigenvector");

    EigenTriple t;
    t.grid = op.grid;
    t.lambda = direct.lambda;
    t.lambda_dual = dual.lambda;
    t.U = std::move(direct.v);
    t.phi = std::move(dual.v);
    t.delta = op.trunc.delta;
    double pairing = 0.0;
    for (std::size_t j = 0; j < N; ++j) pairing += t.phi[j] * t.U[j] * w[j];
    if (!(pairing > 0.0)) throw PositivityViolation("direct and dual eigenvectors have zero pairing");
    for (double& p : t.phi) p /= pairing;
    t.tau = op.center_tau;
    t.residual_direct = direct.residual;
    t.residual_dual = dual.residual;
    t.iterations = direct.iterations + dual.iterations;
    t.shift = direct.nu;
    t.contraction_ratio = direct.contraction;
    t.support_infimum_m = support_infimum(t, cfg.m_threshold);
    t.dual_growth = detail::fit_dual_growth(t.grid, t.phi);
    return t;
}

/// Build grid, truncation and operators, then solve.
inline EigenTriple solve_problem(const ProblemSpec& problem, const Grid& grid, const TruncationParams& trunc,
                                 const SolverConfig& cfg = {}) {
    auto op = assemble_direct(problem, grid, trunc);
    auto adj = assemble_adjoint(op);
    return solve_truncated(op, adj, cfg);
}

/// Draw a positive start vector for an independent restart.
inline std::vector<double> random_start(std::size_t N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    std::vector<double> v(N);
    for (double& x : v) x = dist(rng);
    return v;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct BoundsDiagnostics {
    double half_max_tau_u = 0.0;
    double lower_slack = 0.0;  ///< lambda - max(tau U)/2 + eps_grid, must be >= 0
    bool lower_ok = false;
    double upper_bound = 0.0;  ///< delta + (n - 1) int beta U
    bool upper_ok = false;
    double balance_gap = 0.0;  ///< lambda - [delta + (n-1) int beta U - int mu U - outflow at R]
    double eps_grid = 0.0;
    DualGrowth dual_growth;
};

inline BoundsDiagnostics verify_bounds(const EigenTriple& t, const ProblemSpec& problem, const DiscreteOperator& op) {
    BoundsDiagnostics d;
    const auto tu = t.tau_u();
    const auto& g = t.grid;
    for (double v : tu) d.half_max_tau_u = std::max(d.half_max_tau_u, 0.5 * v);
    d.eps_grid = 5.0 * g.max_width() * std::max(1.0, std::abs(t.lambda));
    d.lower_slack = t.lambda - d.half_max_tau_u + d.eps_grid;
    d.lower_ok = d.lower_slack >= 0.0;

    const double n = problem.n_fragments;
    double beta_u = 0.0, mu_u = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        beta_u += op.beta[j] * op.column_mass(j) * t.U[j] * g.widths[j];
        mu_u += (op.loss[j] - op.beta[j]) * t.U[j] * g.widths[j];
    }
    d.upper_bound = t.delta + (n - 1.0) * beta_u;
    d.upper_ok = t.lambda <= d.upper_bound + d.eps_grid;
    const double outflow = op.edge_tau.back() * t.U.back();
    d.balance_gap = t.lambda - (t.delta + (n - 1.0) * beta_u - mu_u - outflow);
    d.dual_growth = t.dual_growth;
    return d;
}

/// lambda predicted by the first-moment balance of the untruncated problem,
/// [int tau U + int beta U (n M1 - x) - int x mu U] / int x U, with M1(y) = int x kappa(x, y) dx = y kernel_moment(y, 1).
/// Equals lambda whenever eigenelements exist and R is large; a persistent gap means the
/// number balance and the moment balance select different eigenvalues.
inline double moment_balance_lambda(const EigenTriple& t, const ProblemSpec& problem) {
    const auto& g = t.grid;
    const double n = problem.n_fragments;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.centers[j];
        const double uw = t.U[j] * g.widths[j];
        const double b = eval_rate(problem.beta, x);
        const double m1 = b > 0.0 ? x * kernel_moment(problem.kernel, x, 1) : 0.0;
        num += eval_rate(problem.tau, x) * uw + b * (n * m1 - x) * uw - x * eval_rate(problem.death_mu, x) * uw;
        den += x * uw;
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Continuation (R up, eta down, delta = mu / 2R)
// ---------------------------------------------------------------------------

struct Stage {
    double R = 20.0;
    double eta = 1e-3;
    std::size_t N = 2000;
};

struct Schedule {
    std::vector<Stage> stages;
    GridKind kind = GridKind::uniform;
    double ratio = 1.0;
    bool richardson = true;

    /// R_k = R0 g^k, eta_k = eta0 d^k. Uniform grids keep the cell width (N_k = N0 R_k / R0);
    /// geometric grids keep the small cells and add cells at the top. N is capped at N_max.
    static Schedule geometric(double R0, std::size_t N0, std::size_t count, double R_growth, double eta0,
                              double eta_decay, bool scale_N = true, std::size_t N_max = 4000,
                              GridKind kind = GridKind::uniform, double ratio = 1.0) {
        Schedule s;
        s.kind = kind;
        s.ratio = ratio;
        double R = R0, eta = eta0;
        for (std::size_t k = 0; k < count; ++k) {
            std::size_t N = N0;
            if (scale_N) {
                if (kind == GridKind::uniform)
                    N = static_cast<std::size_t>(std::llround(static_cast<double>(N0) * R / R0));
                else
                    N = N0 + static_cast<std::size_t>(std::llround(std::log(R / R0) / std::log(ratio)));
            }
            N = std::min(N, N_max);
            N += N % 2;
            s.stages.push_back({R, eta, N});
            R *= R_growth;
            eta *= eta_decay;
        }
        return s;
    }

    /// `count` stages whose last one is exactly (R, N, eta); earlier stages shrink R by
    /// R_growth and grow eta by 1 / eta_decay per step.
    static Schedule ending_at(double R, std::size_t N, double eta, std::size_t count, double R_growth,
                              double eta_decay, bool scale_N = true, GridKind kind = GridKind::uniform,
                              double ratio = 1.0) {
        if (count == 0) throw ConfigurationError("continuation schedule is empty");
        if (!(R_growth > 1.0)) throw ConfigurationError("schedule R_growth must be > 1");
        if (!(eta_decay > 0.0 && eta_decay <= 1.0)) throw ConfigurationError("schedule eta_decay must lie in (0, 1]");
        Schedule s;
        s.kind = kind;
        s.ratio = ratio;
        for (std::size_t k = 0; k < count; ++k) {
            const double back = static_cast<double>(count - 1 - k);
            const double Rk = R / std::pow(R_growth, back);
            std::size_t Nk = N;
            if (scale_N && k + 1 < count) {
                if (kind == GridKind::uniform)
                    Nk = static_cast<std::size_t>(std::llround(static_cast<double>(N) * Rk / R));
                else
                    Nk = N - std::min<std::size_t>(N - 2, static_cast<std::size_t>(std::llround(
                                                             back * std::log(R_growth) / std::log(ratio))));
                Nk = std::max<std::size_t>(Nk + Nk % 2, 4);
            }
            s.stages.push_back({Rk, eta / std::pow(eta_decay, back), Nk});
        }
        return s;
    }
};

enum class Verdict { converged, diverging_first_moment, lambda_not_settling };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::converged: return "converged";
        case Verdict::diverging_first_moment: return "diverging_first_moment";
        case Verdict::lambda_not_settling: return "lambda_not_settling";
    }
    return "?";
}

struct StageRecord {
    Stage stage;
    double delta = 0.0;
    double lambda = 0.0;
    double lambda_coarse = std::numeric_limits<double>::quiet_NaN();
    double lambda_richardson = std::numeric_limits<double>::quiet_NaN();
    double first_moment = 0.0;
    double moment_lambda = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

struct ContinuationResult {
    Schedule schedule;
    std::vector<StageRecord> stages;
    std::vector<EigenTriple> triples;
    double extrapolated_lambda = std::numeric_limits<double>::quiet_NaN();
    double observed_order = std::numeric_limits<double>::quiet_NaN();  ///< three-grid fit at the last stage
    std::optional<double> positive_lambda_R;  ///< smallest scheduled R with lambda > 0 from there on
    Verdict verdict = Verdict::converged;
    std::string message;

    std::vector<double> lambdas() const {
        std::vector<double> l;
        for (const auto& s : stages) l.push_back(s.lambda);
        return l;
    }
    std::vector<double> first_moments() const {
        std::vector<double> m;
        for (const auto& s : stages) m.push_back(s.first_moment);
        return m;
    }
    std::vector<double> moment_lambdas() const {
        std::vector<double> m;
        for (const auto& s : stages) m.push_back(s.moment_lambda);
        return m;
    }
};

/// Thresholds of the non-existence signatures.
struct VerdictRules {
    double growth_persistence = 0.5;  ///< last first-moment increment over the previous one
    double min_growth = 0.1;          ///< relative first-moment growth over the last 3 stages
    double balance_gap = 0.1;         ///< relative gap between lambda and the moment-balance lambda
    double gap_persistence = 0.5;     ///< gap may shrink by at most this factor over the last 3 stages
    double settle_rel_change = 0.05;
    std::size_t settle_min_stages = 4;
    double settled_floor = 1e-9;      ///< |d lambda| / |lambda| treated as settled
};

/// Order of the checks: unbounded first moment, persistent balance gap, lambda changes.
inline Verdict classify(const std::vector<double>& lambdas, const std::vector<double>& moments, std::string& why,
                        const VerdictRules& rules = {}, const std::vector<double>& moment_lambdas = {}) {
    const std::size_t K = lambdas.size();
    if (K >= 3) {
        const double a = moments[K - 3], b = moments[K - 2], c = moments[K - 1];
        if (a > 0.0 && b > a && c > b && (c - b) >= rules.growth_persistence * (b - a) &&
            c >= (1.0 + rules.min_growth) * a) {
            why = "first moment keeps growing: " + std::to_string(a) + " -> " + std::to_string(b) + " -> " +
                  std::to_string(c);
            return Verdict::diverging_first_moment;
        }
    }
    if (K >= 3 && moment_lambdas.size() == K) {
        auto gap = [&](std::size_t k) {
            const double l = lambdas[k], m = moment_lambdas[k];
            return std::abs(l - m) / std::max({std::abs(l), std::abs(m), 1e-300});
        };
        const double g0 = gap(K - 3), g2 = gap(K - 1);
        if (std::isfinite(g2) && g2 >= rules.balance_gap && g2 >= rules.gap_persistence * g0) {
            why = "number balance gives lambda=" + std::to_string(lambdas[K - 1]) + " but moment balance gives " +
                  std::to_string(moment_lambdas[K - 1]);
            return Verdict::lambda_not_settling;
        }
    }
    if (K >= rules.settle_min_stages) {
        const double rel = std::abs(lambdas[K - 1] - lambdas[K - 2]) / std::max(std::abs(lambdas[K - 1]), 1e-300);
        if (rel >= rules.settle_rel_change) {
            why = "lambda still moves by " + std::to_string(rel) + " (relative) at the last stage";
            return Verdict::lambda_not_settling;
        }
    }
    if (K >= 3) {
        const double d1 = std::abs(lambdas[K - 2] - lambdas[K - 3]);
        const double d2 = std::abs(lambdas[K - 1] - lambdas[K - 2]);
        const double floor = rules.settled_floor * std::max(std::abs(lambdas[K - 1]), 1e-300);
        if (!(d2 < d1) && d2 > floor) {
            why = "lambda differences are not decreasing over the last 3 stages";
            return Verdict::lambda_not_settling;
        }
    }
    why = "lambda settled";
    return Verdict::converged;
}

namespace detail {

/// Aitken delta-squared on the last three values when they contract monotonically.
inline double stage_extrapolate(const std::vector<double>& v) {
    const std::size_t K = v.size();
    if (K == 0) return std::numeric_limits<double>::quiet_NaN();
    if (K < 3) return v.back();
    const double a = v[K - 3], b = v[K - 2], c = v[K - 1];
    const double d1 = b - a, d2 = c - b;
    if (d1 == 0.0 || d2 == 0.0) return c;
    const double q = d2 / d1;
    if (!(q > 0.0 && q < 0.9)) return c;
    return c + d2 * q / (1.0 - q);
}

}  // namespace detail

inline ContinuationResult continuation_solve(const ProblemSpec& problem, const Schedule& schedule,
                                             const SolverConfig& cfg = {}, const VerdictRules& rules = {}) {
    if (schedule.stages.empty()) throw ConfigurationError("continuation schedule is empty");
    for (std::size_t k = 1; k < schedule.stages.size(); ++k) {
        if (!(schedule.stages[k].R > schedule.stages[k - 1].R))
            throw ConfigurationError("schedule R must increase");
        if (!(schedule.stages[k].eta <= schedule.stages[k - 1].eta))
            throw ConfigurationError("schedule eta must not increase");
    }
    ContinuationResult res;
    res.schedule = schedule;
    for (const auto& st : schedule.stages) {
        StageRecord rec;
        rec.stage = st;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Grid grid = build_grid(st.R, st.N, schedule.kind, schedule.ratio, problem.x_min);
            const auto trunc = TruncationParams::standard(problem, st.R, st.eta);
            rec.delta = trunc.delta;
            auto t = solve_problem(problem, grid, trunc, cfg);
            rec.lambda = t.lambda;
            rec.first_moment = t.first_moment();
            rec.moment_lambda = moment_balance_lambda(t, problem);
            if (schedule.richardson && st.N % 2 == 0 && st.N >= 32) {
                SolverConfig c2 = cfg;
                c2.initial.reset();
                const Grid coarse = coarsen(grid);
                rec.lambda_coarse = solve_problem(problem, coarse, trunc, c2).lambda;
                rec.lambda_richardson = 2.0 * rec.lambda - rec.lambda_coarse;
            }
            res.triples.push_back(std::move(t));
        } catch (const std::exception& e) {
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            res.verdict = Verdict::lambda_not_settling;
            res.message = "stage R=" + std::to_string(st.R) + " failed: " + e.what();
            res.extrapolated_lambda = detail::stage_extrapolate(res.lambdas());
            return res;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.stages.push_back(rec);
    }

    // positivity probe: smallest scheduled R from which every stage had lambda > 0
    for (std::size_t k = res.stages.size(); k-- > 0;) {
        if (res.stages[k].lambda > 0.0)
            res.positive_lambda_R = res.stages[k].stage.R;
        else
            break;
    }

    std::vector<double> rich;
    for (const auto& s : res.stages) rich.push_back(std::isnan(s.lambda_richardson) ? s.lambda : s.lambda_richardson);
    res.extrapolated_lambda = detail::stage_extrapolate(rich);

    // three-grid order at the final stage
    const auto& last = res.stages.back();
    if (schedule.richardson && last.stage.N % 4 == 0 && last.stage.N >= 64 && !std::isnan(last.lambda_coarse)) {
        SolverConfig c3 = cfg;
        c3.initial.reset();
        const Grid g4 = coarsen(coarsen(build_grid(last.stage.R, last.stage.N, schedule.kind, schedule.ratio,
                                                   problem.x_min)));
        const auto trunc = TruncationParams::standard(problem, last.stage.R, last.stage.eta);
        try {
            const double l4 = solve_problem(problem, g4, trunc, c3).lambda;
            const double num = l4 - last.lambda_coarse, den = last.lambda_coarse - last.lambda;
            if (num != 0.0 && den != 0.0 && num / den > 0.0) res.observed_order = std::log2(num / den);
        } catch (const std::exception&) {
        }
    }

    res.verdict = classify(res.lambdas(), res.first_moments(), res.message, rules, res.moment_lambdas());
    return res;
}

}  // namespace gfeig

#endif  // GFEIG_EIGENSOLVER_HPP
