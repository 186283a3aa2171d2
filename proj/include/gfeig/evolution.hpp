#ifndef GFEIG_EVOLUTION_HPP
#define GFEIG_EVOLUTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "gfeig/discretization.hpp"
#include "gfeig/eigensolver.hpp"
#include "gfeig/errors.hpp"

namespace gfeig {

struct LedgerRow {
    double t = 0.0;
    double number = 0.0;      ///< int u
    double mass = 0.0;        ///< int x u
    double beta_moment = 0.0;  ///< int beta u
    double tau_moment = 0.0;   ///< int tau u
};

struct EntropyPoint {
    double t = 0.0;
    double H = 0.0;
    double pairing = 0.0;  ///< <u, phi> e^{-lambda t}
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> u;
};

struct EvolutionConfig {
    double T = 1.0;
    double cfl = 0.9;
    /// growth rate factored out of the stored profile; NaN takes the monitor's lambda, else 0
    double lambda_est = std::numeric_limits<double>::quiet_NaN();
    std::size_t stride = 0;  ///< ledger/snapshot every `stride` steps (0: first and last only)
    bool keep_snapshots = false;
    std::size_t max_steps = 100'000'000;
};

/// Trajectory of u(., t). The profile is stored as v = u e^{-lambda_est t} to keep it in range.
struct EvolutionState {
    Grid grid;
    double t = 0.0;
    double dt = 0.0;
    double lambda_est = 0.0;
    std::size_t steps = 0;
    std::vector<double> v;
    std::vector<LedgerRow> ledger;
    std::vector<EntropyPoint> entropy_series;  ///< every step when a monitor triple is given
    std::vector<Snapshot> snapshots;
    double pairing_u0 = 0.0;                   ///< <u0, phi> of the monitor
    double worst_h_increase = 0.0;             ///< largest single-step increase of H

    /// u(., t) e^{-lambda t}
    std::vector<double> rescaled(double lambda) const {
        const double f = std::exp((lambda_est - lambda) * t);
        std::vector<double> r(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) r[j] = v[j] * f;
        return r;
    }
    std::vector<double> u() const { return rescaled(0.0); }
};

inline double pairing(const Grid& g, std::span<const double> u, std::span<const double> phi) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += u[j] * phi[j] * g.widths[j];
    return s;
}

namespace detail {

inline double entropy_from_rescaled(const Grid& g, std::span<const double> ur, const EigenTriple& t, double c) {
    double h = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) h += std::abs(ur[j] - c * t.U[j]) * t.phi[j] * g.widths[j];
    return h;
}

inline LedgerRow ledger_row(const DiscreteOperator& op, const std::vector<double>& v, double t, double scale) {
    LedgerRow r;
    r.t = t;
    const auto& g = op.grid;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double uw = v[j] * scale * g.widths[j];
        r.number += uw;
        r.mass += g.centers[j] * uw;
        r.beta_moment += op.beta[j] * uw;
        r.tau_moment += op.center_tau[j] * uw;
    }
    return r;
}

}  // namespace detail

/// H(t) = sum_j |u_j e^{-lambda t} - <u0, phi> U_j| phi_j w_j.
inline double gre_distance(const EvolutionState& s, const EigenTriple& t, std::span<const double> u0) {
    if (t.grid.edges != s.grid.edges) throw DomainError("eigentriple and state live on different grids");
    const double c = pairing(s.grid, u0, t.phi);
    const auto ur = s.rescaled(t.lambda);
    return detail::entropy_from_rescaled(s.grid, ur, t, c);
}

/// <u(t), phi> e^{-lambda t}.
inline double conserved_pairing(const EvolutionState& s, const EigenTriple& t) {
    if (t.grid.edges != s.grid.edges) throw DomainError("eigentriple and state live on different grids");
    const auto ur = s.rescaled(t.lambda);
    return pairing(s.grid, ur, t.phi);
}

/// The evolution generator: boundary condition u(x_min, t) = 0, no regularization.
inline DiscreteOperator evolution_operator(const ProblemSpec& problem, const Grid& grid) {
    return assemble_direct(problem, grid, TruncationParams::untruncated(problem, grid.R));
}

/// Largest explicit step keeping every diagonal entry of I + dt (G - lambda_est) nonnegative.
inline double stable_step(const DiscreteOperator& op, double cfl, double lambda_est) {
    double rate = 0.0;
    for (std::size_t j = 0; j < op.size(); ++j)
        rate = std::max(rate, op.edge_tau[j] / op.grid.widths[j] + op.loss[j] + std::max(lambda_est, 0.0));
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return cfl / rate;
}

/// Explicit Euler with upwind transport for du/dt = G u from u0 up to T.
/// With `monitor` (an eigentriple on the same grid) H(t) and the pairing are recorded at every step.
inline EvolutionState evolve(const DiscreteOperator& op, std::vector<double> u0, const EvolutionConfig& cfg,
                             const EigenTriple* monitor = nullptr) {
    const std::size_t N = op.size();
    if (op.adjoint) throw DomainError("evolve needs the direct operator");
    if (u0.size() != N) throw DomainError("initial profile has the wrong size");
    double total = 0.0;
    for (double x : u0) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("initial profile must be finite and >= 0");
        total += x;
    }
    if (!(total > 0.0)) throw DomainError("initial profile is identically zero");
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw DomainError("final time must be > 0");
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw DomainError("cfl must lie in (0, 1]");
    if (monitor && monitor->grid.edges != op.grid.edges)
        throw DomainError("monitor eigentriple lives on a different grid");

    EvolutionState s;
    s.grid = op.grid;
    s.lambda_est = std::isnan(cfg.lambda_est) ? (monitor ? monitor->lambda : 0.0) : cfg.lambda_est;
    s.dt = stable_step(op, cfg.cfl, s.lambda_est);
    if (!(s.dt > 0.0) || s.dt < 1e-14 * cfg.T || cfg.T / s.dt > static_cast<double>(cfg.max_steps))
        throw StepSizeError("stable time step " + std::to_string(s.dt) + " is too small for T = " +
                            std::to_string(cfg.T));
    s.v = std::move(u0);

    double c0 = 0.0, h_prev = 0.0;
    auto observe = [&]() {
        if (!monitor) return;
        const auto ur = s.rescaled(monitor->lambda);
        const double h = detail::entropy_from_rescaled(s.grid, ur, *monitor, c0);
        if (!s.entropy_series.empty()) s.worst_h_increase = std::max(s.worst_h_increase, h - h_prev);
        h_prev = h;
        s.entropy_series.push_back({s.t, h, pairing(s.grid, ur, monitor->phi)});
    };
    auto record = [&]() {
        s.ledger.push_back(detail::ledger_row(op, s.v, s.t, std::exp(s.lambda_est * s.t)));
        if (cfg.keep_snapshots) s.snapshots.push_back({s.t, s.u()});
    };
    if (monitor) {
        c0 = pairing(s.grid, s.v, monitor->phi);
        s.pairing_u0 = c0;
    }
    observe();
    record();

    std::vector<double> gv(N);
    double vmax = *std::max_element(s.v.begin(), s.v.end());
    while (s.t < cfg.T) {
        double dt = s.dt;
        bool last = false;
        if (s.t + dt >= cfg.T) {
            dt = cfg.T - s.t;
            last = true;
        }
        op.apply(s.v, gv);
        double new_max = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            double x = s.v[j] + dt * (gv[j] - s.lambda_est * s.v[j]);
            if (x < 0.0) {
                if (x < -1e-12 * vmax) throw PositivityViolation("negative density at cell " + std::to_string(j));
                x = 0.0;
            }
            s.v[j] = x;
            new_max = std::max(new_max, x);
        }
        vmax = new_max;
        s.t = last ? cfg.T : s.t + dt;
        ++s.steps;
        observe();
        if (last || (cfg.stride > 0 && s.steps % cfg.stride == 0)) record();
    }
    return s;
}

inline EvolutionState evolve(const ProblemSpec& problem, const Grid& grid, std::vector<double> u0,
                             const EvolutionConfig& cfg, const EigenTriple* monitor = nullptr) {
    return evolve(evolution_operator(problem, grid), std::move(u0), cfg, monitor);
}

/// Principal eigentriple of the evolution generator (same grid, same boundary condition).
inline EigenTriple evolution_triple(const DiscreteOperator& op, const SolverConfig& cfg = {}) {
    return solve_truncated(op, assemble_adjoint(op), cfg);
}

/// Eigentriple assembled from grid samples (for example of a closed form).
inline EigenTriple sampled_triple(const Grid& g, double lambda, std::vector<double> U, std::vector<double> phi) {
    if (U.size() != g.size() || phi.size() != g.size()) throw DomainError("samples have the wrong size");
    EigenTriple t;
    t.grid = g;
    t.lambda = t.lambda_dual = lambda;
    t.U = std::move(U);
    t.phi = std::move(phi);
    return t;
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

inline std::vector<double> gaussian_profile(const Grid& g, double center, double width) {
    if (!(width > 0.0)) throw DomainError("gaussian width must be > 0");
    std::vector<double> u(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double z = (g.centers[j] - center) / width;
        u[j] = std::exp(-0.5 * z * z);
    }
    return u;
}

/// Independent uniform(0, 1] cell values.
inline std::vector<double> random_profile(const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> u(g.size());
    for (double& x : u) x = 1.0 - dist(rng);
    return u;
}

}  // namespace gfeig

#endif  // GFEIG_EVOLUTION_HPP
