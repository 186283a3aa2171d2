#ifndef GFEIG_ASSUMPTION_AUDIT_HPP
#define GFEIG_ASSUMPTION_AUDIT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfeig/grid.hpp"
#include "gfeig/problem_model.hpp"
#include "gfeig/quadrature.hpp"

namespace gfeig {

enum class Status { satisfied, violated, inconclusive };

inline std::string_view to_string(Status s) {
    switch (s) {
        case Status::satisfied: return "satisfied";
        case Status::violated: return "violated";
        case Status::inconclusive: return "inconclusive";
    }
    return "?";
}

struct AssumptionEntry {
    std::string id;
    Status status = Status::inconclusive;
    double witness = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionEntry> entries;
    double second_moment_c = 0.0;
    double middle_mass_lower_bound = 0.0;
    std::vector<std::pair<double, double>> gelation_samples;  ///< (x, x beta / tau)

    const AssumptionEntry* find(std::string_view id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }
    /// First violated assumption, if any. Inconclusive entries do not fail a report.
    std::optional<std::string> first_failure() const {
        for (const auto& e : entries)
            if (e.status == Status::violated) return e.id;
        return std::nullopt;
    }
    bool passed() const { return !first_failure(); }
};

/// Margin separating c < 1/n from roundoff.
inline constexpr double kStrictMargin = 1e-9;

/// int_{eta y}^{(1-eta) y} kappa(x, y) dx (closed interval), independent of y.
inline double middle_mass_bound(const KernelSpec& kernel, double eta_probe) {
    if (!(eta_probe > 0.0 && eta_probe < 0.5)) throw DomainError("middle mass needs 0 < eta < 1/2");
    return kernel_mass_closed(kernel, 1.0, eta_probe, 1.0 - eta_probe);
}

/// eta = min(1/4, (4C)^(-1/gamma)) for gamma > 0.
inline double middle_mass_eta(const KernelSpec& kernel) {
    if (!(kernel.gamma > 0.0)) return 0.25;
    return std::min(0.25, std::pow(4.0 * kernel.shattering_C, -1.0 / kernel.gamma));
}

namespace detail {

/// Integrability of f on (0, a] from integrals over successive decades towards 0.
inline Status integrable_near_zero(const std::function<double(double)>& f, double a, std::string& detail,
                                   double& witness, int decades = 14) {
    std::vector<double> pieces;
    double hi = a;
    for (int k = 0; k < decades; ++k) {
        const double lo = hi / 10.0;
        // integrate f(lo t) / f_ref over t in [1, 10] so tiny decades keep a relative error test
        double ref = std::abs(f(lo * std::sqrt(10.0)));
        if (!(ref > 0.0) || !std::isfinite(ref)) ref = 1.0;
        auto r = quad::integrate([&](double t) { return f(lo * t) / ref; }, 1.0, 10.0, 1e-10);
        if (r) r->value *= lo * ref;
        if (!r) {
            detail = "quadrature failed on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
            witness = std::numeric_limits<double>::quiet_NaN();
            return Status::inconclusive;
        }
        pieces.push_back(r->value);
        hi = lo;
    }
    double total = 0.0;
    for (double p : pieces) total += p;
    witness = total;
    const std::size_t K = pieces.size();
    if (pieces[K - 1] == 0.0 && pieces[K - 2] == 0.0) {
        detail = "vanishes near 0";
        return Status::satisfied;
    }
    bool shrinking = true, non_decreasing = true;
    for (std::size_t k = K - 5; k < K; ++k) {
        if (!(pieces[k] <= 0.98 * pieces[k - 1])) shrinking = false;
        if (!(pieces[k] >= (1.0 - 1e-9) * pieces[k - 1])) non_decreasing = false;
    }
    if (shrinking) {
        detail = "decade pieces contract (last ratio " + std::to_string(pieces[K - 1] / pieces[K - 2]) + ")";
        return Status::satisfied;
    }
    if (non_decreasing) {
        detail = "decade pieces do not shrink towards 0";
        return Status::violated;
    }
    detail = "decade pieces shrink too slowly to decide";
    return Status::inconclusive;
}

/// Least-squares slope of log f against log x over the samples with f > 0.
inline std::optional<double> log_slope(const std::vector<double>& xs, const std::function<double(double)>& f) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (double x : xs) {
        const double v = f(x);
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        const double lx = std::log(x), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double d = n * sxx - sx * sx;
    if (d == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / d;
}

inline std::vector<double> log_samples(double lo, double hi, int per_decade) {
    std::vector<double> xs;
    const int n = static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade));
    for (int k = 0; k <= n; ++k) xs.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / n));
    return xs;
}

}  // namespace detail

/// Numerical audit of the standing assumptions on a probe grid [0, R_probe].
inline AssumptionReport audit(const ProblemSpec& problem, const Grid& probe) {
    problem.validate();
    AssumptionReport rep;
    const auto& K = problem.kernel;
    const double n = problem.n_fragments;
    auto add = [&](std::string id, Status s, double w, std::string d) {
        rep.entries.push_back({std::move(id), s, w, std::move(d)});
    };

    // kernel: probability measure, first moment y/n, second moment c < 1/n
    {
        const double m0 = kernel_mass_closed(K, 1.0, 0.0, 1.0);
        add("kappa1", std::abs(m0 - 1.0) <= 1e-12 ? Status::satisfied : Status::violated, m0, "total mass");
        const double m1 = kernel_moment(K, 1.0, 1);
        const double tol = K.kind == KernelKind::tabulated_density ? 1e-9 : 1e-12;
        add("kappa2", std::abs(m1 - 1.0 / n) <= tol ? Status::satisfied : Status::violated, m1,
            "first moment / y, expected 1/" + std::to_string(static_cast<int>(n)));
        const double c = kernel_moment(K, 1.0, 2);
        rep.second_moment_c = c;
        add("kappa3", c < 1.0 / n - kStrictMargin ? Status::satisfied : Status::violated, c,
            "second moment / y^2 against 1/n");
    }

    const double R = probe.R;
    const double top_lo = R * 1e-4;

    // rates in the class P: fitted growth exponents over the last 4 decades (heuristic)
    {
        const auto xs = detail::log_samples(std::max(top_lo, problem.x_min > 0 ? problem.x_min : top_lo), R, 10);
        auto tau = [&](double x) { return eval_rate(problem.tau, x); };
        auto beta = [&](double x) { return eval_rate(problem.beta, x); };
        const auto st = detail::log_slope(xs, tau), sb = detail::log_slope(xs, beta);
        // alpha_0: tau x^alpha_0 bounded near 0, from the slope over [1e-8, 1e-4] R
        const auto small = detail::log_samples(R * 1e-8, R * 1e-4, 5);
        const auto s0 = detail::log_slope(small, tau);
        const double alpha0 = s0 ? std::max(0.0, -*s0) : 0.0;
        if (st && sb)
            add("betatauspace", Status::satisfied, *st,
                "heuristic: tau ~ x^" + std::to_string(*st) + ", beta ~ x^" + std::to_string(*sb) +
                    " on the probe tail, alpha_0 = " + std::to_string(alpha0));
        else
            add("betatauspace", Status::inconclusive, std::numeric_limits<double>::quiet_NaN(),
                "rates vanish on the probe tail, no exponent fitted");
    }

    // tau > 0 on (0, R]
    {
        double m = std::numeric_limits<double>::infinity();
        for (double x : probe.centers)
            if (x > 0.0) m = std::min(m, eval_rate(problem.tau, x));
        m = std::min(m, eval_rate(problem.tau, R));
        add("taupositivity", m > 0.0 ? Status::satisfied : Status::violated, m, "min tau over the probe cells");
    }

    // Supp beta = [b, inf)
    {
        const double b = problem.beta.support_infimum;
        bool ok = true;
        double worst = std::numeric_limits<double>::infinity();
        for (double x : probe.centers)
            if (x > b) {
                const double v = eval_rate(problem.beta, x);
                worst = std::min(worst, v);
                if (!(v > 0.0)) ok = false;
            }
        add("betasupport", ok ? Status::satisfied : Status::violated, b,
            ok ? "beta > 0 beyond b" : "beta vanishes somewhere beyond b");
    }

    // small fragments: F(z) <= min(1, C z^gamma) and x^gamma / tau integrable near 0
    {
        double worst = 0.0;
        for (const double z : detail::log_samples(1e-12, 1.0, 40)) {
            const double F = kernel_mass_closed(K, 1.0, 0.0, z);
            const double bound = std::min(1.0, K.shattering_C * std::pow(z, K.gamma));
            worst = std::max(worst, F / bound);
        }
        const bool bound_ok = worst <= 1.0 + 1e-9;
        std::string d;
        double w = 0.0;
        const double a = std::min(1.0, R / 10.0);
        const double x0 = problem.x_min;
        Status integ = Status::satisfied;
        if (x0 > 0.0) {
            d = "domain starts at x_min > 0";
        } else {
            const double g = K.gamma;
            integ = detail::integrable_near_zero(
                [&](double x) { return std::pow(x, g) / eval_rate(problem.tau, x); }, a, d, w);
        }
        Status s = !bound_ok ? Status::violated : integ;
        add("kappatau", s, worst,
            "max F(z) / min(1, C z^gamma) = " + std::to_string(worst) + " (gamma = " + std::to_string(K.gamma) +
                ", C = " + std::to_string(K.shattering_C) + "); x^gamma/tau: " + d);
    }

    // beta / tau integrable near 0
    {
        std::string d;
        double w = 0.0;
        Status s = Status::satisfied;
        if (problem.x_min > 0.0) {
            d = "domain starts at x_min > 0";
        } else {
            s = detail::integrable_near_zero(
                [&](double x) { return eval_rate(problem.beta, x) / eval_rate(problem.tau, x); },
                std::min(1.0, R / 10.0), d, w);
        }
        add("betatau0", s, w, d);
    }

    // x beta / tau -> infinity: trend over the last 4 decades
    {
        for (double x : detail::log_samples(top_lo, R, 10)) {
            const double t = eval_rate(problem.tau, x);
            rep.gelation_samples.emplace_back(x, t > 0.0 ? x * eval_rate(problem.beta, x) / t
                                                         : std::numeric_limits<double>::infinity());
        }
        const auto& gs = rep.gelation_samples;
        const std::size_t M = gs.size();
        bool monotone = true;
        for (std::size_t k = 1; k < M; ++k)
            if (!(gs[k].second >= gs[k - 1].second)) monotone = false;
        const double last = gs[M - 1].second, decade_ago = gs[M - 11].second;
        const double growth = decade_ago > 0.0 ? last / decade_ago : std::numeric_limits<double>::infinity();
        const double rel = std::abs(last - decade_ago) / std::max(std::abs(last), 1e-300);
        Status s;
        std::string d;
        if (monotone && growth >= 2.0) {
            s = Status::satisfied;
            d = "heuristic: grows by x" + std::to_string(growth) + " over the last decade";
        } else if (rel < 0.01) {
            s = Status::violated;
            d = "levels off near " + std::to_string(last);
        } else {
            s = Status::inconclusive;
            d = "no clear trend over the last decade";
        }
        add("betatauinf", s, last, d);
    }

    // mass away from both ends of the fragmentation interval
    {
        const double eta = middle_mass_eta(K);
        const double mid = middle_mass_bound(K, eta);
        rep.middle_mass_lower_bound = mid;
        if (K.gamma > 0.0) {
            const double certified = 1.0 - K.shattering_C * std::pow(eta, K.gamma) - 1.0 / (2.0 * (1.0 - eta));
            add("kappa_middle_mass", mid >= 1.0 / 3.0 ? Status::satisfied : Status::violated, mid,
                "eta = " + std::to_string(eta) + ", threshold 1/3, end-mass argument alone gives " +
                    std::to_string(certified));
        } else {
            add("kappa_middle_mass", Status::inconclusive, mid, "gamma = 0: the lemma does not apply");
        }
    }
    return rep;
}

/// Default probe: uniform grid on [x_min, R_probe].
inline AssumptionReport audit(const ProblemSpec& problem, double R_probe = 1000.0, std::size_t N = 2000) {
    return audit(problem, build_grid(R_probe, N, GridKind::uniform, 1.0, problem.x_min));
}

inline nlohmann::json to_json(const AssumptionReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["passed"] = r.passed();
    j["second_moment_c"] = r.second_moment_c;
    j["middle_mass_lower_bound"] = r.middle_mass_lower_bound;
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    for (const auto& e : r.entries)
        j["entries"].push_back(
            {{"id", e.id}, {"status", std::string(to_string(e.status))}, {"witness", num(e.witness)}, {"detail", e.detail}});
    for (const auto& [x, v] : r.gelation_samples) j["gelation_samples"].push_back({x, num(v)});
    return j;
}

}  // namespace gfeig

#endif  // GFEIG_ASSUMPTION_AUDIT_HPP
