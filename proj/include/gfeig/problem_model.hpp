#ifndef GFEIG_PROBLEM_MODEL_HPP
#define GFEIG_PROBLEM_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfeig/errors.hpp"
#include "gfeig/quadrature.hpp"

namespace gfeig {

namespace detail {

inline void warn_once(std::once_flag& flag, std::string_view message) {
    std::call_once(flag, [&] { std::clog << "gfeig: warning: " << message << '\n'; });
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Rates: polymerization tau(x), fragmentation beta(x), death mu(x).
// ---------------------------------------------------------------------------

enum class RateKind { power_law, affine, constant, tabulated };

inline std::string_view to_string(RateKind k) {
    switch (k) {
        case RateKind::power_law: return "power_law";
        case RateKind::affine: return "affine";
        case RateKind::constant: return "constant";
        case RateKind::tabulated: return "tabulated";
    }
    return "?";
}

/// A nonnegative rate on [0, inf).
///
///   power_law : coeffs = {c, p}    -> c x^p
///   affine    : coeffs = {c0, c1}  -> c0 + c1 x
///   constant  : coeffs = {c}       -> c
///   tabulated : table of (x, value), piecewise linear, constant outside the table
///
/// The value is forced to 0 on [0, support_infimum), which is how a fragmentation
/// rate with Supp beta = [b, inf) is expressed.
struct RateSpec {
    RateKind kind = RateKind::constant;
    std::vector<double> coeffs{0.0};
    double support_infimum = 0.0;
    std::vector<std::pair<double, double>> table;

    static RateSpec constant(double c, double b = 0.0) {
        RateSpec r;
        r.kind = RateKind::constant;
        r.coeffs = {c};
        r.support_infimum = b;
        r.validate();
        return r;
    }
    static RateSpec power_law(double c, double p, double b = 0.0) {
        RateSpec r;
        r.kind = RateKind::power_law;
        r.coeffs = {c, p};
        r.support_infimum = b;
        r.validate();
        return r;
    }
    static RateSpec affine(double c0, double c1, double b = 0.0) {
        RateSpec r;
        r.kind = RateKind::affine;
        r.coeffs = {c0, c1};
        r.support_infimum = b;
        r.validate();
        return r;
    }
    static RateSpec tabulated(std::vector<std::pair<double, double>> points, double b = 0.0) {
        RateSpec r;
        r.kind = RateKind::tabulated;
        r.coeffs.clear();
        r.table = std::move(points);
        r.support_infimum = b;
        r.validate();
        return r;
    }

    void validate() const {
        auto need = [&](std::size_t n) {
            if (coeffs.size() != n)
                throw InvalidSpec(std::string(to_string(kind)) + " rate needs " + std::to_string(n) +
                                  " coefficients");
        };
        for (double c : coeffs)
            if (!detail::finite(c)) throw InvalidSpec("rate coefficient is not finite");
        if (!(support_infimum >= 0.0) || !detail::finite(support_infimum))
            throw InvalidSpec("rate support infimum must be finite and >= 0");
        switch (kind) {
            case RateKind::constant:
                need(1);
                if (coeffs[0] < 0.0) throw InvalidSpec("constant rate is negative");
                break;
            case RateKind::power_law:
                need(2);
                if (coeffs[0] < 0.0) throw InvalidSpec("power-law rate has a negative prefactor");
                break;
            case RateKind::affine:
                need(2);
                if (coeffs[0] < 0.0 || coeffs[1] < 0.0)
                    throw InvalidSpec("affine rate becomes negative on [0, inf)");
                break;
            case RateKind::tabulated:
                if (table.size() < 2) throw InvalidSpec("tabulated rate needs at least two points");
                for (std::size_t i = 0; i < table.size(); ++i) {
                    const auto [x, v] = table[i];
                    if (!detail::finite(x) || !detail::finite(v))
                        throw InvalidSpec("tabulated rate has a non-finite entry");
                    if (v < 0.0) throw InvalidSpec("tabulated rate has a negative value");
                    if (i > 0 && !(x > table[i - 1].first))
                        throw InvalidSpec("tabulated rate abscissae must be strictly increasing");
                }
                break;
        }
    }
};

/// Exact value for the analytic kinds; piecewise-linear interpolation for tables.
inline double eval_rate(const RateSpec& spec, double x) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("rate evaluated outside [0, inf)");
    if (x < spec.support_infimum) return 0.0;
    double v = 0.0;
    switch (spec.kind) {
        case RateKind::constant: v = spec.coeffs[0]; break;
        case RateKind::power_law:
            v = (spec.coeffs[1] == 0.0) ? spec.coeffs[0] : spec.coeffs[0] * std::pow(x, spec.coeffs[1]);
            break;
        case RateKind::affine: v = spec.coeffs[0] + spec.coeffs[1] * x; break;
        case RateKind::tabulated: {
            const auto& t = spec.table;
            if (x <= t.front().first || x >= t.back().first) {
                static std::once_flag flag;
                if (x < t.front().first || x > t.back().first)
                    detail::warn_once(flag, "tabulated rate extrapolated as a constant outside its table");
                v = (x <= t.front().first) ? t.front().second : t.back().second;
                break;
            }
            auto it = std::upper_bound(t.begin(), t.end(), x,
                                       [](double a, const auto& p) { return a < p.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double s = (x - lo.first) / (hi.first - lo.first);
            v = lo.second + s * (hi.second - lo.second);
            break;
        }
    }
    if (v < 0.0 || std::isnan(v)) throw InvalidSpec("rate evaluates to a negative value");
    return v;
}

/// Infimum of the rate over [a, b] (0 <= a <= b). Analytic kinds are monotone on
/// any interval, so the extremes sit at the endpoints; tables add their nodes.
inline double rate_infimum(const RateSpec& spec, double a, double b) {
    if (a > b) std::swap(a, b);
    if (a < spec.support_infimum) return 0.0;
    double m = std::min(eval_rate(spec, a), eval_rate(spec, b));
    if (spec.kind == RateKind::tabulated)
        for (const auto& [x, v] : spec.table)
            if (x > a && x < b) m = std::min(m, v);
    return m;
}

// ---------------------------------------------------------------------------
// Fragmentation kernels: kappa(x, y) = (1/y) kappa0(x/y).
// ---------------------------------------------------------------------------

enum class KernelKind {
    mitosis_r,          ///< kappa0 = (delta_r + delta_{1-r}) / 2, r in [0, 1/2]
    homogeneous_alpha,  ///< kappa0 = (alpha+1)/2 (z^alpha + (1-z)^alpha), alpha > -1
    uniform,            ///< kappa0 = 1
    tabulated_density,  ///< piecewise-linear kappa0 sampled on a uniform z grid
    mitosis_mixture,    ///< rho * renewal + (1 - rho) * mitosis_r
    beta_fragments      ///< kappa0 = (n-1)(1-z)^(n-2): one of n pieces of a uniform split
};

inline std::string_view to_string(KernelKind k) {
    switch (k) {
        case KernelKind::mitosis_r: return "mitosis_r";
        case KernelKind::homogeneous_alpha: return "homogeneous_alpha";
        case KernelKind::uniform: return "uniform";
        case KernelKind::tabulated_density: return "tabulated_density";
        case KernelKind::mitosis_mixture: return "mitosis_mixture";
        case KernelKind::beta_fragments: return "beta_fragments";
    }
    return "?";
}

struct KernelAtom {
    double position;  ///< in z = x / y
    double weight;
};

/// Self-similar fragmentation kernel. `parameter` is r, alpha or n depending on
/// the kind; `rho` is only used by the mixture. `gamma` and `shattering_C` are the
/// constants of the small-fragment bound  int_0^x kappa(z,y) dz <= min(1, C (x/y)^gamma).
struct KernelSpec {
    KernelKind kind = KernelKind::uniform;
    double parameter = 0.0;
    double rho = 0.0;
    double gamma = 1.0;
    double shattering_C = 1.0;
    std::vector<double> table;  ///< kappa0 at z_k = k / (table.size() - 1)

    static KernelSpec uniform() {
        KernelSpec k;
        k.kind = KernelKind::uniform;
        k.gamma = 1.0;
        k.shattering_C = 1.0;
        return k;
    }

    /// General mitosis. For r > 0 any gamma works with C = r^-gamma; gamma = 1 by default.
    static KernelSpec mitosis(double r, double gamma = 1.0) {
        KernelSpec k;
        k.kind = KernelKind::mitosis_r;
        k.parameter = r;
        if (r > 0.0) {
            k.gamma = gamma;
            k.shattering_C = std::pow(r, -gamma);
        } else {
            k.gamma = 0.0;
            k.shattering_C = 1.0;
        }
        k.validate();
        return k;
    }
    static KernelSpec equal_mitosis() { return mitosis(0.5); }
    static KernelSpec renewal() { return mitosis(0.0); }

    /// gamma = min(1, 1 + alpha): for alpha > 0 the density is bounded at 0 and the
    /// small-fragment mass is only linear in x/y.
    static KernelSpec homogeneous(double alpha) {
        KernelSpec k;
        k.kind = KernelKind::homogeneous_alpha;
        k.parameter = alpha;
        k.validate();
        k.gamma = std::min(1.0, 1.0 + alpha);
        k.shattering_C = k.fitted_shattering_constant();
        return k;
    }

    static KernelSpec mixture(double r, double rho) {
        KernelSpec k;
        k.kind = KernelKind::mitosis_mixture;
        k.parameter = r;
        k.rho = rho;
        k.gamma = 0.0;  // the renewal atom at 0 rules out any gamma > 0
        k.shattering_C = 1.0;
        k.validate();
        return k;
    }

    static KernelSpec beta_fragments(double n) {
        KernelSpec k;
        k.kind = KernelKind::beta_fragments;
        k.parameter = n;
        k.validate();
        k.gamma = 1.0;
        k.shattering_C = n - 1.0;  // 1 - (1-z)^(n-1) <= (n-1) z
        return k;
    }

    /// gamma and C are user-supplied for tables.
    static KernelSpec tabulated(std::vector<double> samples, double gamma, double C) {
        KernelSpec k;
        k.kind = KernelKind::tabulated_density;
        k.table = std::move(samples);
        k.gamma = gamma;
        k.shattering_C = C;
        k.validate();
        k.normalize_table();
        return k;
    }

    void validate() const {
        if (!(gamma >= 0.0) || !(shattering_C > 0.0))
            throw InvalidSpec("kernel needs gamma >= 0 and C > 0");
        switch (kind) {
            case KernelKind::mitosis_r:
                if (!(parameter >= 0.0 && parameter <= 0.5)) throw InvalidSpec("mitosis r must lie in [0, 1/2]");
                break;
            case KernelKind::homogeneous_alpha:
                if (!(parameter > -1.0) || !std::isfinite(parameter))
                    throw InvalidSpec("homogeneous kernel needs alpha > -1");
                break;
            case KernelKind::uniform: break;
            case KernelKind::mitosis_mixture:
                if (!(parameter >= 0.0 && parameter <= 0.5)) throw InvalidSpec("mitosis r must lie in [0, 1/2]");
                if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidSpec("mixture weight rho must lie in [0, 1]");
                break;
            case KernelKind::beta_fragments:
                if (!(parameter >= 2.0) || !std::isfinite(parameter))
                    throw InvalidSpec("beta_fragments needs n >= 2");
                break;
            case KernelKind::tabulated_density: {
                if (table.size() < 3) throw InvalidSpec("tabulated kernel needs at least 3 samples");
                double total = 0.0;
                for (double v : table) {
                    if (!std::isfinite(v) || v < 0.0) throw InvalidSpec("tabulated kernel has a negative sample");
                    total += v;
                }
                if (!(total > 0.0)) throw InvalidSpec("tabulated kernel has zero mass");
                const std::size_t m = table.size() - 1;
                for (std::size_t i = 0; i <= m; ++i) {
                    const double a = table[i], b = table[m - i];
                    if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}))
                        throw InvalidSpec("tabulated kernel is not symmetric about 1/2");
                }
                break;
            }
        }
    }

    /// Point masses of kappa0 (empty for density kinds).
    std::vector<KernelAtom> atoms() const {
        switch (kind) {
            case KernelKind::mitosis_r:
                return {{parameter, 0.5}, {1.0 - parameter, 0.5}};
            case KernelKind::mitosis_mixture:
                return {{0.0, 0.5 * rho},
                        {1.0, 0.5 * rho},
                        {parameter, 0.5 * (1.0 - rho)},
                        {1.0 - parameter, 0.5 * (1.0 - rho)}};
            default: return {};
        }
    }

    bool is_atomic() const {
        return kind == KernelKind::mitosis_r || kind == KernelKind::mitosis_mixture;
    }

    /// kappa0(z) for density kinds, z in [0, 1].
    double density(double z) const {
        if (z < 0.0 || z > 1.0) return 0.0;
        switch (kind) {
            case KernelKind::uniform: return 1.0;
            case KernelKind::homogeneous_alpha: {
                const double a = parameter;
                return 0.5 * (a + 1.0) * (std::pow(z, a) + std::pow(1.0 - z, a));
            }
            case KernelKind::beta_fragments: {
                const double n = parameter;
                return (n - 1.0) * std::pow(1.0 - z, n - 2.0);
            }
            case KernelKind::tabulated_density: {
                const std::size_t m = table.size() - 1;
                const double s = z * static_cast<double>(m);
                const std::size_t k = std::min(static_cast<std::size_t>(s), m - 1);
                const double t = s - static_cast<double>(k);
                return table[k] + t * (table[k + 1] - table[k]);
            }
            default: return 0.0;
        }
    }

    /// Mass of kappa0 on [0, z) for z in [0, 1]; atoms at z itself excluded.
    double cdf_below(double z) const {
        if (z <= 0.0) return 0.0;
        double m = 0.0;
        if (is_atomic()) {
            for (const auto& a : atoms())
                if (a.position < z) m += a.weight;
            return m;
        }
        z = std::min(z, 1.0);
        switch (kind) {
            case KernelKind::uniform: return z;
            case KernelKind::homogeneous_alpha: {
                const double p = parameter + 1.0;
                return 0.5 * (std::pow(z, p) - std::pow(1.0 - z, p) + 1.0);
            }
            case KernelKind::beta_fragments:
                return -std::expm1((parameter - 1.0) * std::log1p(-z));
            case KernelKind::tabulated_density: {
                const std::size_t m = table.size() - 1;
                const double h = 1.0 / static_cast<double>(m);
                const double s = z * static_cast<double>(m);
                const std::size_t k = std::min(static_cast<std::size_t>(s), m - 1);
                double acc = 0.0;
                for (std::size_t i = 0; i < k; ++i) acc += 0.5 * h * (table[i] + table[i + 1]);
                const double t = (z - static_cast<double>(k) * h);
                acc += table[k] * t + 0.5 * (table[k + 1] - table[k]) / h * t * t;
                return acc;
            }
            default: return 0.0;
        }
    }

private:
    void normalize_table() {
        const std::size_t m = table.size() - 1;
        const double h = 1.0 / static_cast<double>(m);
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) total += 0.5 * h * (table[i] + table[i + 1]);
        for (double& v : table) v /= total;
    }

    /// sup_z F(z) / z^gamma over a fine log grid, rounded up slightly.
    double fitted_shattering_constant() const {
        double c = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            const double z = std::pow(10.0, -12.0 + 12.0 * i / 4000.0);
            c = std::max(c, cdf_below(z) / std::pow(z, gamma));
        }
        return c * (1.0 + 1e-9);
    }
};

/// Mass of kappa(., y) on [a, b).  An atom exactly at a counts, one exactly at b
/// does not; when b >= y the interval is closed on the right so that [0, y]
/// always carries the full mass.
inline double kernel_mass(const KernelSpec& spec, double y, double a, double b) {
    if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("kernel_mass needs y > 0");
    if (!(a >= 0.0) || !(b >= a)) throw DomainError("kernel_mass needs 0 <= a <= b");
    if (a > y) return 0.0;
    const bool closed_top = b >= y;
    if (spec.is_atomic()) {
        double m = 0.0;
        for (const auto& at : spec.atoms()) {
            const double p = at.position * y;
            if (p >= a && (p < b || (closed_top && p <= y))) m += at.weight;
        }
        return m;
    }
    const double za = a / y;
    const double zb = closed_top ? 1.0 : b / y;
    return std::max(0.0, spec.cdf_below(zb) - spec.cdf_below(za));
}

/// Mass of kappa(., y) on the closed interval [a, b].
inline double kernel_mass_closed(const KernelSpec& spec, double y, double a, double b) {
    double m = kernel_mass(spec, y, a, b);
    if (spec.is_atomic() && b < y)
        for (const auto& at : spec.atoms())
            if (at.position * y == b) m += at.weight;
    return m;
}

/// int (x/y)^p kappa(x, y) dx. Independent of y for self-similar kernels.
inline double kernel_moment(const KernelSpec& spec, double y, unsigned p) {
    if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("kernel_moment needs y > 0");
    const double pd = static_cast<double>(p);
    switch (spec.kind) {
        case KernelKind::mitosis_r:
        case KernelKind::mitosis_mixture: {
            double m = 0.0;
            for (const auto& a : spec.atoms()) m += a.weight * std::pow(a.position, pd);
            return m;
        }
        case KernelKind::uniform: return 1.0 / (pd + 1.0);
        case KernelKind::homogeneous_alpha: {
            const double a = spec.parameter;
            return 0.5 * (a + 1.0) * (1.0 / (pd + a + 1.0) + std::beta(pd + 1.0, a + 1.0));
        }
        case KernelKind::beta_fragments: {
            const double n = spec.parameter;
            return (n - 1.0) * std::beta(pd + 1.0, n - 1.0);
        }
        case KernelKind::tabulated_density: {
            const std::size_t m = spec.table.size() - 1;
            double total = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double lo = static_cast<double>(k) / static_cast<double>(m);
                const double hi = static_cast<double>(k + 1) / static_cast<double>(m);
                auto f = [&](double z) { return std::pow(z, pd) * spec.density(z); };
                auto r = quad::integrate(f, lo, hi);
                if (!r) throw DomainError("kernel moment quadrature did not converge");
                total += r->value;
            }
            return total;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Full model:  du/dt + d/dx(tau u) + (beta + mu) u = n int_x^inf beta(y) kappa(x,y) u(y) dy
// on x >= x_min with u(x_min, t) = 0.
// ---------------------------------------------------------------------------

struct ProblemSpec {
    RateSpec tau = RateSpec::constant(1.0);
    RateSpec beta = RateSpec::power_law(1.0, 1.0);
    KernelSpec kernel = KernelSpec::uniform();
    double n_fragments = 2.0;
    RateSpec death_mu = RateSpec::constant(0.0);
    double x_min = 0.0;

    void validate() const {
        tau.validate();
        beta.validate();
        death_mu.validate();
        kernel.validate();
        if (!(n_fragments >= 2.0) || !std::isfinite(n_fragments))
            throw InvalidSpec("n_fragments must be >= 2");
        if (!(x_min >= 0.0) || !std::isfinite(x_min)) throw InvalidSpec("x_min must be >= 0");
    }

    /// True when the general model collapses to the binary equation without death.
    bool is_binary_model() const {
        return n_fragments == 2.0 && x_min == 0.0 && death_mu.kind == RateKind::constant &&
               death_mu.coeffs[0] == 0.0;
    }
};

}  // namespace gfeig

#endif  // GFEIG_PROBLEM_MODEL_HPP
