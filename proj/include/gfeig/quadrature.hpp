#ifndef GFEIG_QUADRATURE_HPP
#define GFEIG_QUADRATURE_HPP

#include <cmath>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gfeig::quad {

struct Result {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// Adaptive Gauss-Kronrod (15 nodes) on [a, b]. Empty result when the
/// estimated error stays above the requested tolerance.
template <typename F>
std::optional<Result> integrate(F&& f, double a, double b, double rel_tol = 1e-12,
                                unsigned max_depth = 20) {
    if (!(b > a)) return Result{0.0, 0.0};
    double err = 0.0;
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, rel_tol, &err, &l1);
    if (!std::isfinite(v)) return std::nullopt;
    const double scale = std::max(std::abs(v), l1);
    if (err > std::max(1e3 * rel_tol * scale, 1e-300)) return std::nullopt;
    return Result{v, err};
}

}  // namespace gfeig::quad

#endif  // GFEIG_QUADRATURE_HPP
