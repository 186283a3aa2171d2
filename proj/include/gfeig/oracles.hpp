#ifndef GFEIG_ORACLES_HPP
#define GFEIG_ORACLES_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gfeig/discretization.hpp"
#include "gfeig/errors.hpp"

namespace gfeig::oracles {

/// Closed-form eigenelements (lambda, U, phi) on [0, inf).
struct AnalyticTriple {
    double lambda = 0.0;
    std::function<double(double)> U;
    std::function<double(double)> phi;
    std::string validity;

    std::vector<double> sample_U(const Grid& g) const {
        std::vector<double> v(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) v[j] = U(g.centers[j]);
        return v;
    }
    std::vector<double> sample_phi(const Grid& g) const {
        std::vector<double> v(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) v[j] = phi(g.centers[j]);
        return v;
    }
};

/// tau = tau0, beta = beta0 x, uniform kernel.
inline AnalyticTriple example_linear_beta(double tau0, double beta0) {
    if (!(tau0 > 0.0) || !(beta0 > 0.0)) throw DomainError("example_linear_beta needs tau0, beta0 > 0");
    const double s = std::sqrt(beta0 / tau0);
    AnalyticTriple a;
    a.lambda = std::sqrt(beta0 * tau0);
    a.U = [s](double x) {
        const double X = s * x;
        return 2.0 * s * (X + 0.5 * X * X) * std::exp(-X - 0.5 * X * X);
    };
    a.phi = [s](double x) { return 0.5 * (1.0 + s * x); };
    a.validity = "tau0 > 0, beta0 > 0, uniform kernel";
    return a;
}

/// tau = tau0 x, beta = beta0 x^n, uniform kernel. Uses std::tgamma for Gamma(1/n), Gamma(2/n).
inline AnalyticTriple example_linear_tau(double tau0, double beta0, unsigned n) {
    if (n == 0) throw DomainError("example_linear_tau needs n >= 1");
    if (!(tau0 > 0.0) || !(beta0 > 0.0)) throw DomainError("example_linear_tau needs tau0, beta0 > 0");
    const double nd = static_cast<double>(n);
    const double a = beta0 / (nd * tau0);
    const double scale = std::pow(a, 1.0 / nd);
    const double u0 = scale * nd / std::tgamma(1.0 / nd);
    const double slope = scale * std::tgamma(1.0 / nd) / std::tgamma(2.0 / nd);
    AnalyticTriple t;
    t.lambda = tau0;
    t.U = [u0, a, nd](double x) { return u0 * std::exp(-a * std::pow(x, nd)); };
    t.phi = [slope](double x) { return slope * x; };
    t.validity = "tau0 > 0, beta0 > 0, n >= 1, uniform kernel";
    return t;
}

/// First moment int x U for example_linear_tau; phi(x) = x / int x U.
inline double linear_tau_first_moment(double tau0, double beta0, unsigned n) {
    const double nd = static_cast<double>(n);
    const double scale = std::pow(beta0 / (nd * tau0), 1.0 / nd);
    return std::tgamma(2.0 / nd) / (scale * std::tgamma(1.0 / nd));
}

struct DenseSpectrum {
    std::vector<std::complex<double>> eigenvalues;
    double perron_value = 0.0;
    std::vector<double> perron_vector;  ///< >= 0, weighted sum 1
};

constexpr std::size_t kDenseLimit = 400;

/// Full eigendecomposition of a small real matrix; the Perron pair is the eigenvalue
/// of largest real part with its eigenvector scaled to sum_i v_i w_i = 1.
inline DenseSpectrum dense_spectrum(const Eigen::MatrixXd& M, const std::vector<double>& weights) {
    const auto N = static_cast<std::size_t>(M.rows());
    if (N > kDenseLimit) throw DomainError("dense spectrum oracle refuses N > 400");
    if (weights.size() != N) throw DomainError("weights have the wrong size");
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, true);
    if (es.info() != Eigen::Success) throw DomainError("dense eigendecomposition failed");
    DenseSpectrum d;
    const auto& ev = es.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        d.eigenvalues.push_back(ev(i));
        if (ev(i).real() > ev(best).real()) best = i;
    }
    d.perron_value = ev(best).real();
    const Eigen::VectorXcd v = es.eigenvectors().col(best);
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += v(static_cast<Eigen::Index>(i)) * weights[i];
    d.perron_vector.resize(N);
    for (std::size_t i = 0; i < N; ++i) d.perron_vector[i] = (v(static_cast<Eigen::Index>(i)) / s).real();
    return d;
}

inline DenseSpectrum dense_spectrum(const DiscreteOperator& op) {
    if (op.size() > kDenseLimit) throw DomainError("dense spectrum oracle refuses N > 400");
    return dense_spectrum(op.dense(), op.grid.widths);
}

// ---------------------------------------------------------------------------
// Comparisons on a grid
// ---------------------------------------------------------------------------

/// sum_j |a_j - b_j| w_j
inline double l1_distance(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += std::abs(a[j] - b[j]) * g.widths[j];
    return s;
}

/// max |a_j / b_j - 1| over cells with centers in [lo, hi].
inline double max_relative_deviation(const Grid& g, const std::vector<double>& a, const std::vector<double>& b,
                                     double lo, double hi) {
    double m = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
        if (g.centers[j] >= lo && g.centers[j] <= hi) m = std::max(m, std::abs(a[j] / b[j] - 1.0));
    return m;
}

/// Least-squares slope s of phi ~ s x with weights U w (where the pairing lives).
inline double weighted_slope(const Grid& g, const std::vector<double>& phi, const std::vector<double>& U) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.centers[j], w = U[j] * g.widths[j];
        num += phi[j] * x * w;
        den += x * x * w;
    }
    return num / den;
}

}  // namespace gfeig::oracles

#endif  // GFEIG_ORACLES_HPP
