#ifndef GFEIG_DISCRETIZATION_HPP
#define GFEIG_DISCRETIZATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfeig/errors.hpp"
#include "gfeig/grid.hpp"
#include "gfeig/problem_model.hpp"

namespace gfeig {

/// Parameters of the regularized problem on [x_min, R]:
///   tau_eta = eta on [0, eta], tau beyond;  tau_eta U(0) = delta.
/// eta = 0 and delta = 0 give the plain equation restricted to [x_min, R].
struct TruncationParams {
    double R = 1.0;
    double eta = 0.0;
    double mu_inf = 0.0;  ///< inf of tau_eta over the domain
    double delta = 0.0;

    double tau_eta(const RateSpec& tau, double x) const {
        if (eta > 0.0 && x <= eta) return eta;
        return eval_rate(tau, x);
    }

    void validate() const {
        if (!(R > 0.0) || !std::isfinite(R)) throw ConfigurationError("truncation needs R > 0");
        if (!(eta >= 0.0) || !(delta >= 0.0)) throw ConfigurationError("truncation needs eta, delta >= 0");
        if (delta > 0.0 && !(delta * R < mu_inf))
            throw ConfigurationError("boundary inflow violates delta * R < inf tau_eta (" + std::to_string(delta * R) +
                                     " >= " + std::to_string(mu_inf) + ")");
    }

    static double infimum_tau_eta(const ProblemSpec& p, double R, double eta) {
        const double lo = p.x_min;
        double m = std::numeric_limits<double>::infinity();
        if (eta > lo) m = eta;
        const double a = std::max(lo, eta);
        if (a < R) m = std::min(m, rate_infimum(p.tau, a, R));
        return m;
    }

    /// delta = mu_inf / (2R), the choice that keeps the truncated eigenvalue positive for large R.
    static TruncationParams standard(const ProblemSpec& p, double R, double eta) {
        if (!(eta > 0.0)) throw ConfigurationError("truncation needs eta > 0");
        TruncationParams t;
        t.R = R;
        t.eta = eta;
        t.mu_inf = infimum_tau_eta(p, R, eta);
        t.delta = t.mu_inf / (2.0 * R);
        t.validate();
        return t;
    }

    static TruncationParams with_delta(const ProblemSpec& p, double R, double eta, double delta) {
        TruncationParams t;
        t.R = R;
        t.eta = eta;
        t.mu_inf = infimum_tau_eta(p, R, eta);
        t.delta = delta;
        t.validate();
        return t;
    }

    static TruncationParams untruncated(const ProblemSpec& p, double R) { return with_delta(p, R, 0.0, 0.0); }
};

struct MatrixEntry {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Finite-volume generator G acting on cell averages U_j:
///
///   (G U)_i = [tau_{i} U_{i-1} - tau_{i+1} U_i] / w_i - (beta_i + mu_i) U_i
///             + sum_{j >= i} n beta_j m_ij U_j w_j / w_i + [i == 0] delta sum_j U_j w_j / w_0
///
/// with tau_k = tau_eta(x_k) at edges (first-order upwind, outflow at R), m_ij the
/// kappa(., y_j) mass of cell i and w the cell widths. The principal eigenvalue of G
/// is lambda; the operator written as d/dx(tau U) + (beta + mu) U - gain - inflow is -G.
///
/// The adjoint flag turns the same data into G* = W^-1 G^T W, the transpose in the
/// inner product <u, phi> = sum u_j phi_j w_j:
///
///   (G* phi)_j = tau_{j+1} (phi_{j+1} - phi_j) / w_j - (beta_j + mu_j) phi_j
///                + n beta_j sum_{i <= j} m_ij phi_i + delta phi_0,      phi_N = 0.
struct DiscreteOperator {
    Grid grid;
    TruncationParams trunc;
    double n_fragments = 2.0;
    bool adjoint = false;

    std::vector<double> edge_tau;  ///< tau_eta(x_{j+1}): flux coefficient out of cell j
    std::vector<double> center_tau;  ///< tau_eta(y_j), diagnostics only
    std::vector<double> beta;      ///< beta(y_j)
    std::vector<double> loss;      ///< beta(y_j) + mu(y_j)
    // kappa masses by source column j, compressed: rows [col_start[j], col_start[j+1])
    std::vector<std::size_t> col_start;
    std::vector<std::size_t> row_index;
    std::vector<double> mass;
    // When every column has mass proportional to the target width below the source cell
    // (densities depending on y only, e.g. the uniform kernel), m_ij = sep_coeff_j w_i for
    // i < j and m_jj = sep_diag_j; the gain is then a running sum, O(N) per application.
    bool separable = false;
    std::vector<double> sep_coeff;
    std::vector<double> sep_diag;

    std::size_t size() const noexcept { return grid.size(); }
    double inflow() const noexcept { return trunc.delta; }

    double column_mass(std::size_t j) const {
        double s = 0.0;
        for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k) s += mass[k];
        return s;
    }

    /// out = G u (or G* u for the adjoint).
    void apply(std::span<const double> u, std::span<double> out) const {
        const std::size_t N = size();
        const auto& w = grid.widths;
        if (u.size() != N || out.size() != N) throw DomainError("operator applied to a vector of wrong size");
        const double n = n_fragments;
        if (!adjoint) {
            double total = 0.0;
            for (std::size_t j = 0; j < N; ++j) total += u[j] * w[j];
            for (std::size_t i = 0; i < N; ++i) {
                double v = -(edge_tau[i] / w[i] + loss[i]) * u[i];
                if (i > 0) v += edge_tau[i - 1] / w[i] * u[i - 1];
                out[i] = v;
            }
            out[0] += trunc.delta * total / w[0];
            if (separable) {
                double suffix = 0.0;  // sum_{j > i} n beta_j u_j w_j c_j
                for (std::size_t i = N; i-- > 0;) {
                    const double s = n * beta[i] * u[i] * w[i];
                    out[i] += suffix + s * sep_diag[i] / w[i];
                    suffix += s * sep_coeff[i];
                }
                return;
            }
            for (std::size_t j = 0; j < N; ++j) {
                const double s = n * beta[j] * u[j] * w[j];
                if (s == 0.0) continue;
                for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k)
                    out[row_index[k]] += s * mass[k] / w[row_index[k]];
            }
        } else {
            const double src = trunc.delta * u[0];
            if (separable) {
                double prefix = 0.0;  // sum_{i < j} w_i phi_i
                for (std::size_t j = 0; j < N; ++j) {
                    const double next = (j + 1 < N) ? u[j + 1] : 0.0;
                    out[j] = edge_tau[j] * (next - u[j]) / w[j] - loss[j] * u[j] + src +
                             n * beta[j] * (sep_coeff[j] * prefix + sep_diag[j] * u[j]);
                    prefix += w[j] * u[j];
                }
                return;
            }
            for (std::size_t j = 0; j < N; ++j) {
                const double next = (j + 1 < N) ? u[j + 1] : 0.0;
                double v = edge_tau[j] * (next - u[j]) / w[j] - loss[j] * u[j] + src;
                if (beta[j] != 0.0) {
                    double g = 0.0;
                    for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k) g += mass[k] * u[row_index[k]];
                    v += n * beta[j] * g;
                }
                out[j] = v;
            }
        }
    }

    std::vector<double> apply(std::span<const double> u) const {
        std::vector<double> out(size());
        apply(u, out);
        return out;
    }

    /// Nonzero entries of the generator (or its adjoint), duplicates summed.
    std::vector<MatrixEntry> entries() const {
        const Eigen::MatrixXd d = dense();
        std::vector<MatrixEntry> e;
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            for (Eigen::Index i = 0; i < d.rows(); ++i)
                if (d(i, j) != 0.0)
                    e.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), d(i, j)});
        std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        return e;
    }

    /// Dense generator. Upper Hessenberg for the direct operator, lower Hessenberg for the adjoint.
    Eigen::MatrixXd dense() const {
        const std::size_t N = size();
        const auto& w = grid.widths;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
        auto at = [&](std::size_t i, std::size_t j) -> double& {
            return adjoint ? G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))
                           : G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        };
        // Build the direct matrix in (i, j) = (row, col); the adjoint is W^-1 G^T W.
        auto scale = [&](std::size_t i, std::size_t j) { return adjoint ? w[i] / w[j] : 1.0; };
        for (std::size_t j = 0; j < N; ++j) {
            at(j, j) += -(edge_tau[j] / w[j] + loss[j]);
            if (j + 1 < N) at(j + 1, j) += edge_tau[j] / w[j + 1] * scale(j + 1, j);
            at(0, j) += trunc.delta * w[j] / w[0] * scale(0, j);
            for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k) {
                const std::size_t i = row_index[k];
                at(i, j) += n_fragments * beta[j] * mass[k] * w[j] / w[i] * scale(i, j);
            }
        }
        return G;
    }

    /// Largest |diagonal| entry, the natural rate scale of the generator.
    double diagonal_scale() const {
        double m = 0.0;
        for (std::size_t j = 0; j < size(); ++j) {
            double gain_diag = 0.0;
            for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k)
                if (row_index[k] == j) gain_diag += n_fragments * beta[j] * mass[k];
            const double d = -(edge_tau[j] / grid.widths[j] + loss[j]) + gain_diag + (j == 0 ? trunc.delta : 0.0);
            m = std::max(m, std::abs(d));
        }
        return m;
    }

    /// Upper bound on the principal eigenvalue: the largest mass-weighted column sum.
    double column_sum_bound() const {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < size(); ++j) {
            const double out = (j + 1 == size()) ? edge_tau[j] : 0.0;
            const double s = n_fragments * beta[j] * column_mass(j) - loss[j] + trunc.delta - out / grid.widths[j];
            m = std::max(m, s);
        }
        return m;
    }

    /// max_j |sum_i m_ij c_i - m1 y_j| / m0: displacement of each column's mean fragment size.
    double first_moment_defect(double expected_ratio) const {
        double worst = 0.0;
        for (std::size_t j = 0; j < size(); ++j) {
            const double m0 = column_mass(j);
            if (m0 <= 0.0) continue;
            double m1 = 0.0;
            for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k) m1 += mass[k] * grid.centers[row_index[k]];
            worst = std::max(worst, std::abs(m1 / m0 - expected_ratio * grid.centers[j]));
        }
        return worst;
    }
};

inline void detect_separable(DiscreteOperator& op) {
    const std::size_t N = op.size();
    const auto& w = op.grid.widths;
    op.sep_coeff.assign(N, 0.0);
    op.sep_diag.assign(N, 0.0);
    for (std::size_t j = 0; j < N; ++j) {
        const std::size_t a = op.col_start[j], b = op.col_start[j + 1];
        if (a == b) continue;
        std::size_t k = a;
        if (j > 0) {
            if (b - a < j) { op.separable = false; return; }
            const double c = op.mass[a] / w[0];
            for (std::size_t i = 0; i < j; ++i, ++k) {
                if (op.row_index[k] != i || std::abs(op.mass[k] / w[i] - c) > 1e-12 * c) {
                    op.separable = false;
                    return;
                }
            }
            op.sep_coeff[j] = c;
        }
        if (k < b) op.sep_diag[j] = op.mass[k];
    }
    op.separable = true;
}

/// Assemble the truncated direct generator on `grid`.
inline DiscreteOperator assemble_direct(const ProblemSpec& problem, const Grid& grid, const TruncationParams& trunc) {
    problem.validate();
    trunc.validate();
    if (std::abs(grid.R - trunc.R) > 1e-12 * grid.R) throw ConfigurationError("grid and truncation disagree on R");
    if (std::abs(grid.origin - problem.x_min) > 0.0) throw ConfigurationError("grid must start at the minimal size x_min");

    const std::size_t N = grid.size();
    DiscreteOperator op;
    op.grid = grid;
    op.trunc = trunc;
    op.n_fragments = problem.n_fragments;
    op.edge_tau.resize(N);
    op.center_tau.resize(N);
    op.beta.resize(N);
    op.loss.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
        op.edge_tau[j] = trunc.tau_eta(problem.tau, grid.edges[j + 1]);
        op.center_tau[j] = trunc.tau_eta(problem.tau, grid.centers[j]);
        op.beta[j] = eval_rate(problem.beta, grid.centers[j]);
        op.loss[j] = op.beta[j] + eval_rate(problem.death_mu, grid.centers[j]);
    }

    op.col_start.assign(1, 0);
    std::vector<std::pair<std::size_t, double>> column;
    for (std::size_t j = 0; j < N; ++j) {
        const double y = grid.centers[j];
        column.clear();
        double sum = 0.0;
        for (std::size_t i = 0; i <= j; ++i) {
            const double m = kernel_mass(problem.kernel, y, grid.edges[i], grid.edges[i + 1]);
            if (m > 0.0) {
                column.emplace_back(i, m);
                sum += m;
            }
        }
        const double exact = kernel_mass(problem.kernel, y, grid.origin, y);
        const double s = sum > 0.0 ? exact / sum : 0.0;
        for (const auto& [i, m] : column) {
            op.row_index.push_back(i);
            op.mass.push_back(m * s);
        }
        op.col_start.push_back(op.row_index.size());
    }
    detect_separable(op);
    return op;
}

inline DiscreteOperator assemble_adjoint(const DiscreteOperator& direct) {
    DiscreteOperator a = direct;
    a.adjoint = !direct.adjoint;
    return a;
}

/// Coordinate-format text: a header line then "row col value" (1-based).
inline void write_coordinate(std::ostream& os, const DiscreteOperator& op) {
    const auto e = op.entries();
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << "% gfeig " << (op.adjoint ? "adjoint" : "direct") << " generator, R=" << op.trunc.R
       << " eta=" << op.trunc.eta << " delta=" << op.trunc.delta << '\n';
    os << op.size() << ' ' << op.size() << ' ' << e.size() << '\n';
    os.precision(17);
    for (const auto& x : e) os << x.row + 1 << ' ' << x.col + 1 << ' ' << x.value << '\n';
}

}  // namespace gfeig

#endif  // GFEIG_DISCRETIZATION_HPP
