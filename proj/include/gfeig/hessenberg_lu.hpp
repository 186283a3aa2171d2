#ifndef GFEIG_HESSENBERG_LU_HPP
#define GFEIG_HESSENBERG_LU_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gfeig/errors.hpp"

namespace gfeig::detail {

/// LU factorization without pivoting of an upper Hessenberg matrix A = L U,
/// L unit lower bidiagonal. O(N^2) per factorization.
///
/// Used on nu I - G with G a Metzler generator and nu above its principal
/// eigenvalue: a nonsingular M-matrix, for which all pivots are positive and
/// no pivoting is needed.
class HessenbergLU {
public:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    HessenbergLU() = default;

    /// Factor nu I - G, with G given row-major and upper Hessenberg.
    void factor_shifted(const RowMatrix& G, double nu) {
        const Eigen::Index N = G.rows();
        lu_ = -G;
        lu_.diagonal().array() += nu;
        sub_.assign(static_cast<std::size_t>(N), 0.0);
        for (Eigen::Index k = 0; k + 1 < N; ++k) {
            const double piv = lu_(k, k);
            if (piv == 0.0 || !std::isfinite(piv)) throw NonConvergence("zero pivot in shifted factorization", nu, {});
            const double l = lu_(k + 1, k) / piv;
            sub_[static_cast<std::size_t>(k)] = l;
            if (l != 0.0) lu_.row(k + 1).tail(N - k) -= l * lu_.row(k).tail(N - k);
            lu_(k + 1, k) = 0.0;
        }
        if (N > 0 && (lu_(N - 1, N - 1) == 0.0 || !std::isfinite(lu_(N - 1, N - 1))))
            throw NonConvergence("zero pivot in shifted factorization", nu, {});
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(lu_.rows()); }

    /// Solve (nu I - G) x = b in place.
    void solve(std::span<double> b) const {
        const Eigen::Index N = lu_.rows();
        for (Eigen::Index k = 0; k + 1 < N; ++k) b[k + 1] -= sub_[static_cast<std::size_t>(k)] * b[k];
        Eigen::Map<Eigen::VectorXd> x(b.data(), N);
        for (Eigen::Index i = N - 1; i >= 0; --i) {
            double s = x(i);
            if (i + 1 < N) s -= lu_.row(i).tail(N - i - 1).dot(x.tail(N - i - 1));
            x(i) = s / lu_(i, i);
        }
    }

    /// Solve (nu I - G)^T x = b in place.
    void solve_transpose(std::span<double> b) const {
        const Eigen::Index N = lu_.rows();
        Eigen::Map<Eigen::VectorXd> x(b.data(), N);
        // U^T y = b, forward, row-wise axpy
        for (Eigen::Index j = 0; j < N; ++j) {
            x(j) /= lu_(j, j);
            if (j + 1 < N) x.tail(N - j - 1) -= x(j) * lu_.row(j).tail(N - j - 1).transpose();
        }
        // L^T z = y, backward
        for (Eigen::Index k = N - 2; k >= 0; --k) b[k] -= sub_[static_cast<std::size_t>(k)] * b[k + 1];
    }

private:
    RowMatrix lu_;
    std::vector<double> sub_;
};

}  // namespace gfeig::detail

#endif  // GFEIG_HESSENBERG_LU_HPP
