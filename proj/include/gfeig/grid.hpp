#ifndef GFEIG_GRID_HPP
#define GFEIG_GRID_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gfeig/errors.hpp"

namespace gfeig {

enum class GridKind { uniform, geometric };

inline std::string_view to_string(GridKind k) { return k == GridKind::uniform ? "uniform" : "geometric"; }

/// Finite-volume partition origin = x_0 < x_1 < ... < x_N = R.
///
/// Geometric rule: x_k = origin + (R - origin) * ratio^(k - N) for k >= 1, so the
/// cells grow by `ratio` away from the origin and the first cell is
/// [origin, origin + (R - origin) ratio^(1-N)].
struct Grid {
    GridKind kind = GridKind::uniform;
    double origin = 0.0;
    double R = 1.0;
    double ratio = 1.0;
    std::vector<double> edges;
    std::vector<double> widths;
    std::vector<double> centers;

    std::size_t size() const noexcept { return widths.size(); }
    double max_width() const {
        double m = 0.0;
        for (double w : widths) m = std::max(m, w);
        return m;
    }

    /// sum_j f_j w_j
    template <typename V>
    double integrate(const V& f) const {
        double s = 0.0;
        for (std::size_t j = 0; j < size(); ++j) s += f[j] * widths[j];
        return s;
    }
};

inline Grid build_grid(double R, std::size_t N, GridKind kind = GridKind::uniform, double ratio = 1.0,
                       double origin = 0.0) {
    if (!std::isfinite(R) || !std::isfinite(origin)) throw DomainError("grid bounds must be finite");
    if (!(R > origin) || origin < 0.0) throw DomainError("grid needs 0 <= origin < R");
    if (N < 2) throw DomainError("grid needs at least two cells");
    Grid g;
    g.kind = kind;
    g.origin = origin;
    g.R = R;
    g.ratio = ratio;
    g.edges.resize(N + 1);
    g.widths.resize(N);
    g.centers.resize(N);
    const double L = R - origin;
    if (kind == GridKind::uniform) {
        g.ratio = 1.0;
        const double h = L / static_cast<double>(N);
        for (std::size_t k = 0; k <= N; ++k) g.edges[k] = origin + static_cast<double>(k) * h;
        g.edges[N] = R;
        for (std::size_t k = 0; k < N; ++k) g.widths[k] = h;
    } else {
        if (!(ratio > 1.0) || !std::isfinite(ratio)) throw DomainError("geometric grid needs ratio > 1");
        g.edges[0] = origin;
        for (std::size_t k = 1; k <= N; ++k)
            g.edges[k] = origin + L * std::pow(ratio, static_cast<double>(k) - static_cast<double>(N));
        g.edges[N] = R;
        for (std::size_t k = 0; k < N; ++k) g.widths[k] = g.edges[k + 1] - g.edges[k];
    }
    for (std::size_t k = 0; k < N; ++k) {
        g.centers[k] = 0.5 * (g.edges[k] + g.edges[k + 1]);
        if (!(g.widths[k] > 0.0)) throw DomainError("grid produced an empty cell; lower N or the ratio");
    }
    return g;
}

/// Every other edge of `fine` (requires an even cell count). For uniform and
/// geometric grids this is the same family at N/2 (ratio squared).
inline Grid coarsen(const Grid& fine) {
    const std::size_t N = fine.size();
    if (N % 2 != 0 || N < 4) throw DomainError("coarsen needs an even number of cells >= 4");
    return build_grid(fine.R, N / 2, fine.kind, fine.kind == GridKind::geometric ? fine.ratio * fine.ratio : 1.0,
                      fine.origin);
}

}  // namespace gfeig

#endif  // GFEIG_GRID_HPP
