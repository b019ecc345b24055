#pragma once

#include "irlang/potentials.hpp"
#include "irlang/types.hpp"

#include <cmath>
#include <vector>

namespace irlang {

struct GridSpec {
    Box2 box{};
    int nx = 801;
    int ny = 801;
};

struct GibbsResult {
    double value = 0.0;
    bool mass_ok = false;           // boundary weight < 1e-12 of the peak
    double boundary_ratio = 0.0;
    bool converged = false;         // doubling changed the value by < rel_tol
    double last_rel_change = 0.0;
    int nx_final = 0, ny_final = 0;
};

namespace detail {
inline std::vector<double> simpson_weights(int n, double h) {
    // composite Simpson needs an odd node count; n is rounded up by callers
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] =
            (i == 0 || i == n - 1) ? h / 3.0 : (i % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    return w;
}

template <PotentialModel P, class F>
GibbsResult gibbs_once(const P& pot, double beta, const F& f, const GridSpec& grid) {
    const int nx = grid.nx % 2 == 0 ? grid.nx + 1 : grid.nx;
    const int ny = grid.ny % 2 == 0 ? grid.ny + 1 : grid.ny;
    const double hx = grid.box.width() / (nx - 1);
    const double hy = grid.box.height() / (ny - 1);
    const auto wx = simpson_weights(nx, hx);
    const auto wy = simpson_weights(ny, hy);

    double num = 0.0, den = 0.0, wmax = 0.0, wboundary = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = grid.box.x0 + i * hx;
        for (int j = 0; j < ny; ++j) {
            const Vec2 z{x, grid.box.y0 + j * hy};
            const double w = std::exp(-pot.energy(z) / beta);
            if (w > wmax) wmax = w;
            if ((i == 0 || i == nx - 1 || j == 0 || j == ny - 1) && w > wboundary)
                wboundary = w;
            const double q = wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)] * w;
            den += q;
            num += q * f(z);
        }
    }
    GibbsResult r;
    r.value = num / den;
    r.boundary_ratio = wmax > 0.0 ? wboundary / wmax : 1.0;
    r.mass_ok = r.boundary_ratio < 1e-12;
    r.nx_final = nx;
    r.ny_final = ny;
    return r;
}
}  // namespace detail

// Grid oracle for <f> = int f exp(-U/beta) / int exp(-U/beta) over the box.
// The mesh is doubled until the value moves by less than rel_tol, which
// doubles as a Richardson consistency check on the returned value.
template <PotentialModel P, class F>
GibbsResult gibbs_average(const P& pot, double beta, const F& f, GridSpec grid,
                          double rel_tol = 1e-6, int max_doublings = 3) {
    GibbsResult r = detail::gibbs_once(pot, beta, f, grid);
    for (int k = 0; k < max_doublings; ++k) {
        GridSpec finer = grid;
        finer.nx = 2 * r.nx_final - 1;
        finer.ny = 2 * r.ny_final - 1;
        const GibbsResult rf = detail::gibbs_once(pot, beta, f, finer);
        const double change =
            std::abs(rf.value - r.value) / std::max(1e-300, std::abs(rf.value));
        r = rf;
        r.last_rel_change = change;
        if (change < rel_tol) {
            r.converged = true;
            break;
        }
        grid = finer;
    }
    return r;
}

}  // namespace irlang
