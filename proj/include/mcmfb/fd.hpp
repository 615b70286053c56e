#pragma once

#include <algorithm>
#include <vector>

#include "mcmfb/grid.hpp"

namespace mcmfb::fd {

// 1D stencils on a LineGrid. Centered second order in the interior, one-sided
// second order at the ends; the lens pole end keeps centered stencils via
// parity ghosts. Third/fourth derivatives are centered 5-point, so they are
// valid at j in [2, n-3] (or through the pole on lens grids).

inline double d1(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p) {
    int n = g.n;
    double h = g.dr;
    if (j == n - 1) return (3.0 * f[j] - 4.0 * f[j - 1] + f[j - 2]) / (2.0 * h);
    if (j == 0 && !g.has_pole) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    return (at1(f, j + 1, p) - at1(f, j - 1, p)) / (2.0 * h);
}

inline double d2(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p) {
    int n = g.n;
    double h2 = g.dr * g.dr;
    if (j == n - 1) {
        if (n >= 4) return (2.0 * f[j] - 5.0 * f[j - 1] + 4.0 * f[j - 2] - f[j - 3]) / h2;
        return (f[j] - 2.0 * f[j - 1] + f[j - 2]) / h2;
    }
    if (j == 0 && !g.has_pole) {
        if (n >= 4) return (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        return (f[0] - 2.0 * f[1] + f[2]) / h2;
    }
    return (at1(f, j + 1, p) - 2.0 * f[j] + at1(f, j - 1, p)) / h2;
}

/// Centered 5-point third derivative; requires pole ghosts or j in [2, n-3].
inline double d3(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p) {
    double h3 = g.dr * g.dr * g.dr;
    return (-at1(f, j - 2, p) + 2.0 * at1(f, j - 1, p) - 2.0 * at1(f, j + 1, p) +
            at1(f, j + 2, p)) /
           (2.0 * h3);
}

/// One-sided (backward) second-order third derivative at the last node.
inline double d3_end(const LineGrid& g, const std::vector<double>& f) {
    int j = g.n - 1;
    double h3 = g.dr * g.dr * g.dr;
    // 5-point one-sided: f''' ~ (5/2 f0 - 9 f1 + 12 f2 - 7 f3 + 3/2 f4)/h^3
    return (2.5 * f[j] - 9.0 * f[j - 1] + 12.0 * f[j - 2] - 7.0 * f[j - 3] +
            1.5 * f[j - 4]) /
           h3;
}

/// One-sided (forward) second-order third derivative at the first node.
inline double d3_begin(const LineGrid& g, const std::vector<double>& f) {
    double h3 = g.dr * g.dr * g.dr;
    return (-2.5 * f[0] + 9.0 * f[1] - 12.0 * f[2] + 7.0 * f[3] - 1.5 * f[4]) / h3;
}

inline double d4(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p) {
    double h4 = g.dr * g.dr * g.dr * g.dr;
    return (at1(f, j - 2, p) - 4.0 * at1(f, j - 1, p) + 6.0 * f[j] -
            4.0 * at1(f, j + 1, p) + at1(f, j + 2, p)) /
           h4;
}

// 2D polar stencils. Theta is periodic and uses fourth-order stencils
// everywhere: the Cartesian transform divides theta truncation errors by r^2,
// and a uniform order keeps the truncation field smooth in r (an order seam
// would be re-differentiated by the mixed stencil). The radial direction uses
// pole ghosts at j=0, one-sided stencils at the boundary ring, and
// fourth-order first/mixed stencils inside r < kPoleHi where the 1/r
// amplification bites.

constexpr double kPoleHi = 0.25;

inline double dth(const PolarGrid& g, const std::vector<double>& f, int j, int k) {
    return (-g.at(f, j, k + 2) + 8.0 * g.at(f, j, k + 1) - 8.0 * g.at(f, j, k - 1) +
            g.at(f, j, k - 2)) /
           (12.0 * g.dtheta);
}

inline double dthth(const PolarGrid& g, const std::vector<double>& f, int j, int k) {
    double h2 = g.dtheta * g.dtheta;
    return (-g.at(f, j, k + 2) + 16.0 * g.at(f, j, k + 1) - 30.0 * g.at(f, j, k) +
            16.0 * g.at(f, j, k - 1) - g.at(f, j, k - 2)) /
           (12.0 * h2);
}

inline double drad(const PolarGrid& g, const std::vector<double>& f, int j, int k) {
    double h = g.dr;
    if (j == g.n_r - 1)
        return (3.0 * g.at(f, j, k) - 4.0 * g.at(f, j - 1, k) + g.at(f, j - 2, k)) /
               (2.0 * h);
    if (g.r[j] < kPoleHi && j + 2 <= g.n_r - 1)
        return (-g.at(f, j + 2, k) + 8.0 * g.at(f, j + 1, k) - 8.0 * g.at(f, j - 1, k) +
                g.at(f, j - 2, k)) /
               (12.0 * h);
    return (g.at(f, j + 1, k) - g.at(f, j - 1, k)) / (2.0 * h);
}

inline double dradrad(const PolarGrid& g, const std::vector<double>& f, int j, int k) {
    double h2 = g.dr * g.dr;
    if (j == g.n_r - 1)
        return (2.0 * g.at(f, j, k) - 5.0 * g.at(f, j - 1, k) + 4.0 * g.at(f, j - 2, k) -
                g.at(f, j - 3, k)) /
               h2;
    return (g.at(f, j + 1, k) - 2.0 * g.at(f, j, k) + g.at(f, j - 1, k)) / h2;
}

inline double dradth(const PolarGrid& g, const std::vector<double>& f, int j, int k) {
    double h = g.dr;
    auto fth = [&](int jj) { return dth(g, f, jj, k); };
    if (j == g.n_r - 1) return (3.0 * fth(j) - 4.0 * fth(j - 1) + fth(j - 2)) / (2.0 * h);
    if (g.r[j] < kPoleHi && j + 2 <= g.n_r - 1)
        return (-fth(j + 2) + 8.0 * fth(j + 1) - 8.0 * fth(j - 1) + fth(j - 2)) /
               (12.0 * h);
    return (fth(j + 1) - fth(j - 1)) / (2.0 * h);
}

/// Polar-frame first derivatives to Cartesian gradient.
inline Vec2 polar_to_cart_grad(double fr, double fth, double r, double c, double s) {
    double ft = fth / r;
    return {fr * c - ft * s, fr * s + ft * c};
}

/// Polar derivatives (f_r, f_th, f_rr, f_rth, f_thth) to the Cartesian Hessian.
inline Sym2 polar_to_cart_hess(double fr, double fth, double frr, double frth,
                               double fthth, double r, double c, double s) {
    double ir = 1.0 / r;
    double ir2 = ir * ir;
    double hrr = frr;                      // d2f(e_r, e_r)
    double hrt = frth * ir - fth * ir2;    // d2f(e_r, e_th)
    double htt = fthth * ir2 + fr * ir;    // d2f(e_th, e_th)
    Sym2 out;
    out.xx = hrr * c * c - 2.0 * hrt * c * s + htt * s * s;
    out.yy = hrr * s * s + 2.0 * hrt * c * s + htt * c * c;
    out.xy = (hrr - htt) * c * s + hrt * (c * c - s * s);
    return out;
}

} // namespace mcmfb::fd
