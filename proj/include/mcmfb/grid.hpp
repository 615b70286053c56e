#pragma once

#include <cmath>
#include <vector>

#include "mcmfb/errors.hpp"
#include "mcmfb/smallmat.hpp"

namespace mcmfb {

/// 1D radial grids.
///
/// The lens grid is cell-centered: r_j = (j+1/2)*dr with dr = 2/(2n-1), so the
/// pole r=0 falls half a cell below the first node while the contact circle
/// r=1 lands exactly on the last node. Pole coupling goes through ghost
/// values at -r_0 with even/odd parity per field.
///
/// The exterior grid is vertex-centered on [1, r_ref] with both endpoints on
/// nodes (contact at j=0, outer boundary at j=n-1).
struct LineGrid {
    int n = 0;
    double dr = 0.0;
    bool has_pole = false; // lens grid: ghosts continue through r=0
    std::vector<double> r;

    static LineGrid lens_radial(int n) {
        if (n < 3) throw GridTooSmall("lens grid needs >= 3 nodes, got " + std::to_string(n));
        LineGrid g;
        g.n = n;
        g.dr = 2.0 / (2.0 * n - 1.0);
        g.has_pole = true;
        g.r.resize(n);
        for (int j = 0; j < n; ++j) g.r[j] = (j + 0.5) * g.dr;
        g.r[n - 1] = 1.0; // exact by construction; pin against rounding
        return g;
    }

    static LineGrid uniform(double a, double b, int n) {
        if (n < 3) throw GridTooSmall("uniform grid needs >= 3 nodes, got " + std::to_string(n));
        LineGrid g;
        g.n = n;
        g.dr = (b - a) / (n - 1);
        g.r.resize(n);
        for (int j = 0; j < n; ++j) g.r[j] = a + j * g.dr;
        g.r[n - 1] = b;
        return g;
    }
};

/// Ghost parity through the lens pole: value at -r is +/- value at r.
enum class PoleParity { Even = 1, Odd = -1 };

/// Field access with lens-pole ghosts (j may be negative).
inline double at1(const std::vector<double>& f, int j, PoleParity p) {
    if (j >= 0) return f[static_cast<size_t>(j)];
    return static_cast<int>(p) * f[static_cast<size_t>(-1 - j)];
}

/// Cell-centered polar grid on the unit disk. Radial layout matches the lens
/// LineGrid (no node at the pole, boundary ring exactly at r=1); theta is
/// periodic with n_theta nodes. A coordinate pair (-r_0, theta) is identified
/// with (r_0, theta+pi), so pole ghosts are plain antipodal values for every
/// scalar field (phi^1, phi^2, u are all scalars on the disk).
struct PolarGrid {
    int n_r = 0;
    int n_theta = 0;
    double dr = 0.0;
    double dtheta = 0.0;
    std::vector<double> r;          // n_r radial node positions
    std::vector<double> theta;      // n_theta angles
    std::vector<double> cth, sth;   // cos/sin tables

    static PolarGrid disk(int n_r, int n_theta) {
        if (n_r < 3 || n_theta < 4)
            throw GridTooSmall("polar grid needs n_r >= 3, n_theta >= 4");
        if (n_theta % 2 != 0)
            throw GridTooSmall("n_theta must be even for antipodal pole ghosts");
        PolarGrid g;
        g.n_r = n_r;
        g.n_theta = n_theta;
        g.dr = 2.0 / (2.0 * n_r - 1.0);
        g.dtheta = 2.0 * M_PI / n_theta;
        g.r.resize(n_r);
        for (int j = 0; j < n_r; ++j) g.r[j] = (j + 0.5) * g.dr;
        g.r[n_r - 1] = 1.0;
        g.theta.resize(n_theta);
        g.cth.resize(n_theta);
        g.sth.resize(n_theta);
        for (int k = 0; k < n_theta; ++k) {
            g.theta[k] = k * g.dtheta;
            g.cth[k] = std::cos(g.theta[k]);
            g.sth[k] = std::sin(g.theta[k]);
        }
        return g;
    }

    int size() const { return n_r * n_theta; }
    int idx(int j, int k) const { return j * n_theta + k; }
    int kwrap(int k) const { return (k % n_theta + n_theta) % n_theta; }

    /// Node access with pole ghosts (j may be -1, -2, ...).
    double at(const std::vector<double>& f, int j, int k) const {
        k = kwrap(k);
        if (j >= 0) return f[static_cast<size_t>(idx(j, k))];
        int jj = -1 - j;
        int kk = (k + n_theta / 2) % n_theta;
        return f[static_cast<size_t>(idx(jj, kk))];
    }

    Vec2 node_xy(int j, int k) const { return {r[j] * cth[k], r[j] * sth[k]}; }
};

} // namespace mcmfb
