#pragma once

#include <array>
#include <cmath>

#include "mcmfb/errors.hpp"

namespace mcmfb {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    Vec2 perp() const { return {-y, x}; }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

/// Symmetric 2x2 matrix, upper triangle stored.
struct Sym2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    static Sym2 identity() { return {1.0, 0.0, 1.0}; }

    double det() const { return xx * yy - xy * xy; }
    double trace() const { return xx + yy; }

    Sym2 operator+(Sym2 o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    Sym2 operator-(Sym2 o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
    Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

    /// Quadratic form m(a,b).
    double form(Vec2 a, Vec2 b) const {
        return xx * a.x * b.x + xy * (a.x * b.y + a.y * b.x) + yy * a.y * b.y;
    }

    Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    Sym2 inverse(double min_det = 1e-14) const {
        double d = det();
        if (!(d > min_det))
            throw DegenerateImmersion("symmetric 2x2 determinant " + std::to_string(d) +
                                      " below floor");
        double id = 1.0 / d;
        return {yy * id, -xy * id, xx * id};
    }

    /// Eigenvalues, ascending (closed form for symmetric 2x2).
    std::array<double, 2> eigenvalues() const {
        double m = 0.5 * (xx + yy);
        double r = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
        return {m - r, m + r};
    }

    /// Generalized eigenvalues of (A = *this, B SPD): roots of det(A - t B) = 0, ascending.
    std::array<double, 2> generalized_eigenvalues(const Sym2& b) const {
        double a2 = b.det();
        double a1 = -(xx * b.yy + yy * b.xx - 2.0 * xy * b.xy);
        double a0 = det();
        double disc = a1 * a1 - 4.0 * a2 * a0;
        disc = disc > 0.0 ? std::sqrt(disc) : 0.0;
        double t1 = (-a1 - disc) / (2.0 * a2);
        double t2 = (-a1 + disc) / (2.0 * a2);
        if (t1 > t2) std::swap(t1, t2);
        return {t1, t2};
    }
};

/// General (not necessarily symmetric) 2x2 matrix, row major.
struct Mat2 {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0; // [[a,b],[c,d]]

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    double det() const { return a * d - b * c; }
    Vec2 row(int i) const { return i == 0 ? Vec2{a, b} : Vec2{c, d}; }
    Vec2 col(int j) const { return j == 0 ? Vec2{a, c} : Vec2{b, d}; }
    Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 inverse(double min_det = 1e-14) const {
        double dd = det();
        if (std::abs(dd) < min_det) throw DegenerateImmersion("2x2 map not invertible");
        double id = 1.0 / dd;
        return {d * id, -b * id, -c * id, a * id};
    }
};

/// Solve a 3x3 linear system by partial-pivot elimination.
/// Returns false when the pivot collapses.
inline bool solve3x3(double A[3][3], double rhs[3], double out[3]) {
    int idx[3] = {0, 1, 2};
    for (int k = 0; k < 3; ++k) {
        int p = k;
        for (int i = k + 1; i < 3; ++i)
            if (std::abs(A[idx[i]][k]) > std::abs(A[idx[p]][k])) p = i;
        std::swap(idx[k], idx[p]);
        double piv = A[idx[k]][k];
        if (std::abs(piv) < 1e-300) return false;
        for (int i = k + 1; i < 3; ++i) {
            double f = A[idx[i]][k] / piv;
            for (int j = k; j < 3; ++j) A[idx[i]][j] -= f * A[idx[k]][j];
            rhs[idx[i]] -= f * rhs[idx[k]];
        }
    }
    for (int k = 2; k >= 0; --k) {
        double s = rhs[idx[k]];
        for (int j = k + 1; j < 3; ++j) s -= A[idx[k]][j] * out[j];
        out[k] = s / A[idx[k]][k];
    }
    return true;
}

} // namespace mcmfb
