#pragma once

#include <vector>

#include "mcmfb/fd.hpp"
#include "mcmfb/grid.hpp"
#include "mcmfb/smallmat.hpp"

namespace mcmfb::geometry {

/// Contact angle pair (beta, beta0) with beta^2 + beta0^2 = 1.
struct ContactAngle {
    double beta;
    double beta0;

    explicit ContactAngle(double b) : beta(b), beta0(0.0) {
        if (!(b > 0.0 && b < 1.0))
            throw ConfigError("contact angle requires 0 < beta < 1, got " +
                              std::to_string(b));
        beta0 = std::sqrt(1.0 - b * b);
    }

    /// Boundary slope of the graph: d_n w = beta0/beta.
    double slope() const { return beta0 / beta; }
};

/// Per-node Jacobian of F = [phi^1, phi^2, u]: the three component gradients.
struct JetF {
    Vec2 dphi1, dphi2, du;

    Mat2 dphi() const { return {dphi1.x, dphi1.y, dphi2.x, dphi2.y}; }
};

/// First/second fundamental form data of a graph, sampled on a polar grid.
struct GeometryFields {
    const PolarGrid* grid = nullptr;
    std::vector<double> v;     // sqrt(1+|Dw|^2)
    std::vector<Sym2> ginv;    // inverse induced metric g^ij
    std::vector<Sym2> h;       // pullback second fundamental form h_ij = w_ij/v
    std::vector<double> H;     // mean curvature g^ij h_ij
    std::vector<Vec3> N;       // upward unit normal
    std::vector<Vec2> omega;   // Dw/v
    std::vector<Vec2> grad;    // Dw
    std::vector<Sym2> hess;    // D^2 w
};

/// Centered second-order gradient/hessian of a scalar field on the polar grid
/// (one-sided at the boundary ring, antipodal ghosts at the pole), returned in
/// Cartesian components.
std::vector<Vec2> fd_gradient(const PolarGrid& g, const std::vector<double>& f);
std::vector<Sym2> fd_hessian(const PolarGrid& g, const std::vector<double>& f);

/// 1D variants on a LineGrid (exact on quadratics away from one-sided ends).
std::vector<double> fd_gradient(const LineGrid& g, const std::vector<double>& f,
                                PoleParity parity = PoleParity::Even);
std::vector<double> fd_hessian(const LineGrid& g, const std::vector<double>& f,
                               PoleParity parity = PoleParity::Even);

/// g^ij = delta_ij - w_i w_j / (1 + |Dw|^2).
Sym2 metric_inverse(Vec2 dw);

/// All graph geometry quantities of w on the polar grid.
GeometryFields graph_geometry(const PolarGrid& g, const std::vector<double>& w,
                              const ContactAngle& angle);

/// Induced metric g_ij = <F_i, F_j> of a parametrized surface and its inverse.
/// Throws DegenerateImmersion when det g collapses.
void param_metric(const JetF& jet, Sym2& g_out, Sym2& ginv_out);

/// Vector product of the columns of DF: N~ = [J(Dphi,Du), J_phi], N = N~/|N~|.
struct VectorProduct {
    Vec2 J;
    double Jphi;
    Vec3 N;
    double norm; // |N~|
};
VectorProduct vector_product(const JetF& jet);

/// Squared angle operator B = beta^2 |J|^2 - beta0^2 J_phi^2 (zero exactly
/// when N^3 = beta, given J_phi > 0).
double angle_operator(const JetF& jet, const ContactAngle& angle);

/// <D_tau phi, D_n phi> for a boundary frame (n, tau).
double orthogonality_operator(const Mat2& dphi, Vec2 n, Vec2 tau);

/// Weingarten operator S^i_j = g^ik h_kj (as a general 2x2 matrix).
Mat2 weingarten(const Sym2& ginv, const Sym2& h);

/// |h|^2_g = g^ik g^jl h_ij h_kl.
double norm2_h(const Sym2& ginv, const Sym2& h);

/// (h^2)_ij = g^kp h_ik h_pj and (h^3)_ij.
Sym2 h_squared(const Sym2& ginv, const Sym2& h);
Sym2 h_cubed(const Sym2& ginv, const Sym2& h);

} // namespace mcmfb::geometry
