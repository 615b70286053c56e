#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcmfb/geometry.hpp"
#include "mcmfb/trace.hpp"

namespace mcmfb::diagnose {

using geometry::ContactAngle;

/// Boundary frame and curvature components at the contact circle, built from
/// the reconstructed graph (n is the inner unit normal of D(t), the direction
/// of increasing w per the d_n w > 0 convention).
struct BoundaryFrameFields {
    Vec2 n, tau;
    double h_nn = 0.0, h_tt = 0.0, h_nt = 0.0;
    double H = 0.0, v = 0.0;
};

/// One verification record; `order` is filled when two levels are paired.
struct ResidualReport {
    std::string id;
    double residual = 0.0;
    std::optional<double> order;
    bool pass = true;
    std::string note;
};

struct SupportFunctionField {
    std::vector<double> p;          // nodewise support function
    double p_min = 0.0;
    double boundary_value_res = 0.0; // |p - (-beta0 y.n)| on the contact circle
    double boundary_deriv_res = 0.0; // |p_n - (beta^2/beta0) p h_nn|
};

/// Radial graph jets at a node: w and its rho-derivatives through fourth
/// order obtained by exact chain rule in the reference coordinate.
struct GraphJet4 {
    double rho = 0.0;
    double w = 0.0, w1 = 0.0, w2 = 0.0, w3 = 0.0, w4 = 0.0;
};

/// Rotationally symmetric view of a snapshot: the (u, phi) profiles with
/// derivative fields. Planar snapshots are reduced through their symmetry
/// (InconsistentSnapshots when the state is not symmetric to tolerance).
struct RadialProfile {
    double t = 0.0;
    double beta = 0.5;
    bool lens = true;
    /// contact-side field jets use the stencil the originating solver's
    /// boundary conditions are written in: 4-point for radial states,
    /// 3-point for planar reductions
    bool contact4 = true;
    LineGrid grid;
    std::vector<double> u, phi;
    std::vector<double> ur, urr, urrr, urrrr;
    std::vector<double> phir, phirr, phirrr, phirrrr;

    int contact() const { return lens ? grid.n - 1 : 0; }
    GraphJet4 jet(int j) const;
    /// d/d rho of a nodal field via the chain rule (one-sided at ends).
    double drho(const std::vector<double>& f, int j, PoleParity p) const;
};
RadialProfile radial_profile(const Snapshot& snap, double sym_tol = 1e-8);

/// The five contact-circle identities, checked with one-sided normal
/// stencils on the reconstructed graph:
///   h_split     h(n,tau) = 0
///   dn_H        d_n H = (beta^2/beta0) H h_nn
///   dn_h_tan    beta0 d_n h(tau,tau) = -(h_tan)^2 + beta^2 h_nn h(tau,tau)
///   dn_h_nn     beta0 d_n h(n,n) = |h|^2/beta^2 + 2 beta0^2 h_nn^2
///   dn_h_norm2  (beta0/2) d_n |h|^2 = 2 beta^2 |h|^2 h_nn - tr h^3
std::vector<ResidualReport> check_boundary_identities(const Snapshot& snap,
                                                      const ContactAngle& angle);

/// Same identities evaluated from closed-form jets (w, w', ..., w''') of an
/// exact radial solution; residuals are pure algebra (~1e-13). Used by the
/// catenoid acceptance check.
std::vector<ResidualReport> boundary_identities_analytic(
    double rho, double w1, double w2, double w3, const ContactAngle& angle,
    double H, double dH, bool lens);

/// Evolution-equation residual suite on a uniform-in-time snapshot triple:
///   L_v        L[v] = -2|Dv|^2_g/v - v|h|^2_g
///   L_H        L[H] = |h|^2 H + H h^2(w,w) - H^2 h(w,w)
///   L_h2       L[|h|^2] = -2|grad h|^2 + 2|h|^4 - 4H h^3(w,w) - 2H|h|^2 h(w,w)
///   dt_ginv    dt g^ij = -(grad H)^i w^j - ... - H[S(w)^i w^j + ...]
///   weingarten (dt - Lap_g) h^k_j = H grad_w h^k_j + ...
///   codazzi    assembled grad h totally symmetric
///   lap_bel    divergence-form Lap_g v equals tr_g d^2 v - H d_w v
/// Residual maxima are taken over probe radii with boundary distance > 0.1.
std::vector<ResidualReport> evolution_residuals(const Snapshot& before,
                                                const Snapshot& center,
                                                const Snapshot& after);

/// Maximum-principle monitors over a per-step series.
struct MonotoneBoundsReport {
    double height_violation = 0.0;    // max(w - sup w0, -min w)
    double gradient_violation = 0.0;  // max v - max(sup v0, 1/beta), relative
    double concavity_violation = 0.0; // max eigenvalue of h over the run
    double prop125_violation = 0.0;   // max H - H0 (only when applicable)
    bool prop125_applicable = false;
    bool pass = true;
};
MonotoneBoundsReport bounds_monitor(const std::vector<StepRecord>& steps,
                                    const ContactAngle& angle, double v0_sup,
                                    double w0_sup, double h0_eig_max, double H0_max);

/// Lemma 12.4 comparison: t* = 1/(2 H0^2 c_n), c_n = 1/n + (vbar^2 - 1).
struct ExtinctionBound {
    double t_measured = 0.0;
    double t_star = 0.0;
    bool pass = false;
};
ExtinctionBound extinction_bound(const std::vector<StepRecord>& steps,
                                 const ContactAngle& angle, double H0_max,
                                 double v0_sup, bool reached_extinction);

/// Support function p = <G, N> of a lens snapshot about the origin.
SupportFunctionField support_function(const Snapshot& snap, const ContactAngle& angle);

/// Blow-up functional sup_Gamma(|h|_g + |grad_tan h_tan|) per step, plus the
/// check that it grows monotonically over the last tenth of the series.
struct ContinuationReport {
    std::vector<double> series;
    double growth_factor = 0.0; // last value / first value
    bool monotone_tail = false;
};
ContinuationReport continuation_monitor(const std::vector<StepRecord>& steps);

/// Conformal pseudo-frame identities of a snapshot (pointwise algebra):
/// <w, wt>_g = 0, |w|^2_g = |wt|^2_g = |Dw|^2_e, and the determinant identity
/// h^2(w,w) - H h(w,w) = -|w|^2_g det_g h (<= 0 for concave states).
struct ConformalFrameReport {
    double frame_res = 0.0;
    double det_identity_res = 0.0;
    double concavity_sign_max = 0.0; // max of h^2(w,w) - H h(w,w)
    double scale = 1.0;              // magnitude of the terms entering the identities
};
ConformalFrameReport conformal_frame_check(const Snapshot& snap,
                                           const ContactAngle& angle);

/// Trace identity g^ij h_ij = H via two independent algebraic routes on the
/// same nodal derivatives; a corrupted field spikes it O(1).
ResidualReport trace_identity_check(const Snapshot& snap);

/// Lemma 13.1 surrogate: the argmax of f = |h|^2 v^2 over the spacetime trace
/// lies on the parabolic boundary (t = 0 slab or within one cell of the
/// contact node).
struct ArgmaxReport {
    int step = 0;
    int node = 0;
    bool on_parabolic_boundary = false;
    double f_max = 0.0;
};
ArgmaxReport h2v2_argmax(const std::vector<Snapshot>& snaps);

/// Lemma 13.2 subsolution constant: with a0 = run max |h| and
/// alpha = min(1, 1/(4 c a0^2)), c = 4, reports the run max of the discrete
/// (dt - Lap_g)(alpha |grad h|^2 + |h|^2) over probe nodes.
ResidualReport subsolution_check(const Snapshot& before, const Snapshot& center,
                                 const Snapshot& after, double a0);

} // namespace mcmfb::diagnose
