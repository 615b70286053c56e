#pragma once

#include <functional>
#include <optional>

#include "mcmfb/geometry.hpp"
#include "mcmfb/trace.hpp"

namespace mcmfb::radial {

using geometry::ContactAngle;

/// Half-catenoid over the exterior domain; the exact stationary solution for
/// beta = 1/2 truncated so u(1) = 0, u_r(1) = sqrt(3).
double catenoid_profile(double r);
double catenoid_slope(double r);

enum class Topology { Lens, Exterior };
enum class OuterBc { None, Pinned, VerticalWall };

struct RadialConfig {
    Topology kind = Topology::Lens;
    double beta = 0.5;
    int n_nodes = 200;
    double r_ref = 3.0;            // exterior outer radius (reference = physical at t=0)
    OuterBc outer_bc = OuterBc::None;
    double pin_u = 0.0, pin_phi = 0.0;
    double cfl_sigma = 0.4;
    double t_end = 1.0;
    int snapshot_every = 0;        // 0: first/last only
    double extinction_radius = -1; // <0: 1e-3 of the initial boundary radius
    std::optional<double> fixed_dt; // overrides the CFL step when set

    ContactAngle angle() const { return ContactAngle(beta); }
    void validate() const;
};

/// Split-gauge state: u(r), phi(r) sampled on the reference grid.
struct RadialState {
    double t = 0.0;
    LineGrid grid;
    std::vector<double> u, phi;

    bool lens() const { return grid.has_pole; }
    /// Boundary (contact) node index: last node for lens, first for exterior.
    int contact() const { return lens() ? grid.n - 1 : 0; }
    double radius() const { return phi[contact()]; }
};

struct RadialDerivs {
    std::vector<double> ur, urr, phir, phirr;
};

/// Nodal first/second derivatives with the lens parity rules (u even, phi odd).
RadialDerivs derivatives(const RadialState& s);

/// Mean curvature of the surface of revolution [phi(r) e_r, u(r)].
std::vector<double> radial_mean_curvature(const RadialState& s);

/// Split-gauge right-hand side (du/dt, dphi/dt).
/// The scalar operator uses the derived term r*u_r/phi^2 (see the test
/// "split-gauge rhs matches closed-form H"); set printed_scalar_term to
/// evaluate the variant with u_r*phi_r/phi^2 instead.
void rhs_split_gauge(const RadialState& s, std::vector<double>& dudt,
                     std::vector<double>& dphidt, bool printed_scalar_term = false);

/// Third-order one-sided first derivative at the contact end of the grid
/// (the stencil the discrete contact/angle conditions are written in; the
/// 3-point closure leaves an O(dr^2 u_rrr) equilibrium offset that busts the
/// stationary-catenoid drift tolerance at n=200).
double contact_d1(const LineGrid& g, const std::vector<double>& f, bool at_last);

/// Overwrite boundary nodes so the discrete contact/angle (and outer)
/// conditions hold exactly.
void apply_bcs(RadialState& s, const RadialConfig& cfg);

/// Parabolic step size bound: cfl_sigma * dr^2 * min(phi_r^2+u_r^2) / 2.
double stable_dt(const RadialState& s, const RadialConfig& cfg);

/// One Heun (RK2) step; boundary conditions re-imposed after each stage.
void step(RadialState& s, const RadialConfig& cfg, double dt);

/// Per-step diagnostics of the current state.
StepRecord diagnostics(const RadialState& s, const RadialConfig& cfg, double dt);

/// Integrate until t_end, extinction, or error. Seeds are BC-projected before
/// the compatibility check (pre: contact and angle residuals <= 1e-8).
RunTrace run(const RadialConfig& cfg, RadialState seed,
             const std::function<void(const RadialState&, const StepRecord&)>& on_step = {});

/// Seed states.
RadialState catenoid_seed(const RadialConfig& cfg);
RadialState lens_seed(const RadialConfig& cfg, double r0);

/// Reconstructed-graph values at a node: w = u o phi^{-1} evaluated by chain
/// rule in the reference coordinate.
struct GraphJet {
    double rho;   // physical radius phi(r)
    double w, wr, wrr;
    double v;     // sqrt(1+wr^2)
};
GraphJet graph_jet(const RadialState& s, const RadialDerivs& d, int j);

} // namespace mcmfb::radial
