#pragma once

#include <functional>
#include <optional>

#include "mcmfb/geometry.hpp"
#include "mcmfb/radial.hpp"
#include "mcmfb/trace.hpp"

namespace mcmfb::planar {

using geometry::ContactAngle;

struct PlanarConfig {
    double beta = 0.5;
    int n_r = 48;
    int n_theta = 96;
    double cfl_sigma = 0.4;
    double t_end = 0.06;
    double newton_tol = 1e-12;
    int newton_max_iters = 20;
    double min_jacobian_frac = 0.05; // of the initial minimum
    int snapshot_every = 0;
    double extinction_radius = -1.0; // <0: 1e-3 of the initial boundary radius
    std::optional<double> fixed_dt;

    ContactAngle angle() const { return ContactAngle(beta); }
    void validate() const;
};

/// Split-gauge state on the fixed unit-disk reference grid:
/// F = [phi^1, phi^2, u] sampled per node.
struct PlanarState {
    double t = 0.0;
    PolarGrid grid;
    std::vector<double> f1, f2, u;
};

/// Volume diagnostics accumulated during an rhs sweep.
struct RhsDiag {
    double sigma_max = 0.0;  // explicit-stability bound: dt <= sigma/sigma_max
    double min_jphi = 1e300; // min interior Jacobian of (phi1, phi2)
    double sup_v = 0.0;
    double H_min = 1e300, H_max = -1e300;
    double h_eig_max = -1e300;
    double p_min = 1e300;
};

/// Azimuthal pole filter. Rings with radius below ~n_theta dr/(2 pi) carry
/// theta modes shorter than the radial mesh width; keeping them costs
/// dt ~ (r_0 dtheta)^2 for no resolved content. After each stage, inner rings
/// are projected onto |k| <= K_j = max(4, ceil(pi r_j / dr)), and the step
/// bound uses the exact stencil symbols of the retained modes. The projection
/// is exact on rotationally symmetric states (modes 0 and 1).
class PoleFilter {
public:
    explicit PoleFilter(const PolarGrid& g);

    void apply(PlanarState& s) const;
    bool active(int j) const { return K_[j] * 2 < grid_->n_theta; }
    /// Largest theta-stencil symbols among retained modes at ring j,
    /// for the 4th-order second and first derivative stencils.
    double sym_dthth(int j) const { return s2_[j]; }
    double sym_dth(int j) const { return s1_[j]; }

private:
    const PolarGrid* grid_;
    std::vector<int> K_;
    std::vector<double> s1_, s2_;
    std::vector<double> cos_table_, sin_table_; // [m * n_theta + k]
    void project_ring(std::vector<double>& f, int j) const;
};

/// Interior right-hand side dF/dt = g^ij(DF) F_ij; boundary-ring entries are
/// left at zero (they are projected by boundary_newton). When diag is given
/// the sweep also accumulates the per-step diagnostics; the stability bound
/// uses the filter's per-ring symbols when one is supplied.
void planar_rhs(const PlanarState& s, std::vector<double>& d1, std::vector<double>& d2,
                std::vector<double>& du, RhsDiag* diag = nullptr,
                const PoleFilter* filter = nullptr);

/// Reference implementation built on the generic fd:: stencils (slow; used to
/// validate the fused sweep).
void planar_rhs_reference(const PlanarState& s, std::vector<double>& d1,
                          std::vector<double>& d2, std::vector<double>& du);

/// Solve the boundary ring: per node, u = 0, N^3(DF) = beta (unsquared), and
/// <D_tau phi, d_n phi> = 0, by damped Newton with Gauss-Seidel sweeps.
/// Returns the sweep count used.
int boundary_newton(PlanarState& s, const PlanarConfig& cfg);

/// Boundary-ring residuals and diagnostics of the current state.
struct RingDiag {
    double radius = 0.0;     // mean |phi| over the ring
    double angle_res = 0.0;  // max |N^3 - beta|
    double orth_res = 0.0;   // max |<d_theta phi, d_r phi>|
    double b_res = 0.0;      // max |B(Dphi,Du)| (squared form, diagnostic)
    double cont_fn = 0.0;    // sup_Gamma(|h|_g + |grad^tan h^tan|_g)
    double min_jphi_ring = 1e300;
};
RingDiag ring_diagnostics(const PlanarState& s, const PlanarConfig& cfg);

/// One Heun step (pole filter and boundary Newton after each stage); k1/sigma
/// from the first sweep decide dt when dt_in <= 0. Returns the dt taken.
/// A null filter is built on the fly (planar_run caches one per run).
double planar_step(PlanarState& s, const PlanarConfig& cfg, double dt_in = -1.0,
                   StepRecord* rec = nullptr, const PoleFilter* filter = nullptr);

RunTrace planar_run(const PlanarConfig& cfg, PlanarState seed,
                    const std::function<void(const PlanarState&, const StepRecord&)>&
                        on_step = {});

/// Lift a rotationally symmetric radial state onto a polar grid (cubic
/// interpolation in r when the radial grids differ).
PlanarState radial_embedding(const radial::RadialState& rs, const PolarGrid& grid);

/// w at a physical point via the inverse map (bilinear-cell Newton on phi).
/// Throws ReconstructionFailure when the point cannot be located.
double reconstruct_w(const PlanarState& s, Vec2 y);

} // namespace mcmfb::planar
