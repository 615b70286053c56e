#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mcmfb/geometry.hpp"
#include "mcmfb/trace.hpp"

namespace mcmfb::seed {

using geometry::ContactAngle;

/// Unit-disk domain data for the compatible-diffeomorphism construction:
/// boundary distance rho = 1-r, inner normal n = -e_r (self-parallel), and a
/// C^2 quintic cutoff in rho, identically 1 below rho1 and 0 above rho2.
struct DomainDescriptor {
    double rho1 = 0.1;
    double rho2 = 0.3;

    double cutoff(double rho) const;
    double cutoff_d1(double rho) const;
    double cutoff_d2(double rho) const;
};

/// Normal 2-jet value the initial diffeomorphism must carry so the contact
/// condition holds to first order in time: h = -H0 / (beta^2 beta0).
std::vector<double> required_jet(const std::vector<double>& H0_boundary,
                                 const ContactAngle& angle);

/// Harmonic extension of a boundary function into the disk, as a truncated
/// Fourier series g(r,theta) = sum a_k r^|k| e^(ik theta). Exact for
/// trigonometric polynomials; max principle gives sup|g| <= sup|h|.
class HarmonicExtension {
public:
    /// h sampled at n equispaced angles (theta_k = 2 pi k / n).
    explicit HarmonicExtension(const std::vector<double>& h);

    double eval(double r, double theta) const;
    /// Polar derivatives up to second order.
    void jet2(double r, double theta, double& g, double& gr, double& gth, double& grr,
              double& grth, double& gthth) const;

private:
    std::vector<double> a_, b_; // cosine/sine coefficients per mode
};

std::vector<double> extend_boundary_function(const std::vector<double>& h_boundary,
                                             const DomainDescriptor& dom,
                                             const PolarGrid& grid);

/// Compatible initial diffeomorphism phi(x) = x + zeta(rho) f(x) n(x) with
/// f = rho^2 g / 2, carrying the prescribed normal 2-jet h on the boundary.
/// All derivatives are analytic (no grid involved).
class CompatibleDiffeo {
public:
    CompatibleDiffeo(const std::vector<double>& h_boundary, DomainDescriptor dom);

    Vec2 eval(double r, double theta) const;
    Mat2 jacobian(double r, double theta) const;
    /// Second derivatives of both components: hess1 = D^2 phi^1, hess2 = D^2 phi^2.
    void hessians(double r, double theta, Sym2& hess1, Sym2& hess2) const;

    double min_jacobian() const { return min_jac_; }
    const DomainDescriptor& domain() const { return dom_; }

private:
    void scalar_jet(double r, double theta, double& s, Vec2& ds, Sym2& d2s) const;

    HarmonicExtension ext_;
    DomainDescriptor dom_;
    double min_jac_ = 1.0;
};

/// Build the diffeomorphism, shrinking the cutoff until it stays injective
/// with min Jacobian >= jac_floor. Throws NotDiffeo when no cutoff works.
CompatibleDiffeo build_diffeo(const std::vector<double>& h_boundary,
                              DomainDescriptor dom, double jac_floor = 0.5);

/// Jet report of a candidate map against the three boundary conditions.
struct JetReport {
    double err_value = 0.0;    // max |phi - id| on the boundary ring
    double err_jacobian = 0.0; // max |d phi - I| on the boundary ring
    double err_jet2 = 0.0;     // max |n.d^2 phi(n,n) - h| (finite differences)
    double min_jacobian = 1.0;
};
JetReport verify_jet(const std::function<Vec2(double, double)>& phi,
                     const std::vector<double>& h_boundary, const PolarGrid& grid);

/// Concave lens seed profile w0(rho) = (beta0/(2 beta R0)) (R0^2 - rho^2):
/// contact, resolved angle, and concavity hold analytically.
struct SeedProfile {
    std::string family = "lens";
    double r0 = 1.0;
    double amplitude = 0.0;

    double w(double rho) const { return amplitude * (r0 * r0 - rho * rho); }
    double dw(double rho) const { return -2.0 * amplitude * rho; }
    double d2w(double) const { return -2.0 * amplitude; }

    /// Boundary mean curvature of the profile (constant on the ring).
    double boundary_H(const ContactAngle& angle) const;
};
SeedProfile lens_profile(const ContactAngle& angle, double r0);

/// Assembled planar initial data: F0 = [phi0, w0 o phi0] sampled on the grid,
/// with phi0 from build_diffeo for the compatibility jet of the profile.
struct PlanarSeed {
    std::vector<double> f1, f2, u;
    double min_jacobian = 1.0;
};
PlanarSeed planar_seed(const PolarGrid& grid, const ContactAngle& angle, double r0,
                       bool compatible = true);

/// Symmetric triple junction export: graph w, its mirror -w, and the planar
/// complement ring, as indexed triangle meshes sharing the junction curve.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces; // 0-based here; 1-based in the file
};
struct TripleJunction {
    TriangleMesh upper, lower, plane;
    std::vector<Vec3> junction;      // shared curve Gamma(t)
    std::vector<Vec3> n_upper, n_lower, n_plane; // junction normals per sheet
};
TripleJunction reflect_triple_junction(const Snapshot& snap, int n_theta = 96,
                                       double ring_outer = -1.0);

} // namespace mcmfb::seed
