#include "mcmfb/radial.hpp"

#include <algorithm>
#include <cmath>

namespace mcmfb::radial {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

double catenoid_profile(double r) {
    if (r < kSqrt3 / 2.0 - 1e-15)
        throw DomainError("catenoid profile defined for r >= sqrt(3)/2, got " +
                          std::to_string(r));
    double s = std::sqrt(std::max(0.0, 4.0 * r * r - 3.0));
    return 0.5 * kSqrt3 * (std::log(2.0 * r + s) - std::log(3.0));
}

double catenoid_slope(double r) {
    if (r < kSqrt3 / 2.0 - 1e-15)
        throw DomainError("catenoid slope defined for r >= sqrt(3)/2, got " +
                          std::to_string(r));
    return kSqrt3 / std::sqrt(4.0 * r * r - 3.0);
}

void RadialConfig::validate() const {
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("0 < beta < 1 required, got " + std::to_string(beta));
    if (n_nodes < 16) throw ConfigError("n_nodes >= 16 required");
    if (!(cfl_sigma > 0.0 && cfl_sigma <= 0.5))
        throw ConfigError("0 < cfl_sigma <= 0.5 required");
    if (kind == Topology::Exterior && !(r_ref > 1.0))
        throw ConfigError("exterior runs need r_ref > 1");
    if (kind == Topology::Lens && outer_bc != OuterBc::None)
        throw ConfigError("lens runs take no outer boundary condition");
    if (kind == Topology::Exterior && outer_bc == OuterBc::None)
        throw ConfigError("exterior runs need outer_bc = pinned or vertical_wall");
}

RadialDerivs derivatives(const RadialState& s) {
    RadialDerivs d;
    int n = s.grid.n;
    d.ur.resize(n);
    d.urr.resize(n);
    d.phir.resize(n);
    d.phirr.resize(n);
    for (int j = 0; j < n; ++j) {
        d.ur[j] = fd::d1(s.grid, s.u, j, PoleParity::Even);
        d.urr[j] = fd::d2(s.grid, s.u, j, PoleParity::Even);
        d.phir[j] = fd::d1(s.grid, s.phi, j, PoleParity::Odd);
        d.phirr[j] = fd::d2(s.grid, s.phi, j, PoleParity::Odd);
    }
    return d;
}

std::vector<double> radial_mean_curvature(const RadialState& s) {
    RadialDerivs d = derivatives(s);
    int n = s.grid.n;
    std::vector<double> H(n);
    for (int j = 0; j < n; ++j) {
        double w2 = d.phir[j] * d.phir[j] + d.ur[j] * d.ur[j];
        if (w2 < 1e-14) throw DegenerateState("phi_r^2 + u_r^2 vanished at node " +
                                              std::to_string(j));
        H[j] = (d.phir[j] * d.urr[j] - d.ur[j] * d.phirr[j] + w2 * d.ur[j] / s.phi[j]) /
               (w2 * std::sqrt(w2));
    }
    return H;
}

void rhs_split_gauge(const RadialState& s, std::vector<double>& dudt,
                     std::vector<double>& dphidt, bool printed_scalar_term) {
    RadialDerivs d = derivatives(s);
    int n = s.grid.n;
    dudt.assign(n, 0.0);
    dphidt.assign(n, 0.0);
    int c = s.contact();
    int outer = s.lens() ? -1 : n - 1;
    for (int j = 0; j < n; ++j) {
        if (j == c || j == outer) continue; // boundary nodes are BC-projected
        double w2 = d.phir[j] * d.phir[j] + d.ur[j] * d.ur[j];
        if (w2 < 1e-14) throw DegenerateState("phi_r^2 + u_r^2 vanished at node " +
                                              std::to_string(j));
        double r = s.grid.r[j];
        double p = s.phi[j];
        double p2 = p * p;
        if (printed_scalar_term)
            dudt[j] = d.urr[j] / w2 + d.ur[j] * d.phir[j] / p2;
        else
            dudt[j] = d.urr[j] / w2 + r * d.ur[j] / p2;
        // (r phi_r - phi)/phi^2 assembled as a difference for pole regularity
        dphidt[j] = d.phirr[j] / w2 + (r * d.phir[j] - p) / p2;
    }
}

double contact_d1(const LineGrid& g, const std::vector<double>& f, bool at_last) {
    int n = g.n;
    double h = g.dr;
    if (at_last)
        return (11.0 * f[n - 1] - 18.0 * f[n - 2] + 9.0 * f[n - 3] - 2.0 * f[n - 4]) /
               (6.0 * h);
    return (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * h);
}

void apply_bcs(RadialState& s, const RadialConfig& cfg) {
    ContactAngle a = cfg.angle();
    int n = s.grid.n;
    double h = s.grid.dr;
    if (std::abs(a.beta0) < 1e-15) throw BcSolveFailure("beta0 = 0");
    if (cfg.kind == Topology::Lens) {
        // contact at j = n-1: u = 0, beta*u_r + beta0*phi_r = 0 (one-sided)
        s.u[n - 1] = 0.0;
        double ur = contact_d1(s.grid, s.u, true);
        double phir_target = -(a.beta / a.beta0) * ur;
        s.phi[n - 1] = (6.0 * h * phir_target + 18.0 * s.phi[n - 2] -
                        9.0 * s.phi[n - 3] + 2.0 * s.phi[n - 4]) /
                       11.0;
    } else {
        // contact at j = 0: u = 0, beta*u_r - beta0*phi_r = 0 (one-sided)
        s.u[0] = 0.0;
        double ur = contact_d1(s.grid, s.u, false);
        double phir_target = (a.beta / a.beta0) * ur;
        s.phi[0] = (18.0 * s.phi[1] - 9.0 * s.phi[2] + 2.0 * s.phi[3] -
                    6.0 * h * phir_target) /
                   11.0;
        if (cfg.outer_bc == OuterBc::Pinned) {
            s.u[n - 1] = cfg.pin_u;
            s.phi[n - 1] = cfg.pin_phi;
        } else { // vertical wall: u_r = 0, phi pinned
            s.u[n - 1] = (4.0 * s.u[n - 2] - s.u[n - 3]) / 3.0;
            s.phi[n - 1] = cfg.pin_phi;
        }
    }
}

double stable_dt(const RadialState& s, const RadialConfig& cfg) {
    RadialDerivs d = derivatives(s);
    double w2min = 1e300;
    for (int j = 0; j < s.grid.n; ++j)
        w2min = std::min(w2min, d.phir[j] * d.phir[j] + d.ur[j] * d.ur[j]);
    return cfg.cfl_sigma * s.grid.dr * s.grid.dr * w2min / 2.0;
}

void step(RadialState& s, const RadialConfig& cfg, double dt) {
    int n = s.grid.n;
    std::vector<double> k1u, k1p, k2u, k2p;
    rhs_split_gauge(s, k1u, k1p);
    RadialState s1 = s;
    for (int j = 0; j < n; ++j) {
        s1.u[j] = s.u[j] + dt * k1u[j];
        s1.phi[j] = s.phi[j] + dt * k1p[j];
    }
    apply_bcs(s1, cfg);
    rhs_split_gauge(s1, k2u, k2p);
    for (int j = 0; j < n; ++j) {
        s.u[j] += 0.5 * dt * (k1u[j] + k2u[j]);
        s.phi[j] += 0.5 * dt * (k1p[j] + k2p[j]);
    }
    apply_bcs(s, cfg);
    s.t += dt;
}

GraphJet graph_jet(const RadialState& s, const RadialDerivs& d, int j) {
    GraphJet out;
    out.rho = s.phi[j];
    out.w = s.u[j];
    double pr = d.phir[j];
    out.wr = d.ur[j] / pr;
    out.wrr = (d.urr[j] - out.wr * d.phirr[j]) / (pr * pr);
    out.v = std::sqrt(1.0 + out.wr * out.wr);
    return out;
}

StepRecord diagnostics(const RadialState& s, const RadialConfig& cfg, double dt) {
    StepRecord rec;
    rec.t = s.t;
    rec.dt = dt;
    rec.radius = s.radius();
    RadialDerivs d = derivatives(s);
    int n = s.grid.n;
    double sup_v = 0.0, hmin = 1e300, hmax = -1e300, heig = -1e300, pmin = 1e300;
    for (int j = 0; j < n; ++j) {
        GraphJet gj = graph_jet(s, d, j);
        sup_v = std::max(sup_v, gj.v);
        double k1 = gj.wrr / (gj.v * gj.v * gj.v);     // profile principal curvature
        double k2 = gj.wr / (gj.rho * gj.v);           // rotational principal curvature
        double H = k1 + k2;
        hmin = std::min(hmin, H);
        hmax = std::max(hmax, H);
        // eigenvalues of h_ij = w_ij/v: w_rr/v and (w_r/rho)/v
        heig = std::max(heig, std::max(gj.wrr, gj.wr / gj.rho) / gj.v);
        double p = (gj.w - gj.rho * gj.wr) / gj.v; // support function, origin at 0
        pmin = std::min(pmin, p);
        if (j == s.contact()) {
            // measured in the stencil the BC solve enforces
            double ur_c = contact_d1(s.grid, s.u, s.lens());
            double pr_c = contact_d1(s.grid, s.phi, s.lens());
            double W = std::hypot(pr_c, ur_c);
            rec.angle_res = std::abs(cfg.beta * W - pr_c);
            rec.cont_fn = std::hypot(k1, k2); // |h|_g; tangential grad term is 0 radially
        }
    }
    rec.sup_v = sup_v;
    rec.H_min = hmin;
    rec.H_max = hmax;
    rec.h_eig_max = heig;
    rec.p_min = pmin;
    rec.orth_res = 0.0;
    return rec;
}

RadialState catenoid_seed(const RadialConfig& cfg) {
    RadialState s;
    s.grid = LineGrid::uniform(1.0, cfg.r_ref, cfg.n_nodes);
    s.u.resize(cfg.n_nodes);
    s.phi.resize(cfg.n_nodes);
    for (int j = 0; j < cfg.n_nodes; ++j) {
        s.u[j] = catenoid_profile(s.grid.r[j]);
        s.phi[j] = s.grid.r[j];
    }
    return s;
}

RadialState lens_seed(const RadialConfig& cfg, double r0) {
    if (!(r0 > 0.0)) throw ConfigError("lens seed needs R0 > 0");
    ContactAngle a = cfg.angle();
    RadialState s;
    s.grid = LineGrid::lens_radial(cfg.n_nodes);
    s.u.resize(cfg.n_nodes);
    s.phi.resize(cfg.n_nodes);
    double amp = a.beta0 / (2.0 * a.beta * r0);
    for (int j = 0; j < cfg.n_nodes; ++j) {
        double rho = r0 * s.grid.r[j];
        s.phi[j] = rho;
        s.u[j] = amp * (r0 * r0 - rho * rho);
    }
    return s;
}

namespace {

void check_mesh(const RadialState& s, double phir_floor) {
    int n = s.grid.n;
    if (s.lens() && !(s.phi[0] > 0.0))
        throw MeshDegeneracy("phi lost positivity at the pole");
    double min_slope = 1e300;
    for (int j = 1; j < n; ++j) min_slope = std::min(min_slope, s.phi[j] - s.phi[j - 1]);
    if (!(min_slope > 0.0)) throw MeshDegeneracy("phi no longer strictly increasing");
    if (min_slope / s.grid.dr < phir_floor)
        throw MeshDegeneracy("min discrete phi_r " + std::to_string(min_slope / s.grid.dr) +
                             " under the degeneracy floor " + std::to_string(phir_floor));
}

Snapshot make_snapshot(const RadialState& s, const RadialConfig& cfg, int step_no) {
    Snapshot snap;
    snap.kind = Snapshot::Kind::Radial;
    snap.t = s.t;
    snap.step = step_no;
    snap.line = s.grid;
    snap.lens = s.lens();
    snap.u = s.u;
    snap.phi = s.phi;
    snap.beta = cfg.beta;
    return snap;
}

} // namespace

RunTrace run(const RadialConfig& cfg, RadialState seed,
             const std::function<void(const RadialState&, const StepRecord&)>& on_step) {
    cfg.validate();
    RunTrace trace;
    ContactAngle a = cfg.angle();

    // Squared-angle residual of the raw seed, reported when projection cannot
    // reach an admissible angle state.
    RadialDerivs d0 = derivatives(seed);
    int c = seed.lens() ? seed.grid.n - 1 : 0;
    double b_pre = a.beta * a.beta * d0.ur[c] * d0.ur[c] -
                   a.beta0 * a.beta0 * d0.phir[c] * d0.phir[c];

    apply_bcs(seed, cfg);
    RadialDerivs d1 = derivatives(seed);
    double ur_c = contact_d1(seed.grid, seed.u, seed.lens());
    double pr_c = contact_d1(seed.grid, seed.phi, seed.lens());
    double w_contact = std::hypot(pr_c, ur_c);
    if (!(pr_c > 1e-6) || !(w_contact > 1e-6))
        throw SeedIncompatible(
            "angle condition unreachable at the contact node; squared-angle residual B = " +
            std::to_string(b_pre));
    if (std::abs(seed.u[c]) > 1e-8 ||
        std::abs(a.beta * w_contact - pr_c) > 1e-8)
        throw SeedIncompatible("projected seed violates contact/angle conditions");

    double r_init = seed.radius();
    double ext_radius = cfg.extinction_radius >= 0.0 ? cfg.extinction_radius
                                                     : 1e-3 * std::abs(r_init);
    double min_phir0 = 1e300;
    for (int j = 0; j < seed.grid.n; ++j) min_phir0 = std::min(min_phir0, d1.phir[j]);

    if (cfg.t_end <= 0.0) {
        trace.exit_reason = "t_end";
        return trace;
    }

    trace.steps.push_back(diagnostics(seed, cfg, 0.0));
    trace.snapshots.push_back(make_snapshot(seed, cfg, 0));
    if (on_step) on_step(seed, trace.steps.back());

    int step_no = 0;
    try {
        while (true) {
            if (cfg.kind == Topology::Lens && seed.radius() < ext_radius) {
                trace.exit_reason = "extinction";
                break;
            }
            if (seed.t >= cfg.t_end - 1e-15) {
                trace.exit_reason = "t_end";
                break;
            }
            double shrink = cfg.kind == Topology::Lens ? seed.radius() / r_init : 1.0;
            check_mesh(seed, 0.05 * shrink * min_phir0);
            double dt = cfg.fixed_dt ? *cfg.fixed_dt : stable_dt(seed, cfg);
            dt = std::min(dt, cfg.t_end - seed.t);
            if (dt < 1e-14) throw StepUnderflow("dt = " + std::to_string(dt));
            step(seed, cfg, dt);
            ++step_no;
            trace.steps.push_back(diagnostics(seed, cfg, dt));
            if (on_step) on_step(seed, trace.steps.back());
            if (cfg.snapshot_every > 0 && step_no % cfg.snapshot_every == 0)
                trace.snapshots.push_back(make_snapshot(seed, cfg, step_no));
        }
    } catch (const Error& e) {
        trace.exit_reason = "error(" + e.code() + ")";
        trace.error_detail = e.what();
    }
    if (trace.snapshots.empty() || trace.snapshots.back().step != step_no)
        trace.snapshots.push_back(make_snapshot(seed, cfg, step_no));
    trace.n_steps = step_no;
    return trace;
}

} // namespace mcmfb::radial
