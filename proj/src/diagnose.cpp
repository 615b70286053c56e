#include "mcmfb/diagnose.hpp"

#include <algorithm>
#include <cmath>

#include "mcmfb/fd.hpp"

namespace mcmfb::diagnose {

namespace {

PoleParity kEven = PoleParity::Even;
PoleParity kOdd = PoleParity::Odd;

/// First/second derivatives with a uniform stencil family near the contact
/// end: the same one-sided stencil shape at the last (lens) or first
/// (exterior) three nodes. Mixing centered and one-sided stencils there makes
/// the nodal truncation error non-smooth, and differentiating an assembled
/// field across that seam costs an order.
/// Field-jet first derivative: the contact-side nodes use the same 4-point
/// third-order shape the boundary solve is written in, so BC-enforced
/// relations stay algebraically exact in the assembled jets.
double prof_d1(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p,
               bool contact4) {
    int n = g.n;
    double h = g.dr;
    if (g.has_pole ? j >= n - 3 : false) {
        if (contact4)
            return (11.0 * f[j] - 18.0 * f[j - 1] + 9.0 * f[j - 2] -
                    2.0 * f[j - 3]) /
                   (6.0 * h);
        return (3.0 * f[j] - 4.0 * f[j - 1] + f[j - 2]) / (2.0 * h);
    }
    if (!g.has_pole && j <= 2) {
        if (contact4)
            return (-11.0 * f[j] + 18.0 * f[j + 1] - 9.0 * f[j + 2] +
                    2.0 * f[j + 3]) /
                   (6.0 * h);
        return (-3.0 * f[j] + 4.0 * f[j + 1] - f[j + 2]) / (2.0 * h);
    }
    return fd::d1(g, f, j, p);
}

/// Assembled-array first derivative: a uniform 3-point one-sided family near
/// the contact (second order suffices; what matters is one stencil shape over
/// the differentiated nodes so the value errors stay smooth).
double array_d1(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p) {
    int n = g.n;
    double h = g.dr;
    if (g.has_pole ? j >= n - 3 : false)
        return (3.0 * f[j] - 4.0 * f[j - 1] + f[j - 2]) / (2.0 * h);
    if (!g.has_pole && j <= 2)
        return (-3.0 * f[j] + 4.0 * f[j + 1] - f[j + 2]) / (2.0 * h);
    return fd::d1(g, f, j, p);
}

double prof_d2(const LineGrid& g, const std::vector<double>& f, int j, PoleParity p) {
    int n = g.n;
    double h2 = g.dr * g.dr;
    if (g.has_pole ? j >= n - 3 : false)
        return (2.0 * f[j] - 5.0 * f[j - 1] + 4.0 * f[j - 2] - f[j - 3]) / h2;
    if (!g.has_pole && j <= 2)
        return (2.0 * f[j] - 5.0 * f[j + 1] + 4.0 * f[j + 2] - f[j + 3]) / h2;
    return fd::d2(g, f, j, p);
}

} // namespace

GraphJet4 RadialProfile::jet(int j) const {
    GraphJet4 out;
    out.rho = phi[j];
    out.w = u[j];
    double p1 = phir[j], p2 = phirr[j], p3 = phirrr[j], p4 = phirrrr[j];
    out.w1 = ur[j] / p1;
    out.w2 = (urr[j] - out.w1 * p2) / (p1 * p1);
    out.w3 = (urrr[j] - 3.0 * out.w2 * p1 * p2 - out.w1 * p3) / (p1 * p1 * p1);
    out.w4 = (urrrr[j] - 6.0 * out.w3 * p1 * p1 * p2 -
              out.w2 * (3.0 * p2 * p2 + 4.0 * p1 * p3) - out.w1 * p4) /
             (p1 * p1 * p1 * p1);
    return out;
}

double RadialProfile::drho(const std::vector<double>& f, int j, PoleParity p) const {
    return array_d1(grid, f, j, p) / phir[j];
}

namespace {

void fill_derivs(const LineGrid& g, const std::vector<double>& f, PoleParity p,
                 std::vector<double>& d1, std::vector<double>& d2,
                 std::vector<double>& d3, std::vector<double>& d4,
                 bool contact4 = true) {
    int n = g.n;
    d1.resize(n);
    d2.resize(n);
    d3.assign(n, 0.0);
    d4.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        d1[j] = prof_d1(g, f, j, p, contact4);
        d2[j] = prof_d2(g, f, j, p);
    }
    int lo = g.has_pole ? 0 : 2;
    for (int j = lo; j < n - 2; ++j) {
        d3[j] = fd::d3(g, f, j, p);
        d4[j] = fd::d4(g, f, j, p);
    }
    // one-sided third derivative at the contact end (boundary identities);
    // the n-2 slot is a placeholder outside every probe region
    if (n >= 5) {
        d3[n - 1] = fd::d3_end(g, f);
        d3[n - 2] = fd::d3_end(g, f);
        if (!g.has_pole) {
            d3[0] = fd::d3_begin(g, f);
            d3[1] = fd::d3_begin(g, f);
        }
    }
}

} // namespace

RadialProfile radial_profile(const Snapshot& snap, double sym_tol) {
    RadialProfile p;
    p.t = snap.t;
    p.beta = snap.beta;
    if (snap.kind == Snapshot::Kind::Radial) {
        p.lens = snap.lens;
        p.grid = snap.line;
        p.u = snap.u;
        p.phi = snap.phi;
    } else {
        // reduce a planar snapshot through its rotational symmetry
        const PolarGrid& g = snap.disk;
        p.lens = true;
        p.grid = LineGrid::lens_radial(g.n_r);
        p.u.resize(g.n_r);
        p.phi.resize(g.n_r);
        double dev = 0.0;
        for (int j = 0; j < g.n_r; ++j) {
            double umin = 1e300, umax = -1e300, rmin = 1e300, rmax = -1e300;
            double usum = 0.0, rsum = 0.0;
            for (int k = 0; k < g.n_theta; ++k) {
                size_t i = g.idx(j, k);
                double uu = snap.fu[i];
                double rr = std::hypot(snap.f1[i], snap.f2[i]);
                umin = std::min(umin, uu);
                umax = std::max(umax, uu);
                rmin = std::min(rmin, rr);
                rmax = std::max(rmax, rr);
                usum += uu;
                rsum += rr;
            }
            dev = std::max(dev, std::max(umax - umin, rmax - rmin));
            p.u[j] = usum / g.n_theta;
            p.phi[j] = rsum / g.n_theta;
        }
        if (dev > sym_tol)
            throw InconsistentSnapshots(
                "planar snapshot not rotationally symmetric (deviation " +
                std::to_string(dev) + "); symmetric reduction unavailable");
    }
    p.contact4 = snap.kind == Snapshot::Kind::Radial;
    fill_derivs(p.grid, p.u, kEven, p.ur, p.urr, p.urrr, p.urrrr, p.contact4);
    fill_derivs(p.grid, p.phi, kOdd, p.phir, p.phirr, p.phirrr, p.phirrrr, p.contact4);
    return p;
}

// ---------------------------------------------------------------------------
// Boundary identities
// ---------------------------------------------------------------------------

namespace {

struct BoundaryEval {
    double res[5];
};

/// Identity residuals at the contact circle from graph jets. d_n = sgn * d_rho
/// with sgn = -1 for the lens (inner normal points toward the pole) and +1
/// for the exterior topology.
BoundaryEval identity_residuals(double rho, double w1, double w2, const ContactAngle& a,
                                double h_nt, double dH_rho, double dhtt_rho,
                                double dhnn_rho, double dh2_rho, double H, bool lens) {
    double sgn = lens ? -1.0 : 1.0;
    double v = std::sqrt(1.0 + w1 * w1);
    double h_nn = w2 / v;
    double h_tt = w1 / (rho * v);
    double k1 = w2 / (v * v * v), k2 = w1 / (rho * v);
    double h2 = k1 * k1 + k2 * k2;
    double trh3 = k1 * k1 * k1 + k2 * k2 * k2;
    double b = a.beta, b0 = a.beta0;
    BoundaryEval out;
    out.res[0] = std::abs(h_nt);
    out.res[1] = std::abs(sgn * dH_rho - (b * b / b0) * H * h_nn);
    out.res[2] = std::abs(b0 * sgn * dhtt_rho + h_tt * h_tt - b * b * h_nn * h_tt);
    out.res[3] =
        std::abs(b0 * sgn * dhnn_rho - h2 / (b * b) - 2.0 * b0 * b0 * h_nn * h_nn);
    out.res[4] = std::abs(0.5 * b0 * sgn * dh2_rho - 2.0 * b * b * h2 * h_nn + trh3);
    return out;
}

const char* kIdentityNames[5] = {"h_split", "dn_H", "dn_h_tan", "dn_h_nn",
                                 "dn_h_norm2"};

} // namespace

std::vector<ResidualReport> check_boundary_identities(const Snapshot& snap,
                                                      const ContactAngle& angle) {
    RadialProfile p = radial_profile(snap);
    int n = p.grid.n;
    if (n < 6) throw ReconstructionFailure("profile too short for identity stencils");
    int c = p.contact();

    std::vector<double> Hf(n), htt(n), hnn(n), h2(n);
    for (int j = 0; j < n; ++j) {
        GraphJet4 jet = p.jet(j);
        double v = std::sqrt(1.0 + jet.w1 * jet.w1);
        double k1 = jet.w2 / (v * v * v), k2 = jet.w1 / (jet.rho * v);
        Hf[j] = k1 + k2;
        hnn[j] = jet.w2 / v;
        htt[j] = jet.w1 / (jet.rho * v);
        h2[j] = k1 * k1 + k2 * k2;
    }
    GraphJet4 jc = p.jet(c);
    BoundaryEval ev = identity_residuals(jc.rho, jc.w1, jc.w2, angle, 0.0,
                                         p.drho(Hf, c, kEven), p.drho(htt, c, kEven),
                                         p.drho(hnn, c, kEven), p.drho(h2, c, kEven),
                                         Hf[c], p.lens);

    std::vector<ResidualReport> out;
    for (int i = 0; i < 5; ++i) {
        ResidualReport rep;
        rep.id = kIdentityNames[i];
        rep.residual = ev.res[i];
        rep.pass = std::isfinite(ev.res[i]);
        out.push_back(rep);
    }
    return out;
}

std::vector<ResidualReport> boundary_identities_analytic(double rho, double w1,
                                                         double w2, double w3,
                                                         const ContactAngle& angle,
                                                         double H, double dH,
                                                         bool lens) {
    double v = std::sqrt(1.0 + w1 * w1);
    double vp = w1 * w2 / v;
    double dhnn = w3 / v - w2 * vp / (v * v);
    double dhtt = w2 / (rho * v) - w1 / (rho * rho * v) - w1 * vp / (rho * v * v);
    double k1 = w2 / (v * v * v), k2 = w1 / (rho * v);
    double dk1 = w3 / (v * v * v) - 3.0 * w2 * vp / (v * v * v * v);
    double dk2 = dhtt;
    double dh2 = 2.0 * k1 * dk1 + 2.0 * k2 * dk2;
    BoundaryEval ev =
        identity_residuals(rho, w1, w2, angle, 0.0, dH, dhtt, dhnn, dh2, H, lens);
    std::vector<ResidualReport> out;
    for (int i = 0; i < 5; ++i) {
        ResidualReport rep;
        rep.id = kIdentityNames[i];
        rep.residual = ev.res[i];
        rep.pass = std::isfinite(ev.res[i]);
        out.push_back(rep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Axis tensor algebra (rotationally equivariant fields evaluated on the
// positive x-axis; tangential derivatives come from the rotation generator)
// ---------------------------------------------------------------------------

namespace {

struct ScalarAxisJet {
    double f = 0.0, f1 = 0.0, f2 = 0.0;
    double rho = 1.0;
    Vec2 grad() const { return {f1, 0.0}; }
    Sym2 hess() const { return {f2, 0.0, f1 / rho}; }
};

struct AxisGeom {
    double rho, w1, w2, v;
    Vec2 omega;
    Sym2 g, gi, h;
    double H, h2;
    double w3[4]; // xxx, xxy(=0), xyy, yyy(=0)

    double third(int a, int b, int c) const {
        int ys = (a == 1) + (b == 1) + (c == 1);
        if (ys == 0) return w3[0];
        if (ys == 2) return w3[2];
        return 0.0;
    }
    double gij(int i, int j) const { return i == j ? (i == 0 ? gi.xx : gi.yy) : gi.xy; }
    double hij(int i, int j) const { return i == j ? (i == 0 ? h.xx : h.yy) : h.xy; }
    double om(int i) const { return i == 0 ? omega.x : omega.y; }
};

AxisGeom axis_geom(const GraphJet4& jet) {
    AxisGeom g;
    g.rho = jet.rho;
    g.w1 = jet.w1;
    g.w2 = jet.w2;
    g.v = std::sqrt(1.0 + jet.w1 * jet.w1);
    g.omega = {jet.w1 / g.v, 0.0};
    g.g = {1.0 + jet.w1 * jet.w1, 0.0, 1.0};
    g.gi = geometry::metric_inverse({jet.w1, 0.0});
    Sym2 hess{jet.w2, 0.0, jet.w1 / jet.rho};
    g.h = hess * (1.0 / g.v);
    g.H = g.gi.xx * g.h.xx + g.gi.yy * g.h.yy;
    g.h2 = geometry::norm2_h(g.gi, g.h);
    g.w3[0] = jet.w3;
    g.w3[1] = 0.0;
    g.w3[2] = (jet.w2 - jet.w1 / jet.rho) / jet.rho;
    g.w3[3] = 0.0;
    return g;
}

/// (grad_m h)_ij = d_m h_ij - [h_jm h_ik + h_im h_jk] w^k.
struct NablaH {
    double t[2][2][2];
};

NablaH nabla_h(const AxisGeom& g) {
    double vx = g.w1 * g.w2 / g.v;
    NablaH out;
    for (int m = 0; m < 2; ++m)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double wij = g.v * g.hij(i, j);
                double dm =
                    g.third(i, j, m) / g.v - (m == 0 ? wij * vx / (g.v * g.v) : 0.0);
                double corr = 0.0;
                for (int k = 0; k < 2; ++k)
                    corr += (g.hij(j, m) * g.hij(i, k) + g.hij(i, m) * g.hij(j, k)) *
                            g.om(k);
                out.t[m][i][j] = dm - corr;
            }
    return out;
}

double norm2_nabla_h(const AxisGeom& g, const NablaH& T) {
    double s = 0.0;
    for (int m = 0; m < 2; ++m)
        for (int mm = 0; mm < 2; ++mm)
            for (int i = 0; i < 2; ++i)
                for (int ii = 0; ii < 2; ++ii)
                    for (int j = 0; j < 2; ++j)
                        for (int jj = 0; jj < 2; ++jj)
                            s += g.gij(m, mm) * g.gij(i, ii) * g.gij(j, jj) *
                                 T.t[m][i][j] * T.t[mm][ii][jj];
    return s;
}

struct FieldArrays {
    RadialProfile prof;
    std::vector<double> v, H, h2;
    std::vector<double> gixx, gixy, giyy;
    std::vector<double> hxx_up, hyy_up;
    std::vector<double> nh_xxx, nh_xyy, nh_yxy;
    std::vector<double> nh2;
};

FieldArrays field_arrays(const Snapshot& snap) {
    FieldArrays fa;
    fa.prof = radial_profile(snap);
    int n = fa.prof.grid.n;
    auto sz = [&](std::vector<double>& x) { x.resize(n); };
    sz(fa.v);
    sz(fa.H);
    sz(fa.h2);
    sz(fa.gixx);
    sz(fa.gixy);
    sz(fa.giyy);
    sz(fa.hxx_up);
    sz(fa.hyy_up);
    sz(fa.nh_xxx);
    sz(fa.nh_xyy);
    sz(fa.nh_yxy);
    sz(fa.nh2);
    for (int j = 0; j < n; ++j) {
        AxisGeom g = axis_geom(fa.prof.jet(j));
        fa.v[j] = g.v;
        fa.H[j] = g.H;
        fa.h2[j] = g.h2;
        fa.gixx[j] = g.gi.xx;
        fa.gixy[j] = g.gi.xy;
        fa.giyy[j] = g.gi.yy;
        Mat2 S = geometry::weingarten(g.gi, g.h);
        fa.hxx_up[j] = S.a;
        fa.hyy_up[j] = S.d;
        NablaH T = nabla_h(g);
        fa.nh_xxx[j] = T.t[0][0][0];
        fa.nh_xyy[j] = T.t[0][1][1];
        fa.nh_yxy[j] = T.t[1][0][1];
        fa.nh2[j] = norm2_nabla_h(g, T);
    }
    return fa;
}

/// Nodal array value at the fixed physical point rho0, read off a (moving)
/// grid by second-order Taylor expansion about node j.
double at_fixed_point(const RadialProfile& p, const std::vector<double>& f, int j,
                      double rho0, PoleParity par) {
    double e = rho0 - p.phi[j];
    double pr = p.phir[j];
    double dr = e / pr - p.phirr[j] * e * e / (2.0 * pr * pr * pr);
    double f1 = prof_d1(p.grid, f, j, par, p.contact4);
    double f2 = prof_d2(p.grid, f, j, par);
    return f[j] + f1 * dr + 0.5 * f2 * dr * dr;
}

ScalarAxisJet rho_jet(const RadialProfile& p, const std::vector<double>& f, int j,
                      PoleParity par) {
    ScalarAxisJet out;
    out.rho = p.phi[j];
    out.f = f[j];
    double p1 = p.phir[j], p2 = p.phirr[j];
    double a1 = prof_d1(p.grid, f, j, par, p.contact4);
    double a2 = prof_d2(p.grid, f, j, par);
    out.f1 = a1 / p1;
    out.f2 = (a2 - out.f1 * p2) / (p1 * p1);
    return out;
}

std::vector<int> probe_nodes(const RadialProfile& p, double margin = 0.1) {
    std::vector<int> out;
    int n = p.grid.n;
    double rc = p.phi[p.contact()];
    for (int j = 0; j < n - 2; ++j) {
        double dist = p.lens ? rc - p.phi[j] : p.phi[j] - rc;
        if (dist <= margin) continue;
        if (!p.lens && p.phi[n - 1] - p.phi[j] <= margin) continue;
        if (!p.grid.has_pole && j < 2) continue;
        out.push_back(j);
    }
    return out;
}

} // namespace

std::vector<ResidualReport> evolution_residuals(const Snapshot& before,
                                                const Snapshot& center,
                                                const Snapshot& after) {
    FieldArrays fb = field_arrays(before);
    FieldArrays fc = field_arrays(center);
    FieldArrays fa = field_arrays(after);
    double dtb = fc.prof.t - fb.prof.t;
    double dta = fa.prof.t - fc.prof.t;
    if (fb.prof.grid.n != fc.prof.grid.n || fa.prof.grid.n != fc.prof.grid.n)
        throw InconsistentSnapshots("snapshot grids differ");
    if (!(dtb > 0.0) || std::abs(dta - dtb) > 1e-9 * dtb)
        throw InconsistentSnapshots("snapshot times not uniformly spaced");
    double dt2 = dta + dtb;

    std::vector<ResidualReport> out;
    for (const char* id :
         {"L_v", "L_H", "L_h2", "dt_ginv", "weingarten", "codazzi", "lap_bel",
          "L_H_printed", "L_h2_printed", "weingarten_printed"}) {
        ResidualReport r;
        r.id = id;
        out.push_back(r);
    }

    for (int j : probe_nodes(fc.prof)) {
        AxisGeom g = axis_geom(fc.prof.jet(j));
        double rho0 = fc.prof.phi[j];
        auto ddt = [&](const std::vector<double>& f_before,
                       const std::vector<double>& f_after, PoleParity par) {
            return (at_fixed_point(fa.prof, f_after, j, rho0, par) -
                    at_fixed_point(fb.prof, f_before, j, rho0, par)) /
                   dt2;
        };
        auto trg_d2 = [&](const ScalarAxisJet& s) {
            Sym2 hs = s.hess();
            return g.gi.xx * hs.xx + 2.0 * g.gi.xy * hs.xy + g.gi.yy * hs.yy;
        };

        ScalarAxisJet vj = rho_jet(fc.prof, fc.v, j, kEven);
        ScalarAxisJet Hj = rho_jet(fc.prof, fc.H, j, kEven);
        ScalarAxisJet h2j = rho_jet(fc.prof, fc.h2, j, kEven);

        { // L[v] = -2 |Dv|^2_g / v - v |h|^2
            double Lv = ddt(fb.v, fa.v, kEven) - trg_d2(vj);
            double dv2 = g.gi.xx * vj.f1 * vj.f1;
            double res = Lv + 2.0 * dv2 / g.v + g.v * g.h2;
            out[0].residual = std::max(out[0].residual, std::abs(res));
        }
        Sym2 hsq = geometry::h_squared(g.gi, g.h);
        double h2ww = hsq.form(g.omega, g.omega);
        double hww = g.h.form(g.omega, g.omega);
        { // L[H] = |h|^2 H  (derived form; the printed extra terms
          //  H h^2(w,w) - H^2 h(w,w) fail on the exact shrinking sphere,
          //  see the "printed forms stay O(1)" test)
            double LH = ddt(fb.H, fa.H, kEven) - trg_d2(Hj);
            double res = LH - g.h2 * g.H;
            out[1].residual = std::max(out[1].residual, std::abs(res));
            double res_printed = LH - (g.h2 * g.H + g.H * h2ww - g.H * g.H * hww);
            out[7].residual = std::max(out[7].residual, std::abs(res_printed));
        }
        { // L[|h|^2] = -2|grad h|^2 + 2|h|^4 (derived form)
            Sym2 hcub = geometry::h_cubed(g.gi, g.h);
            double h3ww = hcub.form(g.omega, g.omega);
            double Lh2 = ddt(fb.h2, fa.h2, kEven) - trg_d2(h2j);
            double res = Lh2 - (-2.0 * fc.nh2[j] + 2.0 * g.h2 * g.h2);
            out[2].residual = std::max(out[2].residual, std::abs(res));
            double res_printed = Lh2 - (-2.0 * fc.nh2[j] + 2.0 * g.h2 * g.h2 -
                                        4.0 * g.H * h3ww - 2.0 * g.H * g.h2 * hww);
            out[8].residual = std::max(out[8].residual, std::abs(res_printed));
        }
        Mat2 S = geometry::weingarten(g.gi, g.h);
        double Sw[2] = {S.a * g.omega.x, S.c * g.omega.x};
        { // dt g^ij = -[(grad H)^i w^j + (grad H)^j w^i] - H[S(w)^i w^j + ...]
            double gradH[2] = {g.gi.xx * Hj.f1, g.gi.xy * Hj.f1};
            double dt_g[3] = {ddt(fb.gixx, fa.gixx, kEven),
                              ddt(fb.gixy, fa.gixy, kEven),
                              ddt(fb.giyy, fa.giyy, kEven)};
            int idx[3][2] = {{0, 0}, {0, 1}, {1, 1}};
            for (int q = 0; q < 3; ++q) {
                int i = idx[q][0], jj = idx[q][1];
                double rhs = -(gradH[i] * g.om(jj) + gradH[jj] * g.om(i)) -
                             g.H * (Sw[i] * g.om(jj) + Sw[jj] * g.om(i));
                out[3].residual = std::max(out[3].residual, std::abs(dt_g[q] - rhs));
            }
        }
        NablaH T = nabla_h(g);
        // The rank-3 assembly divides by rho twice; at the innermost nodes
        // the finite-difference error is amplified O(1/rho^2), so the tensor
        // equation keeps a pole margin (the scalar checks stay pole-inclusive).
        if (g.rho > 0.1) { // Weingarten heat equation, diagonal components
            // rank-3 components flip sign under the antipodal map
            ScalarAxisJet Txxx = rho_jet(fc.prof, fc.nh_xxx, j, kOdd);
            ScalarAxisJet Txyy = rho_jet(fc.prof, fc.nh_xyy, j, kOdd);
            ScalarAxisJet Tyxy = rho_jet(fc.prof, fc.nh_yxy, j, kOdd);
            auto comp = [&](int a, int b, int c) -> double {
                int ys = (a == 1) + (b == 1) + (c == 1);
                if (ys == 0) return T.t[0][0][0];
                if (ys == 2) return a == 0 ? T.t[0][1][1] : T.t[1][0][1];
                return 0.0;
            };
            auto dT = [&](int m, int l, int i, int jj) -> double {
                if (m == 0) {
                    int ys = (l == 1) + (i == 1) + (jj == 1);
                    if (ys == 0) return Txxx.f1;
                    if (ys == 2) return l == 0 ? Txyy.f1 : Tyxy.f1;
                    return 0.0;
                }
                // tangential derivative from the rotation generator:
                // x-slot contributes -T(..y..), y-slot contributes +T(..x..)
                double s = 0.0;
                int sl[3] = {l, i, jj};
                for (int q = 0; q < 3; ++q) {
                    int o[3] = {sl[0], sl[1], sl[2]};
                    double sign = o[q] == 0 ? -1.0 : 1.0;
                    o[q] = 1 - o[q];
                    s += sign * comp(o[0], o[1], o[2]);
                }
                return s / g.rho;
            };
            double laph[2][2];
            for (int i = 0; i < 2; ++i)
                for (int jj = 0; jj < 2; ++jj) {
                    double s = 0.0;
                    for (int m = 0; m < 2; ++m)
                        for (int l = 0; l < 2; ++l) {
                            double v2 = dT(m, l, i, jj);
                            for (int pq = 0; pq < 2; ++pq)
                                v2 -= g.om(pq) * (g.hij(m, l) * T.t[pq][i][jj] +
                                                  g.hij(m, i) * T.t[l][pq][jj] +
                                                  g.hij(m, jj) * T.t[l][i][pq]);
                            s += g.gij(m, l) * v2;
                        }
                    laph[i][jj] = s;
                }
            double Hlow[2] = {Hj.f1, 0.0};
            double dt_up[2] = {ddt(fb.hxx_up, fa.hxx_up, kEven),
                               ddt(fb.hyy_up, fa.hyy_up, kEven)};
            for (int c = 0; c < 2; ++c) {
                int k = c, jj = c;
                double lap_up = 0.0;
                for (int i = 0; i < 2; ++i) lap_up += g.gij(i, k) * laph[i][jj];
                double grad_w = 0.0;
                for (int i = 0; i < 2; ++i)
                    for (int m = 0; m < 2; ++m)
                        grad_w += g.gij(i, k) * g.om(m) * T.t[m][i][jj];
                double hk_j = k == 0 ? S.a : S.d;
                double hw_j = g.hij(jj, 0) * g.omega.x + g.hij(jj, 1) * g.omega.y;
                double hSw_j = g.hij(jj, 0) * Sw[0] + g.hij(jj, 1) * Sw[1];
                double term_Hl = 0.0;
                for (int l = 0; l < 2; ++l) {
                    double hl_j =
                        (l == 0 ? (jj == 0 ? S.a : S.b) : (jj == 0 ? S.c : S.d));
                    term_Hl += Hlow[l] * hl_j;
                }
                term_Hl *= g.om(k);
                double common = g.H * grad_w + Hlow[jj] * Sw[k] - term_Hl +
                                g.h2 * hk_j - g.H * hSw_j * g.om(k);
                double rhs = common + g.H * Sw[k] * hw_j;
                double rhs_printed =
                    common + 2.0 * g.H * Sw[k] * hw_j - g.H * hww * hk_j;
                double lhs = dt_up[c] - lap_up;
                out[4].residual = std::max(out[4].residual, std::abs(lhs - rhs));
                out[9].residual =
                    std::max(out[9].residual, std::abs(lhs - rhs_printed));
            }
        }
        { // Codazzi: total symmetry of the assembled grad h
            out[5].residual =
                std::max(out[5].residual, std::abs(T.t[0][1][1] - T.t[1][0][1]));
        }
        { // divergence-form Laplace-Beltrami of v vs tr_g d^2 v - H d_w v
            double routeA = trg_d2(vj) - g.H * (g.omega.x * vj.f1);
            int n = fc.prof.grid.n;
            std::vector<double> Bx(n);
            for (int q = 0; q < n; ++q) {
                ScalarAxisJet vq = rho_jet(fc.prof, fc.v, q, kEven);
                Bx[q] = fc.v[q] * fc.gixx[q] * vq.f1; // sqrt(det g) = v
            }
            ScalarAxisJet Bj = rho_jet(fc.prof, Bx, j, kOdd);
            double routeB = (Bj.f1 + Bj.f / g.rho) / g.v;
            out[6].residual = std::max(out[6].residual, std::abs(routeA - routeB));
        }
    }
    for (auto& r : out) r.pass = std::isfinite(r.residual);
    for (size_t q = 7; q < out.size(); ++q)
        out[q].note = "as printed; kept for comparison with the derived form";
    return out;
}

// ---------------------------------------------------------------------------
// Monitors
// ---------------------------------------------------------------------------

MonotoneBoundsReport bounds_monitor(const std::vector<StepRecord>& steps,
                                    const ContactAngle& angle, double v0_sup,
                                    double w0_sup, double h0_eig_max, double H0_max) {
    MonotoneBoundsReport rep;
    double vbound = std::max(v0_sup, 1.0 / angle.beta);
    double v_worst = 0.0, h_eig_worst = -1e300, H_worst = -1e300;
    for (const StepRecord& s : steps) {
        v_worst = std::max(v_worst, s.sup_v);
        h_eig_worst = std::max(h_eig_worst, s.h_eig_max);
        H_worst = std::max(H_worst, s.H_max);
    }
    (void)w0_sup; // height tracked from snapshots by the caller
    rep.gradient_violation = (v_worst - vbound) / vbound;
    rep.concavity_violation = h_eig_worst;
    rep.prop125_applicable =
        h0_eig_max <= 1e-10 && v0_sup <= std::sqrt(3.0) && H0_max < 0.0;
    if (rep.prop125_applicable) rep.prop125_violation = H_worst - H0_max;
    rep.pass = rep.gradient_violation <= 1e-3 &&
               (!rep.prop125_applicable || rep.prop125_violation <= 1e-3);
    return rep;
}

ExtinctionBound extinction_bound(const std::vector<StepRecord>& steps,
                                 const ContactAngle& angle, double H0_max,
                                 double v0_sup, bool reached_extinction) {
    if (!reached_extinction)
        throw NotApplicable("run did not reach the extinction threshold");
    if (!(H0_max < 0.0)) throw NotApplicable("seed is not strictly mean-concave");
    ExtinctionBound out;
    double vbar = std::max(v0_sup, 1.0 / angle.beta);
    double cn = 0.5 + (vbar * vbar - 1.0); // n = 2
    out.t_star = 1.0 / (2.0 * H0_max * H0_max * cn);
    out.t_measured = steps.back().t;
    out.pass = out.t_measured <= out.t_star;
    return out;
}

SupportFunctionField support_function(const Snapshot& snap, const ContactAngle& angle) {
    RadialProfile p = radial_profile(snap);
    int n = p.grid.n;
    SupportFunctionField out;
    out.p.resize(n);
    out.p_min = 1e300;
    for (int j = 0; j < n; ++j) {
        GraphJet4 jet = p.jet(j);
        double v = std::sqrt(1.0 + jet.w1 * jet.w1);
        out.p[j] = (jet.w - jet.rho * jet.w1) / v;
        out.p_min = std::min(out.p_min, out.p[j]);
    }
    if (out.p_min <= 0.0)
        throw OriginOutside("support function not positive (p_min = " +
                            std::to_string(out.p_min) + ")");
    int c = p.contact();
    double R = p.phi[c];
    out.boundary_value_res = std::abs(out.p[c] - angle.beta0 * R);
    GraphJet4 jc = p.jet(c);
    double v = std::sqrt(1.0 + jc.w1 * jc.w1);
    double h_nn = jc.w2 / v;
    double sgn = p.lens ? -1.0 : 1.0;
    double pn = sgn * p.drho(out.p, c, kEven);
    out.boundary_deriv_res =
        std::abs(pn - (angle.beta * angle.beta / angle.beta0) * out.p[c] * h_nn);
    return out;
}

ContinuationReport continuation_monitor(const std::vector<StepRecord>& steps) {
    ContinuationReport rep;
    rep.series.reserve(steps.size());
    for (const StepRecord& s : steps) rep.series.push_back(s.cont_fn);
    if (rep.series.empty()) return rep;
    double first = rep.series.front();
    rep.growth_factor = first > 0.0 ? rep.series.back() / first : 0.0;
    size_t tail = std::max<size_t>(2, rep.series.size() / 10);
    rep.monotone_tail = true;
    for (size_t i = rep.series.size() - tail + 1; i < rep.series.size(); ++i)
        if (rep.series[i] < rep.series[i - 1] * (1.0 - 1e-9)) rep.monotone_tail = false;
    return rep;
}

ConformalFrameReport conformal_frame_check(const Snapshot& snap, const ContactAngle&) {
    RadialProfile p = radial_profile(snap);
    ConformalFrameReport rep;
    for (int j = 0; j < p.grid.n; ++j) {
        GraphJet4 jet = p.jet(j);
        AxisGeom g = axis_geom(jet);
        Vec2 dw{jet.w1, 0.0};
        Vec2 om = g.omega;
        Vec2 omt = dw.perp(); // v * (omega perp) = Dw perp
        double orth = g.g.form(om, omt);
        double n1 = g.g.form(om, om) - dw.dot(dw);
        double n2 = g.g.form(omt, omt) - dw.dot(dw);
        rep.frame_res = std::max(
            rep.frame_res,
            std::max(std::abs(orth), std::max(std::abs(n1), std::abs(n2))));
        Sym2 hsq = geometry::h_squared(g.gi, g.h);
        double lhs = hsq.form(om, om) - g.H * g.h.form(om, om);
        double detg_h = g.h.det() / g.g.det();
        double rhs = -g.g.form(om, om) * detg_h;
        rep.det_identity_res = std::max(rep.det_identity_res, std::abs(lhs - rhs));
        rep.concavity_sign_max = std::max(rep.concavity_sign_max, lhs);
        rep.scale = std::max(rep.scale, std::abs(hsq.form(om, om)) + std::abs(rhs));
    }
    return rep;
}

ResidualReport trace_identity_check(const Snapshot& snap) {
    // Two routes with different stencil structure: the narrow-stencil
    // g^ij h_ij and a wide fourth-order variant. On a smooth state they
    // differ by truncation; a corrupted nodal value separates them by
    // O(corruption / dr^2).
    RadialProfile p = radial_profile(snap);
    int n = p.grid.n;
    ResidualReport rep;
    rep.id = "trace_gh_eq_H";
    double scale = 1.0;
    auto wide_d1 = [&](const std::vector<double>& f, int j, PoleParity par) {
        if (j < 2 || j > n - 3) return fd::d1(p.grid, f, j, par);
        return (-at1(f, j + 2, par) + 8.0 * at1(f, j + 1, par) -
                8.0 * at1(f, j - 1, par) + at1(f, j - 2, par)) /
               (12.0 * p.grid.dr);
    };
    auto wide_d2 = [&](const std::vector<double>& f, int j, PoleParity par) {
        if (j < 2 || j > n - 3) return fd::d2(p.grid, f, j, par);
        return (-at1(f, j + 2, par) + 16.0 * at1(f, j + 1, par) - 30.0 * f[j] +
                16.0 * at1(f, j - 1, par) - at1(f, j - 2, par)) /
               (12.0 * p.grid.dr * p.grid.dr);
    };
    for (int j = 0; j < n; ++j) {
        AxisGeom g = axis_geom(p.jet(j));
        double ur = wide_d1(p.u, j, kEven), urr = wide_d2(p.u, j, kEven);
        double pr = wide_d1(p.phi, j, kOdd), prr = wide_d2(p.phi, j, kOdd);
        double w2 = pr * pr + ur * ur;
        double routeB = (pr * urr - ur * prr + w2 * ur / p.phi[j]) /
                        (w2 * std::sqrt(w2));
        rep.residual = std::max(rep.residual, std::abs(routeB - g.H));
        scale = std::max(scale, std::max(std::abs(g.H), std::abs(g.h.xx)));
    }
    // the two routes differ by truncation ~ dr^2 on smooth data; a corrupted
    // node separates by O(corruption/dr^2)
    rep.pass = rep.residual <= 300.0 * p.grid.dr * p.grid.dr * scale;
    return rep;
}

ArgmaxReport h2v2_argmax(const std::vector<Snapshot>& snaps) {
    ArgmaxReport rep;
    rep.f_max = -1e300;
    for (size_t s = 0; s < snaps.size(); ++s) {
        RadialProfile p = radial_profile(snaps[s]);
        for (int j = 0; j < p.grid.n; ++j) {
            AxisGeom g = axis_geom(p.jet(j));
            double f = g.h2 * g.v * g.v;
            if (f > rep.f_max) {
                rep.f_max = f;
                rep.step = static_cast<int>(s);
                rep.node = j;
            }
        }
    }
    if (!snaps.empty()) {
        RadialProfile p = radial_profile(snaps[rep.step]);
        bool base = rep.step == 0;
        bool lateral = std::abs(rep.node - p.contact()) <= 1;
        rep.on_parabolic_boundary = base || lateral;
    }
    return rep;
}

ResidualReport subsolution_check(const Snapshot& before, const Snapshot& center,
                                 const Snapshot& after, double a0) {
    FieldArrays fb = field_arrays(before);
    FieldArrays fc = field_arrays(center);
    FieldArrays fa = field_arrays(after);
    double dtb = fc.prof.t - fb.prof.t;
    double dta = fa.prof.t - fc.prof.t;
    if (!(dtb > 0.0) || std::abs(dta - dtb) > 1e-9 * dtb)
        throw InconsistentSnapshots("snapshot times not uniformly spaced");
    double alpha = std::min(1.0, 1.0 / (16.0 * a0 * a0)); // c = 4
    int n = fc.prof.grid.n;
    std::vector<double> f_b(n), f_c(n), f_a(n);
    for (int j = 0; j < n; ++j) {
        f_b[j] = alpha * fb.nh2[j] + fb.h2[j];
        f_c[j] = alpha * fc.nh2[j] + fc.h2[j];
        f_a[j] = alpha * fa.nh2[j] + fa.h2[j];
    }
    ResidualReport rep;
    rep.id = "subsolution_13_2";
    double worst = -1e300;
    for (int j : probe_nodes(fc.prof)) {
        AxisGeom g = axis_geom(fc.prof.jet(j));
        double rho0 = fc.prof.phi[j];
        double dtf = (at_fixed_point(fa.prof, f_a, j, rho0, kEven) -
                      at_fixed_point(fb.prof, f_b, j, rho0, kEven)) /
                     (dta + dtb);
        ScalarAxisJet fj = rho_jet(fc.prof, f_c, j, kEven);
        Sym2 hs = fj.hess();
        double trg = g.gi.xx * hs.xx + 2.0 * g.gi.xy * hs.xy + g.gi.yy * hs.yy;
        double lap = trg - g.H * g.omega.x * fj.f1;
        worst = std::max(worst, dtf - lap);
    }
    rep.residual = worst;
    rep.note = "alpha = " + std::to_string(alpha);
    rep.pass = std::isfinite(worst);
    return rep;
}

} // namespace mcmfb::diagnose
