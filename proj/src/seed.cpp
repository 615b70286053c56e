#include "mcmfb/seed.hpp"

#include <algorithm>
#include <cmath>

#include "mcmfb/radial.hpp"

namespace mcmfb::seed {

double DomainDescriptor::cutoff(double rho) const {
    if (rho <= rho1) return 1.0;
    if (rho >= rho2) return 0.0;
    double s = (rho - rho1) / (rho2 - rho1);
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double DomainDescriptor::cutoff_d1(double rho) const {
    if (rho <= rho1 || rho >= rho2) return 0.0;
    double d = rho2 - rho1;
    double s = (rho - rho1) / d;
    return -30.0 * s * s * (s - 1.0) * (s - 1.0) / d;
}

double DomainDescriptor::cutoff_d2(double rho) const {
    if (rho <= rho1 || rho >= rho2) return 0.0;
    double d = rho2 - rho1;
    double s = (rho - rho1) / d;
    return -60.0 * s * (2.0 * s - 1.0) * (s - 1.0) / (d * d);
}

std::vector<double> required_jet(const std::vector<double>& H0_boundary,
                                 const ContactAngle& angle) {
    std::vector<double> h(H0_boundary.size());
    double c = -1.0 / (angle.beta * angle.beta * angle.beta0);
    for (size_t i = 0; i < h.size(); ++i) h[i] = c * H0_boundary[i];
    return h;
}

HarmonicExtension::HarmonicExtension(const std::vector<double>& h) {
    int n = static_cast<int>(h.size());
    if (n < 4 || n % 2 != 0)
        throw ConfigError("harmonic extension needs an even sample count >= 4");
    int m_max = n / 2;
    a_.assign(m_max + 1, 0.0);
    b_.assign(m_max + 1, 0.0);
    for (int m = 0; m <= m_max; ++m) {
        double ca = 0.0, cb = 0.0;
        for (int k = 0; k < n; ++k) {
            double th = 2.0 * M_PI * m * k / n;
            ca += h[k] * std::cos(th);
            cb += h[k] * std::sin(th);
        }
        double scale = (m == 0 || m == m_max) ? 1.0 / n : 2.0 / n;
        a_[m] = scale * ca;
        b_[m] = scale * cb;
    }
    b_[m_max] = 0.0;
}

double HarmonicExtension::eval(double r, double theta) const {
    double g = a_[0];
    double rm = 1.0;
    for (size_t m = 1; m < a_.size(); ++m) {
        rm *= r;
        g += rm * (a_[m] * std::cos(m * theta) + b_[m] * std::sin(m * theta));
    }
    return g;
}

void HarmonicExtension::jet2(double r, double theta, double& g, double& gr, double& gth,
                             double& grr, double& grth, double& gthth) const {
    g = a_[0];
    gr = gth = grr = grth = gthth = 0.0;
    double rm2 = 1.0; // tracks r^(m-1) of the previous mode
    for (size_t m = 1; m < a_.size(); ++m) {
        double dm = static_cast<double>(m);
        double c = std::cos(dm * theta), s = std::sin(dm * theta);
        double amc = a_[m] * c + b_[m] * s;
        double ams = -a_[m] * s + b_[m] * c;
        double rm1 = (m == 1) ? 1.0 : rm2 * r; // r^(m-1)
        double rm = rm1 * r;
        g += rm * amc;
        gr += dm * rm1 * amc;
        gth += dm * rm * ams;
        if (m >= 2) grr += dm * (dm - 1.0) * rm2 * amc;
        grth += dm * dm * rm1 * ams;
        gthth += -dm * dm * rm * amc;
        rm2 = rm1;
    }
}

std::vector<double> extend_boundary_function(const std::vector<double>& h_boundary,
                                             const DomainDescriptor&,
                                             const PolarGrid& grid) {
    if (static_cast<int>(h_boundary.size()) != grid.n_theta)
        throw ConfigError("boundary sample count must match n_theta");
    HarmonicExtension ext(h_boundary);
    std::vector<double> g(grid.size());
    for (int j = 0; j < grid.n_r; ++j)
        for (int k = 0; k < grid.n_theta; ++k)
            g[grid.idx(j, k)] = ext.eval(grid.r[j], grid.theta[k]);
    return g;
}

CompatibleDiffeo::CompatibleDiffeo(const std::vector<double>& h_boundary,
                                   DomainDescriptor dom)
    : ext_(h_boundary), dom_(dom) {
    double mj = 1.0;
    int nr = 320, nt = 256;
    for (int j = 0; j <= nr; ++j) {
        double r = 1.0 - dom_.rho2 * 1.05 * (1.0 - double(j) / nr);
        if (r <= 0.0) continue;
        for (int k = 0; k < nt; ++k) {
            double th = 2.0 * M_PI * k / nt;
            mj = std::min(mj, jacobian(r, th).det());
        }
    }
    min_jac_ = mj;
}

void CompatibleDiffeo::scalar_jet(double r, double theta, double& s, Vec2& ds,
                                  Sym2& d2s) const {
    double rho = 1.0 - r;
    double z = dom_.cutoff(rho);
    double z1 = dom_.cutoff_d1(rho);
    double z2 = dom_.cutoff_d2(rho);
    if (z == 0.0 && z1 == 0.0 && z2 == 0.0) {
        s = 0.0;
        ds = {0.0, 0.0};
        d2s = {0.0, 0.0, 0.0};
        return;
    }
    // s = A(r) B(r) g(r,theta): A = zeta(1-r), B = (1-r)^2/(2r)
    double A = z, A1 = -z1, A2 = z2;
    double B = rho * rho / (2.0 * r);
    double B1 = 0.5 - 0.5 / (r * r);
    double B2 = 1.0 / (r * r * r);
    double q = A * B;
    double q1 = A1 * B + A * B1;
    double q2 = A2 * B + 2.0 * A1 * B1 + A * B2;

    double g, gr, gth, grr, grth, gthth;
    ext_.jet2(r, theta, g, gr, gth, grr, grth, gthth);

    s = q * g;
    double sr = q1 * g + q * gr;
    double sth = q * gth;
    double srr = q2 * g + 2.0 * q1 * gr + q * grr;
    double srth = q1 * gth + q * grth;
    double sthth = q * gthth;

    double c = std::cos(theta), sn = std::sin(theta);
    ds = fd::polar_to_cart_grad(sr, sth, r, c, sn);
    d2s = fd::polar_to_cart_hess(sr, sth, srr, srth, sthth, r, c, sn);
}

Vec2 CompatibleDiffeo::eval(double r, double theta) const {
    double s;
    Vec2 ds;
    Sym2 d2s;
    scalar_jet(r, theta, s, ds, d2s);
    double x = r * std::cos(theta), y = r * std::sin(theta);
    return {x * (1.0 - s), y * (1.0 - s)};
}

Mat2 CompatibleDiffeo::jacobian(double r, double theta) const {
    double s;
    Vec2 ds;
    Sym2 d2s;
    scalar_jet(r, theta, s, ds, d2s);
    double x = r * std::cos(theta), y = r * std::sin(theta);
    return {1.0 - s - x * ds.x, -x * ds.y, -y * ds.x, 1.0 - s - y * ds.y};
}

void CompatibleDiffeo::hessians(double r, double theta, Sym2& h1, Sym2& h2) const {
    double s;
    Vec2 ds;
    Sym2 d2s;
    scalar_jet(r, theta, s, ds, d2s);
    double x = r * std::cos(theta), y = r * std::sin(theta);
    // phi^a_ij = -delta_ai s_j - delta_aj s_i - x_a s_ij
    h1.xx = -2.0 * ds.x - x * d2s.xx;
    h1.xy = -ds.y - x * d2s.xy;
    h1.yy = -x * d2s.yy;
    h2.xx = -y * d2s.xx;
    h2.xy = -ds.x - y * d2s.xy;
    h2.yy = -2.0 * ds.y - y * d2s.yy;
}

CompatibleDiffeo build_diffeo(const std::vector<double>& h_boundary,
                              DomainDescriptor dom, double jac_floor) {
    double sup_h = 0.0;
    for (double v : h_boundary) sup_h = std::max(sup_h, std::abs(v));
    if (sup_h > 1e-14) dom.rho2 = std::min(dom.rho2, 0.25 / sup_h);
    dom.rho1 = std::min(dom.rho1, dom.rho2 / 3.0);
    for (int attempt = 0; attempt < 8; ++attempt) {
        CompatibleDiffeo d(h_boundary, dom);
        if (d.min_jacobian() >= jac_floor) return d;
        dom.rho2 *= 0.5;
        dom.rho1 = dom.rho2 / 3.0;
    }
    throw NotDiffeo("no cutoff width keeps the compatible map injective (sup|h| = " +
                    std::to_string(sup_h) + ")");
}

JetReport verify_jet(const std::function<Vec2(double, double)>& phi,
                     const std::vector<double>& h_boundary, const PolarGrid& grid) {
    std::vector<double> p1(grid.size()), p2(grid.size());
    for (int j = 0; j < grid.n_r; ++j)
        for (int k = 0; k < grid.n_theta; ++k) {
            Vec2 y = phi(grid.r[j], grid.theta[k]);
            p1[grid.idx(j, k)] = y.x;
            p2[grid.idx(j, k)] = y.y;
        }
    auto g1 = geometry::fd_gradient(grid, p1);
    auto g2 = geometry::fd_gradient(grid, p2);
    auto h1 = geometry::fd_hessian(grid, p1);
    auto h2 = geometry::fd_hessian(grid, p2);

    JetReport rep;
    int jb = grid.n_r - 1;
    for (int k = 0; k < grid.n_theta; ++k) {
        int i = grid.idx(jb, k);
        Vec2 x = grid.node_xy(jb, k);
        rep.err_value = std::max(rep.err_value, std::hypot(p1[i] - x.x, p2[i] - x.y));
        rep.err_jacobian = std::max(
            rep.err_jacobian,
            std::max(std::max(std::abs(g1[i].x - 1.0), std::abs(g1[i].y)),
                     std::max(std::abs(g2[i].x), std::abs(g2[i].y - 1.0))));
        Vec2 n{-grid.cth[k], -grid.sth[k]};
        double jet2 = n.x * h1[i].form(n, n) + n.y * h2[i].form(n, n);
        rep.err_jet2 = std::max(rep.err_jet2, std::abs(jet2 - h_boundary[k]));
    }
    for (int i = 0; i < grid.size(); ++i) {
        double det = g1[i].x * g2[i].y - g1[i].y * g2[i].x;
        rep.min_jacobian = std::min(rep.min_jacobian, det);
    }
    return rep;
}

double SeedProfile::boundary_H(const ContactAngle& angle) const {
    // H(R0) of the parabolic profile: -beta0 (1 + beta^2) / R0
    return -angle.beta0 * (1.0 + angle.beta * angle.beta) / r0;
}

SeedProfile lens_profile(const ContactAngle& angle, double r0) {
    if (!(r0 > 0.0)) throw ConfigError("lens profile needs R0 > 0");
    SeedProfile p;
    p.r0 = r0;
    p.amplitude = angle.beta0 / (2.0 * angle.beta * r0);
    return p;
}

PlanarSeed planar_seed(const PolarGrid& grid, const ContactAngle& angle, double r0,
                       bool compatible) {
    SeedProfile prof = lens_profile(angle, r0);
    PlanarSeed out;
    out.f1.resize(grid.size());
    out.f2.resize(grid.size());
    out.u.resize(grid.size());
    if (compatible) {
        std::vector<double> H0(grid.n_theta, prof.boundary_H(angle));
        auto h = required_jet(H0, angle);
        CompatibleDiffeo phi0 = build_diffeo(h, DomainDescriptor{});
        out.min_jacobian = phi0.min_jacobian();
        for (int j = 0; j < grid.n_r; ++j)
            for (int k = 0; k < grid.n_theta; ++k) {
                Vec2 y = phi0.eval(grid.r[j], grid.theta[k]) * r0;
                int i = grid.idx(j, k);
                out.f1[i] = y.x;
                out.f2[i] = y.y;
                out.u[i] = prof.w(y.norm());
            }
    } else {
        for (int j = 0; j < grid.n_r; ++j)
            for (int k = 0; k < grid.n_theta; ++k) {
                Vec2 y = grid.node_xy(j, k) * r0;
                int i = grid.idx(j, k);
                out.f1[i] = y.x;
                out.f2[i] = y.y;
                out.u[i] = prof.w(y.norm());
            }
    }
    return out;
}

namespace {

/// Even quadratic extrapolation of a lens profile to the pole.
double pole_value(const LineGrid& g, const std::vector<double>& f) {
    double r0 = g.r[0], r1 = g.r[1];
    return (f[0] * r1 * r1 - f[1] * r0 * r0) / (r1 * r1 - r0 * r0);
}

void revolve(const LineGrid& g, const std::vector<double>& rho,
             const std::vector<double>& z, int nt, double zsign,
             TriangleMesh& mesh) {
    int n = g.n;
    mesh.vertices.clear();
    mesh.faces.clear();
    mesh.vertices.push_back({0.0, 0.0, zsign * pole_value(g, z)});
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < nt; ++k) {
            double th = 2.0 * M_PI * k / nt;
            mesh.vertices.push_back(
                {rho[j] * std::cos(th), rho[j] * std::sin(th), zsign * z[j]});
        }
    auto vid = [&](int j, int k) { return 1 + j * nt + (k % nt); };
    for (int k = 0; k < nt; ++k) mesh.faces.push_back({0, vid(0, k), vid(0, k + 1)});
    for (int j = 0; j + 1 < n; ++j)
        for (int k = 0; k < nt; ++k) {
            mesh.faces.push_back({vid(j, k), vid(j + 1, k), vid(j + 1, k + 1)});
            mesh.faces.push_back({vid(j, k), vid(j + 1, k + 1), vid(j, k + 1)});
        }
}

} // namespace

TripleJunction reflect_triple_junction(const Snapshot& snap, int n_theta,
                                       double ring_outer) {
    if (snap.kind != Snapshot::Kind::Radial || !snap.lens)
        throw NotApplicable("triple junction export needs a radial lens snapshot");
    TripleJunction tj;
    double R = snap.phi.back();
    if (ring_outer <= 0.0) ring_outer = 1.5 * R;

    revolve(snap.line, snap.phi, snap.u, n_theta, +1.0, tj.upper);
    revolve(snap.line, snap.phi, snap.u, n_theta, -1.0, tj.lower);

    int n_ring = 8;
    for (int j = 0; j < n_ring; ++j) {
        double rho = R + (ring_outer - R) * j / (n_ring - 1);
        for (int k = 0; k < n_theta; ++k) {
            double th = 2.0 * M_PI * k / n_theta;
            tj.plane.vertices.push_back({rho * std::cos(th), rho * std::sin(th), 0.0});
        }
    }
    auto vid = [&](int j, int k) { return j * n_theta + (k % n_theta); };
    for (int j = 0; j + 1 < n_ring; ++j)
        for (int k = 0; k < n_theta; ++k) {
            tj.plane.faces.push_back({vid(j, k), vid(j + 1, k), vid(j + 1, k + 1)});
            tj.plane.faces.push_back({vid(j, k), vid(j + 1, k + 1), vid(j, k + 1)});
        }

    // junction curve and sheet normals from the BC-resolved contact slope
    double wr = radial::contact_d1(snap.line, snap.u, true) /
                radial::contact_d1(snap.line, snap.phi, true); // -beta0/beta post-BC
    double v = std::sqrt(1.0 + wr * wr);
    for (int k = 0; k < n_theta; ++k) {
        double th = 2.0 * M_PI * k / n_theta;
        Vec2 er{std::cos(th), std::sin(th)};
        tj.junction.push_back({R * er.x, R * er.y, 0.0});
        tj.n_upper.push_back({-wr * er.x / v, -wr * er.y / v, 1.0 / v});
        tj.n_lower.push_back({wr * er.x / v, wr * er.y / v, 1.0 / v});
        tj.n_plane.push_back({0.0, 0.0, -1.0});
    }
    return tj;
}

} // namespace mcmfb::seed
