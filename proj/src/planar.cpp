#include "mcmfb/planar.hpp"

#include <algorithm>
#include <cmath>

namespace mcmfb::planar {

void PlanarConfig::validate() const {
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("0 < beta < 1 required, got " + std::to_string(beta));
    if (n_r < 16) throw ConfigError("n_r >= 16 required");
    if (n_theta < 32 || n_theta % 2 != 0)
        throw ConfigError("n_theta >= 32 and even required");
    if (!(cfl_sigma > 0.0 && cfl_sigma <= 0.5))
        throw ConfigError("0 < cfl_sigma <= 0.5 required");
    if (!(newton_tol > 0.0) || newton_max_iters < 1)
        throw ConfigError("newton_tol > 0 and newton_max_iters >= 1 required");
}

namespace {

struct Rows {
    const double* jm2;
    const double* jm1;
    const double* j0;
    const double* jp1;
    const double* jp2; // null at j = n_r-2 (only dereferenced in the pole zone)
};

/// Ghost rows through the pole: row -1 is row 0 shifted by pi, row -2 is row 1.
struct GhostRows {
    std::vector<double> m1, m2;
    void build(const std::vector<double>& f, int nt) {
        m1.resize(nt);
        m2.resize(nt);
        int half = nt / 2;
        for (int k = 0; k < nt; ++k) {
            m1[k] = f[(k + half) % nt];
            m2[k] = f[nt + (k + half) % nt];
        }
    }
};

} // namespace

PoleFilter::PoleFilter(const PolarGrid& g) : grid_(&g) {
    const int nr = g.n_r, nt = g.n_theta, half = nt / 2;
    K_.resize(nr);
    s1_.resize(nr);
    s2_.resize(nr);
    int kmax_tab = 0;
    for (int j = 0; j < nr; ++j) {
        int K = std::max(4, static_cast<int>(std::ceil(M_PI * g.r[j] / g.dr)));
        K_[j] = std::min(K, half);
        kmax_tab = std::max(kmax_tab, active(j) ? K_[j] : 0);
        // exact symbols of the 4th-order theta stencils at the retained cutoff
        double kappa = std::min(static_cast<double>(K_[j]), static_cast<double>(half)) *
                       g.dtheta;
        kappa = std::min(kappa, M_PI);
        double d2sym = (30.0 - 32.0 * std::cos(kappa) + 2.0 * std::cos(2.0 * kappa)) /
                       (12.0 * g.dtheta * g.dtheta);
        double d1sym = std::abs(8.0 * std::sin(kappa) - std::sin(2.0 * kappa)) /
                       (6.0 * g.dtheta);
        // the first-derivative symbol peaks inside the band, not at the edge
        for (double frac : {0.5, 0.75, 0.9}) {
            double kk = kappa * frac;
            d1sym = std::max(d1sym, std::abs(8.0 * std::sin(kk) - std::sin(2.0 * kk)) /
                                        (6.0 * g.dtheta));
        }
        s2_[j] = d2sym;
        s1_[j] = d1sym;
    }
    cos_table_.resize(static_cast<size_t>(kmax_tab + 1) * nt);
    sin_table_.resize(static_cast<size_t>(kmax_tab + 1) * nt);
    for (int m = 0; m <= kmax_tab; ++m)
        for (int k = 0; k < nt; ++k) {
            double ang = 2.0 * M_PI * m * static_cast<double>(k) / nt;
            cos_table_[static_cast<size_t>(m) * nt + k] = std::cos(ang);
            sin_table_[static_cast<size_t>(m) * nt + k] = std::sin(ang);
        }
}

void PoleFilter::project_ring(std::vector<double>& f, int j) const {
    const int nt = grid_->n_theta;
    const int K = K_[j];
    double* ring = f.data() + static_cast<size_t>(j) * nt;
    std::vector<double> coef_a(K + 1), coef_b(K + 1);
    double a0 = 0.0;
    for (int k = 0; k < nt; ++k) a0 += ring[k];
    a0 /= nt;
    for (int m = 1; m <= K; ++m) {
        const double* cm = cos_table_.data() + static_cast<size_t>(m) * nt;
        const double* sm = sin_table_.data() + static_cast<size_t>(m) * nt;
        double ca = 0.0, cb = 0.0;
        for (int k = 0; k < nt; ++k) {
            ca += ring[k] * cm[k];
            cb += ring[k] * sm[k];
        }
        coef_a[m] = 2.0 * ca / nt;
        coef_b[m] = 2.0 * cb / nt;
    }
    for (int k = 0; k < nt; ++k) ring[k] = a0;
    for (int m = 1; m <= K; ++m) {
        const double* cm = cos_table_.data() + static_cast<size_t>(m) * nt;
        const double* sm = sin_table_.data() + static_cast<size_t>(m) * nt;
        for (int k = 0; k < nt; ++k)
            ring[k] += coef_a[m] * cm[k] + coef_b[m] * sm[k];
    }
}

void PoleFilter::apply(PlanarState& s) const {
    for (int j = 0; j < grid_->n_r; ++j) {
        if (!active(j)) continue;
        project_ring(s.f1, j);
        project_ring(s.f2, j);
        project_ring(s.u, j);
    }
}

void planar_rhs(const PlanarState& s, std::vector<double>& d1, std::vector<double>& d2,
                std::vector<double>& du, RhsDiag* diag, const PoleFilter* filter) {
    const PolarGrid& g = s.grid;
    const int nr = g.n_r, nt = g.n_theta;
    const size_t n = static_cast<size_t>(nr) * nt;
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    du.assign(n, 0.0);

    const double dr = g.dr, dth = g.dtheta;
    const double inv2dr = 1.0 / (2.0 * dr), invdr2 = 1.0 / (dr * dr);
    const double inv12dr = 1.0 / (12.0 * dr);
    const double inv12dth = 1.0 / (12.0 * dth), inv12dth2 = 1.0 / (12.0 * dth * dth);

    std::vector<int> kp1(nt), kp2(nt), km1(nt), km2(nt);
    for (int k = 0; k < nt; ++k) {
        kp1[k] = (k + 1) % nt;
        kp2[k] = (k + 2) % nt;
        km1[k] = (k + nt - 1) % nt;
        km2[k] = (k + nt - 2) % nt;
    }

    const std::vector<double>* F[3] = {&s.f1, &s.f2, &s.u};
    std::vector<double>* D[3] = {&d1, &d2, &du};
    GhostRows ghost[3];
    for (int c = 0; c < 3; ++c) ghost[c].build(*F[c], nt);

    auto row = [&](int c, int j) -> const double* {
        if (j >= 0) return F[c]->data() + static_cast<size_t>(j) * nt;
        return j == -1 ? ghost[c].m1.data() : ghost[c].m2.data();
    };

    auto dth4 = [&](const double* r0, int k) {
        return (-r0[kp2[k]] + 8.0 * r0[kp1[k]] - 8.0 * r0[km1[k]] + r0[km2[k]]) *
               inv12dth;
    };

    RhsDiag acc;

    for (int j = 0; j < nr - 1; ++j) {
        const double r = g.r[j];
        const double ir = 1.0 / r, ir2 = ir * ir;
        const bool pole4 = r < fd::kPoleHi && j + 2 <= nr - 1;
        Rows R[3];
        for (int c = 0; c < 3; ++c)
            R[c] = {row(c, j - 2), row(c, j - 1), row(c, j), row(c, j + 1),
                    j + 2 <= nr - 1 ? row(c, j + 2) : nullptr};

        for (int k = 0; k < nt; ++k) {
            double fr[3], frr[3], fth[3], fthth[3], frth[3];
            for (int c = 0; c < 3; ++c) {
                const Rows& w = R[c];
                if (pole4)
                    fr[c] = (-w.jp2[k] + 8.0 * w.jp1[k] - 8.0 * w.jm1[k] + w.jm2[k]) *
                            inv12dr;
                else
                    fr[c] = (w.jp1[k] - w.jm1[k]) * inv2dr;
                frr[c] = (w.jp1[k] - 2.0 * w.j0[k] + w.jm1[k]) * invdr2;
                fth[c] = dth4(w.j0, k);
                fthth[c] = (-w.j0[kp2[k]] + 16.0 * w.j0[kp1[k]] - 30.0 * w.j0[k] +
                            16.0 * w.j0[km1[k]] - w.j0[km2[k]]) *
                           inv12dth2;
                if (pole4)
                    frth[c] = (-dth4(w.jp2, k) + 8.0 * dth4(w.jp1, k) -
                               8.0 * dth4(w.jm1, k) + dth4(w.jm2, k)) *
                              inv12dr;
                else
                    frth[c] = (dth4(w.jp1, k) - dth4(w.jm1, k)) * inv2dr;
            }

            const double ft1 = fth[0] * ir, ft2 = fth[1] * ir, ftu = fth[2] * ir;
            const double m_rr = fr[0] * fr[0] + fr[1] * fr[1] + fr[2] * fr[2];
            const double m_rt = fr[0] * ft1 + fr[1] * ft2 + fr[2] * ftu;
            const double m_tt = ft1 * ft1 + ft2 * ft2 + ftu * ftu;
            const double det = m_rr * m_tt - m_rt * m_rt;
            if (!(det > 1e-14))
                throw DegenerateImmersion("induced metric degenerate at node (" +
                                          std::to_string(j) + "," + std::to_string(k) +
                                          ")");
            const double idet = 1.0 / det;
            const double i_rr = m_tt * idet, i_rt = -m_rt * idet, i_tt = m_rr * idet;

            double hrt[3], htt[3];
            for (int c = 0; c < 3; ++c) {
                hrt[c] = frth[c] * ir - fth[c] * ir2;
                htt[c] = fthth[c] * ir2 + fr[c] * ir;
                (*D[c])[g.idx(j, k)] =
                    i_rr * frr[c] + 2.0 * i_rt * hrt[c] + i_tt * htt[c];
            }

            if (diag) {
                // forward-Euler spectrum bound lambda = sum of stencil symbols;
                // dt <= 2/lambda, so sigma_max stores lambda/2
                double s2th = filter ? filter->sym_dthth(j)
                                     : 16.0 / (3.0 * dth * dth);
                double s1th = filter ? filter->sym_dth(j) : 1.5 / dth;
                double sigma = 0.5 * (4.0 * i_rr * invdr2 + i_tt * ir2 * s2th +
                                      2.0 * std::abs(i_rt) * ir * s1th / dr);
                acc.sigma_max = std::max(acc.sigma_max, sigma);
                double jphi = fr[0] * ft2 - fr[1] * ft1;
                acc.min_jphi = std::min(acc.min_jphi, jphi);
                // ambient components of the vector product (frame-invariant minors)
                double n1 = fr[1] * ftu - fr[2] * ft2;
                double n2 = -(fr[0] * ftu - fr[2] * ft1);
                double n3 = jphi;
                double nn = std::sqrt(n1 * n1 + n2 * n2 + n3 * n3);
                if (n3 > 1e-300) acc.sup_v = std::max(acc.sup_v, nn / n3);
                double N1 = n1 / nn, N2 = n2 / nn, N3 = n3 / nn;
                double A_rr = frr[0] * N1 + frr[1] * N2 + frr[2] * N3;
                double A_rt = hrt[0] * N1 + hrt[1] * N2 + hrt[2] * N3;
                double A_tt = htt[0] * N1 + htt[1] * N2 + htt[2] * N3;
                double H = i_rr * A_rr + 2.0 * i_rt * A_rt + i_tt * A_tt;
                acc.H_min = std::min(acc.H_min, H);
                acc.H_max = std::max(acc.H_max, H);
                Sym2 A{A_rr, A_rt, A_tt}, M{m_rr, m_rt, m_tt};
                acc.h_eig_max = std::max(acc.h_eig_max, A.generalized_eigenvalues(M)[1]);
                size_t i = g.idx(j, k);
                double p = (s.f1[i] * n1 + s.f2[i] * n2 + s.u[i] * n3) / nn;
                acc.p_min = std::min(acc.p_min, p);
            }
        }
    }
    if (diag) *diag = acc;
}

void planar_rhs_reference(const PlanarState& s, std::vector<double>& d1,
                          std::vector<double>& d2, std::vector<double>& du) {
    const PolarGrid& g = s.grid;
    const size_t n = static_cast<size_t>(g.size());
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    du.assign(n, 0.0);
    const std::vector<double>* F[3] = {&s.f1, &s.f2, &s.u};
    std::vector<double>* D[3] = {&d1, &d2, &du};
    for (int j = 0; j < g.n_r - 1; ++j)
        for (int k = 0; k < g.n_theta; ++k) {
            double r = g.r[j], ir = 1.0 / r;
            double fr[3], fth[3], hrr[3], hrt[3], htt[3];
            for (int c = 0; c < 3; ++c) {
                fr[c] = fd::drad(g, *F[c], j, k);
                fth[c] = fd::dth(g, *F[c], j, k);
                double frr = fd::dradrad(g, *F[c], j, k);
                double frth = fd::dradth(g, *F[c], j, k);
                double fthth = fd::dthth(g, *F[c], j, k);
                hrr[c] = frr;
                hrt[c] = frth * ir - fth[c] * ir * ir;
                htt[c] = fthth * ir * ir + fr[c] * ir;
            }
            double ft[3] = {fth[0] * ir, fth[1] * ir, fth[2] * ir};
            Sym2 m{fr[0] * fr[0] + fr[1] * fr[1] + fr[2] * fr[2],
                   fr[0] * ft[0] + fr[1] * ft[1] + fr[2] * ft[2],
                   ft[0] * ft[0] + ft[1] * ft[1] + ft[2] * ft[2]};
            Sym2 mi = m.inverse();
            for (int c = 0; c < 3; ++c)
                (*D[c])[g.idx(j, k)] =
                    mi.xx * hrr[c] + 2.0 * mi.xy * hrt[c] + mi.yy * htt[c];
        }
}

namespace {

/// One-sided boundary jets of all three fields at ring node k.
struct RingJet {
    double fr[3]; // d/dr
    double ft[3]; // d/dtheta (equals the e_theta derivative at r=1)
};

RingJet ring_jet(const PlanarState& s, int k) {
    const PolarGrid& g = s.grid;
    int jb = g.n_r - 1;
    const std::vector<double>* F[3] = {&s.f1, &s.f2, &s.u};
    RingJet out;
    for (int c = 0; c < 3; ++c) {
        out.fr[c] = fd::drad(g, *F[c], jb, k);
        out.ft[c] = fd::dth(g, *F[c], jb, k);
    }
    return out;
}

struct RingAngle {
    double n1, n2, n3, nn;
};

RingAngle ring_angle(const RingJet& jet) {
    RingAngle a;
    a.n1 = jet.fr[1] * jet.ft[2] - jet.fr[2] * jet.ft[1];
    a.n2 = -(jet.fr[0] * jet.ft[2] - jet.fr[2] * jet.ft[0]);
    a.n3 = jet.fr[0] * jet.ft[1] - jet.fr[1] * jet.ft[0];
    a.nn = std::sqrt(a.n1 * a.n1 + a.n2 * a.n2 + a.n3 * a.n3);
    return a;
}

} // namespace

int boundary_newton(PlanarState& s, const PlanarConfig& cfg) {
    const PolarGrid& g = s.grid;
    const int nt = g.n_theta, jb = g.n_r - 1;
    const double beta = cfg.beta;
    const double alpha = 3.0 / (2.0 * g.dr); // d(f_r)/d(f_boundary), one-sided stencil

    // the contact condition is linear: pin it once
    for (int k = 0; k < nt; ++k) s.u[g.idx(jb, k)] = 0.0;

    for (int sweep = 1; sweep <= cfg.newton_max_iters; ++sweep) {
        // Gauss-Seidel over ring nodes; per node a damped Newton in (phi1, phi2)
        for (int k = 0; k < nt; ++k) {
            for (int it = 0; it < 30; ++it) {
                RingJet jet = ring_jet(s, k);
                RingAngle a = ring_angle(jet);
                double e1 = a.n3 / a.nn - beta;
                double e2 = jet.ft[0] * jet.fr[0] + jet.ft[1] * jet.fr[1];
                double res = std::max(std::abs(e1), std::abs(e2));
                if (res <= 0.5 * cfg.newton_tol) break;

                double dn3[2] = {alpha * jet.ft[1], -alpha * jet.ft[0]};
                double dn1[2] = {0.0, alpha * jet.ft[2]};
                double dn2[2] = {-alpha * jet.ft[2], 0.0};
                double J[2][2];
                for (int q = 0; q < 2; ++q) {
                    double dnn = (a.n1 * dn1[q] + a.n2 * dn2[q] + a.n3 * dn3[q]) / a.nn;
                    J[0][q] = (dn3[q] * a.nn - a.n3 * dnn) / (a.nn * a.nn);
                    J[1][q] = alpha * jet.ft[q];
                }
                double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                if (!(std::abs(det) > 1e-300))
                    throw NewtonDivergence("singular boundary Jacobian at ring node " +
                                           std::to_string(k));
                double s1 = (-e1 * J[1][1] + e2 * J[0][1]) / det;
                double s2 = (-J[0][0] * e2 + J[1][0] * e1) / det;

                size_t i1 = g.idx(jb, k);
                double base1 = s.f1[i1], base2 = s.f2[i1];
                double lam = 1.0;
                for (int bt = 0; bt < 8; ++bt) {
                    s.f1[i1] = base1 + lam * s1;
                    s.f2[i1] = base2 + lam * s2;
                    RingJet jt = ring_jet(s, k);
                    RingAngle at = ring_angle(jt);
                    double t1 = at.n3 / at.nn - beta;
                    double t2 = jt.ft[0] * jt.fr[0] + jt.ft[1] * jt.fr[1];
                    if (std::max(std::abs(t1), std::abs(t2)) < res) break;
                    lam *= 0.5;
                    if (bt == 7) { // no decrease: keep the full step and move on
                        s.f1[i1] = base1 + s1;
                        s.f2[i1] = base2 + s2;
                    }
                }
            }
        }
        double worst = 0.0;
        for (int k = 0; k < nt; ++k) {
            RingJet jet = ring_jet(s, k);
            RingAngle a = ring_angle(jet);
            worst = std::max(worst, std::abs(a.n3 / a.nn - beta));
            worst = std::max(worst,
                             std::abs(jet.ft[0] * jet.fr[0] + jet.ft[1] * jet.fr[1]));
        }
        if (worst <= cfg.newton_tol) return sweep;
    }
    throw NewtonDivergence("boundary ring did not reach newton_tol in " +
                           std::to_string(cfg.newton_max_iters) + " sweeps");
}

RingDiag ring_diagnostics(const PlanarState& s, const PlanarConfig& cfg) {
    const PolarGrid& g = s.grid;
    const int nt = g.n_theta, jb = g.n_r - 1;
    ContactAngle a(cfg.beta);
    RingDiag out;
    double radius_acc = 0.0;
    std::vector<double> h_tau(nt), seg(nt), hh_ring(nt);
    const std::vector<double>* F[3] = {&s.f1, &s.f2, &s.u};
    for (int k = 0; k < nt; ++k) {
        size_t i = g.idx(jb, k);
        radius_acc += std::hypot(s.f1[i], s.f2[i]);
        RingJet jet = ring_jet(s, k);
        RingAngle va = ring_angle(jet);
        out.angle_res = std::max(out.angle_res, std::abs(va.n3 / va.nn - cfg.beta));
        out.orth_res = std::max(
            out.orth_res, std::abs(jet.ft[0] * jet.fr[0] + jet.ft[1] * jet.fr[1]));
        double j2 = va.n1 * va.n1 + va.n2 * va.n2;
        out.b_res = std::max(out.b_res, std::abs(a.beta * a.beta * j2 -
                                                 a.beta0 * a.beta0 * va.n3 * va.n3));
        out.min_jphi_ring = std::min(out.min_jphi_ring, va.n3);

        double N[3] = {va.n1 / va.nn, va.n2 / va.nn, va.n3 / va.nn};
        double A_rr = 0.0, A_rt = 0.0, A_tt = 0.0;
        double m_rr = 0.0, m_rt = 0.0, m_tt = 0.0;
        for (int c = 0; c < 3; ++c) {
            double frr = fd::dradrad(g, *F[c], jb, k);
            double frth = fd::dradth(g, *F[c], jb, k);
            double fthth = fd::dthth(g, *F[c], jb, k);
            A_rr += frr * N[c];
            A_rt += (frth - jet.ft[c]) * N[c]; // r = 1 on the ring
            A_tt += (fthth + jet.fr[c]) * N[c];
            m_rr += jet.fr[c] * jet.fr[c];
            m_rt += jet.fr[c] * jet.ft[c];
            m_tt += jet.ft[c] * jet.ft[c];
        }
        Sym2 A{A_rr, A_rt, A_tt}, M{m_rr, m_rt, m_tt};
        Sym2 Mi = M.inverse();
        Mat2 sh = geometry::weingarten(Mi, A);
        hh_ring[k] = sh.a * sh.a + 2.0 * sh.b * sh.c + sh.d * sh.d;
        h_tau[k] = A_tt / m_tt;
        seg[k] = std::sqrt(jet.ft[0] * jet.ft[0] + jet.ft[1] * jet.ft[1]);
    }
    out.radius = radius_acc / nt;
    for (int k = 0; k < nt; ++k) {
        int kp = (k + 1) % nt, km = (k + nt - 1) % nt;
        double dhds = (h_tau[kp] - h_tau[km]) / (2.0 * g.dtheta) / seg[k];
        out.cont_fn = std::max(out.cont_fn,
                               std::sqrt(std::max(0.0, hh_ring[k])) + std::abs(dhds));
    }
    return out;
}

double planar_step(PlanarState& s, const PlanarConfig& cfg, double dt_in,
                   StepRecord* rec, const PoleFilter* filter) {
    std::optional<PoleFilter> local;
    if (!filter) {
        local.emplace(s.grid);
        filter = &*local;
    }
    std::vector<double> k11, k12, k1u, k21, k22, k2u;
    RhsDiag diag1;
    planar_rhs(s, k11, k12, k1u, &diag1, filter);
    double dt = dt_in;
    if (dt <= 0.0)
        dt = cfg.fixed_dt ? *cfg.fixed_dt : cfg.cfl_sigma / diag1.sigma_max;

    PlanarState s1 = s;
    const size_t n = s.f1.size();
    for (size_t i = 0; i < n; ++i) {
        s1.f1[i] = s.f1[i] + dt * k11[i];
        s1.f2[i] = s.f2[i] + dt * k12[i];
        s1.u[i] = s.u[i] + dt * k1u[i];
    }
    filter->apply(s1);
    boundary_newton(s1, cfg);

    RhsDiag diag2;
    planar_rhs(s1, k21, k22, k2u, rec ? &diag2 : nullptr, filter);
    for (size_t i = 0; i < n; ++i) {
        s.f1[i] += 0.5 * dt * (k11[i] + k21[i]);
        s.f2[i] += 0.5 * dt * (k12[i] + k22[i]);
        s.u[i] += 0.5 * dt * (k1u[i] + k2u[i]);
    }
    filter->apply(s);
    boundary_newton(s, cfg);
    s.t += dt;

    if (rec) {
        // interior columns sample the Heun predictor (t+dt to O(dt^2));
        // ring columns are exact on the accepted state
        RingDiag ring = ring_diagnostics(s, cfg);
        rec->t = s.t;
        rec->dt = dt;
        rec->radius = ring.radius;
        rec->sup_v = std::max(diag2.sup_v, 1.0 / cfg.beta);
        rec->H_min = diag2.H_min;
        rec->H_max = diag2.H_max;
        rec->h_eig_max = diag2.h_eig_max;
        rec->angle_res = ring.angle_res;
        rec->orth_res = ring.orth_res;
        rec->p_min = diag2.p_min;
        rec->cont_fn = ring.cont_fn;
    }
    return dt;
}

namespace {

Snapshot make_snapshot(const PlanarState& s, const PlanarConfig& cfg, int step_no) {
    Snapshot snap;
    snap.kind = Snapshot::Kind::Planar;
    snap.t = s.t;
    snap.step = step_no;
    snap.disk = s.grid;
    snap.f1 = s.f1;
    snap.f2 = s.f2;
    snap.fu = s.u;
    snap.beta = cfg.beta;
    return snap;
}

StepRecord state_record(const PlanarState& s, const PlanarConfig& cfg,
                        RhsDiag* diag_out = nullptr) {
    std::vector<double> a, b, c;
    RhsDiag d;
    planar_rhs(s, a, b, c, &d);
    RingDiag ring = ring_diagnostics(s, cfg);
    StepRecord rec;
    rec.t = s.t;
    rec.dt = 0.0;
    rec.radius = ring.radius;
    rec.sup_v = std::max(d.sup_v, 1.0 / cfg.beta);
    rec.H_min = d.H_min;
    rec.H_max = d.H_max;
    rec.h_eig_max = d.h_eig_max;
    rec.angle_res = ring.angle_res;
    rec.orth_res = ring.orth_res;
    rec.p_min = d.p_min;
    rec.cont_fn = ring.cont_fn;
    if (diag_out) *diag_out = d;
    return rec;
}

} // namespace

namespace {

/// Step with the dt decided from the stage-1 stability bound, pre-checking
/// mesh degeneracy and step underflow before integrating.
double guarded_step(PlanarState& s, const PlanarConfig& cfg, const PoleFilter& filter,
                    double dt_cap, double jphi_floor, StepRecord* rec) {
    std::vector<double> k11, k12, k1u, k21, k22, k2u;
    RhsDiag diag1;
    planar_rhs(s, k11, k12, k1u, &diag1, &filter);
    if (!(diag1.min_jphi > 0.0))
        throw MeshDegeneracy("map stopped being orientation-preserving");
    if (diag1.min_jphi < jphi_floor)
        throw MeshDegeneracy("interior Jacobian " + std::to_string(diag1.min_jphi) +
                             " under the floor " + std::to_string(jphi_floor));
    double dt = cfg.fixed_dt ? *cfg.fixed_dt : cfg.cfl_sigma / diag1.sigma_max;
    dt = std::min(dt, dt_cap);
    if (dt < 1e-14) throw StepUnderflow("dt = " + std::to_string(dt));

    PlanarState s1 = s;
    const size_t n = s.f1.size();
    for (size_t i = 0; i < n; ++i) {
        s1.f1[i] = s.f1[i] + dt * k11[i];
        s1.f2[i] = s.f2[i] + dt * k12[i];
        s1.u[i] = s.u[i] + dt * k1u[i];
    }
    filter.apply(s1);
    boundary_newton(s1, cfg);
    RhsDiag diag2;
    planar_rhs(s1, k21, k22, k2u, rec ? &diag2 : nullptr, &filter);
    for (size_t i = 0; i < n; ++i) {
        s.f1[i] += 0.5 * dt * (k11[i] + k21[i]);
        s.f2[i] += 0.5 * dt * (k12[i] + k22[i]);
        s.u[i] += 0.5 * dt * (k1u[i] + k2u[i]);
    }
    filter.apply(s);
    boundary_newton(s, cfg);
    s.t += dt;
    if (rec) {
        RingDiag ring = ring_diagnostics(s, cfg);
        rec->t = s.t;
        rec->dt = dt;
        rec->radius = ring.radius;
        rec->sup_v = std::max(diag2.sup_v, 1.0 / cfg.beta);
        rec->H_min = diag2.H_min;
        rec->H_max = diag2.H_max;
        rec->h_eig_max = diag2.h_eig_max;
        rec->angle_res = ring.angle_res;
        rec->orth_res = ring.orth_res;
        rec->p_min = diag2.p_min;
        rec->cont_fn = ring.cont_fn;
    }
    return dt;
}

} // namespace

RunTrace planar_run(const PlanarConfig& cfg, PlanarState seed,
                    const std::function<void(const PlanarState&, const StepRecord&)>&
                        on_step) {
    cfg.validate();
    RunTrace trace;
    PoleFilter filter(seed.grid);
    filter.apply(seed); // start on the filtered subspace
    boundary_newton(seed, cfg);

    RhsDiag d0;
    StepRecord rec0 = state_record(seed, cfg, &d0);
    double r_init = rec0.radius;
    double ext_radius =
        cfg.extinction_radius >= 0.0 ? cfg.extinction_radius : 1e-3 * r_init;
    double min_jphi0 =
        std::min(d0.min_jphi, ring_diagnostics(seed, cfg).min_jphi_ring);
    if (!(min_jphi0 > 0.0))
        throw MeshDegeneracy("seed map is not orientation-preserving");

    if (cfg.t_end <= 0.0) {
        trace.exit_reason = "t_end";
        return trace;
    }

    trace.steps.push_back(rec0);
    trace.snapshots.push_back(make_snapshot(seed, cfg, 0));
    if (on_step) on_step(seed, trace.steps.back());

    int step_no = 0;
    try {
        while (true) {
            if (trace.steps.back().radius < ext_radius) {
                trace.exit_reason = "extinction";
                break;
            }
            if (seed.t >= cfg.t_end - 1e-15) {
                trace.exit_reason = "t_end";
                break;
            }
            StepRecord rec;
            guarded_step(seed, cfg, filter, cfg.t_end - seed.t,
                         cfg.min_jacobian_frac * min_jphi0, &rec);
            ++step_no;
            trace.steps.push_back(rec);
            if (on_step) on_step(seed, rec);
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

namespace {

/// Cubic Hermite interpolation of a radial profile with lens parity through
/// the pole (even field: parity +1, odd: -1).
struct RadialInterp {
    const LineGrid* grid;
    const std::vector<double>* f;
    std::vector<double> slope;
    double parity;

    RadialInterp(const LineGrid& g, const std::vector<double>& values, double par)
        : grid(&g), f(&values), parity(par) {
        slope.resize(g.n);
        PoleParity p = par > 0 ? PoleParity::Even : PoleParity::Odd;
        for (int j = 0; j < g.n; ++j) slope[j] = fd::d1(g, values, j, p);
    }

    double node(int j) const { return j >= 0 ? (*f)[j] : parity * (*f)[-1 - j]; }
    double node_r(int j) const { return j >= 0 ? grid->r[j] : -grid->r[-1 - j]; }
    // f(-r) = parity f(r) => f'(-r) = -parity f'(r)
    double node_slope(int j) const {
        return j >= 0 ? slope[j] : -parity * slope[-1 - j];
    }

    double eval(double r) const {
        int n = grid->n;
        int j = static_cast<int>(std::floor((r - grid->r[0]) / grid->dr));
        j = std::max(grid->has_pole ? -1 : 0, std::min(j, n - 2));
        double r0 = node_r(j), r1 = node_r(j + 1);
        double h = r1 - r0;
        double tt = (r - r0) / h;
        double f0 = node(j), f1v = node(j + 1);
        double s0 = node_slope(j), s1 = node_slope(j + 1);
        double t2 = tt * tt, t3 = t2 * tt;
        return (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + tt) * h * s0 +
               (-2.0 * t3 + 3.0 * t2) * f1v + (t3 - t2) * h * s1;
    }
};

} // namespace

PlanarState radial_embedding(const radial::RadialState& rs, const PolarGrid& grid) {
    if (!rs.lens())
        throw NotApplicable("planar embedding lifts lens states onto the disk grid");
    PlanarState out;
    out.t = rs.t;
    out.grid = grid;
    size_t n = static_cast<size_t>(grid.size());
    out.f1.resize(n);
    out.f2.resize(n);
    out.u.resize(n);
    RadialInterp ui(rs.grid, rs.u, +1.0);
    RadialInterp pi(rs.grid, rs.phi, -1.0);
    bool same = grid.n_r == rs.grid.n && std::abs(grid.dr - rs.grid.dr) < 1e-15;
    for (int j = 0; j < grid.n_r; ++j) {
        double uu = same ? rs.u[j] : ui.eval(grid.r[j]);
        double pp = same ? rs.phi[j] : pi.eval(grid.r[j]);
        for (int k = 0; k < grid.n_theta; ++k) {
            size_t i = grid.idx(j, k);
            out.f1[i] = pp * grid.cth[k];
            out.f2[i] = pp * grid.sth[k];
            out.u[i] = uu;
        }
    }
    return out;
}

double reconstruct_w(const PlanarState& s, Vec2 y) {
    const PolarGrid& g = s.grid;
    const int nr = g.n_r, nt = g.n_theta;
    double theta = std::atan2(y.y, y.x);
    if (theta < 0.0) theta += 2.0 * M_PI;
    double ring = 0.0;
    for (int k = 0; k < nt; ++k)
        ring += std::hypot(s.f1[g.idx(nr - 1, k)], s.f2[g.idx(nr - 1, k)]);
    ring /= nt;
    double r = std::clamp(std::hypot(y.x, y.y) / ring, 1e-6, 1.0);

    auto corner = [&](int j, int k, int c) -> double {
        const std::vector<double>& f = c == 0 ? s.f1 : (c == 1 ? s.f2 : s.u);
        k = g.kwrap(k);
        if (j >= 0) return f[g.idx(j, k)];
        return f[g.idx(-1 - j, (k + nt / 2) % nt)];
    };

    for (int it = 0; it < 60; ++it) {
        int j = static_cast<int>(std::floor(r / g.dr - 0.5));
        j = std::max(-1, std::min(j, nr - 2));
        int k = static_cast<int>(std::floor(theta / g.dtheta));
        double r0 = (j + 0.5) * g.dr, th0 = k * g.dtheta;
        double a = (r - r0) / g.dr, b = (theta - th0) / g.dtheta;
        double p1 = 0.0, p2 = 0.0;
        double dpa[2], dpb[2];
        for (int c = 0; c < 2; ++c) {
            double f00 = corner(j, k, c), f10 = corner(j + 1, k, c);
            double f01 = corner(j, k + 1, c), f11 = corner(j + 1, k + 1, c);
            double val = (1 - a) * (1 - b) * f00 + a * (1 - b) * f10 +
                         (1 - a) * b * f01 + a * b * f11;
            (c == 0 ? p1 : p2) = val;
            dpa[c] = (1 - b) * (f10 - f00) + b * (f11 - f01);
            dpb[c] = (1 - a) * (f01 - f00) + a * (f11 - f10);
        }
        double e1 = p1 - y.x, e2 = p2 - y.y;
        if (std::abs(e1) + std::abs(e2) < 1e-13 * std::max(1.0, ring)) {
            double f00 = corner(j, k, 2), f10 = corner(j + 1, k, 2);
            double f01 = corner(j, k + 1, 2), f11 = corner(j + 1, k + 1, 2);
            return (1 - a) * (1 - b) * f00 + a * (1 - b) * f10 + (1 - a) * b * f01 +
                   a * b * f11;
        }
        double det = dpa[0] * dpb[1] - dpa[1] * dpb[0];
        if (!(std::abs(det) > 1e-300))
            throw ReconstructionFailure("singular bilinear cell in the phi inverse");
        double da = (e1 * dpb[1] - e2 * dpb[0]) / det;
        double db = (dpa[0] * e2 - dpa[1] * e1) / det;
        r -= da * g.dr;
        theta -= db * g.dtheta;
        theta = std::fmod(theta, 2.0 * M_PI);
        if (theta < 0.0) theta += 2.0 * M_PI;
        if (r > 1.0) r = 1.0;
        if (r < -0.49 * g.dr) r = 0.25 * g.dr;
    }
    throw ReconstructionFailure("phi inverse did not converge at (" +
                                std::to_string(y.x) + "," + std::to_string(y.y) + ")");
}

} // namespace mcmfb::planar
