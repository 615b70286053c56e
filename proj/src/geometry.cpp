#include "mcmfb/geometry.hpp"

namespace mcmfb::geometry {

std::vector<Vec2> fd_gradient(const PolarGrid& g, const std::vector<double>& f) {
    std::vector<Vec2> out(static_cast<size_t>(g.size()));
    for (int j = 0; j < g.n_r; ++j)
        for (int k = 0; k < g.n_theta; ++k) {
            double fr = fd::drad(g, f, j, k);
            double ft = fd::dth(g, f, j, k);
            out[g.idx(j, k)] = fd::polar_to_cart_grad(fr, ft, g.r[j], g.cth[k], g.sth[k]);
        }
    return out;
}

std::vector<Sym2> fd_hessian(const PolarGrid& g, const std::vector<double>& f) {
    std::vector<Sym2> out(static_cast<size_t>(g.size()));
    for (int j = 0; j < g.n_r; ++j)
        for (int k = 0; k < g.n_theta; ++k) {
            double fr = fd::drad(g, f, j, k);
            double ft = fd::dth(g, f, j, k);
            double frr = fd::dradrad(g, f, j, k);
            double frt = fd::dradth(g, f, j, k);
            double ftt = fd::dthth(g, f, j, k);
            out[g.idx(j, k)] =
                fd::polar_to_cart_hess(fr, ft, frr, frt, ftt, g.r[j], g.cth[k], g.sth[k]);
        }
    return out;
}

std::vector<double> fd_gradient(const LineGrid& g, const std::vector<double>& f,
                                PoleParity parity) {
    std::vector<double> out(static_cast<size_t>(g.n));
    for (int j = 0; j < g.n; ++j) out[j] = fd::d1(g, f, j, parity);
    return out;
}

std::vector<double> fd_hessian(const LineGrid& g, const std::vector<double>& f,
                               PoleParity parity) {
    std::vector<double> out(static_cast<size_t>(g.n));
    for (int j = 0; j < g.n; ++j) out[j] = fd::d2(g, f, j, parity);
    return out;
}

Sym2 metric_inverse(Vec2 dw) {
    double v2 = 1.0 + dw.dot(dw);
    Sym2 m;
    m.xx = 1.0 - dw.x * dw.x / v2;
    m.xy = -dw.x * dw.y / v2;
    m.yy = 1.0 - dw.y * dw.y / v2;
    return m;
}

GeometryFields graph_geometry(const PolarGrid& g, const std::vector<double>& w,
                              const ContactAngle&) {
    GeometryFields out;
    out.grid = &g;
    out.grad = fd_gradient(g, w);
    out.hess = fd_hessian(g, w);
    size_t n = out.grad.size();
    out.v.resize(n);
    out.ginv.resize(n);
    out.h.resize(n);
    out.H.resize(n);
    out.N.resize(n);
    out.omega.resize(n);
    for (size_t i = 0; i < n; ++i) {
        Vec2 dw = out.grad[i];
        double v = std::sqrt(1.0 + dw.dot(dw));
        out.v[i] = v;
        out.ginv[i] = metric_inverse(dw);
        out.h[i] = out.hess[i] * (1.0 / v);
        out.H[i] = out.ginv[i].xx * out.h[i].xx + 2.0 * out.ginv[i].xy * out.h[i].xy +
                   out.ginv[i].yy * out.h[i].yy;
        out.N[i] = {-dw.x / v, -dw.y / v, 1.0 / v};
        out.omega[i] = dw * (1.0 / v);
    }
    return out;
}

void param_metric(const JetF& jet, Sym2& g_out, Sym2& ginv_out) {
    // g_ij = sum over components F^c of F^c_i F^c_j
    g_out.xx = jet.dphi1.x * jet.dphi1.x + jet.dphi2.x * jet.dphi2.x + jet.du.x * jet.du.x;
    g_out.xy = jet.dphi1.x * jet.dphi1.y + jet.dphi2.x * jet.dphi2.y + jet.du.x * jet.du.y;
    g_out.yy = jet.dphi1.y * jet.dphi1.y + jet.dphi2.y * jet.dphi2.y + jet.du.y * jet.du.y;
    ginv_out = g_out.inverse(1e-14);
}

VectorProduct vector_product(const JetF& jet) {
    VectorProduct out;
    // Cofactor expansion of det [[e1,e2,e3],[DF^1,DF^2,DF^3]] for n=2.
    out.J.x = jet.dphi2.x * jet.du.y - jet.du.x * jet.dphi2.y;
    out.J.y = -(jet.dphi1.x * jet.du.y - jet.du.x * jet.dphi1.y);
    out.Jphi = jet.dphi1.x * jet.dphi2.y - jet.dphi1.y * jet.dphi2.x;
    double n2 = out.J.dot(out.J) + out.Jphi * out.Jphi;
    if (!(n2 > 1e-28)) throw DegenerateImmersion("vector product vanished");
    out.norm = std::sqrt(n2);
    double inv = 1.0 / out.norm;
    out.N = {out.J.x * inv, out.J.y * inv, out.Jphi * inv};
    return out;
}

double angle_operator(const JetF& jet, const ContactAngle& angle) {
    Vec2 J{jet.dphi2.x * jet.du.y - jet.du.x * jet.dphi2.y,
           -(jet.dphi1.x * jet.du.y - jet.du.x * jet.dphi1.y)};
    double jphi = jet.dphi1.x * jet.dphi2.y - jet.dphi1.y * jet.dphi2.x;
    return angle.beta * angle.beta * J.dot(J) - angle.beta0 * angle.beta0 * jphi * jphi;
}

double orthogonality_operator(const Mat2& dphi, Vec2 n, Vec2 tau) {
    Vec2 dn{dphi.row(0).dot(n), dphi.row(1).dot(n)};
    Vec2 dt{dphi.row(0).dot(tau), dphi.row(1).dot(tau)};
    return dt.dot(dn);
}

Mat2 weingarten(const Sym2& ginv, const Sym2& h) {
    return {ginv.xx * h.xx + ginv.xy * h.xy, ginv.xx * h.xy + ginv.xy * h.yy,
            ginv.xy * h.xx + ginv.yy * h.xy, ginv.xy * h.xy + ginv.yy * h.yy};
}

double norm2_h(const Sym2& ginv, const Sym2& h) {
    Mat2 s = weingarten(ginv, h);
    // |h|^2_g = tr(S S) for S = g^-1 h
    return s.a * s.a + 2.0 * s.b * s.c + s.d * s.d;
}

Sym2 h_squared(const Sym2& ginv, const Sym2& h) {
    Mat2 s = weingarten(ginv, h);
    // (h^2)_ij = h_ik S^k_j (symmetric)
    Sym2 out;
    out.xx = h.xx * s.a + h.xy * s.c;
    out.xy = h.xx * s.b + h.xy * s.d;
    out.yy = h.xy * s.b + h.yy * s.d;
    return out;
}

Sym2 h_cubed(const Sym2& ginv, const Sym2& h) {
    Mat2 s = weingarten(ginv, h);
    Sym2 h2 = h_squared(ginv, h);
    Sym2 out;
    out.xx = h2.xx * s.a + h2.xy * s.c;
    out.xy = h2.xx * s.b + h2.xy * s.d;
    out.yy = h2.xy * s.b + h2.yy * s.d;
    return out;
}

} // namespace mcmfb::geometry
