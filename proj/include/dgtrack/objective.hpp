#pragma once

#include <cmath>

#include "dgtrack/dg.hpp"

namespace dgtrack {

struct ObjectiveConfig {
  double alpha = 1.0;
  Mat W;               // nc x nc symmetric PSD semi-norm
  double r_exp = 2.0;  // distortion exponent
  double h0 = 1.0;
  double eps_det = 0.0;   // floor for (det G)_+; set to 1e-10 h0^d by make()
  double eps_abs = 1e-8;  // smoothing of |.| in the 1d distortion

  static ObjectiveConfig make(int nc, int dim, double h0, double alpha) {
    ObjectiveConfig c;
    c.alpha = alpha;
    c.W = Mat::Identity(nc, nc);
    c.h0 = h0;
    c.eps_det = 1e-10 * std::pow(h0, dim);
    return c;
  }
};

struct ObjEval {
  double value = 0.0;
  Vec grad_u;
  Vec grad_x;
};

// Mean of the nodal expansion over the physical image of one element.
inline Vec element_mean(const ReferenceMesh& mesh, const Tables& tbl, const MeshDofs& dofs,
                        const Vec& u, int nc, int e) {
  const int np = tbl.np();
  const ElemGeom eg = elem_geom(mesh, dofs, e, tbl);
  Vec mean = Vec::Zero(nc);
  double vol = 0.0;
  for (int q = 0; q < tbl.vol.size(); ++q) {
    const double w = tbl.vol.wts(q) * eg.jref(q) * eg.g(q);
    vol += w;
    for (int c = 0; c < nc; ++c) {
      double uq = 0.0;
      for (int i = 0; i < np; ++i) uq += tbl.phi_vol(q, i) * u(uidx(e, np, nc, i, c));
      mean(c) += w * uq;
    }
  }
  if (!(vol > 0.0)) throw invalid_geometry("element_mean: nonpositive volume");
  return mean / vol;
}

// Deviation-from-element-mean discontinuity indicator
//   f_shk = h0^{-2} sum_K int_K |u - mean_K(u)|_W^2 dV.
// The mean sensitivity drops from grad_u by W-orthogonality of u - mean.
inline ObjEval f_shk(const ReferenceMesh& mesh, const Tables& tbl, const MeshDofs& dofs,
                     const Vec& u, int nc, const ObjectiveConfig& cfg, bool want_grads = true) {
  const int np = tbl.np(), ne = mesh.n_elems(), d = mesh.dim;
  const double scale = 1.0 / (cfg.h0 * cfg.h0);
  ObjEval out;
  if (want_grads) {
    out.grad_u = Vec::Zero(u.size());
    out.grad_x = Vec::Zero(mesh.n_nodes() * d);
  }
  Mat uq(tbl.vol.size(), nc);
  for (int e = 0; e < ne; ++e) {
    const ElemGeom eg = elem_geom(mesh, dofs, e, tbl);
    Vec mean = Vec::Zero(nc);
    double vol = 0.0;
    for (int q = 0; q < tbl.vol.size(); ++q) {
      const double w = tbl.vol.wts(q) * eg.jref(q) * eg.g(q);
      vol += w;
      for (int c = 0; c < nc; ++c) {
        double v = 0.0;
        for (int i = 0; i < np; ++i) v += tbl.phi_vol(q, i) * u(uidx(e, np, nc, i, c));
        uq(q, c) = v;
        mean(c) += w * v;
      }
    }
    if (!(vol > 0.0)) throw invalid_geometry("f_shk: nonpositive element volume");
    mean /= vol;
    for (int q = 0; q < tbl.vol.size(); ++q) {
      const Vec dq = uq.row(q).transpose() - mean;
      const Vec Wd = cfg.W * dq;
      const double w = tbl.vol.wts(q) * eg.jref(q) * eg.g(q);
      out.value += scale * w * dq.dot(Wd);
      if (!want_grads) continue;
      for (int i = 0; i < np; ++i) {
        const double ph = tbl.phi_vol(q, i);
        for (int c = 0; c < nc; ++c)
          out.grad_u(uidx(e, np, nc, i, c)) += scale * 2.0 * w * Wd(c) * ph;
      }
      // d(g)/dx chain; the mean term vanishes since int (u-mean) g dV = 0
      const double kq = dq.dot(Wd) * tbl.vol.wts(q) * eg.jref(q);
      const Mat Gi = detail::inv_small(eg.G[q]);
      for (int j = 0; j < np; ++j) {
        const int n = mesh.elems(e, j);
        for (int a = 0; a < d; ++a) {
          double dgdx = 0.0;
          for (int b = 0; b < d; ++b) dgdx += eg.gradX[q](j, b) * Gi(b, a);
          dgdx *= eg.g(q);
          out.grad_x(xidx(n, d, a)) += scale * kq * dgdx;
        }
      }
    }
  }
  // grad of the mean wrt x cancels through the same orthogonality used above;
  // (d/dx of mean) enters the integrand as -2 int (u-mean)^T W dmean g dV = 0
  return out;
}

// Mesh distortion: deviation from uniform (1d) or the Frobenius/Jacobian
// shape ratio integrated per element (d >= 2).
inline ObjEval f_msh(const ReferenceMesh& mesh, const Tables& tbl, const MeshDofs& dofs,
                     const ObjectiveConfig& cfg, bool want_grads = true) {
  const int np = tbl.np(), ne = mesh.n_elems(), d = mesh.dim;
  ObjEval out;
  if (want_grads) out.grad_x = Vec::Zero(mesh.n_nodes() * d);
  for (int e = 0; e < ne; ++e) {
    const ElemGeom eg = elem_geom(mesh, dofs, e, tbl);
    double vol = 0.0;
    Vec dvol = want_grads ? Vec::Zero(np * d) : Vec();
    for (int q = 0; q < tbl.vol.size(); ++q) {
      const double w = tbl.vol.wts(q) * eg.jref(q);
      vol += w * eg.g(q);
      if (!want_grads) continue;
      const Mat Gi = detail::inv_small(eg.G[q]);
      for (int j = 0; j < np; ++j)
        for (int a = 0; a < d; ++a) {
          double dgdx = 0.0;
          for (int b = 0; b < d; ++b) dgdx += eg.gradX[q](j, b) * Gi(b, a);
          dvol(j * d + a) += w * eg.g(q) * dgdx;
        }
    }
    if (d == 1) {
      const double z = cfg.h0 / vol - 1.0;
      const double rho = std::sqrt(z * z + cfg.eps_abs * cfg.eps_abs);
      out.value += cfg.h0 * rho;
      if (want_grads) {
        const double dz_dvol = -cfg.h0 / (vol * vol);
        const double coeff = cfg.h0 * (z / rho) * dz_dvol;
        for (int j = 0; j < np; ++j)
          out.grad_x(xidx(mesh.elems(e, j), 1, 0)) += coeff * dvol(j);
      }
      continue;
    }
    // d = 2: (1/V) int ( |G|_F^2 / (det G)_+^{2/d} )^r dVphys, measure guarded
    // alongside det so inverted trial steps stay finite
    const double volp = std::max(vol, cfg.eps_det);
    double I = 0.0;
    Vec dI = want_grads ? Vec::Zero(np * d) : Vec();
    using T4 = Dual<4>;
    for (int q = 0; q < tbl.vol.size(); ++q) {
      T4 G[4];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) G[a * d + b] = T4::seed(eg.G[q](a, b), a * d + b);
      T4 det = G[0] * G[3] - G[1] * G[2];
      T4 gp = max(det, T4(cfg.eps_det));
      T4 fro = G[0] * G[0] + G[1] * G[1] + G[2] * G[2] + G[3] * G[3];
      T4 kern = pow(fro / pow(gp, 2.0 / d), cfg.r_exp) * gp;
      const double w = tbl.vol.wts(q) * eg.jref(q);
      I += w * kern.v;
      if (!want_grads) continue;
      for (int j = 0; j < np; ++j)
        for (int a = 0; a < d; ++a) {
          double der = 0.0;
          for (int b = 0; b < d; ++b) der += kern.d[a * d + b] * eg.gradX[q](j, b);
          dI(j * d + a) += w * der;
        }
    }
    const double h0d = std::pow(cfg.h0, d);
    out.value += h0d * I / volp;
    if (want_grads) {
      const bool vol_active = vol > cfg.eps_det;
      for (int j = 0; j < np; ++j)
        for (int a = 0; a < d; ++a) {
          double der = h0d * dI(j * d + a) / volp;
          if (vol_active) der -= h0d * I / (volp * volp) * dvol(j * d + a);
          out.grad_x(xidx(mesh.elems(e, j), d, a)) += der;
        }
    }
  }
  return out;
}

inline ObjEval f_total(const ReferenceMesh& mesh, const Tables& tbl, const MeshDofs& dofs,
                       const Vec& u, int nc, const ObjectiveConfig& cfg,
                       bool want_grads = true) {
  ObjEval shk = f_shk(mesh, tbl, dofs, u, nc, cfg, want_grads);
  const ObjEval msh = f_msh(mesh, tbl, dofs, cfg, want_grads);
  shk.value += cfg.alpha * msh.value;
  if (want_grads) shk.grad_x += cfg.alpha * msh.grad_x;
  return shk;
}

// Rankine-Hugoniot indicator: squared W-norm of the physical normal-flux jump
// integrated over interior faces.
template <class Law>
inline double f_rh(const Discretization<Law>& disc, const MeshDofs& dofs, const Vec& u,
                   const Mat& W) {
  constexpr int NC = Law::NC, D = Law::DIM;
  const int np = disc.np();
  const auto& tbl = disc.tbl;
  double total = 0.0;
  const int nqf = tbl.face.size();
  for (const auto& fc : disc.ws.interior) {
    const auto& lnL = disc.fnodes[fc.fL];
    const auto& lnR = disc.fnodes[fc.fR];
    for (int q = 0; q < nqf; ++q) {
      const int qR = (D == 1) ? 0 : nqf - 1 - q;
      const FaceSideGeom gL = face_side_geom(*disc.mesh, dofs, fc.eL, fc.fL, q, tbl);
      const FaceSideGeom gR = face_side_geom(*disc.mesh, dofs, fc.eR, fc.fR, qR, tbl);
      double UL[NC], UR[NC];
      for (int c = 0; c < NC; ++c) {
        double vl = 0.0, vr = 0.0;
        for (int k : lnL) vl += tbl.phi_face[fc.fL](q, k) * u(uidx(fc.eL, np, NC, k, c));
        for (int k : lnR) vr += tbl.phi_face[fc.fR](qR, k) * u(uidx(fc.eR, np, NC, k, c));
        UL[c] = vl / gL.g;
        UR[c] = vr / gR.g;
      }
      double sv[D];
      disc.face_nanson(dofs, fc.eL, fc.fL, q, sv);
      double sigma = 1.0, nh[D];
      if constexpr (D == 2) {
        sigma = std::sqrt(sv[0] * sv[0] + sv[1] * sv[1]);
        nh[0] = sv[0] / sigma;
        nh[1] = sv[1] / sigma;
      } else {
        nh[0] = sv[0];
      }
      double FL[NC * D], FR[NC * D];
      disc.law.flux(UL, FL);
      disc.law.flux(UR, FR);
      Vec jump(NC);
      for (int c = 0; c < NC; ++c) {
        double j = 0.0;
        for (int b = 0; b < D; ++b) j += (FL[c * D + b] - FR[c * D + b]) * nh[b];
        jump(c) = j;
      }
      total += tbl.face.wts(q) * sigma * jump.dot(W * jump);
    }
  }
  return total;
}

// Squared 2-norm of the Petrov-Galerkin enriched residual.
template <class Law>
inline double f_res(const Discretization<Law>& disc, const MeshDofs& dofs, const Vec& u,
                    EnrichMode mode) {
  const Vec r = disc.enriched_residual(dofs, u, mode);
  return r.squaredNorm();
}

}  // namespace dgtrack
