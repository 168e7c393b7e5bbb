#pragma once

// Petrov-Galerkin enriched residuals for Discretization<Law>: the order-p
// trial solution tested against order p+1 functions on the same elements
// (p_refine) or order-p functions on 2/4 children per element (h_refine).
// Values only (used as discontinuity indicators); assembled with direct
// basis evaluation rather than tables since these run on small meshes.

#include <vector>

#include "dgtrack/dg.hpp"

namespace dgtrack {

namespace detail {

struct ChildMap {
  Vec v0;  // parent coords of the child origin
  Mat B;   // child-to-parent linear map
};

inline std::vector<ChildMap> child_maps(int dim) {
  std::vector<ChildMap> ch;
  if (dim == 1) {
    for (int c = 0; c < 2; ++c) {
      ChildMap m{Vec(1), Mat(1, 1)};
      m.v0(0) = 0.5 * c;
      m.B(0, 0) = 0.5;
      ch.push_back(m);
    }
    return ch;
  }
  auto mk = [](double x0, double y0, double x1, double y1, double x2, double y2) {
    ChildMap m{Vec(2), Mat(2, 2)};
    m.v0 << x0, y0;
    m.B.col(0) << x1 - x0, y1 - y0;
    m.B.col(1) << x2 - x0, y2 - y0;
    return m;
  };
  ch.push_back(mk(0, 0, 0.5, 0, 0, 0.5));
  ch.push_back(mk(0.5, 0, 1, 0, 0.5, 0.5));
  ch.push_back(mk(0, 0.5, 0.5, 0.5, 0, 1));
  ch.push_back(mk(0.5, 0, 0.5, 0.5, 0, 0.5));  // central, still positively oriented
  return ch;
}

// Which parent face (if any) carries the segment [P0, P1]; returns face id or
// -1, and the parent-face parameters of the endpoints.
inline int on_parent_face(int dim, const Vec& P0, const Vec& P1, double& t0, double& t1) {
  const double tol = 1e-12;
  if (dim == 1) {
    if (std::abs(P0(0)) < tol) { t0 = t1 = 0.0; return 0; }
    if (std::abs(P0(0) - 1.0) < tol) { t0 = t1 = 0.0; return 1; }
    return -1;
  }
  if (std::abs(P0(1)) < tol && std::abs(P1(1)) < tol) {
    t0 = P0(0); t1 = P1(0);
    return 0;
  }
  if (std::abs(P0(0) + P0(1) - 1.0) < tol && std::abs(P1(0) + P1(1) - 1.0) < tol) {
    t0 = P0(1); t1 = P1(1);
    return 1;
  }
  if (std::abs(P0(0)) < tol && std::abs(P1(0)) < tol) {
    t0 = 1.0 - P0(1); t1 = 1.0 - P1(1);
    return 2;
  }
  return -1;
}

}  // namespace detail

template <class Law>
inline Vec Discretization<Law>::enriched_residual(const MeshDofs& dofs, const Vec& u,
                                                  EnrichMode mode) const {
  const int d = D, p = mesh->p, npp = np(), ne = mesh->n_elems();
  const Basis& geo = tbl.basis;  // trial and geometry basis (order p)

  // per-(elem,face) adjacency for sub-face fluxes
  struct Adj {
    int type = -1;  // 0 interior, 1 boundary
    int eO = -1, fO = -1, tag = -1;
  };
  std::vector<Adj> adj(ne * geo.n_faces());
  for (const auto& fc : ws.interior) {
    adj[fc.eL * geo.n_faces() + fc.fL] = {0, fc.eR, fc.fR, -1};
    adj[fc.eR * geo.n_faces() + fc.fR] = {0, fc.eL, fc.fL, -1};
  }
  for (const auto& bf : ws.boundary) adj[bf.elem * geo.n_faces() + bf.face] = {1, -1, -1, bf.tag};

  // trial state, geometry, and physical state at a parent point of an element
  std::vector<double> phiw(npp), dphiw(npp * d);
  auto trial_u = [&](int e, const double* xi, double out[NC]) {
    geo.eval(xi, phiw.data());
    for (int c = 0; c < NC; ++c) {
      double v = 0.0;
      for (int i = 0; i < npp; ++i) v += phiw[i] * u(uidx(e, npp, NC, i, c));
      out[c] = v;
    }
  };

  const auto eval_geom = [&](int e, const double* xi) { return map_eval(*mesh, dofs, e, xi, geo); };

  // numerical/boundary/consistent flux at a face point given the scaled normal
  auto sub_flux = [&](int e, const double* xi, const Adj* a, const double* xi_nbr,
                      const double sv[2], double out[NC]) {
    double uI[NC];
    trial_u(e, xi, uI);
    const MappingEval gI = eval_geom(e, xi);
    if (!(gI.g > 0.0)) throw invalid_geometry("enriched_residual: inverted element");
    double UI[NC];
    for (int c = 0; c < NC; ++c) UI[c] = uI[c] / gI.g;
    double sigma = 1.0, nh[2];
    if (d == 2) {
      sigma = std::sqrt(sv[0] * sv[0] + sv[1] * sv[1]);
      nh[0] = sv[0] / sigma;
      nh[1] = sv[1] / sigma;
    } else {
      nh[0] = sv[0];
    }
    if (a == nullptr) {
      // face interior to the parent element: trial state is single-valued, so
      // the consistent physical flux against the physical scaled normal applies
      double Fp[NC * 2];
      law.flux(UI, Fp);
      for (int c = 0; c < NC; ++c) {
        double acc = 0.0;
        for (int b = 0; b < d; ++b) acc += Fp[c * d + b] * (d == 2 ? nh[b] : nh[0]);
        out[c] = acc * sigma;
      }
      return;
    }
    if (a->type == 1) {
      double xp[2] = {gI.x(0), d == 2 ? gI.x(1) : 0.0};
      double fs[NC];
      law.bflux(a->tag, xp, nh, UI, fs);
      for (int c = 0; c < NC; ++c) out[c] = fs[c] * sigma;
      return;
    }
    double uO[NC];
    trial_u(a->eO, xi_nbr, uO);
    const MappingEval gO = eval_geom(a->eO, xi_nbr);
    if (!(gO.g > 0.0)) throw invalid_geometry("enriched_residual: inverted neighbor");
    double UO[NC];
    for (int c = 0; c < NC; ++c) UO[c] = uO[c] / gO.g;
    double fs[NC];
    law.numflux(UI, UO, nh, fs);
    for (int c = 0; c < NC; ++c) out[c] = fs[c] * sigma;
  };

  const QuadRule vrule = volume_rule(d, 3 * p + 4);
  const QuadRule frule = d == 1 ? QuadRule{} : gauss_legendre_for_degree(3 * p + 4);

  if (mode == EnrichMode::p_refine) {
    const Basis test(d, p + 1);
    const int npt = test.np;
    Vec r = Vec::Zero(ne * npt * NC);
    std::vector<double> phit(npt), dphit(npt * d);
    auto row = [&](int e, int i, int c) { return (e * npt + i) * NC + c; };

    for (int e = 0; e < ne; ++e) {
      for (int q = 0; q < vrule.size(); ++q) {
        const double* xi = vrule.pts.row(q).data();
        const MappingEval me = eval_geom(e, xi);
        if (!(me.g > 0.0)) throw invalid_geometry("enriched_residual: inverted element");
        double uq[NC];
        trial_u(e, xi, uq);
        double Gf[4] = {me.G(0, 0), d == 2 ? me.G(0, 1) : 0.0,
                        d == 2 ? me.G(1, 0) : 0.0, d == 2 ? me.G(1, 1) : 0.0};
        double F[NC * 2];
        transformed_flux(law, uq, Gf, me.g, F);
        double gs[NC] = {0};
        if (law.has_source()) {
          double U[NC], s[NC];
          for (int c = 0; c < NC; ++c) U[c] = uq[c] / me.g;
          double xp[2] = {me.x(0), d == 2 ? me.x(1) : 0.0};
          law.source(xp, U, s);
          for (int c = 0; c < NC; ++c) gs[c] = s[c] * me.g;
        }
        test.eval(xi, phit.data());
        test.eval_grad(xi, dphit.data());
        const double wj = vrule.wts(q) * me.jref;
        for (int i = 0; i < npt; ++i) {
          // reference gradient of the test function
          double gX[2] = {0, 0};
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) gX[a] += dphit[i * d + b] * me.dxi_dX(b, a);
          for (int c = 0; c < NC; ++c) {
            double integ = gs[c] * phit[i];
            for (int b = 0; b < d; ++b) integ += F[c * d + b] * gX[b];
            r(row(e, i, c)) -= wj * integ;
          }
        }
      }
      // element faces: numerical flux against neighbor/boundary tested with
      // the enriched trace
      for (int f = 0; f < geo.n_faces(); ++f) {
        const Adj& a = adj[e * geo.n_faces() + f];
        const int nqf = d == 1 ? 1 : frule.size();
        for (int q = 0; q < nqf; ++q) {
          const double tau = d == 1 ? 0.0 : frule.pts(q, 0);
          double xi[2], xin[2] = {0, 0};
          geo.face_point(f, tau, xi);
          double sv[2];
          if (d == 1) {
            geo.face_normal_scaled(f, sv);
          } else {
            // physical tangent of the face restriction
            geo.eval_grad(xi, dphiw.data());
            const MappingEval me = eval_geom(e, xi);
            double dir[2];
            const double v0[3][2] = {{0, 0}, {1, 0}, {0, 1}};
            const double v1[3][2] = {{1, 0}, {0, 1}, {0, 0}};
            dir[0] = v1[f][0] - v0[f][0];
            dir[1] = v1[f][1] - v0[f][1];
            Mat dx_dxi = me.G * me.dxi_dX.inverse();
            const double tx = dx_dxi(0, 0) * dir[0] + dx_dxi(0, 1) * dir[1];
            const double ty = dx_dxi(1, 0) * dir[0] + dx_dxi(1, 1) * dir[1];
            sv[0] = ty;
            sv[1] = -tx;
          }
          if (a.type == 0) geo.face_point(a.fO, d == 1 ? 0.0 : 1.0 - tau, xin);
          double fs[NC];
          sub_flux(e, xi, &a, xin, sv, fs);
          test.eval(xi, phit.data());
          const double w = d == 1 ? 1.0 : frule.wts(q);
          for (int i = 0; i < npt; ++i)
            for (int c = 0; c < NC; ++c) r(row(e, i, c)) += w * phit[i] * fs[c];
        }
      }
    }
    return r;
  }

  // h_refine: order-p test functions on each child
  const auto children = detail::child_maps(d);
  const int nch = static_cast<int>(children.size());
  Vec r = Vec::Zero(ne * nch * npp * NC);
  auto row = [&](int e, int ch, int i, int c) { return ((e * nch + ch) * npp + i) * NC + c; };
  const QuadRule crule = volume_rule(d, 3 * p + 4);
  std::vector<double> phic(npp), dphic(npp * d);

  for (int e = 0; e < ne; ++e)
    for (int ch = 0; ch < nch; ++ch) {
      const auto& cm = children[ch];
      const Mat Binv = cm.B.inverse();
      const double detB = std::abs(cm.B.determinant());
      // volume
      for (int q = 0; q < crule.size(); ++q) {
        Vec zeta = crule.pts.row(q).transpose();
        Vec xi = cm.v0 + cm.B * zeta;
        const MappingEval me = eval_geom(e, xi.data());
        if (!(me.g > 0.0)) throw invalid_geometry("enriched_residual: inverted element");
        double uq[NC];
        trial_u(e, xi.data(), uq);
        double Gf[4] = {me.G(0, 0), d == 2 ? me.G(0, 1) : 0.0,
                        d == 2 ? me.G(1, 0) : 0.0, d == 2 ? me.G(1, 1) : 0.0};
        double F[NC * 2];
        transformed_flux(law, uq, Gf, me.g, F);
        double gs[NC] = {0};
        if (law.has_source()) {
          double U[NC], s[NC];
          for (int c = 0; c < NC; ++c) U[c] = uq[c] / me.g;
          double xp[2] = {me.x(0), d == 2 ? me.x(1) : 0.0};
          law.source(xp, U, s);
          for (int c = 0; c < NC; ++c) gs[c] = s[c] * me.g;
        }
        geo.eval(zeta.data(), phic.data());
        geo.eval_grad(zeta.data(), dphic.data());
        const double wj = crule.wts(q) * detB * me.jref;
        for (int i = 0; i < npp; ++i) {
          double gX[2] = {0, 0};
          for (int a = 0; a < d; ++a) {
            double gz = 0.0;  // (grad_zeta phi Binv)_a then to X
            for (int b = 0; b < d; ++b) gz += dphic[i * d + b] * Binv(b, a);
            gX[a] = gz;
          }
          double gXX[2] = {0, 0};
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) gXX[a] += gX[b] * me.dxi_dX(b, a);
          for (int c = 0; c < NC; ++c) {
            double integ = gs[c] * phic[i];
            for (int b = 0; b < d; ++b) integ += F[c * d + b] * gXX[b];
            r(row(e, ch, i, c)) -= wj * integ;
          }
        }
      }
      // child faces
      const int ncf = d == 1 ? 2 : 3;
      for (int cf = 0; cf < ncf; ++cf) {
        Vec P0(d), P1(d);
        if (d == 1) {
          P0(0) = cf == 0 ? cm.v0(0) : cm.v0(0) + cm.B(0, 0);
          P1 = P0;
        } else {
          const double cv0[3][2] = {{0, 0}, {1, 0}, {0, 1}};
          const double cv1[3][2] = {{1, 0}, {0, 1}, {0, 0}};
          P0 = cm.v0 + cm.B * Eigen::Vector2d(cv0[cf][0], cv0[cf][1]);
          P1 = cm.v0 + cm.B * Eigen::Vector2d(cv1[cf][0], cv1[cf][1]);
        }
        double tp0, tp1;
        const int pf = detail::on_parent_face(d, P0, P1, tp0, tp1);
        const Adj* a = pf >= 0 ? &adj[e * geo.n_faces() + pf] : nullptr;
        const int nqf = d == 1 ? 1 : frule.size();
        for (int q = 0; q < nqf; ++q) {
          const double tau = d == 1 ? 0.0 : frule.pts(q, 0);
          Vec xi = d == 1 ? P0 : Vec(P0 + tau * (P1 - P0));
          double sv[2];
          if (d == 1) {
            sv[0] = cf == 0 ? -1.0 : 1.0;
          } else {
            const MappingEval me = eval_geom(e, xi.data());
            Mat dx_dxi = me.G * me.dxi_dX.inverse();
            Vec dir = P1 - P0;
            const double tx = dx_dxi(0, 0) * dir(0) + dx_dxi(0, 1) * dir(1);
            const double ty = dx_dxi(1, 0) * dir(0) + dx_dxi(1, 1) * dir(1);
            sv[0] = ty;
            sv[1] = -tx;
          }
          double xin[2] = {0, 0};
          if (a && a->type == 0) {
            const double tpar = d == 1 ? 0.0 : tp0 + tau * (tp1 - tp0);
            geo.face_point(a->fO, d == 1 ? 0.0 : 1.0 - tpar, xin);
          }
          double fs[NC];
          sub_flux(e, xi.data(), a, xin, sv, fs);
          // child-local test trace
          double zf[2];
          if (d == 1) {
            zf[0] = cf == 0 ? 0.0 : 1.0;
          } else {
            const double cv0[3][2] = {{0, 0}, {1, 0}, {0, 1}};
            const double cv1[3][2] = {{1, 0}, {0, 1}, {0, 0}};
            zf[0] = cv0[cf][0] + tau * (cv1[cf][0] - cv0[cf][0]);
            zf[1] = cv0[cf][1] + tau * (cv1[cf][1] - cv0[cf][1]);
          }
          geo.eval(zf, phic.data());
          const double w = d == 1 ? 1.0 : frule.wts(q);
          for (int i = 0; i < npp; ++i)
            for (int c = 0; c < NC; ++c) r(row(e, ch, i, c)) += w * phic[i] * fs[c];
        }
      }
    }
  return r;
}

}  // namespace dgtrack
