#pragma once

#include <array>
#include <map>
#include <vector>

#include "dgtrack/common.hpp"
#include "dgtrack/dual.hpp"
#include "dgtrack/mesh.hpp"
#include "dgtrack/tables.hpp"

namespace dgtrack {

// State vector layout: u[(e*np + i)*NC + c], element-major nodal coefficients
// of the transformed state u = g U.
inline int uidx(int e, int np, int nc, int i, int c) { return (e * np + i) * nc + c; }
inline int xidx(int n, int dim, int a) { return n * dim + a; }

// ---------------------------------------------------------------------------
// Face topology
// ---------------------------------------------------------------------------
struct InteriorFace {
  int eL, fL, eR, fR;
};
struct BoundaryFaceInfo {
  int elem, face, tag;
};

struct Workspace {
  std::vector<InteriorFace> interior;
  std::vector<BoundaryFaceInfo> boundary;
};

// Pair interior faces by shared vertex keys; verify high-order face nodes are
// co-located with reversed orientation (2d) so traces line up point-to-point.
template <class TagResolver>
inline Workspace build_workspace(const ReferenceMesh& mesh, const Basis& basis,
                                 TagResolver&& resolve_tag) {
  Workspace ws;
  std::map<std::pair<int, int>, std::pair<int, int>> open;  // key -> (elem, face)
  const int nf = basis.n_faces();
  std::vector<std::vector<int>> fnodes(nf);
  for (int f = 0; f < nf; ++f) fnodes[f] = basis.face_nodes(f);
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (int f = 0; f < nf; ++f) {
      const int v0 = mesh.elems(e, fnodes[f].front());
      const int v1 = mesh.elems(e, fnodes[f].back());
      const std::pair<int, int> key{std::min(v0, v1), std::max(v0, v1)};
      auto it = open.find(key);
      if (it == open.end()) {
        open.emplace(key, std::make_pair(e, f));
        continue;
      }
      const auto [eL, fL] = it->second;
      open.erase(it);
      const auto& ln = fnodes[fL];
      const int m = static_cast<int>(ln.size());
      const int rev = mesh.dim == 1 ? 0 : 1;
      for (int k = 0; k < m; ++k) {
        const int kR = rev ? m - 1 - k : k;
        if (mesh.elems(eL, ln[k]) != mesh.elems(e, fnodes[f][kR]))
          throw invalid_geometry("build_workspace: face nodes not co-located");
      }
      ws.interior.push_back({eL, fL, e, f});
    }
  for (const auto& bf : mesh.boundary) {
    const int v0 = mesh.elems(bf.elem, fnodes[bf.local_face].front());
    const int v1 = mesh.elems(bf.elem, fnodes[bf.local_face].back());
    const std::pair<int, int> key{std::min(v0, v1), std::max(v0, v1)};
    auto it = open.find(key);
    if (it == open.end()) throw invalid_geometry("build_workspace: boundary face not free");
    open.erase(it);
    ws.boundary.push_back({bf.elem, bf.local_face, resolve_tag(bf.tag)});
  }
  if (!open.empty()) throw invalid_geometry("build_workspace: untagged boundary faces remain");
  return ws;
}

// ---------------------------------------------------------------------------
// Small fixed-size helpers templated on the scalar
// ---------------------------------------------------------------------------
template <class T, int D>
inline T det_dxd(const T M[D * D]) {
  if constexpr (D == 1) return M[0];
  else return M[0] * M[3] - M[1] * M[2];
}

// adj(G) = det(G) inv(G)
template <class T, int D>
inline void adjugate(const T M[D * D], T adj[D * D]) {
  if constexpr (D == 1) {
    adj[0] = T(1.0);
  } else {
    adj[0] = M[3];
    adj[1] = -M[1];
    adj[2] = -M[2];
    adj[3] = M[0];
  }
}

// Transformed flux F = g Fphys(u/g) G^{-T}, laid out F[c*D + m].
template <class Law, class T>
inline void transformed_flux(const Law& law, const T u[Law::NC], const T G[], const T& g,
                             T F[]) {
  constexpr int NC = Law::NC, D = Law::DIM;
  if (!(value_of(g) > 0.0)) throw invalid_geometry("transformed_flux: g <= 0");
  T U[NC];
  for (int c = 0; c < NC; ++c) U[c] = u[c] / g;
  T Fp[NC * D];
  law.flux(U, Fp);
  T adj[D * D];
  adjugate<T, D>(G, adj);
  for (int c = 0; c < NC; ++c)
    for (int m = 0; m < D; ++m) {
      T acc(0.0);
      for (int b = 0; b < D; ++b) acc += Fp[c * D + b] * adj[m * D + b];
      F[c * D + m] = acc;
    }
}

// ---------------------------------------------------------------------------
// Per-element geometry at table points
// ---------------------------------------------------------------------------
struct ElemGeom {
  std::vector<Mat> gradX;  // [q]: np x d reference gradients of the basis
  Vec jref;                // [q]
  std::vector<Mat> G;      // [q]: d x d deformation gradient
  Vec g;                   // [q]
  RowMat xq;               // nq x d physical points
};

inline ElemGeom elem_geom(const ReferenceMesh& mesh, const MeshDofs& dofs, int e,
                          const Tables& tbl) {
  const int d = mesh.dim, np = tbl.np(), nq = tbl.vol.size();
  ElemGeom eg;
  eg.gradX.assign(nq, Mat(np, d));
  eg.jref.resize(nq);
  eg.G.assign(nq, Mat(d, d));
  eg.g.resize(nq);
  eg.xq.resize(nq, d);
  for (int q = 0; q < nq; ++q) {
    Mat dX = Mat::Zero(d, d), dx = Mat::Zero(d, d);
    Vec x = Vec::Zero(d);
    for (int i = 0; i < np; ++i) {
      const int n = mesh.elems(e, i);
      for (int a = 0; a < d; ++a) {
        x(a) += dofs.coords(n, a) * tbl.phi_vol(q, i);
        for (int b = 0; b < d; ++b) {
          dX(a, b) += mesh.nodes(n, a) * tbl.dphi_vol[q](i, b);
          dx(a, b) += dofs.coords(n, a) * tbl.dphi_vol[q](i, b);
        }
      }
    }
    eg.jref(q) = detail::det_small(dX);
    const Mat dxi_dX = detail::inv_small(dX);
    eg.gradX[q] = tbl.dphi_vol[q] * dxi_dX;
    eg.G[q] = dx * dxi_dX;
    eg.g(q) = detail::det_small(eg.G[q]);
    eg.xq.row(q) = x.transpose();
  }
  return eg;
}

// Geometry of one element side evaluated at one face quadrature point.
struct FaceSideGeom {
  Mat gradX;   // np x d reference basis gradients
  Mat G;       // d x d
  double g;
  Vec x;       // physical point
  Mat dg_dx;   // np x d: d(det G)/d(node j, comp a)
};

inline FaceSideGeom face_side_geom(const ReferenceMesh& mesh, const MeshDofs& dofs, int e, int f,
                                   int q, const Tables& tbl) {
  const int d = mesh.dim, np = tbl.np();
  const Mat& dphi = tbl.dphi_face[f][q];
  Mat dX = Mat::Zero(d, d), dx = Mat::Zero(d, d);
  Vec x = Vec::Zero(d);
  for (int i = 0; i < np; ++i) {
    const int n = mesh.elems(e, i);
    for (int a = 0; a < d; ++a) {
      x(a) += dofs.coords(n, a) * tbl.phi_face[f](q, i);
      for (int b = 0; b < d; ++b) {
        dX(a, b) += mesh.nodes(n, a) * dphi(i, b);
        dx(a, b) += dofs.coords(n, a) * dphi(i, b);
      }
    }
  }
  FaceSideGeom fg;
  const Mat dxi_dX = detail::inv_small(dX);
  fg.gradX = dphi * dxi_dX;
  fg.G = dx * dxi_dX;
  fg.g = detail::det_small(fg.G);
  fg.x = x;
  // dg/dx_{j,a} = g sum_b (G^{-1})_{b a} gradX(j, b)
  fg.dg_dx = fg.g * fg.gradX * detail::inv_small(fg.G);
  return fg;
}

enum class EnrichMode { p_refine, h_refine };

// ---------------------------------------------------------------------------
// Nodal DG discretization of one conservation law on a fixed reference mesh.
// Residual convention: r_i = sum_faces int psi_i F* dA - int F : grad psi_i dV
//                          - int psi_i s g dV, so r(u, x) = 0 is the scheme.
// ---------------------------------------------------------------------------
template <class Law>
struct Discretization {
  static constexpr int NC = Law::NC;
  static constexpr int D = Law::DIM;

  Law law;
  const ReferenceMesh* mesh = nullptr;
  Tables tbl;
  Workspace ws;
  std::vector<std::vector<int>> fnodes;

  Discretization(const Law& law_, const ReferenceMesh& mesh_, int quad_degree = -1)
      : law(law_), mesh(&mesh_) {
    const int p = mesh_.p;
    const int deg = quad_degree > 0 ? quad_degree : 3 * p + 1;
    tbl = make_tables(mesh_.dim, p, deg, deg);
    ws = build_workspace(mesh_, tbl.basis,
                         [this](const std::string& t) { return law.resolve_tag(t); });
    fnodes.resize(tbl.basis.n_faces());
    for (int f = 0; f < tbl.basis.n_faces(); ++f) fnodes[f] = tbl.basis.face_nodes(f);
  }

  int np() const { return tbl.np(); }
  int nu() const { return mesh->n_elems() * np() * NC; }
  int nx() const { return mesh->n_nodes() * D; }

  Vec residual(const MeshDofs& dofs, const Vec& u) const {
    Vec r;
    assemble(dofs, u, &r, nullptr, nullptr);
    return r;
  }

  // Assemble residual and requested Jacobians in one pass. Pointwise flux and
  // source derivatives come from dual numbers; the chain to nodal unknowns is
  // explicit. Loops run in a fixed order so results are bit-reproducible.
  void assemble(const MeshDofs& dofs, const Vec& u, Vec* r_out, SpMat* Ju_out,
                SpMat* Jx_out) const {
    if (!u.allFinite()) throw physics_error("assemble: non-finite state");
    const int ne = mesh->n_elems(), npp = np();
    const int N = nu();
    Vec r = Vec::Zero(N);
    std::vector<Triplet> tu, tx;
    const bool want_u = Ju_out != nullptr, want_x = Jx_out != nullptr;

    // volume terms
    constexpr int NSV = NC + D * D + D;
    using TV = Dual<NSV>;
    for (int e = 0; e < ne; ++e) {
      const ElemGeom eg = elem_geom(*mesh, dofs, e, tbl);
      for (int q = 0; q < tbl.vol.size(); ++q) {
        if (!(eg.g(q) > 0.0)) throw invalid_geometry("assemble: inverted element");
        TV uq[NC], Gq[D * D], xq[D];
        for (int c = 0; c < NC; ++c) {
          double val = 0.0;
          for (int i = 0; i < npp; ++i) val += tbl.phi_vol(q, i) * u(uidx(e, npp, NC, i, c));
          uq[c] = TV::seed(val, c);
        }
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) Gq[a * D + b] = TV::seed(eg.G[q](a, b), NC + a * D + b);
        for (int a = 0; a < D; ++a) xq[a] = TV::seed(eg.xq(q, a), NC + D * D + a);

        TV g = det_dxd<TV, D>(Gq);
        TV F[NC * D];
        transformed_flux(law, uq, Gq, g, F);
        TV gs[NC];
        if (law.has_source()) {
          TV U[NC], s[NC];
          for (int c = 0; c < NC; ++c) U[c] = uq[c] / g;
          law.source(xq, U, s);
          for (int c = 0; c < NC; ++c) gs[c] = s[c] * g;
        } else {
          for (int c = 0; c < NC; ++c) gs[c] = TV(0.0);
        }

        const double wj = tbl.vol.wts(q) * eg.jref(q);
        for (int i = 0; i < npp; ++i)
          for (int c = 0; c < NC; ++c) {
            TV integ(0.0);
            for (int b = 0; b < D; ++b) integ += F[c * D + b] * TV(eg.gradX[q](i, b));
            integ += gs[c] * TV(tbl.phi_vol(q, i));
            const int row = uidx(e, npp, NC, i, c);
            r(row) -= wj * integ.v;
            if (want_u) {
              for (int j = 0; j < npp; ++j)
                for (int cc = 0; cc < NC; ++cc) {
                  const double der = integ.d[cc] * tbl.phi_vol(q, j);
                  if (der != 0.0) tu.emplace_back(row, uidx(e, npp, NC, j, cc), -wj * der);
                }
            }
            if (want_x) {
              for (int j = 0; j < npp; ++j) {
                const int n = mesh->elems(e, j);
                for (int a = 0; a < D; ++a) {
                  double der = integ.d[NC + D * D + a] * tbl.phi_vol(q, j);
                  for (int b = 0; b < D; ++b) der += integ.d[NC + a * D + b] * eg.gradX[q](j, b);
                  if (der != 0.0) tx.emplace_back(row, xidx(n, D, a), -wj * der);
                }
              }
            }
          }
      }
    }

    // interior faces
    constexpr int NSF = 2 * NC + 2 + D;
    using TF = Dual<NSF>;
    const int nqf = tbl.face.size();
    for (const auto& fc : ws.interior) {
      const auto& lnL = fnodes[fc.fL];
      const auto& lnR = fnodes[fc.fR];
      const int m = static_cast<int>(lnL.size());
      for (int q = 0; q < nqf; ++q) {
        const int qR = (D == 1) ? 0 : nqf - 1 - q;  // reversed traversal on the right
        const FaceSideGeom gL = face_side_geom(*mesh, dofs, fc.eL, fc.fL, q, tbl);
        const FaceSideGeom gR = face_side_geom(*mesh, dofs, fc.eR, fc.fR, qR, tbl);
        if (!(gL.g > 0.0) || !(gR.g > 0.0))
          throw invalid_geometry("assemble: inverted element at face");
        TF uL[NC], uR[NC];
        for (int c = 0; c < NC; ++c) {
          double vl = 0.0, vr = 0.0;
          for (int k : lnL) vl += tbl.phi_face[fc.fL](q, k) * u(uidx(fc.eL, npp, NC, k, c));
          for (int k : lnR) vr += tbl.phi_face[fc.fR](qR, k) * u(uidx(fc.eR, npp, NC, k, c));
          uL[c] = TF::seed(vl, c);
          uR[c] = TF::seed(vr, NC + c);
        }
        const TF gl = TF::seed(gL.g, 2 * NC);
        const TF gr = TF::seed(gR.g, 2 * NC + 1);
        double svv[D];
        face_nanson(dofs, fc.eL, fc.fL, q, svv);
        TF sv[D];
        for (int a = 0; a < D; ++a) sv[a] = TF::seed(svv[a], 2 * NC + 2 + a);

        TF Fs[NC];
        face_flux(uL, uR, gl, gr, sv, Fs);

        const double w = tbl.face.wts(q);
        for (int c = 0; c < NC; ++c) {
          for (int k : lnL)
            r(uidx(fc.eL, npp, NC, k, c)) += w * tbl.phi_face[fc.fL](q, k) * Fs[c].v;
          for (int k : lnR)
            r(uidx(fc.eR, npp, NC, k, c)) -= w * tbl.phi_face[fc.fR](qR, k) * Fs[c].v;
          if (!want_u && !want_x) continue;
          // rows on both sides get the same flux derivative, opposite signs
          for (int side = 0; side < 2; ++side) {
            const int eRow = side == 0 ? fc.eL : fc.eR;
            const auto& lnRow = side == 0 ? lnL : lnR;
            const int fRow = side == 0 ? fc.fL : fc.fR;
            const int qRow = side == 0 ? q : qR;
            const double sgn = side == 0 ? 1.0 : -1.0;
            for (int k : lnRow) {
              const double coef = sgn * w * tbl.phi_face[fRow](qRow, k);
              if (coef == 0.0) continue;
              const int row = uidx(eRow, npp, NC, k, c);
              if (want_u) {
                for (int kk = 0; kk < m; ++kk) {
                  for (int cc = 0; cc < NC; ++cc) {
                    const double dl = Fs[c].d[cc] * tbl.phi_face[fc.fL](q, lnL[kk]);
                    if (dl != 0.0)
                      tu.emplace_back(row, uidx(fc.eL, npp, NC, lnL[kk], cc), coef * dl);
                    const double dr = Fs[c].d[NC + cc] * tbl.phi_face[fc.fR](qR, lnR[kk]);
                    if (dr != 0.0)
                      tu.emplace_back(row, uidx(fc.eR, npp, NC, lnR[kk], cc), coef * dr);
                  }
                }
              }
              if (want_x) {
                for (int j = 0; j < npp; ++j) {
                  for (int a = 0; a < D; ++a) {
                    const double dL = Fs[c].d[2 * NC] * gL.dg_dx(j, a);
                    if (dL != 0.0)
                      tx.emplace_back(row, xidx(mesh->elems(fc.eL, j), D, a), coef * dL);
                    const double dR = Fs[c].d[2 * NC + 1] * gR.dg_dx(j, a);
                    if (dR != 0.0)
                      tx.emplace_back(row, xidx(mesh->elems(fc.eR, j), D, a), coef * dR);
                  }
                }
                if constexpr (D == 2) {
                  // s = (t_y, -t_x), t from the left face restriction
                  for (int kk = 0; kk < m; ++kk) {
                    const int n = mesh->elems(fc.eL, lnL[kk]);
                    const double dpsi = tbl.dpsi_face(q, kk);
                    const double der_x = -Fs[c].d[2 * NC + 2 + 1] * dpsi;
                    const double der_y = Fs[c].d[2 * NC + 2 + 0] * dpsi;
                    if (der_x != 0.0) tx.emplace_back(row, xidx(n, 2, 0), coef * der_x);
                    if (der_y != 0.0) tx.emplace_back(row, xidx(n, 2, 1), coef * der_y);
                  }
                }
              }
            }
          }
        }
      }
    }

    // boundary faces
    constexpr int NSB = NC + 1 + D;
    using TB = Dual<NSB>;
    for (const auto& bf : ws.boundary) {
      const auto& ln = fnodes[bf.face];
      const int m = static_cast<int>(ln.size());
      for (int q = 0; q < nqf; ++q) {
        const FaceSideGeom gI = face_side_geom(*mesh, dofs, bf.elem, bf.face, q, tbl);
        if (!(gI.g > 0.0)) throw invalid_geometry("assemble: inverted element at boundary");
        TB ui[NC];
        for (int c = 0; c < NC; ++c) {
          double v = 0.0;
          for (int k : ln) v += tbl.phi_face[bf.face](q, k) * u(uidx(bf.elem, npp, NC, k, c));
          ui[c] = TB::seed(v, c);
        }
        const TB gi = TB::seed(gI.g, NC);
        double svv[D];
        face_nanson(dofs, bf.elem, bf.face, q, svv);
        TB sv[D];
        for (int a = 0; a < D; ++a) sv[a] = TB::seed(svv[a], NC + 1 + a);

        TB Fs[NC];
        boundary_face_flux(bf.tag, gI.x, ui, gi, sv, Fs);

        const double w = tbl.face.wts(q);
        for (int c = 0; c < NC; ++c) {
          for (int k : ln) {
            const double coef = w * tbl.phi_face[bf.face](q, k);
            if (coef == 0.0) continue;
            const int row = uidx(bf.elem, npp, NC, k, c);
            r(row) += coef * Fs[c].v;
            if (want_u) {
              for (int kk = 0; kk < m; ++kk)
                for (int cc = 0; cc < NC; ++cc) {
                  const double der = Fs[c].d[cc] * tbl.phi_face[bf.face](q, ln[kk]);
                  if (der != 0.0)
                    tu.emplace_back(row, uidx(bf.elem, npp, NC, ln[kk], cc), coef * der);
                }
            }
            if (want_x) {
              for (int j = 0; j < npp; ++j)
                for (int a = 0; a < D; ++a) {
                  const double der = Fs[c].d[NC] * gI.dg_dx(j, a);
                  if (der != 0.0)
                    tx.emplace_back(row, xidx(mesh->elems(bf.elem, j), D, a), coef * der);
                }
              if constexpr (D == 2) {
                for (int kk = 0; kk < m; ++kk) {
                  const int n = mesh->elems(bf.elem, ln[kk]);
                  const double dpsi = tbl.dpsi_face(q, kk);
                  const double der_x = -Fs[c].d[NC + 1 + 1] * dpsi;
                  const double der_y = Fs[c].d[NC + 1 + 0] * dpsi;
                  if (der_x != 0.0) tx.emplace_back(row, xidx(n, 2, 0), coef * der_x);
                  if (der_y != 0.0) tx.emplace_back(row, xidx(n, 2, 1), coef * der_y);
                }
              }
            }
          }
        }
      }
    }

    if (r_out) *r_out = std::move(r);
    if (Ju_out) {
      Ju_out->resize(N, N);
      Ju_out->setFromTriplets(tu.begin(), tu.end());
    }
    if (Jx_out) {
      Jx_out->resize(N, nx());
      Jx_out->setFromTriplets(tx.begin(), tx.end());
    }
  }

  // Block-diagonal mass matrix of int phi_i phi_j g dV per element/component.
  SpMat mass_matrix(const MeshDofs& dofs) const {
    const int ne = mesh->n_elems(), npp = np();
    std::vector<Triplet> ts;
    for (int e = 0; e < ne; ++e) {
      const Mat M = element_mass_block(dofs, e);
      for (int i = 0; i < npp; ++i)
        for (int j = 0; j < npp; ++j)
          for (int c = 0; c < NC; ++c)
            ts.emplace_back(uidx(e, npp, NC, i, c), uidx(e, npp, NC, j, c), M(i, j));
    }
    SpMat M(nu(), nu());
    M.setFromTriplets(ts.begin(), ts.end());
    return M;
  }

  Mat element_mass_block(const MeshDofs& dofs, int e) const {
    const int npp = np();
    const ElemGeom eg = elem_geom(*mesh, dofs, e, tbl);
    Mat M = Mat::Zero(npp, npp);
    for (int q = 0; q < tbl.vol.size(); ++q) {
      if (!(eg.g(q) > 0.0)) throw invalid_geometry("mass_matrix: inverted element");
      const double w = tbl.vol.wts(q) * eg.jref(q) * eg.g(q);
      for (int i = 0; i < npp; ++i)
        for (int j = 0; j < npp; ++j) M(i, j) += w * tbl.phi_vol(q, i) * tbl.phi_vol(q, j);
    }
    return M;
  }

  // BR1 discretization of the Laplacian smoothing term grad.(nu grad U) as a
  // sparse linear operator: viscous residual = r(u, x) + nu * L(x) * u with
  // the nodal transformed-to-physical scaling folded into L. Used to build
  // initialization states; no x-derivatives provided.
  SpMat viscous_operator(const MeshDofs& dofs) const {
    const int ne = mesh->n_elems(), npp = np();
    const int nsig = ne * npp * NC * D;
    std::vector<Triplet> ta;  // w -> sigma
    std::vector<Triplet> tp;  // sigma -> r (plus direct primal volume term)
    auto sidx = [&](int e, int i, int c, int a) { return ((e * npp + i) * NC + c) * D + a; };

    std::vector<Mat> Minv(ne);
    for (int e = 0; e < ne; ++e) {
      Minv[e] = element_mass_block(dofs, e).inverse();
      const ElemGeom eg = elem_geom(*mesh, dofs, e, tbl);
      Mat S[2];
      for (int a = 0; a < D; ++a) S[a] = Mat::Zero(npp, npp);
      for (int q = 0; q < tbl.vol.size(); ++q) {
        const double w = tbl.vol.wts(q) * eg.jref(q) * eg.g(q);
        const Mat Gi = detail::inv_small(eg.G[q]);
        const Mat gradx = eg.gradX[q] * Gi;  // np x d physical gradients
        for (int a = 0; a < D; ++a)
          for (int i = 0; i < npp; ++i)
            for (int j = 0; j < npp; ++j) S[a](i, j) += w * tbl.phi_vol(q, i) * gradx(j, a);
      }
      for (int a = 0; a < D; ++a) {
        const Mat A = Minv[e] * S[a];
        for (int i = 0; i < npp; ++i)
          for (int j = 0; j < npp; ++j) {
            if (A(i, j) != 0.0)
              for (int c = 0; c < NC; ++c)
                ta.emplace_back(sidx(e, i, c, a), uidx(e, npp, NC, j, c), A(i, j));
            // primal volume: r_i += int (grad phi_i)_a sigma_a dVphys = S[a](j,i) coeff
            if (S[a](j, i) != 0.0)
              for (int c = 0; c < NC; ++c)
                tp.emplace_back(uidx(e, npp, NC, i, c), sidx(e, j, c, a), S[a](j, i));
          }
      }
    }

    const int nqf = tbl.face.size();
    auto face_terms = [&](int eI, int fI, int qI, int eO, int fO, int qO, bool boundary) {
      double sv[D];
      face_nanson(dofs, eI, fI, qI, sv);
      double area = 1.0, nh[D];
      if constexpr (D == 2) {
        area = std::sqrt(sv[0] * sv[0] + sv[1] * sv[1]);
        nh[0] = sv[0] / area;
        nh[1] = sv[1] / area;
      } else {
        nh[0] = sv[0];
      }
      const double w = tbl.face.wts(qI) * area;
      const auto& lnI = fnodes[fI];
      // lift: M_I sigma_a += ({w} - w_I) phi_i n_a over the face
      if (!boundary) {
        const auto& lnO = fnodes[fO];
        for (int i = 0; i < npp; ++i) {
          const double phi_i = tbl.phi_face[fI](qI, i);
          if (phi_i == 0.0) continue;
          for (int a = 0; a < D; ++a)
            for (int ii = 0; ii < npp; ++ii) {
              const double mi = Minv[eI](ii, i);
              if (mi == 0.0) continue;
              for (int k : lnI) {
                const double tr = tbl.phi_face[fI](qI, k);
                if (tr == 0.0) continue;
                for (int c = 0; c < NC; ++c)
                  ta.emplace_back(sidx(eI, ii, c, a), uidx(eI, npp, NC, k, c),
                                  -0.5 * mi * w * phi_i * tr * nh[a]);
              }
              for (int k : lnO) {
                const double tr = tbl.phi_face[fO](qO, k);
                if (tr == 0.0) continue;
                for (int c = 0; c < NC; ++c)
                  ta.emplace_back(sidx(eI, ii, c, a), uidx(eO, npp, NC, k, c),
                                  0.5 * mi * w * phi_i * tr * nh[a]);
              }
            }
        }
      }
      // primal face: r_i -= int phi_i {sigma}.n dA
      const double own = boundary ? 1.0 : 0.5;
      for (int i = 0; i < npp; ++i) {
        const double phi_i = tbl.phi_face[fI](qI, i);
        if (phi_i == 0.0) continue;
        for (int a = 0; a < D; ++a) {
          for (int k : lnI) {
            const double tr = tbl.phi_face[fI](qI, k);
            if (tr == 0.0) continue;
            for (int c = 0; c < NC; ++c)
              tp.emplace_back(uidx(eI, npp, NC, i, c), sidx(eI, k, c, a),
                              -w * phi_i * own * tr * nh[a]);
          }
          if (!boundary) {
            const auto& lnO = fnodes[fO];
            for (int k : lnO) {
              const double tr = tbl.phi_face[fO](qO, k);
              if (tr == 0.0) continue;
              for (int c = 0; c < NC; ++c)
                tp.emplace_back(uidx(eI, npp, NC, i, c), sidx(eO, k, c, a),
                                -w * phi_i * 0.5 * tr * nh[a]);
            }
          }
        }
      }
    };
    for (const auto& fc : ws.interior)
      for (int q = 0; q < nqf; ++q) {
        const int qR = (D == 1) ? 0 : nqf - 1 - q;
        face_terms(fc.eL, fc.fL, q, fc.eR, fc.fR, qR, false);
        face_terms(fc.eR, fc.fR, qR, fc.eL, fc.fL, q, false);
      }
    for (const auto& bf : ws.boundary)
      for (int q = 0; q < nqf; ++q) face_terms(bf.elem, bf.face, q, -1, -1, -1, true);

    SpMat A(nsig, nu()), P(nu(), nsig);
    A.setFromTriplets(ta.begin(), ta.end());
    P.setFromTriplets(tp.begin(), tp.end());
    const SpMat L = P * A;
    // nodal transformed-to-physical scaling w_i = u_i / g(node_i)
    std::vector<Triplet> td;
    for (int e = 0; e < ne; ++e)
      for (int i = 0; i < npp; ++i) {
        const MappingEval me = map_eval(*mesh, dofs, e, tbl.basis.nodes.row(i).data(), tbl.basis);
        for (int c = 0; c < NC; ++c)
          td.emplace_back(uidx(e, npp, NC, i, c), uidx(e, npp, NC, i, c), 1.0 / me.g);
      }
    SpMat Dg(nu(), nu());
    Dg.setFromTriplets(td.begin(), td.end());
    return SpMat(L * Dg);
  }

  Vec enriched_residual(const MeshDofs& dofs, const Vec& u, EnrichMode mode) const;

  // --- shared helpers ------------------------------------------------------

  // Scaled outward normal at a face quad point: +-1 in 1d; in 2d the rotated
  // physical tangent rot(t) = (t_y, -t_x) of the face restriction (so only
  // face-node coordinates enter).
  void face_nanson(const MeshDofs& dofs, int e, int f, int q, double sv[D]) const {
    if constexpr (D == 1) {
      double n[1];
      tbl.basis.face_normal_scaled(f, n);
      sv[0] = n[0];
    } else {
      const auto& fn = fnodes[f];
      double tx = 0.0, ty = 0.0;
      for (size_t k = 0; k < fn.size(); ++k) {
        const int n = mesh->elems(e, fn[k]);
        tx += dofs.coords(n, 0) * tbl.dpsi_face(q, static_cast<int>(k));
        ty += dofs.coords(n, 1) * tbl.dpsi_face(q, static_cast<int>(k));
      }
      sv[0] = ty;
      sv[1] = -tx;
    }
  }

  template <class T>
  void face_flux(const T uL[NC], const T uR[NC], const T& gl, const T& gr, const T sv[D],
                 T out[NC]) const {
    T UL[NC], UR[NC];
    for (int c = 0; c < NC; ++c) {
      UL[c] = uL[c] / gl;
      UR[c] = uR[c] / gr;
    }
    if constexpr (D == 1) {
      law.numflux(UL, UR, sv, out);
    } else {
      const T sigma = sqrt(sv[0] * sv[0] + sv[1] * sv[1]);
      T nh[2] = {sv[0] / sigma, sv[1] / sigma};
      law.numflux(UL, UR, nh, out);
      for (int c = 0; c < NC; ++c) out[c] = out[c] * sigma;
    }
  }

  template <class T>
  void boundary_face_flux(int tag, const Vec& x, const T ui[NC], const T& gi, const T sv[D],
                          T out[NC]) const {
    T UI[NC];
    for (int c = 0; c < NC; ++c) UI[c] = ui[c] / gi;
    T xp[D];
    for (int a = 0; a < D; ++a) xp[a] = T(x(a));
    if constexpr (D == 1) {
      law.bflux(tag, xp, sv, UI, out);
    } else {
      const T sigma = sqrt(sv[0] * sv[0] + sv[1] * sv[1]);
      T nh[2] = {sv[0] / sigma, sv[1] / sigma};
      law.bflux(tag, xp, nh, UI, out);
      for (int c = 0; c < NC; ++c) out[c] = out[c] * sigma;
    }
  }
};

}  // namespace dgtrack

#include "dgtrack/dg_enriched.hpp"
