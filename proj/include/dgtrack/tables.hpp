#pragma once

#include <vector>

#include "dgtrack/basis.hpp"
#include "dgtrack/common.hpp"
#include "dgtrack/quadrature.hpp"

namespace dgtrack {

// Precomputed basis/quadrature evaluation tables on the parent element.
// Face tables are indexed by local face; in 1d a "face rule" is the single
// endpoint with unit weight.
struct Tables {
  Basis basis;
  QuadRule vol;
  Mat phi_vol;                 // nq x np
  std::vector<Mat> dphi_vol;   // [q]: np x dim

  QuadRule face;                            // points in [0,1] (2d); one dummy point (1d)
  std::vector<Mat> phi_face;                // [f]: nqf x np traces
  std::vector<std::vector<Mat>> dphi_face;  // [f][q]: np x dim
  Mat psi_face, dpsi_face;                  // face-restricted 1d geometry basis (2d)

  int np() const { return basis.np; }
  int dim() const { return basis.dim; }
};

inline Tables make_tables(int dim, int p, int vol_degree, int face_degree) {
  Tables t;
  t.basis = Basis(dim, p);
  const int np = t.basis.np;
  t.vol = volume_rule(dim, vol_degree);
  const int nq = t.vol.size();
  t.phi_vol.resize(nq, np);
  t.dphi_vol.assign(nq, Mat(np, dim));
  std::vector<double> phi(np), dphi(np * dim);
  for (int q = 0; q < nq; ++q) {
    t.basis.eval(t.vol.pts.row(q).data(), phi.data());
    t.basis.eval_grad(t.vol.pts.row(q).data(), dphi.data());
    for (int i = 0; i < np; ++i) {
      t.phi_vol(q, i) = phi[i];
      for (int a = 0; a < dim; ++a) t.dphi_vol[q](i, a) = dphi[i * dim + a];
    }
  }

  if (dim == 1) {
    t.face.pts.resize(1, 1);
    t.face.pts(0, 0) = 0.0;
    t.face.wts.resize(1);
    t.face.wts(0) = 1.0;
  } else {
    t.face = gauss_legendre_for_degree(face_degree);
  }
  const int nqf = t.face.size();
  const int nf = t.basis.n_faces();
  t.phi_face.assign(nf, Mat(nqf, np));
  t.dphi_face.assign(nf, std::vector<Mat>(nqf, Mat(np, dim)));
  for (int f = 0; f < nf; ++f)
    for (int q = 0; q < nqf; ++q) {
      double xi[2];
      t.basis.face_point(f, t.face.pts(q, 0), xi);
      t.basis.eval(xi, phi.data());
      t.basis.eval_grad(xi, dphi.data());
      for (int i = 0; i < np; ++i) {
        t.phi_face[f](q, i) = phi[i];
        for (int a = 0; a < dim; ++a) t.dphi_face[f][q](i, a) = dphi[i * dim + a];
      }
    }
  if (dim == 2) {
    t.psi_face.resize(nqf, p + 1);
    t.dpsi_face.resize(nqf, p + 1);
    std::vector<double> psi(p + 1), dpsi(p + 1);
    for (int q = 0; q < nqf; ++q) {
      lagrange1d_eval(p, t.face.pts(q, 0), psi.data());
      lagrange1d_grad(p, t.face.pts(q, 0), dpsi.data());
      for (int k = 0; k <= p; ++k) {
        t.psi_face(q, k) = psi[k];
        t.dpsi_face(q, k) = dpsi[k];
      }
    }
  }
  return t;
}

}  // namespace dgtrack
