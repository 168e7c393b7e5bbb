#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "dgtrack/common.hpp"
#include "dgtrack/dual.hpp"

namespace dgtrack {

// --------------------------------------------------------------------------
// 1d Lagrange basis on [0,1], equispaced nodes, product form.
// Templated on the scalar so split-quadrature code can evaluate at dual points.
// --------------------------------------------------------------------------
template <class T>
inline void lagrange1d_eval(int p, const T& x, T* phi) {
  const double h = 1.0 / p;
  for (int i = 0; i <= p; ++i) {
    T v(1.0);
    const double xi = i * h;
    for (int j = 0; j <= p; ++j) {
      if (j == i) continue;
      v = v * ((x - T(j * h)) / T(xi - j * h));
    }
    phi[i] = v;
  }
}

template <class T>
inline void lagrange1d_grad(int p, const T& x, T* dphi) {
  const double h = 1.0 / p;
  for (int i = 0; i <= p; ++i) {
    const double xi = i * h;
    T acc(0.0);
    for (int k = 0; k <= p; ++k) {
      if (k == i) continue;
      T v(1.0 / (xi - k * h));
      for (int j = 0; j <= p; ++j) {
        if (j == i || j == k) continue;
        v = v * ((x - T(j * h)) / T(xi - j * h));
      }
      acc += v;
    }
    dphi[i] = acc;
  }
}

namespace detail {

// Jacobi polynomial P_n^(alpha,beta) and derivative, by recurrence.
inline double jacobi(int n, double alpha, double beta, double x) {
  if (n == 0) return 1.0;
  double p0 = 1.0;
  double p1 = 0.5 * ((alpha + beta + 2.0) * x + (alpha - beta));
  for (int k = 2; k <= n; ++k) {
    const double a1 = 2.0 * k * (k + alpha + beta) * (2.0 * k + alpha + beta - 2.0);
    const double a2 = (2.0 * k + alpha + beta - 1.0) * (alpha * alpha - beta * beta);
    const double a3 = (2.0 * k + alpha + beta - 1.0) * (2.0 * k + alpha + beta) *
                      (2.0 * k + alpha + beta - 2.0);
    const double a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * (2.0 * k + alpha + beta);
    const double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

inline double jacobi_deriv(int n, double alpha, double beta, double x) {
  if (n == 0) return 0.0;
  return 0.5 * (n + alpha + beta + 1.0) * jacobi(n - 1, alpha + 1.0, beta + 1.0, x);
}

}  // namespace detail

// --------------------------------------------------------------------------
// Nodal basis on the parent element: [0,1] (d=1) or the unit right triangle
// {xi,eta >= 0, xi+eta <= 1} (d=2) with equispaced nodes. The triangle basis
// is formed from an orthogonal (Dubiner) modal basis through the inverse
// generalized Vandermonde for conditioning at moderate p.
// --------------------------------------------------------------------------
struct Basis {
  int dim = 1;
  int p = 1;
  int np = 2;
  RowMat nodes;  // np x dim

  Basis() = default;
  Basis(int dim_, int p_) : dim(dim_), p(p_) {
    if (p < 1) throw std::invalid_argument("Basis: p must be >= 1");
    if (dim == 1) {
      np = p + 1;
      nodes.resize(np, 1);
      for (int i = 0; i <= p; ++i) nodes(i, 0) = double(i) / p;
    } else if (dim == 2) {
      np = (p + 1) * (p + 2) / 2;
      nodes.resize(np, 2);
      int m = 0;
      for (int j = 0; j <= p; ++j)
        for (int i = 0; i <= p - j; ++i, ++m) {
          nodes(m, 0) = double(i) / p;
          nodes(m, 1) = double(j) / p;
        }
      build_modal_inverse();
    } else {
      throw std::invalid_argument("Basis: dim must be 1 or 2");
    }
  }

  void eval(const double* xi, double* phi) const {
    if (dim == 1) {
      lagrange1d_eval(p, xi[0], phi);
    } else {
      Eigen::VectorXd psi(np);
      modal_eval(xi[0], xi[1], psi.data());
      Eigen::Map<Eigen::VectorXd>(phi, np) = vinv_t_ * psi;
    }
  }

  // dphi laid out as dphi[i*dim + a] = d phi_i / d xi_a
  void eval_grad(const double* xi, double* dphi) const {
    if (dim == 1) {
      lagrange1d_grad(p, xi[0], dphi);
    } else {
      Eigen::MatrixXd dpsi(np, 2);
      modal_grad(xi[0], xi[1], dpsi);
      Eigen::MatrixXd g = vinv_t_ * dpsi;  // np x 2
      for (int i = 0; i < np; ++i) {
        dphi[2 * i] = g(i, 0);
        dphi[2 * i + 1] = g(i, 1);
      }
    }
  }

  // Local node ids along a face, ordered with the face parametrization.
  // d=1: face 0 = left endpoint, face 1 = right endpoint (single node each).
  // d=2: face 0: (0,0)->(1,0); face 1: (1,0)->(0,1); face 2: (0,1)->(0,0).
  std::vector<int> face_nodes(int f) const {
    std::vector<int> ids;
    if (dim == 1) {
      ids.push_back(f == 0 ? 0 : p);
      return ids;
    }
    auto id_of = [&](int i, int j) {
      int base = 0;
      for (int jj = 0; jj < j; ++jj) base += p + 1 - jj;
      return base + i;
    };
    for (int k = 0; k <= p; ++k) {
      if (f == 0) ids.push_back(id_of(k, 0));
      else if (f == 1) ids.push_back(id_of(p - k, k));
      else ids.push_back(id_of(0, p - k));
    }
    return ids;
  }

  int n_faces() const { return dim == 1 ? 2 : 3; }

  // Parent coordinates of a point on face f at face parameter t in [0,1].
  void face_point(int f, double t, double* xi) const {
    if (dim == 1) {
      xi[0] = (f == 0) ? 0.0 : 1.0;
      return;
    }
    const double v0[3][2] = {{0, 0}, {1, 0}, {0, 1}};
    const double v1[3][2] = {{1, 0}, {0, 1}, {0, 0}};
    xi[0] = v0[f][0] + t * (v1[f][0] - v0[f][0]);
    xi[1] = v0[f][1] + t * (v1[f][1] - v0[f][1]);
  }

  // Outward unit normal of face f of the parent element times the parent
  // face length (constant per face for simplex parents).
  void face_normal_scaled(int f, double* n) const {
    if (dim == 1) {
      n[0] = (f == 0) ? -1.0 : 1.0;
      return;
    }
    if (f == 0) { n[0] = 0.0; n[1] = -1.0; }
    else if (f == 1) { n[0] = 1.0; n[1] = 1.0; }
    else { n[0] = -1.0; n[1] = 0.0; }
  }

 private:
  Eigen::MatrixXd vinv_t_;  // transpose of inverse Vandermonde (d=2 only)

  // Dubiner modes on collapsed coordinates a = 2 xi/(1-eta) - 1, b = 2 eta - 1,
  // enumerated by total degree. f = 1-eta carries the (1-b)/2 factor.
  void modal_eval(double x, double y, double* psi) const {
    const double f = 1.0 - y;
    const double a = (f < 1e-13) ? -1.0 : 2.0 * x / f - 1.0;
    const double b = 2.0 * y - 1.0;
    int m = 0;
    for (int total = 0; total <= p; ++total)
      for (int j = 0; j <= total; ++j, ++m) {
        const int i = total - j;
        const double norm = std::sqrt(2.0 * (2 * i + 1) * (i + j + 1));
        double fi = 1.0;
        for (int k = 0; k < i; ++k) fi *= f;
        psi[m] = norm * detail::jacobi(i, 0, 0, a) * fi *
                 detail::jacobi(j, 2.0 * i + 1.0, 0.0, b);
      }
  }

  void modal_grad(double x, double y, Eigen::MatrixXd& dpsi) const {
    const double f = 1.0 - y;
    const double a = (f < 1e-13) ? -1.0 : 2.0 * x / f - 1.0;
    const double b = 2.0 * y - 1.0;
    int m = 0;
    for (int total = 0; total <= p; ++total)
      for (int j = 0; j <= total; ++j, ++m) {
        const int i = total - j;
        const double norm = std::sqrt(2.0 * (2 * i + 1) * (i + j + 1));
        const double Pi = detail::jacobi(i, 0, 0, a);
        const double dPi = detail::jacobi_deriv(i, 0, 0, a);
        const double Qj = detail::jacobi(j, 2.0 * i + 1.0, 0.0, b);
        const double dQj = detail::jacobi_deriv(j, 2.0 * i + 1.0, 0.0, b);
        double fim1 = 1.0;  // f^(i-1); unused for i = 0
        for (int k = 0; k + 1 < i; ++k) fim1 *= f;
        const double fi = (i == 0) ? 1.0 : fim1 * f;
        if (i == 0) {
          dpsi(m, 0) = 0.0;
          dpsi(m, 1) = norm * 2.0 * Pi * dQj;
        } else {
          dpsi(m, 0) = norm * 2.0 * dPi * Qj * fim1;
          dpsi(m, 1) = norm * ((dPi * (a + 1.0) - i * Pi) * Qj * fim1 + 2.0 * Pi * dQj * fi);
        }
      }
  }

  void build_modal_inverse() {
    Eigen::MatrixXd V(np, np);
    Eigen::VectorXd psi(np);
    for (int n = 0; n < np; ++n) {
      modal_eval(nodes(n, 0), nodes(n, 1), psi.data());
      V.row(n) = psi.transpose();
    }
    vinv_t_ = V.inverse().transpose();
  }
};

}  // namespace dgtrack
