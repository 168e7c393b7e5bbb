#pragma once

#include <Eigen/Dense>

#include "dgtrack/common.hpp"
#include <cmath>
#include <stdexcept>

namespace dgtrack {

struct QuadRule {
  RowMat pts;           // nq x dim, parent-element coordinates
  Eigen::VectorXd wts;  // nq
  int size() const { return static_cast<int>(wts.size()); }
};

// Gauss-Legendre on [0,1]; n points integrate polynomials of degree 2n-1.
inline QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadRule q;
  q.pts.resize(n, 1);
  q.wts.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n with Chebyshev initial guess, standard interval [-1,1]
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? x : p1;
      pp = n * (x * pn - p0) / (x * x - 1.0);
      const double dx = pn / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.pts(n - 1 - i, 0) = 0.5 * (x + 1.0);
    q.wts(n - 1 - i) = 1.0 / ((1.0 - x * x) * pp * pp);
  }
  return q;
}

// Smallest GL rule exact for polynomial degree `deg`.
inline QuadRule gauss_legendre_for_degree(int deg) {
  return gauss_legendre(std::max(1, (deg + 2) / 2));
}

// Collapsed tensor rule on the unit right triangle {xi,eta >= 0, xi+eta <= 1}:
// xi = a(1-b), eta = b with GL points in a and b and the (1-b) area factor
// folded into the weights. n x n points integrate total degree 2n-2 exactly.
inline QuadRule triangle_rule(int n) {
  const QuadRule ga = gauss_legendre(n);
  const QuadRule gb = gauss_legendre(n);
  QuadRule q;
  q.pts.resize(n * n, 2);
  q.wts.resize(n * n);
  int m = 0;
  for (int j = 0; j < n; ++j) {
    const double b = gb.pts(j, 0);
    for (int i = 0; i < n; ++i, ++m) {
      const double a = ga.pts(i, 0);
      q.pts(m, 0) = a * (1.0 - b);
      q.pts(m, 1) = b;
      q.wts(m) = ga.wts(i) * gb.wts(j) * (1.0 - b);
    }
  }
  return q;
}

inline QuadRule triangle_rule_for_degree(int deg) {
  // (1-b) factor raises the b-degree by one
  return triangle_rule(std::max(1, (deg + 3) / 2));
}

inline QuadRule volume_rule(int dim, int deg) {
  return dim == 1 ? gauss_legendre_for_degree(deg) : triangle_rule_for_degree(deg);
}

}  // namespace dgtrack
