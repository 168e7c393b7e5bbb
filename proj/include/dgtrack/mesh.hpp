#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dgtrack/basis.hpp"
#include "dgtrack/common.hpp"
#include "dgtrack/quadrature.hpp"

namespace dgtrack {

struct BoundaryFace {
  int elem;
  int local_face;
  std::string tag;
};

// Fixed reference-domain high-order mesh. Co-located nodes of adjacent
// elements share a single global index so the isoparametric mapping built
// on top of it is continuous by construction.
struct ReferenceMesh {
  int dim = 1;
  int p = 1;           // geometric polynomial order
  RowMat nodes;        // n_nodes x dim reference coordinates
  Eigen::MatrixXi elems;  // n_elems x np global node ids, parent-node ordering
  std::vector<BoundaryFace> boundary;
  double h0 = 0.0;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elems() const { return static_cast<int>(elems.rows()); }
  int np() const { return static_cast<int>(elems.cols()); }
};

// Physical nodal coordinates of the continuous high-order mesh.
struct MeshDofs {
  RowMat coords;  // n_nodes x dim

  int n_nodes() const { return static_cast<int>(coords.rows()); }
};

inline MeshDofs reference_dofs(const ReferenceMesh& mesh) { return MeshDofs{mesh.nodes}; }

struct MappingEval {
  Vec x;       // mapped point
  Mat G;       // deformation gradient dx/dX
  double g;    // det G
  double jref; // det dX/dxi, parent-to-reference volume factor
  Mat dxi_dX;  // inverse parent-to-reference Jacobian
};

namespace detail {

inline double det_small(const Mat& A) {
  return A.rows() == 1 ? A(0, 0) : A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
}

inline Mat inv_small(const Mat& A) {
  if (A.rows() == 1) {
    Mat r(1, 1);
    r(0, 0) = 1.0 / A(0, 0);
    return r;
  }
  const double d = det_small(A);
  Mat r(2, 2);
  r(0, 0) = A(1, 1) / d;
  r(0, 1) = -A(0, 1) / d;
  r(1, 0) = -A(1, 0) / d;
  r(1, 1) = A(0, 0) / d;
  return r;
}

}  // namespace detail

// Isoparametric mapping data at a parent point xi of one element.
inline MappingEval map_eval(const ReferenceMesh& mesh, const MeshDofs& dofs, int elem,
                            const double* xi, const Basis& basis) {
  const int d = mesh.dim;
  const int np = basis.np;
  std::vector<double> phi(np), dphi(np * d);
  basis.eval(xi, phi.data());
  basis.eval_grad(xi, dphi.data());
  MappingEval me;
  me.x = Vec::Zero(d);
  Mat dx_dxi = Mat::Zero(d, d), dX_dxi = Mat::Zero(d, d);
  for (int i = 0; i < np; ++i) {
    const int n = mesh.elems(elem, i);
    for (int a = 0; a < d; ++a) {
      me.x(a) += dofs.coords(n, a) * phi[i];
      for (int b = 0; b < d; ++b) {
        dx_dxi(a, b) += dofs.coords(n, a) * dphi[i * d + b];
        dX_dxi(a, b) += mesh.nodes(n, a) * dphi[i * d + b];
      }
    }
  }
  me.jref = detail::det_small(dX_dxi);
  me.dxi_dX = detail::inv_small(dX_dxi);
  me.G = dx_dxi * me.dxi_dX;
  me.g = detail::det_small(me.G);
  return me;
}

inline MappingEval map_eval(const ReferenceMesh& mesh, const MeshDofs& dofs, int elem,
                            const double* xi) {
  return map_eval(mesh, dofs, elem, xi, Basis(mesh.dim, mesh.p));
}

// Physical element volume by quadrature; negative values signal inversion.
inline double element_volume(const ReferenceMesh& mesh, const MeshDofs& dofs, int elem,
                             const Basis& basis, const QuadRule& rule) {
  double vol = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    const MappingEval me = map_eval(mesh, dofs, elem, rule.pts.row(q).data(), basis);
    vol += rule.wts(q) * me.g * me.jref;
  }
  return vol;
}

inline double element_volume(const ReferenceMesh& mesh, const MeshDofs& dofs, int elem) {
  const Basis basis(mesh.dim, mesh.p);
  return element_volume(mesh, dofs, elem, basis, volume_rule(mesh.dim, 2 * mesh.p));
}

inline double domain_volume(const ReferenceMesh& mesh, const MeshDofs& dofs) {
  const Basis basis(mesh.dim, mesh.p);
  const QuadRule rule = volume_rule(mesh.dim, 2 * mesh.p);
  double vol = 0.0;
  for (int e = 0; e < mesh.n_elems(); ++e) vol += element_volume(mesh, dofs, e, basis, rule);
  return vol;
}

// True iff det G > 0 at every volume quadrature point of every element.
inline bool mesh_valid(const ReferenceMesh& mesh, const MeshDofs& dofs, int quad_degree = -1) {
  const Basis basis(mesh.dim, mesh.p);
  const QuadRule rule = volume_rule(mesh.dim, quad_degree < 0 ? 2 * mesh.p : quad_degree);
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (int q = 0; q < rule.size(); ++q) {
      const MappingEval me = map_eval(mesh, dofs, e, rule.pts.row(q).data(), basis);
      if (!(me.g > 0.0)) return false;
    }
  return true;
}

inline void finalize_h0(ReferenceMesh& mesh) {
  const MeshDofs ref = reference_dofs(mesh);
  mesh.h0 = std::pow(domain_volume(mesh, ref) / mesh.n_elems(), 1.0 / mesh.dim);
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline ReferenceMesh build_uniform_1d(int n_elem, int p, double xl, double xr) {
  if (n_elem < 1 || p < 1) throw std::invalid_argument("build_uniform_1d: need n_elem >= 1, p >= 1");
  if (!(xl < xr)) throw std::invalid_argument("build_uniform_1d: need xl < xr");
  ReferenceMesh m;
  m.dim = 1;
  m.p = p;
  const int nn = n_elem * p + 1;
  m.nodes.resize(nn, 1);
  for (int i = 0; i < nn; ++i) m.nodes(i, 0) = xl + (xr - xl) * double(i) / (nn - 1);
  m.elems.resize(n_elem, p + 1);
  for (int e = 0; e < n_elem; ++e)
    for (int i = 0; i <= p; ++i) m.elems(e, i) = e * p + i;
  m.boundary.push_back({0, 0, "left"});
  m.boundary.push_back({n_elem - 1, 1, "right"});
  m.h0 = (xr - xl) / n_elem;
  return m;
}

// 1d mesh from arbitrary, strictly increasing element breakpoints.
inline ReferenceMesh build_graded_1d(const std::vector<double>& breaks, int p) {
  const int n_elem = static_cast<int>(breaks.size()) - 1;
  if (n_elem < 1 || p < 1) throw std::invalid_argument("build_graded_1d: bad arguments");
  ReferenceMesh m;
  m.dim = 1;
  m.p = p;
  m.nodes.resize(n_elem * p + 1, 1);
  m.elems.resize(n_elem, p + 1);
  for (int e = 0; e < n_elem; ++e) {
    if (!(breaks[e] < breaks[e + 1]))
      throw std::invalid_argument("build_graded_1d: breakpoints must increase");
    for (int i = 0; i <= p; ++i) {
      m.nodes(e * p + i, 0) = breaks[e] + (breaks[e + 1] - breaks[e]) * double(i) / p;
      m.elems(e, i) = e * p + i;
    }
  }
  m.boundary.push_back({0, 0, "left"});
  m.boundary.push_back({n_elem - 1, 1, "right"});
  m.h0 = (breaks.back() - breaks.front()) / n_elem;
  return m;
}

namespace detail {

// Structured triangle mesh over a smooth map geo:(s,t) in [0,ns]x[0,nt] -> R^2.
// Each (s,t) cell is split into two triangles; high-order nodes live on the
// fine (ns*p+1) x (nt*p+1) lattice so co-located nodes share global ids.
template <class Geo>
inline ReferenceMesh build_mapped_grid(int ns, int nt, int p, Geo&& geo,
                                       const std::string& tag_s0, const std::string& tag_s1,
                                       const std::string& tag_t0, const std::string& tag_t1) {
  ReferenceMesh m;
  m.dim = 2;
  m.p = p;
  const int nsf = ns * p, ntf = nt * p;
  m.nodes.resize((nsf + 1) * (ntf + 1), 2);
  auto lat = [&](int a, int b) { return b * (nsf + 1) + a; };
  for (int b = 0; b <= ntf; ++b)
    for (int a = 0; a <= nsf; ++a) {
      double xy[2];
      geo(double(a) / p, double(b) / p, xy);
      m.nodes(lat(a, b), 0) = xy[0];
      m.nodes(lat(a, b), 1) = xy[1];
    }
  const int np = (p + 1) * (p + 2) / 2;
  m.elems.resize(2 * ns * nt, np);
  auto fill_tri = [&](int e, int a0, int b0, int da1, int db1, int da2, int db2) {
    // parent node (i,j) -> lattice point a0 + i*da1 + j*da2, b0 + i*db1 + j*db2
    int k = 0;
    for (int j = 0; j <= p; ++j)
      for (int i = 0; i <= p - j; ++i, ++k)
        m.elems(e, k) = lat(a0 + i * da1 + j * da2, b0 + i * db1 + j * db2);
  };
  for (int ct = 0; ct < nt; ++ct)
    for (int cs = 0; cs < ns; ++cs) {
      const int e1 = 2 * (ct * ns + cs), e2 = e1 + 1;
      const int a = cs * p, b = ct * p;
      // lower-left triangle: v0=(a,b) v1=(a+p,b) v2=(a,b+p)
      fill_tri(e1, a, b, 1, 0, 0, 1);
      // upper-right triangle: v0=(a+p,b+p) v1=(a,b+p) v2=(a+p,b)
      fill_tri(e2, a + p, b + p, -1, 0, 0, -1);
      if (ct == 0) m.boundary.push_back({e1, 0, tag_t0});
      if (ct == nt - 1) m.boundary.push_back({e2, 0, tag_t1});
      if (cs == 0) m.boundary.push_back({e1, 2, tag_s0});
      if (cs == ns - 1) m.boundary.push_back({e2, 2, tag_s1});
    }
  finalize_h0(m);
  return m;
}

}  // namespace detail

struct GridSpec2d {
  int nx = 5, ny = 5;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

inline ReferenceMesh build_grid_2d(const GridSpec2d& spec, int p) {
  if (spec.nx < 1 || spec.ny < 1 || !(spec.x0 < spec.x1) || !(spec.y0 < spec.y1) || p < 1)
    throw std::invalid_argument("build_grid_2d: degenerate descriptor");
  auto geo = [&](double s, double t, double* xy) {
    xy[0] = spec.x0 + (spec.x1 - spec.x0) * s / spec.nx;
    xy[1] = spec.y0 + (spec.y1 - spec.y0) * t / spec.ny;
  };
  return detail::build_mapped_grid(spec.nx, spec.ny, p, geo, "left", "right", "bottom", "top");
}

// Quarter-annulus mesh for supersonic flow around a cylinder: theta in
// [90, 180] degrees, flow in +x, body centered at the origin. One mesh ring
// (`band_ring`) follows a bow-shock-shaped curve (Billig correlation) so the
// driven nodes of the tracking parametrization start near the shock; the
// remaining rings blend between body, band, and outer circle.
struct CylinderSpec {
  double r_body = 0.5;
  double r_far = 4.0;
  int n_theta = 6;
  int n_r = 4;
  int band_ring = 2;
  double mach = 2.0;     // shapes the band ring only
  bool billig_band = true;
};

namespace detail {

inline double billig_radius(const CylinderSpec& s, double theta) {
  // Bow shock standoff and curvature correlation for a circular cylinder.
  const double M = s.mach;
  const double R = s.r_body;
  const double delta = 0.386 * std::exp(4.67 / (M * M)) * R;
  const double rc = 1.386 * std::exp(1.8 / std::pow(M - 1.0, 0.75)) * R;
  const double tanmu = 1.0 / std::sqrt(M * M - 1.0);
  const double xv = -(R + delta);
  // solve r cos(theta) = x_s(r sin(theta)) along the ray
  double r = R + delta;
  for (int it = 0; it < 60; ++it) {
    const double y = r * std::sin(theta);
    const double root = std::sqrt(1.0 + y * y * tanmu * tanmu / (rc * rc));
    const double xs = xv + rc / (tanmu * tanmu) * (root - 1.0);
    const double dxs_dy = y / (root * rc);
    const double f = r * std::cos(theta) - xs;
    const double df = std::cos(theta) - dxs_dy * std::sin(theta);
    const double dr = f / df;
    r -= dr;
    if (std::abs(dr) < 1e-14 * (R + delta)) break;
  }
  return r;
}

}  // namespace detail

inline ReferenceMesh build_quarter_cylinder(const CylinderSpec& spec, int p) {
  if (spec.n_theta < 1 || spec.n_r < 2 || !(spec.r_body > 0.0) || !(spec.r_far > spec.r_body) ||
      spec.band_ring < 1 || spec.band_ring >= spec.n_r || p < 1)
    throw std::invalid_argument("build_quarter_cylinder: degenerate descriptor");
  auto band = [&](double theta) {
    if (!spec.billig_band) return 0.5 * (spec.r_body + spec.r_far);
    const double r = detail::billig_radius(spec, theta);
    // keep the band inside the domain with a margin
    const double lo = spec.r_body + 0.15 * (spec.r_far - spec.r_body);
    const double hi = spec.r_far - 0.15 * (spec.r_far - spec.r_body);
    return std::min(std::max(r, lo), hi);
  };
  auto geo = [&](double s, double t, double* xy) {
    const double theta = M_PI * 0.5 * (1.0 + t / spec.n_theta);  // 90 -> 180 degrees
    const double rb = band(theta);
    double r;
    if (s <= spec.band_ring)
      r = spec.r_body + (rb - spec.r_body) * (s / spec.band_ring);
    else
      r = rb + (spec.r_far - rb) * ((s - spec.band_ring) / (spec.n_r - spec.band_ring));
    xy[0] = r * std::cos(theta);
    xy[1] = r * std::sin(theta);
  };
  return detail::build_mapped_grid(spec.n_r, spec.n_theta, p, geo, "wall", "farfield",
                                   "farfield", "symmetry");
}

// Global node ids along the band ring of a quarter-cylinder mesh, ordered by
// angle; these are the natural driven nodes for the elastic parametrization.
inline std::vector<int> cylinder_band_nodes(const CylinderSpec& spec, int p) {
  const int nsf = spec.n_r * p, ntf = spec.n_theta * p;
  std::vector<int> ids;
  const int a = spec.band_ring * p;
  for (int b = 0; b <= ntf; ++b) ids.push_back(b * (nsf + 1) + a);
  return ids;
}

}  // namespace dgtrack
