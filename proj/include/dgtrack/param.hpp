#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <set>
#include <vector>

#include "dgtrack/dg.hpp"
#include "dgtrack/mesh.hpp"
#include "dgtrack/tables.hpp"

namespace dgtrack {

// Reduced mesh parametrization x = A(phi) with constant Jacobian dx/dphi.
// All three kinds used here are affine in phi, so the Jacobian is assembled
// once at construction.
struct Parametrization {
  virtual ~Parametrization() = default;
  virtual int nphi() const = 0;
  virtual Vec initial_phi() const = 0;          // phi reproducing the reference mesh
  virtual MeshDofs apply(const Vec& phi) const = 0;
  virtual const SpMat& jacobian() const = 0;    // n_x x n_phi
};

// Nodes on tagged boundary faces of the reference mesh.
inline std::vector<bool> boundary_node_mask(const ReferenceMesh& mesh) {
  const Basis basis(mesh.dim, mesh.p);
  std::vector<bool> mask(mesh.n_nodes(), false);
  for (const auto& bf : mesh.boundary)
    for (int k : basis.face_nodes(bf.local_face)) mask[mesh.elems(bf.elem, k)] = true;
  return mask;
}

// phi = coordinates of the free (by default non-boundary) nodes; the rest of
// the mesh is frozen at the reference configuration.
class IdentityParam : public Parametrization {
 public:
  IdentityParam(const ReferenceMesh& mesh, bool fix_boundary = true) : mesh_(&mesh) {
    const int d = mesh.dim;
    std::vector<bool> bnd =
        fix_boundary ? boundary_node_mask(mesh) : std::vector<bool>(mesh.n_nodes(), false);
    for (int n = 0; n < mesh.n_nodes(); ++n)
      if (!bnd[n])
        for (int a = 0; a < d; ++a) free_.push_back(xidx(n, d, a));
    std::vector<Triplet> ts;
    for (size_t k = 0; k < free_.size(); ++k) ts.emplace_back(free_[k], static_cast<int>(k), 1.0);
    jac_.resize(mesh.n_nodes() * d, static_cast<int>(free_.size()));
    jac_.setFromTriplets(ts.begin(), ts.end());
  }

  int nphi() const override { return static_cast<int>(free_.size()); }
  Vec initial_phi() const override {
    const int d = mesh_->dim;
    Vec phi(nphi());
    for (size_t k = 0; k < free_.size(); ++k)
      phi(k) = mesh_->nodes(free_[k] / d, free_[k] % d);
    return phi;
  }
  MeshDofs apply(const Vec& phi) const override {
    const int d = mesh_->dim;
    MeshDofs dofs = reference_dofs(*mesh_);
    for (size_t k = 0; k < free_.size(); ++k)
      dofs.coords(free_[k] / d, free_[k] % d) = phi(k);
    return dofs;
  }
  const SpMat& jacobian() const override { return jac_; }

 private:
  const ReferenceMesh* mesh_;
  std::vector<int> free_;
  SpMat jac_;
};

// Single degree of freedom: phi is the mapped position of the reference point
// xbar; remaining nodes stretch piecewise linearly toward the fixed ends. In
// 2d only the first coordinate moves.
class SingleNodeParam : public Parametrization {
 public:
  SingleNodeParam(const ReferenceMesh& mesh, double xbar, double xl, double xr)
      : mesh_(&mesh), xbar_(xbar), xl_(xl), xr_(xr) {
    const int d = mesh.dim;
    std::vector<Triplet> ts;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      const double X = mesh.nodes(n, 0);
      const double w = X <= xbar_ ? (X - xl_) / (xbar_ - xl_) : (xr_ - X) / (xr_ - xbar_);
      ts.emplace_back(xidx(n, d, 0), 0, w);
    }
    jac_.resize(mesh.n_nodes() * d, 1);
    jac_.setFromTriplets(ts.begin(), ts.end());
  }

  int nphi() const override { return 1; }
  Vec initial_phi() const override { return Vec::Constant(1, xbar_); }
  MeshDofs apply(const Vec& phi) const override {
    const double ph = phi(0);
    if (!(ph > xl_ && ph < xr_))
      throw std::domain_error("SingleNodeParam: phi outside (xl, xr)");
    MeshDofs dofs = reference_dofs(*mesh_);
    for (int n = 0; n < mesh_->n_nodes(); ++n) {
      const double X = mesh_->nodes(n, 0);
      dofs.coords(n, 0) = X <= xbar_ ? xl_ + (X - xl_) * (ph - xl_) / (xbar_ - xl_)
                                     : xr_ - (xr_ - X) * (xr_ - ph) / (xr_ - xbar_);
    }
    return dofs;
  }
  const SpMat& jacobian() const override { return jac_; }

  double xbar() const { return xbar_; }

 private:
  const ReferenceMesh* mesh_;
  double xbar_, xl_, xr_;
  SpMat jac_;
};

// Driven nodes displaced by phi; the rest follow from linear elastic smoothing
// with tangential slide on domain boundaries. Driven nodes on a boundary keep
// one (tangential) degree of freedom; all constraints and the stiffness are
// independent of phi, so the solution operator is assembled once.
class ElasticParam : public Parametrization {
 public:
  ElasticParam(const ReferenceMesh& mesh, std::vector<int> driven_nodes, double young = 1.0,
               double poisson = 0.3)
      : mesh_(&mesh), driven_(std::move(driven_nodes)) {
    if (mesh.dim != 2) throw std::invalid_argument("ElasticParam: 2d meshes only");
    build(young, poisson);
  }

  int nphi() const override { return static_cast<int>(dirs_.size()); }
  Vec initial_phi() const override { return Vec::Zero(nphi()); }
  MeshDofs apply(const Vec& phi) const override {
    MeshDofs dofs = reference_dofs(*mesh_);
    const Vec dx = op_ * phi;
    for (int n = 0; n < mesh_->n_nodes(); ++n)
      for (int a = 0; a < 2; ++a) dofs.coords(n, a) += dx(xidx(n, 2, a));
    return dofs;
  }
  const SpMat& jacobian() const override { return jac_; }

  // phi slot -> (node, unit direction) of the prescribed displacement
  struct DrivenDof {
    int node;
    Eigen::Vector2d dir;
  };
  const std::vector<DrivenDof>& driven_dofs() const { return dirs_; }

  // Best phi reproducing given physical coordinates at the driven nodes.
  Vec phi_from_dofs(const MeshDofs& dofs) const {
    Vec phi(nphi());
    for (int k = 0; k < nphi(); ++k) {
      const auto& dd = dirs_[k];
      Eigen::Vector2d disp;
      for (int a = 0; a < 2; ++a) disp(a) = dofs.coords(dd.node, a) - mesh_->nodes(dd.node, a);
      phi(k) = disp.dot(dd.dir);
    }
    return phi;
  }

 private:
  const ReferenceMesh* mesh_;
  std::vector<int> driven_;
  std::vector<DrivenDof> dirs_;
  Mat op_;     // n_x x n_phi dense solution operator
  SpMat jac_;

  void build(double young, double poisson) {
    const ReferenceMesh& mesh = *mesh_;
    const int nn = mesh.n_nodes(), nx = 2 * nn;
    const Tables tbl = make_tables(2, mesh.p, 2 * mesh.p + 1, 2 * mesh.p + 1);
    const int np = tbl.np();
    const double lam = young * poisson / ((1 + poisson) * (1 - 2 * poisson));
    const double mu = young / (2 * (1 + poisson));

    // continuous-Galerkin stiffness on the reference mesh
    std::vector<Triplet> tk;
    const MeshDofs ref = reference_dofs(mesh);
    for (int e = 0; e < mesh.n_elems(); ++e) {
      const ElemGeom eg = elem_geom(mesh, ref, e, tbl);
      for (int q = 0; q < tbl.vol.size(); ++q) {
        const double w = tbl.vol.wts(q) * eg.jref(q);
        const Mat& gX = eg.gradX[q];
        for (int i = 0; i < np; ++i)
          for (int j = 0; j < np; ++j) {
            // K[(i,a),(j,b)] for isotropic elasticity
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) {
                double val = lam * gX(i, a) * gX(j, b) + mu * gX(i, b) * gX(j, a);
                if (a == b) val += mu * gX.row(i).dot(gX.row(j));
                tk.emplace_back(xidx(mesh.elems(e, i), 2, a), xidx(mesh.elems(e, j), 2, b),
                                w * val);
              }
          }
      }
    }
    SpMat K(nx, nx);
    K.setFromTriplets(tk.begin(), tk.end());

    // node classification: boundary normals from tagged faces
    std::vector<Eigen::Vector2d> normal(nn, Eigen::Vector2d::Zero());
    std::vector<bool> on_bnd(nn, false), corner(nn, false);
    for (const auto& bf : mesh.boundary) {
      const auto fn = tbl.basis.face_nodes(bf.local_face);
      for (size_t k = 0; k < fn.size(); ++k) {
        const int node = mesh.elems(bf.elem, fn[k]);
        // outward normal of the reference face at this node's parameter
        const double tau = static_cast<double>(k) / (fn.size() - 1.0);
        Eigen::Vector2d t = Eigen::Vector2d::Zero();
        std::vector<double> dpsi(fn.size());
        lagrange1d_grad(mesh.p, tau, dpsi.data());
        for (size_t m = 0; m < fn.size(); ++m)
          for (int a = 0; a < 2; ++a)
            t(a) += mesh.nodes(mesh.elems(bf.elem, fn[m]), a) * dpsi[m];
        Eigen::Vector2d nrm(t(1), -t(0));
        nrm.normalize();
        if (on_bnd[node]) {
          if (std::abs(normal[node].dot(nrm)) < 1.0 - 1e-8) corner[node] = true;
          normal[node] = (normal[node] + nrm).normalized();
        } else {
          on_bnd[node] = true;
          normal[node] = nrm;
        }
      }
    }

    std::set<int> driven_set(driven_.begin(), driven_.end());
    // driven dofs in input order: interior nodes get (x, y); boundary nodes slide
    for (int nd : driven_) {
      if (on_bnd[nd] && !corner[nd]) {
        dirs_.push_back({nd, Eigen::Vector2d(-normal[nd](1), normal[nd](0))});
      } else {
        dirs_.push_back({nd, Eigen::Vector2d(1, 0)});
        dirs_.push_back({nd, Eigen::Vector2d(0, 1)});
      }
    }
    const int nph = static_cast<int>(dirs_.size());

    // reduced coordinates: x = T q + Dmat phi
    // free interior node: 2 dofs; boundary node: tangential dof; corner: fixed
    std::vector<Triplet> tt, td;
    int nq = 0;
    for (int n = 0; n < nn; ++n) {
      if (driven_set.count(n)) continue;
      if (corner[n]) continue;
      if (on_bnd[n]) {
        const Eigen::Vector2d t(-normal[n](1), normal[n](0));
        tt.emplace_back(xidx(n, 2, 0), nq, t(0));
        tt.emplace_back(xidx(n, 2, 1), nq, t(1));
        ++nq;
      } else {
        tt.emplace_back(xidx(n, 2, 0), nq++, 1.0);
        tt.emplace_back(xidx(n, 2, 1), nq++, 1.0);
      }
    }
    for (int k = 0; k < nph; ++k) {
      td.emplace_back(xidx(dirs_[k].node, 2, 0), k, dirs_[k].dir(0));
      td.emplace_back(xidx(dirs_[k].node, 2, 1), k, dirs_[k].dir(1));
    }
    SpMat T(nx, nq), Dmat(nx, nph);
    T.setFromTriplets(tt.begin(), tt.end());
    Dmat.setFromTriplets(td.begin(), td.end());

    SpMat Kr = SpMat(T.transpose() * K * T);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(Kr);
    if (lu.info() != Eigen::Success) throw solver_error("ElasticParam: singular stiffness");
    const Mat rhs = Mat(T.transpose() * K * Dmat);
    op_.resize(nx, nph);
    for (int k = 0; k < nph; ++k) {
      const Vec q = lu.solve(Vec(-rhs.col(k)));
      op_.col(k) = T * q + Dmat.col(k);
    }
    std::vector<Triplet> tj;
    for (int k = 0; k < nph; ++k)
      for (int r = 0; r < nx; ++r)
        if (op_(r, k) != 0.0) tj.emplace_back(r, k, op_(r, k));
    jac_.resize(nx, nph);
    jac_.setFromTriplets(tj.begin(), tj.end());
  }
};

}  // namespace dgtrack
