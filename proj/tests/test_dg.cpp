#include <catch2/catch_amalgamated.hpp>
#include <functional>
#include <random>

#include "dgtrack/dg.hpp"
#include "dgtrack/physics.hpp"

using namespace dgtrack;

namespace {

std::mt19937 rng(77);

template <class Law>
Vec nodal_state(const Discretization<Law>& disc, const MeshDofs& dofs,
                const std::function<void(const Vec&, double*)>& fn, bool weight_by_g) {
  const auto& mesh = *disc.mesh;
  const int np = disc.np();
  Vec u(disc.nu());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    Vec center = Vec::Zero(mesh.dim);
    const double xic[2] = {mesh.dim == 1 ? 0.5 : 1.0 / 3, 1.0 / 3};
    center = map_eval(mesh, dofs, e, xic, disc.tbl.basis).x;
    for (int i = 0; i < np; ++i) {
      const MappingEval me =
          map_eval(mesh, dofs, e, disc.tbl.basis.nodes.row(i).data(), disc.tbl.basis);
      double U[Law::NC];
      // nudge toward the centroid so jump functions evaluate one-sided
      Vec xe = me.x + 1e-10 * (center - me.x);
      fn(xe, U);
      for (int c = 0; c < Law::NC; ++c)
        u(uidx(e, np, Law::NC, i, c)) = weight_by_g ? me.g * U[c] : U[c];
    }
  }
  return u;
}

MeshDofs perturbed_dofs(const ReferenceMesh& mesh, double amp, bool keep_boundary = true) {
  std::uniform_real_distribution<double> un(-amp, amp);
  MeshDofs dofs = reference_dofs(mesh);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    bool bnd = false;
    if (mesh.dim == 1) {
      bnd = n == 0 || n == mesh.n_nodes() - 1;
    } else {
      const double x = mesh.nodes(n, 0), y = mesh.nodes(n, 1);
      bnd = x < 1e-12 || x > 1 - 1e-12 || y < 1e-12 || y > 1 - 1e-12;
    }
    if (bnd && keep_boundary) continue;
    for (int a = 0; a < mesh.dim; ++a) dofs.coords(n, a) += un(rng);
  }
  return dofs;
}

template <class Law>
void check_jacobians(const Discretization<Law>& disc, const MeshDofs& dofs, const Vec& u,
                     double tol) {
  Vec r;
  SpMat Ju, Jx;
  disc.assemble(dofs, u, &r, &Ju, &Jx);
  const double eps_u = 1e-6, eps_x = 1e-6;
  Mat Ju_fd(r.size(), u.size());
  for (int j = 0; j < u.size(); ++j) {
    Vec up = u, um = u;
    up(j) += eps_u;
    um(j) -= eps_u;
    Ju_fd.col(j) = (disc.residual(dofs, up) - disc.residual(dofs, um)) / (2 * eps_u);
  }
  const double su = Mat(Ju).norm() + 1.0;
  REQUIRE((Mat(Ju) - Ju_fd).norm() / su < tol);

  Mat Jx_fd(r.size(), disc.nx());
  for (int n = 0; n < disc.mesh->n_nodes(); ++n)
    for (int a = 0; a < disc.mesh->dim; ++a) {
      MeshDofs dp = dofs, dm = dofs;
      dp.coords(n, a) += eps_x;
      dm.coords(n, a) -= eps_x;
      Jx_fd.col(xidx(n, disc.mesh->dim, a)) =
          (disc.residual(dp, u) - disc.residual(dm, u)) / (2 * eps_x);
    }
  const double sx = Mat(Jx).norm() + 1.0;
  REQUIRE((Mat(Jx) - Jx_fd).norm() / sx < tol);
}

}  // namespace

TEST_CASE("free-stream euler is exactly preserved", "[dg]") {
  Euler2D law;
  double Uinf[4];
  law.freestream(Uinf);
  auto fs = [&](const Vec&, double* U) { for (int c = 0; c < 4; ++c) U[c] = Uinf[c]; };

  // reference quarter-cylinder mesh (curved reference elements, G = I);
  // all-farfield tags since the wall condition is not freestream-consistent
  const CylinderSpec cs;
  ReferenceMesh cyl = build_quarter_cylinder(cs, 2);
  for (auto& bf : cyl.boundary) bf.tag = "farfield";
  Discretization<Euler2D> dc(law, cyl);
  const MeshDofs cref = reference_dofs(cyl);
  Vec u = nodal_state(dc, cref, fs, true);
  REQUIRE(dc.residual(cref, u).lpNorm<Eigen::Infinity>() < 1e-12);

  // perturbed p=2 grid: g has degree p so g*Uinf is exactly representable
  GridSpec2d gs;
  gs.nx = gs.ny = 2;
  ReferenceMesh grid = build_grid_2d(gs, 2);
  for (auto& bf : grid.boundary) bf.tag = "farfield";
  Discretization<Euler2D> dg2(law, grid);
  const MeshDofs moved = perturbed_dofs(grid, 0.03);
  REQUIRE(mesh_valid(grid, moved));
  u = nodal_state(dg2, moved, fs, true);
  REQUIRE(dg2.residual(moved, u).lpNorm<Eigen::Infinity>() < 1e-11);

  // rigid translation of a zero residual: dr/dx . t = 0
  SpMat Ju, Jx;
  Vec r;
  dg2.assemble(moved, u, &r, &Ju, &Jx);
  Vec t = Vec::Zero(dg2.nx());
  for (int n = 0; n < grid.n_nodes(); ++n) t(xidx(n, 2, 0)) = 1.0;
  REQUIRE((Jx * t).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("global conservation against boundary fluxes", "[dg]") {
  Burgers1D law;
  const ReferenceMesh mesh = build_uniform_1d(6, 2, -2.0, 2.0);
  Discretization<Burgers1D> disc(law, mesh, 23);  // match the GL(12) oracle below
  MeshDofs dofs = perturbed_dofs(mesh, 0.05);
  auto ex = [](const Vec& x, double* U) { U[0] = Burgers1D::exact(x(0)); };
  const Vec u = nodal_state(disc, dofs, ex, true);
  const Vec r = disc.residual(dofs, u);
  // interior faces cancel; the residual sum telescopes to boundary fluxes
  // minus the total source integral
  double total = 0.0;
  for (int k = 0; k < r.size(); ++k) total += r(k);
  const MappingEval mL = map_eval(mesh, dofs, 0, disc.tbl.basis.nodes.row(0).data());
  const double uin_l = u(uidx(0, disc.np(), 1, 0, 0)) / mL.g;
  const MappingEval mR =
      map_eval(mesh, dofs, 5, disc.tbl.basis.nodes.row(disc.np() - 1).data());
  const double uin_r = u(uidx(5, disc.np(), 1, disc.np() - 1, 0)) / mR.g;
  const double f_l = -Burgers1D::godunov(2.0, uin_l);
  const double f_r = Burgers1D::godunov(uin_r, -2.0);
  // source integral by independent quadrature
  double src = 0.0;
  const QuadRule qr = gauss_legendre(12);
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (int q = 0; q < qr.size(); ++q) {
      const double xi = qr.pts(q, 0);
      const MappingEval me = map_eval(mesh, dofs, e, &xi);
      std::vector<double> phi(disc.np());
      disc.tbl.basis.eval(&xi, phi.data());
      double uv = 0.0;
      for (int i = 0; i < disc.np(); ++i) uv += phi[i] * u(uidx(e, disc.np(), 1, i, 0));
      const double U = uv / me.g;
      double s, xp = me.x(0);
      law.source(&xp, &U, &s);
      src += qr.wts(q) * me.jref * me.g * s;
    }
  REQUIRE(total == Catch::Approx(f_l + f_r - src).margin(1e-11));
}

TEST_CASE("residual jacobians match finite differences", "[dg][jacobian]") {
  SECTION("burgers 5 elements p=2") {
    Burgers1D law;
    const ReferenceMesh mesh = build_uniform_1d(5, 2, -2.0, 2.0);
    Discretization<Burgers1D> disc(law, mesh);
    const MeshDofs dofs = perturbed_dofs(mesh, 0.06);
    auto ex = [](const Vec& x, double* U) { U[0] = Burgers1D::exact(x(0)); };
    Vec u = nodal_state(disc, dofs, ex, true);
    std::uniform_real_distribution<double> un(-0.05, 0.05);
    for (int k = 0; k < u.size(); ++k) u(k) += 0.15 + un(rng);  // keep clear of flux kinks
    check_jacobians(disc, dofs, u, 1e-6);
  }
  SECTION("quasi-1d euler 6 elements p=2") {
    Quasi1dEuler law;
    const ReferenceMesh mesh = build_uniform_1d(6, 2, 0.0, 1.0);
    Discretization<Quasi1dEuler> disc(law, mesh);
    MeshDofs dofs = reference_dofs(mesh);
    std::uniform_real_distribution<double> un(-0.2, 0.2);
    for (int n = 1; n < mesh.n_nodes() - 1; ++n) dofs.coords(n, 0) += 0.02 * un(rng);
    double qb[3];
    law.boundary_state(bc_inflow, qb);
    auto init = [&](const Vec&, double* U) { for (int c = 0; c < 3; ++c) U[c] = qb[c]; };
    Vec u = nodal_state(disc, dofs, init, true);
    for (int k = 0; k < u.size(); ++k) u(k) *= 1.0 + 0.05 * un(rng);
    check_jacobians(disc, dofs, u, 1e-6);
  }
  SECTION("euler 2d 8 elements p=1") {
    Euler2D law;
    GridSpec2d gs;
    gs.nx = gs.ny = 2;
    ReferenceMesh mesh = build_grid_2d(gs, 1);
    for (auto& bf : mesh.boundary) bf.tag = "farfield";
    Discretization<Euler2D> disc(law, mesh);
    const MeshDofs dofs = perturbed_dofs(mesh, 0.04);
    // rotate the flow so no face normal is perpendicular to it: keeps all Roe
    // eigenvalues away from the entropy-fix kinks where FD is meaningless
    const double ang = 25.0 * M_PI / 180.0, c0 = std::sqrt(1.4 * 0.17857 / 1.0);
    auto init = [&](const Vec&, double* U) {
      U[0] = 1.0;
      U[1] = 2.0 * c0 * std::cos(ang);
      U[2] = 2.0 * c0 * std::sin(ang);
      U[3] = 0.17857 / 0.4 + 0.5 * (U[1] * U[1] + U[2] * U[2]);
    };
    Vec u = nodal_state(disc, dofs, init, true);
    std::uniform_real_distribution<double> un(-0.01, 0.01);
    for (int k = 0; k < u.size(); ++k) u(k) *= 1.0 + un(rng);
    check_jacobians(disc, dofs, u, 1e-6);
  }
  SECTION("euler 2d with wall boundary") {
    Euler2D law;
    const CylinderSpec cs;
    const ReferenceMesh mesh = build_quarter_cylinder(cs, 1);
    Discretization<Euler2D> disc(law, mesh);
    MeshDofs dofs = reference_dofs(mesh);
    double Uinf[4];
    law.freestream(Uinf);
    auto init = [&](const Vec& x, double* U) {
      for (int c = 0; c < 4; ++c) U[c] = Uinf[c];
      U[1] *= 0.9 + 0.02 * x(0);  // break symmetry but stay admissible
    };
    Vec u = nodal_state(disc, dofs, init, true);
    check_jacobians(disc, dofs, u, 1e-6);
  }
}

TEST_CASE("aligned interpolant residual decays at O(h^p)", "[dg]") {
  Burgers1D law;
  const int p = 2;
  std::vector<double> hs, rs;
  for (int n : {8, 16, 32, 64}) {
    std::vector<double> breaks;
    for (int i = 0; i <= n / 2; ++i) breaks.push_back(-2.0 + 2.0 * i / (n / 2));
    for (int i = 1; i <= n / 2; ++i) breaks.push_back(2.0 * i / (n / 2));
    const ReferenceMesh mesh = build_graded_1d(breaks, p);
    Discretization<Burgers1D> disc(law, mesh);
    const MeshDofs dofs = reference_dofs(mesh);
    auto ex = [](const Vec& x, double* U) { U[0] = Burgers1D::exact(x(0)); };
    const Vec u = nodal_state(disc, dofs, ex, true);
    hs.push_back(4.0 / n);
    rs.push_back(disc.residual(dofs, u).lpNorm<Eigen::Infinity>());
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = static_cast<int>(hs.size());
  for (int i = 0; i < m; ++i) {
    const double lx = std::log(hs[i]), ly = std::log(rs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  REQUIRE(slope > p - 0.5);
}

TEST_CASE("mass matrix blocks and SPD", "[dg]") {
  Burgers1D law;
  const ReferenceMesh mesh = build_uniform_1d(1, 1, 0.0, 1.0);
  Discretization<Burgers1D> disc(law, mesh);
  const SpMat M = disc.mass_matrix(reference_dofs(mesh));
  REQUIRE(M.coeff(0, 0) == Catch::Approx(1.0 / 3));
  REQUIRE(M.coeff(0, 1) == Catch::Approx(1.0 / 6));
  REQUIRE(M.coeff(1, 0) == Catch::Approx(1.0 / 6));
  REQUIRE(M.coeff(1, 1) == Catch::Approx(1.0 / 3));

  const ReferenceMesh m2 = build_uniform_1d(1, 2, 0.0, 1.0);
  Discretization<Burgers1D> d2(law, m2);
  const Mat B = d2.element_mass_block(reference_dofs(m2), 0);
  REQUIRE(B.row(0).sum() == Catch::Approx(1.0 / 6).epsilon(1e-12));
  REQUIRE(B.row(1).sum() == Catch::Approx(4.0 / 6).epsilon(1e-12));
  REQUIRE(B.row(2).sum() == Catch::Approx(1.0 / 6).epsilon(1e-12));

  Euler2D elaw;
  GridSpec2d gs;
  gs.nx = gs.ny = 2;
  ReferenceMesh g2 = build_grid_2d(gs, 3);
  for (auto& bf : g2.boundary) bf.tag = "farfield";
  Discretization<Euler2D> dg2(elaw, g2);
  const MeshDofs moved = perturbed_dofs(g2, 0.015);
  REQUIRE(mesh_valid(g2, moved));
  for (int e = 0; e < g2.n_elems(); ++e) {
    const Mat B2 = dg2.element_mass_block(moved, e);
    Eigen::LLT<Mat> llt(B2);
    REQUIRE(llt.info() == Eigen::Success);
  }
}

TEST_CASE("viscous operator vanishes on linear profiles", "[dg][viscous]") {
  Burgers1D law;
  const ReferenceMesh mesh = build_uniform_1d(5, 2, -2.0, 2.0);
  Discretization<Burgers1D> disc(law, mesh);
  const MeshDofs dofs = reference_dofs(mesh);
  const SpMat L = disc.viscous_operator(dofs);
  auto lin = [](const Vec& x, double* U) { U[0] = 0.3 + 0.7 * x(0); };
  const Vec u = nodal_state(disc, dofs, lin, true);
  REQUIRE((L * u).lpNorm<Eigen::Infinity>() < 5e-9);
  auto quad = [](const Vec& x, double* U) { U[0] = x(0) * x(0); };
  const Vec uq = nodal_state(disc, dofs, quad, true);
  REQUIRE((L * uq).lpNorm<Eigen::Infinity>() > 1e-3);

  Euler2D elaw;
  GridSpec2d gs;
  gs.nx = gs.ny = 2;
  ReferenceMesh g2 = build_grid_2d(gs, 2);
  for (auto& bf : g2.boundary) bf.tag = "farfield";
  Discretization<Euler2D> d2(elaw, g2);
  const MeshDofs ref2 = reference_dofs(g2);
  const SpMat L2 = d2.viscous_operator(ref2);
  auto lin2 = [](const Vec& x, double* U) {
    U[0] = 1.0 + 0.2 * x(0) - 0.1 * x(1);
    U[1] = 0.5 + 0.1 * x(0);
    U[2] = -0.2 + 0.3 * x(1);
    U[3] = 4.0 + 0.05 * x(0) + 0.02 * x(1);
  };
  const Vec u2 = nodal_state(d2, ref2, lin2, true);
  REQUIRE((L2 * u2).lpNorm<Eigen::Infinity>() < 1e-10);
}

namespace {

// Independent dense 1d Petrov-Galerkin assembly: direct quadrature over
// elements and explicit endpoint fluxes, sharing only the basis primitive.
Vec dense_pg_oracle_1d(const Burgers1D& law, const ReferenceMesh& mesh, const MeshDofs& dofs,
                       const Vec& u, EnrichMode mode) {
  const int p = mesh.p, np = p + 1, ne = mesh.n_elems();
  const Basis trial(1, p);
  const QuadRule qr = gauss_legendre_for_degree(3 * p + 4);
  auto u_at = [&](int e, double xi) {
    std::vector<double> phi(np);
    trial.eval(&xi, phi.data());
    double v = 0;
    for (int i = 0; i < np; ++i) v += phi[i] * u(e * np + i);
    return v;
  };
  auto geom = [&](int e, double xi) { return map_eval(mesh, dofs, e, &xi); };
  auto Uphys = [&](int e, double xi) { return u_at(e, xi) / geom(e, xi).g; };

  const int nch = mode == EnrichMode::h_refine ? 2 : 1;
  const int npt = mode == EnrichMode::p_refine ? p + 2 : np;
  const Basis test(1, mode == EnrichMode::p_refine ? p + 1 : p);
  Vec r = Vec::Zero(ne * nch * npt);
  for (int e = 0; e < ne; ++e)
    for (int ch = 0; ch < nch; ++ch) {
      const double z0 = mode == EnrichMode::h_refine ? 0.5 * ch : 0.0;
      const double dz = mode == EnrichMode::h_refine ? 0.5 : 1.0;
      for (int q = 0; q < qr.size(); ++q) {
        const double zeta = qr.pts(q, 0);
        const double xi = z0 + dz * zeta;
        const MappingEval me = geom(e, xi);
        const double U = u_at(e, xi) / me.g;
        double F, s;
        law.flux(&U, &F);  // 1d transformed flux at a point equals the physical flux
        double xpt = me.x(0);
        law.source(&xpt, &U, &s);
        std::vector<double> phit(npt), dphit(npt);
        test.eval(&zeta, phit.data());
        test.eval_grad(&zeta, dphit.data());
        for (int i = 0; i < npt; ++i) {
          const double dpsi_dX = dphit[i] / dz * me.dxi_dX(0, 0);
          r((e * nch + ch) * npt + i) -=
              qr.wts(q) * dz * me.jref * (F * dpsi_dX + s * me.g * phit[i]);
        }
      }
      for (int end = 0; end < 2; ++end) {
        const double xi = z0 + dz * end;
        const double N = end == 0 ? -1.0 : 1.0;
        double fs;
        const bool left_bnd = (e == 0 && xi == 0.0);
        const bool right_bnd = (e == ne - 1 && xi == 1.0);
        const double Ui = Uphys(e, xi);
        if (left_bnd) {
          fs = -Burgers1D::godunov(law.u_left, Ui);
        } else if (right_bnd) {
          fs = Burgers1D::godunov(Ui, law.u_right);
        } else if (xi == 0.0) {
          fs = -Burgers1D::godunov(Uphys(e - 1, 1.0), Ui);
        } else if (xi == 1.0) {
          fs = Burgers1D::godunov(Ui, Uphys(e + 1, 0.0));
        } else {
          fs = N * 0.5 * Ui * Ui;  // interior child face: consistent flux
        }
        std::vector<double> phit(npt);
        const double z = static_cast<double>(end);
        test.eval(&z, phit.data());
        for (int i = 0; i < npt; ++i) r((e * nch + ch) * npt + i) += phit[i] * fs;
      }
    }
  return r;
}

}  // namespace

TEST_CASE("enriched residual matches dense oracle and vanishes on exact", "[dg][enriched]") {
  Burgers1D law;
  const ReferenceMesh mesh = build_uniform_1d(4, 2, -2.0, 2.0);
  Discretization<Burgers1D> disc(law, mesh);
  MeshDofs dofs = reference_dofs(mesh);
  dofs.coords(3, 0) += 0.07;
  dofs.coords(5, 0) -= 0.04;  // curved elements
  std::uniform_real_distribution<double> un(-0.4, 0.4);
  Vec u(disc.nu());
  for (int k = 0; k < u.size(); ++k) u(k) = 1.0 + un(rng);

  for (EnrichMode mode : {EnrichMode::p_refine, EnrichMode::h_refine}) {
    const Vec r = disc.enriched_residual(dofs, u, mode);
    const Vec ro = dense_pg_oracle_1d(law, mesh, dofs, u, mode);
    REQUIRE(r.size() == ro.size());
    REQUIRE((r - ro).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  // constant exact solution of the sourceless problem: enriched residuals vanish
  Burgers1D nosrc;
  nosrc.with_source = false;
  nosrc.u_left = nosrc.u_right = 1.3;
  Discretization<Burgers1D> dns(nosrc, mesh);
  auto cst = [](const Vec&, double* U) { U[0] = 1.3; };
  const Vec uc = nodal_state(dns, dofs, cst, true);
  REQUIRE(dns.enriched_residual(dofs, uc, EnrichMode::p_refine).lpNorm<Eigen::Infinity>() <
          1e-12);
  REQUIRE(dns.enriched_residual(dofs, uc, EnrichMode::h_refine).lpNorm<Eigen::Infinity>() <
          1e-12);
}

TEST_CASE("enriched residual 2d consistency", "[dg][enriched]") {
  Euler2D law;
  GridSpec2d gs;
  gs.nx = gs.ny = 2;
  ReferenceMesh mesh = build_grid_2d(gs, 2);
  for (auto& bf : mesh.boundary) bf.tag = "farfield";
  Discretization<Euler2D> disc(law, mesh);
  const MeshDofs dofs = perturbed_dofs(mesh, 0.03);
  double Uinf[4];
  law.freestream(Uinf);
  auto fs = [&](const Vec&, double* U) { for (int c = 0; c < 4; ++c) U[c] = Uinf[c]; };
  const Vec u = nodal_state(disc, dofs, fs, true);
  REQUIRE(disc.enriched_residual(dofs, u, EnrichMode::p_refine).lpNorm<Eigen::Infinity>() <
          1e-11);
  REQUIRE(disc.enriched_residual(dofs, u, EnrichMode::h_refine).lpNorm<Eigen::Infinity>() <
          1e-11);
}
