#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "dgtrack/objective.hpp"
#include "dgtrack/physics.hpp"

using namespace dgtrack;

namespace {
std::mt19937 rng(31);

Tables tables_for(const ReferenceMesh& mesh, int extra = 0) {
  return make_tables(mesh.dim, mesh.p, 3 * mesh.p + 1 + extra, 3 * mesh.p + 1 + extra);
}

MeshDofs wiggle(const ReferenceMesh& mesh, double amp) {
  std::uniform_real_distribution<double> un(-amp, amp);
  MeshDofs dofs = reference_dofs(mesh);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    bool bnd = false;
    if (mesh.dim == 1) bnd = (n == 0 || n == mesh.n_nodes() - 1);
    else {
      const double x = mesh.nodes(n, 0), y = mesh.nodes(n, 1);
      bnd = x < 1e-12 || x > 1 - 1e-12 || y < 1e-12 || y > 1 - 1e-12;
    }
    if (bnd) continue;
    for (int a = 0; a < mesh.dim; ++a) dofs.coords(n, a) += un(rng);
  }
  return dofs;
}

}  // namespace

TEST_CASE("element mean basics", "[objective]") {
  const ReferenceMesh mesh = build_uniform_1d(3, 1, 0.0, 3.0);
  const Tables tbl = tables_for(mesh);
  const MeshDofs dofs = reference_dofs(mesh);
  Vec u(3 * 2);
  u << 4.0, 4.0, 0.0, 1.0, 2.0, -2.0;
  REQUIRE(element_mean(mesh, tbl, dofs, u, 1, 0)(0) == Catch::Approx(4.0));
  REQUIRE(element_mean(mesh, tbl, dofs, u, 1, 1)(0) == Catch::Approx(0.5));

  // curved p=2 element: compare against a doubled-order quadrature oracle
  const ReferenceMesh m2 = build_uniform_1d(1, 2, 0.0, 1.0);
  MeshDofs d2 = reference_dofs(m2);
  d2.coords(1, 0) = 0.61;
  Vec u2(3);
  u2 << 0.3, -1.1, 2.2;
  const Tables t2 = tables_for(m2);
  const Tables t2hi = tables_for(m2, 12);
  REQUIRE(element_mean(m2, t2, d2, u2, 1, 0)(0) ==
          Catch::Approx(element_mean(m2, t2hi, d2, u2, 1, 0)(0)).epsilon(1e-12));
}

TEST_CASE("f_shk value and analytic example", "[objective]") {
  const ReferenceMesh mesh = build_uniform_1d(1, 1, 0.0, 1.0);
  const Tables tbl = tables_for(mesh);
  const MeshDofs dofs = reference_dofs(mesh);
  ObjectiveConfig cfg = ObjectiveConfig::make(1, 1, mesh.h0, 0.0);
  Vec u(2);
  u << 0.0, 1.0;
  const ObjEval ev = f_shk(mesh, tbl, dofs, u, 1, cfg);
  REQUIRE(ev.value == Catch::Approx(1.0 / 12).epsilon(1e-12));

  Vec uc = Vec::Constant(2, 3.7);
  REQUIRE(f_shk(mesh, tbl, dofs, uc, 1, cfg).value == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("f_shk invariances", "[objective][property]") {
  const ReferenceMesh mesh = build_uniform_1d(6, 3, -1.0, 1.0);
  const Tables tbl = tables_for(mesh);
  const MeshDofs dofs = wiggle(mesh, 0.02);
  ObjectiveConfig cfg = ObjectiveConfig::make(1, 1, mesh.h0, 0.0);
  std::uniform_real_distribution<double> un(-2.0, 2.0);
  Vec u(mesh.n_elems() * 4);
  for (int k = 0; k < u.size(); ++k) u(k) = un(rng);
  const double f0 = f_shk(mesh, tbl, dofs, u, 1, cfg, false).value;
  REQUIRE(f0 >= 0.0);
  // shift invariance
  Vec us = u.array() + 0.83;
  REQUIRE(f_shk(mesh, tbl, dofs, us, 1, cfg, false).value == Catch::Approx(f0).epsilon(1e-12));
  // quadratic homogeneity
  Vec ul = 3.0 * u;
  REQUIRE(f_shk(mesh, tbl, dofs, ul, 1, cfg, false).value ==
          Catch::Approx(9.0 * f0).epsilon(1e-12));
}

TEST_CASE("objective gradients match finite differences", "[objective][jacobian]") {
  SECTION("1d multi-component") {
    const ReferenceMesh mesh = build_uniform_1d(4, 2, 0.0, 1.0);
    const Tables tbl = tables_for(mesh);
    const MeshDofs dofs = wiggle(mesh, 0.01);
    ObjectiveConfig cfg = ObjectiveConfig::make(3, 1, mesh.h0, 0.7);
    cfg.W(0, 0) = 2.0;
    cfg.W(1, 2) = cfg.W(2, 1) = 0.3;
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    Vec u(mesh.n_elems() * 3 * 3);
    for (int k = 0; k < u.size(); ++k) u(k) = un(rng);
    const ObjEval ev = f_total(mesh, tbl, dofs, u, 3, cfg);
    const double eps = 1e-6;
    for (int k = 0; k < u.size(); k += 2) {
      Vec up = u, um = u;
      up(k) += eps;
      um(k) -= eps;
      const double fd = (f_total(mesh, tbl, dofs, up, 3, cfg, false).value -
                         f_total(mesh, tbl, dofs, um, 3, cfg, false).value) /
                        (2 * eps);
      REQUIRE(ev.grad_u(k) == Catch::Approx(fd).epsilon(1e-6).margin(1e-9));
    }
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      MeshDofs dp = dofs, dm = dofs;
      dp.coords(n, 0) += eps;
      dm.coords(n, 0) -= eps;
      const double fd = (f_total(mesh, tbl, dp, u, 3, cfg, false).value -
                         f_total(mesh, tbl, dm, u, 3, cfg, false).value) /
                        (2 * eps);
      REQUIRE(ev.grad_x(n) == Catch::Approx(fd).epsilon(1e-6).margin(1e-9));
    }
  }
  SECTION("2d") {
    GridSpec2d gs;
    gs.nx = gs.ny = 2;
    const ReferenceMesh mesh = build_grid_2d(gs, 2);
    const Tables tbl = tables_for(mesh);
    const MeshDofs dofs = wiggle(mesh, 0.02);
    ObjectiveConfig cfg = ObjectiveConfig::make(2, 2, mesh.h0, 0.4);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    Vec u(mesh.n_elems() * tbl.np() * 2);
    for (int k = 0; k < u.size(); ++k) u(k) = un(rng);
    const ObjEval ev = f_total(mesh, tbl, dofs, u, 2, cfg);
    const double eps = 1e-6;
    for (int k = 0; k < u.size(); k += 7) {
      Vec up = u, um = u;
      up(k) += eps;
      um(k) -= eps;
      const double fd = (f_total(mesh, tbl, dofs, up, 2, cfg, false).value -
                         f_total(mesh, tbl, dofs, um, 2, cfg, false).value) /
                        (2 * eps);
      REQUIRE(ev.grad_u(k) == Catch::Approx(fd).epsilon(1e-6).margin(1e-9));
    }
    for (int n = 0; n < mesh.n_nodes(); n += 3)
      for (int a = 0; a < 2; ++a) {
        MeshDofs dp = dofs, dm = dofs;
        dp.coords(n, a) += eps;
        dm.coords(n, a) -= eps;
        const double fd = (f_total(mesh, tbl, dp, u, 2, cfg, false).value -
                           f_total(mesh, tbl, dm, u, 2, cfg, false).value) /
                          (2 * eps);
        REQUIRE(ev.grad_x(xidx(n, 2, a)) == Catch::Approx(fd).epsilon(1e-5).margin(1e-8));
      }
  }
}

TEST_CASE("f_msh analytic values", "[objective]") {
  // 1d uniform: zero up to the |.| smoothing epsilon
  const ReferenceMesh mesh = build_uniform_1d(5, 2, 0.0, 1.0);
  const Tables tbl = tables_for(mesh);
  ObjectiveConfig cfg = ObjectiveConfig::make(1, 1, mesh.h0, 1.0);
  REQUIRE(f_msh(mesh, tbl, reference_dofs(mesh), cfg, false).value <
          5 * mesh.h0 * 2 * cfg.eps_abs);

  // crushing one element blows up monotonically
  MeshDofs dofs = reference_dofs(mesh);
  double prev = f_msh(mesh, tbl, dofs, cfg, false).value;
  for (double shrink : {0.5, 0.1, 0.01, 1e-4}) {
    MeshDofs dd = reference_dofs(mesh);
    const double xl = mesh.nodes(2, 0), xr = mesh.nodes(4, 0);
    // squeeze second element [xl, xr] to width shrink*(xr-xl), nodes follow affinely
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      const double X = mesh.nodes(n, 0);
      if (X >= xl && X <= xr) dd.coords(n, 0) = xl + (X - xl) * shrink;
      else if (X > xr) dd.coords(n, 0) = X - (1 - shrink) * (xr - xl);
    }
    const double val = f_msh(mesh, tbl, dd, cfg, false).value;
    REQUIRE(val > prev);
    prev = val;
  }

  // 2d identity map: f_msh = 4 |Omega|
  GridSpec2d gs;
  gs.nx = gs.ny = 3;
  const ReferenceMesh g2 = build_grid_2d(gs, 1);
  const Tables t2 = tables_for(g2);
  ObjectiveConfig c2 = ObjectiveConfig::make(1, 2, g2.h0, 1.0);
  REQUIRE(f_msh(g2, t2, reference_dofs(g2), c2, false).value == Catch::Approx(4.0).epsilon(1e-12));

  // frame indifference under rigid rotation
  const MeshDofs moved = wiggle(g2, 0.03);
  const double f0 = f_msh(g2, t2, moved, c2, false).value;
  const double th = 0.73;
  MeshDofs rot = moved;
  for (int n = 0; n < g2.n_nodes(); ++n) {
    const double x = moved.coords(n, 0), y = moved.coords(n, 1);
    rot.coords(n, 0) = std::cos(th) * x - std::sin(th) * y;
    rot.coords(n, 1) = std::sin(th) * x + std::cos(th) * y;
  }
  REQUIRE(f_msh(g2, t2, rot, c2, false).value == Catch::Approx(f0).epsilon(1e-12));
}

TEST_CASE("f_total composition", "[objective]") {
  const ReferenceMesh mesh = build_uniform_1d(4, 1, -1.0, 1.0);
  const Tables tbl = tables_for(mesh);
  const MeshDofs dofs = wiggle(mesh, 0.05);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  Vec u(8);
  for (int k = 0; k < 8; ++k) u(k) = un(rng);
  ObjectiveConfig cfg = ObjectiveConfig::make(1, 1, mesh.h0, 0.0);
  REQUIRE(f_total(mesh, tbl, dofs, u, 1, cfg, false).value ==
          Catch::Approx(f_shk(mesh, tbl, dofs, u, 1, cfg, false).value));
  cfg.alpha = 13.0;
  const double ft = f_total(mesh, tbl, dofs, u, 1, cfg, false).value;
  REQUIRE(ft == Catch::Approx(f_shk(mesh, tbl, dofs, u, 1, cfg, false).value +
                              13.0 * f_msh(mesh, tbl, dofs, cfg, false).value)
                    .epsilon(1e-13));
  const ObjEval e1 = f_total(mesh, tbl, dofs, u, 1, cfg);
  const ObjEval e2 = f_shk(mesh, tbl, dofs, u, 1, cfg);
  const ObjEval e3 = f_msh(mesh, tbl, dofs, cfg);
  REQUIRE((e1.grad_x - e2.grad_x - 13.0 * e3.grad_x).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("rankine-hugoniot face indicator", "[objective]") {
  Burgers1D law;
  const ReferenceMesh mesh = build_uniform_1d(2, 1, -1.0, 1.0);
  Discretization<Burgers1D> disc(law, mesh);
  const MeshDofs dofs = reference_dofs(mesh);
  Mat W = Mat::Identity(1, 1);
  // stationary shock traces 2 / -2: flux jump vanishes
  Vec u(4);
  u << 2.0, 2.0, -2.0, -2.0;
  REQUIRE(f_rh(disc, dofs, u, W) == Catch::Approx(0.0).margin(1e-14));
  // traces 1 / 2: (2 - 1/2)^2 = 2.25 on a unit-measure 1d face
  u << 1.0, 1.0, 2.0, 2.0;
  REQUIRE(f_rh(disc, dofs, u, W) == Catch::Approx(2.25).epsilon(1e-13));
  // globally continuous field
  u << 0.3, 0.9, 0.9, 1.4;
  REQUIRE(f_rh(disc, dofs, u, W) == Catch::Approx(0.0).margin(1e-14));
}
