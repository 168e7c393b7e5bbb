#pragma once

#include <cmath>
#include <string>

#include "dgtrack/common.hpp"
#include "dgtrack/dual.hpp"

namespace dgtrack {

// Boundary-condition slots shared by all laws; each law interprets the ones
// its tags resolve to.
enum BcTag : int {
  bc_dirichlet_left = 0,
  bc_dirichlet_right = 1,
  bc_inflow = 2,
  bc_outflow = 3,
  bc_wall = 4,
  bc_farfield = 5,
};

// ---------------------------------------------------------------------------
// Modified inviscid Burgers with discontinuous source. Exact solution has a
// stationary shock at x = 0; Dirichlet data is imposed weakly through the
// exact Riemann (Godunov) flux of the homogeneous equation.
// ---------------------------------------------------------------------------
struct Burgers1D {
  static constexpr int DIM = 1;
  static constexpr int NC = 1;
  double beta = -0.1;
  double u_left = 2.0;
  double u_right = -2.0;
  bool with_source = true;

  static double exact(double x) {
    const double s = std::sin(M_PI * x / 2.0);
    return x < 0.0 ? 2.0 + s : -2.0 - s;
  }

  template <class T>
  static T source_term(const T& x, double beta) {
    const T base = T(2.0) + sin(x * T(M_PI / 2.0));
    const T dbase = cos(x * T(M_PI / 2.0)) * T(M_PI / 2.0);
    return value_of(x) < 0.0 ? base * (dbase - T(beta)) : base * (dbase + T(beta));
  }

  template <class T>
  void flux(const T U[NC], T F[NC * DIM]) const {
    F[0] = T(0.5) * U[0] * U[0];
  }

  template <class T>
  void source(const T x[DIM], const T U[NC], T s[NC]) const {
    s[0] = with_source ? T(beta) * U[0] + source_term(x[0], beta) : T(0.0);
  }
  bool has_source() const { return with_source; }

  // Godunov flux for f(u) = u^2/2 in the +x convention.
  template <class T>
  static T godunov(const T& ul, const T& ur) {
    if (ul > ur) {  // shock, speed (ul+ur)/2
      const T s = T(0.5) * (ul + ur);
      return s > T(0.0) ? T(0.5) * ul * ul : T(0.5) * ur * ur;
    }
    if (ul > T(0.0)) return T(0.5) * ul * ul;
    if (ur < T(0.0)) return T(0.5) * ur * ur;
    return T(0.0);  // transonic rarefaction, sonic point u = 0
  }

  template <class T>
  void numflux(const T UL[NC], const T UR[NC], const T n[DIM], T out[NC]) const {
    out[0] = n[0] > T(0.0) ? godunov(UL[0], UR[0]) : -godunov(UR[0], UL[0]);
  }

  int resolve_tag(const std::string& tag) const {
    if (tag == "left") return bc_dirichlet_left;
    if (tag == "right") return bc_dirichlet_right;
    throw config_error("Burgers1D: unknown boundary tag " + tag);
  }

  template <class T>
  void bflux(int tag, const T* /*x*/, const T n[DIM], const T Uin[NC], T out[NC]) const {
    T Ubc[NC];
    Ubc[0] = T(tag == bc_dirichlet_left ? u_left : u_right);
    numflux(Uin, Ubc, n, out);
  }

  void check_admissible(const double U[NC]) const {
    if (!std::isfinite(U[0])) throw physics_error("Burgers1D: non-finite state");
  }
  double wavespeed(const double U[NC]) const { return std::abs(U[0]); }
};

// ---------------------------------------------------------------------------
// Harten-Hyman entropy fix: |lambda| -> lambda^2/(4 delta) + delta when
// |lambda| < 2 delta, with delta = max(0, lam(Uroe)-lam(UL), lam(UR)-lam(Uroe)).
// ---------------------------------------------------------------------------
template <class T>
inline T entropy_fixed_abs(const T& lam, const T& lam_l, const T& lam_r) {
  const T zero(0.0);
  T delta = max(zero, max(lam - lam_l, lam_r - lam));
  T a = abs(lam);
  if (a < T(2.0) * delta) return lam * lam / (T(4.0) * delta) + delta;
  return a;
}

// ---------------------------------------------------------------------------
// Quasi-1d Euler in a stream tube of area A(x). With conservative variables
// q = A (rho, rho u, rho E) the flux is the standard 1d Euler flux of q
// (A p = (gamma-1)(q3 - q2^2/(2 q1)) is area-free) and A enters only through
// the momentum source (p/A) A'.
// ---------------------------------------------------------------------------
struct Quasi1dEuler {
  static constexpr int DIM = 1;
  static constexpr int NC = 3;
  double gamma = 1.4;
  // inflow/outflow data (rho, velocity, Mach)
  double rho_in = 1.0, u_in = 1.0, mach_in = 0.40;
  double rho_out = 1.0, u_out = 1.0, mach_out = 0.45;
  double throat = 0.8;  // nozzle throat height; area = 1 outside [0.1, 0.9]

  template <class T>
  T area(const T& x) const {
    const double xv = value_of(x);
    if (xv < 0.1 || xv > 0.9) return T(1.0);
    const T c = cos((x - T(0.5)) * T(M_PI / 0.8));
    return T(1.0) - T(1.0 - throat) * c * c;
  }
  template <class T>
  T area_deriv(const T& x) const {
    const double xv = value_of(x);
    if (xv < 0.1 || xv > 0.9) return T(0.0);
    const T th = (x - T(0.5)) * T(M_PI / 0.8);
    return T((1.0 - throat) * M_PI / 0.8) * sin(T(2.0) * th);
  }

  template <class T>
  T pressure_like(const T q[NC]) const {  // A*p, independent of A
    return T(gamma - 1.0) * (q[2] - T(0.5) * q[1] * q[1] / q[0]);
  }

  template <class T>
  void flux(const T q[NC], T F[NC * DIM]) const {
    const T P = pressure_like(q);
    const T u = q[1] / q[0];
    F[0] = q[1];
    F[1] = q[1] * u + P;
    F[2] = (q[2] + P) * u;
  }

  template <class T>
  void source(const T x[DIM], const T q[NC], T s[NC]) const {
    const T A = area(x[0]);
    const T P = pressure_like(q);  // = A p
    s[0] = T(0.0);
    s[1] = P / (A * A) * area_deriv(x[0]);
    s[2] = T(0.0);
  }
  bool has_source() const { return true; }

  // Roe flux in the +x convention with Harten-Hyman fix.
  template <class T>
  void roe(const T qL[NC], const T qR[NC], T out[NC]) const {
    check_admissible_t(qL);
    check_admissible_t(qR);
    const T rl = qL[0], rr = qR[0];
    const T ul = qL[1] / rl, ur = qR[1] / rr;
    const T pl = pressure_like(qL), pr = pressure_like(qR);
    const T hl = (qL[2] + pl) / rl, hr = (qR[2] + pr) / rr;
    const T cl = sqrt(T(gamma) * pl / rl), cr = sqrt(T(gamma) * pr / rr);
    const T sl = sqrt(rl), sr = sqrt(rr);
    const T um = (sl * ul + sr * ur) / (sl + sr);
    const T hm = (sl * hl + sr * hr) / (sl + sr);
    const T cm2 = T(gamma - 1.0) * (hm - T(0.5) * um * um);
    if (!(value_of(cm2) > 0.0)) throw physics_error("Quasi1dEuler: imaginary Roe sound speed");
    const T cm = sqrt(cm2);
    const T rm = sl * sr;
    const T dr = rr - rl, du = ur - ul, dp = pr - pl;
    const T a1 = (dp - rm * cm * du) / (T(2.0) * cm2);
    const T a2 = dr - dp / cm2;
    const T a3 = (dp + rm * cm * du) / (T(2.0) * cm2);
    const T l1 = entropy_fixed_abs(um - cm, ul - cl, ur - cr);
    const T l2 = entropy_fixed_abs(um, ul, ur);
    const T l3 = entropy_fixed_abs(um + cm, ul + cl, ur + cr);
    T FL[NC], FR[NC];
    flux(qL, FL);
    flux(qR, FR);
    out[0] = T(0.5) * (FL[0] + FR[0]) -
             T(0.5) * (l1 * a1 + l2 * a2 + l3 * a3);
    out[1] = T(0.5) * (FL[1] + FR[1]) -
             T(0.5) * (l1 * a1 * (um - cm) + l2 * a2 * um + l3 * a3 * (um + cm));
    out[2] = T(0.5) * (FL[2] + FR[2]) -
             T(0.5) * (l1 * a1 * (hm - um * cm) + l2 * a2 * (T(0.5) * um * um) +
                       l3 * a3 * (hm + um * cm));
  }

  template <class T>
  void numflux(const T UL[NC], const T UR[NC], const T n[DIM], T out[NC]) const {
    if (n[0] > T(0.0)) {
      roe(UL, UR, out);
    } else {
      roe(UR, UL, out);
      for (int c = 0; c < NC; ++c) out[c] = -out[c];
    }
  }

  // Conservative exterior state from (rho, u, M); area = 1 at both ends.
  void boundary_state(int tag, double q[NC]) const {
    const bool in = (tag == bc_inflow);
    const double rho = in ? rho_in : rho_out;
    const double u = in ? u_in : u_out;
    const double M = in ? mach_in : mach_out;
    const double c = u / M;
    const double p = rho * c * c / gamma;
    q[0] = rho;
    q[1] = rho * u;
    q[2] = p / (gamma - 1.0) + 0.5 * rho * u * u;
  }

  int resolve_tag(const std::string& tag) const {
    if (tag == "left") return bc_inflow;
    if (tag == "right") return bc_outflow;
    throw config_error("Quasi1dEuler: unknown boundary tag " + tag);
  }

  template <class T>
  void bflux(int tag, const T* /*x*/, const T n[DIM], const T Uin[NC], T out[NC]) const {
    double qb[NC];
    boundary_state(tag, qb);
    T Ubc[NC] = {T(qb[0]), T(qb[1]), T(qb[2])};
    numflux(Uin, Ubc, n, out);
  }

  template <class T>
  void check_admissible_t(const T q[NC]) const {
    if (!(value_of(q[0]) > 0.0) || !(value_of(pressure_like(q)) > 0.0))
      throw physics_error("Quasi1dEuler: inadmissible state");
  }
  void check_admissible(const double q[NC]) const { check_admissible_t(q); }
  double wavespeed(const double q[NC]) const {
    const double u = q[1] / q[0];
    const double c = std::sqrt(gamma * pressure_like(q) / q[0]);
    return std::abs(u) + c;
  }
};

// ---------------------------------------------------------------------------
// 2d compressible Euler. Wall/symmetry and farfield conditions are imposed
// weakly through the Roe solver against a reflected ghost state or the
// freestream.
// ---------------------------------------------------------------------------
struct EulerParams {
  double gamma = 1.4;
  double rho_inf = 1.0;
  double u_inf = 1.0;   // freestream speed, along +x
  double mach_inf = 2.0;

  double c_inf() const { return u_inf / mach_inf; }
  double p_inf() const { return rho_inf * c_inf() * c_inf() / gamma; }
  double total_enthalpy() const {
    return c_inf() * c_inf() / (gamma - 1.0) + 0.5 * u_inf * u_inf;
  }
  // normal-shock stagnation pressure (supersonic freestream)
  double stagnation_pressure() const {
    const double M2 = mach_inf * mach_inf, g = gamma;
    return p_inf() * (1.0 - g + 2.0 * g * M2) / (g + 1.0) *
           std::pow((g + 1.0) * (g + 1.0) * M2 / (4.0 * g * M2 - 2.0 * (g - 1.0)),
                    g / (g - 1.0));
  }
};

struct Euler2D {
  static constexpr int DIM = 2;
  static constexpr int NC = 4;
  EulerParams prm;

  template <class T>
  T pressure(const T U[NC]) const {
    return T(prm.gamma - 1.0) * (U[3] - T(0.5) * (U[1] * U[1] + U[2] * U[2]) / U[0]);
  }

  template <class T>
  void flux(const T U[NC], T F[NC * DIM]) const {
    const T p = pressure(U);
    const T u = U[1] / U[0], v = U[2] / U[0];
    F[0 * DIM + 0] = U[1];
    F[0 * DIM + 1] = U[2];
    F[1 * DIM + 0] = U[1] * u + p;
    F[1 * DIM + 1] = U[1] * v;
    F[2 * DIM + 0] = U[2] * u;
    F[2 * DIM + 1] = U[2] * v + p;
    F[3 * DIM + 0] = (U[3] + p) * u;
    F[3 * DIM + 1] = (U[3] + p) * v;
  }

  template <class T>
  void source(const T* /*x*/, const T* /*U*/, T s[NC]) const {
    for (int c = 0; c < NC; ++c) s[c] = T(0.0);
  }
  bool has_source() const { return false; }

  // Roe flux with Harten-Hyman fix for a unit normal n.
  template <class T>
  void numflux(const T UL[NC], const T UR[NC], const T n[DIM], T out[NC]) const {
    check_admissible_t(UL);
    check_admissible_t(UR);
    const T g(prm.gamma);
    const T rl = UL[0], rr = UR[0];
    const T ul = UL[1] / rl, vl = UL[2] / rl;
    const T ur = UR[1] / rr, vr = UR[2] / rr;
    const T pl = pressure(UL), pr = pressure(UR);
    const T hl = (UL[3] + pl) / rl, hr = (UR[3] + pr) / rr;
    const T cl = sqrt(g * pl / rl), cr = sqrt(g * pr / rr);
    const T qnl = ul * n[0] + vl * n[1], qnr = ur * n[0] + vr * n[1];
    const T sl = sqrt(rl), sr = sqrt(rr);
    const T w = T(1.0) / (sl + sr);
    const T um = (sl * ul + sr * ur) * w, vm = (sl * vl + sr * vr) * w;
    const T hm = (sl * hl + sr * hr) * w;
    const T qm = um * n[0] + vm * n[1];
    const T cm2 = T(prm.gamma - 1.0) * (hm - T(0.5) * (um * um + vm * vm));
    if (!(value_of(cm2) > 0.0)) throw physics_error("Euler2D: imaginary Roe sound speed");
    const T cm = sqrt(cm2);
    const T rm = sl * sr;
    const T t0 = -n[1], t1 = n[0];  // tangent
    const T dr = rr - rl, dp = pr - pl;
    const T dqn = qnr - qnl;
    const T dqt = (ur * t0 + vr * t1) - (ul * t0 + vl * t1);
    const T a1 = (dp - rm * cm * dqn) / (T(2.0) * cm2);
    const T a2 = dr - dp / cm2;
    const T a3 = rm * dqt;
    const T a4 = (dp + rm * cm * dqn) / (T(2.0) * cm2);
    const T l1 = entropy_fixed_abs(qm - cm, qnl - cl, qnr - cr);
    const T l2 = entropy_fixed_abs(qm, qnl, qnr);
    const T l4 = entropy_fixed_abs(qm + cm, qnl + cl, qnr + cr);
    T FL[NC * DIM], FR[NC * DIM];
    flux(UL, FL);
    flux(UR, FR);
    const T qtm = um * t0 + vm * t1;
    // rows: [1, u-cn, v-cn2, H-c qn], [1,u,v,k], [0,t,qt], [1,u+cn,...]
    T diss[NC];
    diss[0] = l1 * a1 + l2 * a2 + l4 * a4;
    diss[1] = l1 * a1 * (um - cm * n[0]) + l2 * a2 * um + l2 * a3 * t0 + l4 * a4 * (um + cm * n[0]);
    diss[2] = l1 * a1 * (vm - cm * n[1]) + l2 * a2 * vm + l2 * a3 * t1 + l4 * a4 * (vm + cm * n[1]);
    diss[3] = l1 * a1 * (hm - cm * qm) + l2 * a2 * T(0.5) * (um * um + vm * vm) + l2 * a3 * qtm +
              l4 * a4 * (hm + cm * qm);
    for (int c = 0; c < NC; ++c) {
      const T fn = T(0.5) * ((FL[c * DIM + 0] + FR[c * DIM + 0]) * n[0] +
                             (FL[c * DIM + 1] + FR[c * DIM + 1]) * n[1]);
      out[c] = fn - T(0.5) * diss[c];
    }
  }

  void freestream(double U[NC]) const {
    U[0] = prm.rho_inf;
    U[1] = prm.rho_inf * prm.u_inf;
    U[2] = 0.0;
    U[3] = prm.p_inf() / (prm.gamma - 1.0) + 0.5 * prm.rho_inf * prm.u_inf * prm.u_inf;
  }

  int resolve_tag(const std::string& tag) const {
    if (tag == "wall" || tag == "symmetry") return bc_wall;
    if (tag == "farfield") return bc_farfield;
    throw config_error("Euler2D: unknown boundary tag " + tag);
  }

  template <class T>
  void bflux(int tag, const T* /*x*/, const T n[DIM], const T Uin[NC], T out[NC]) const {
    if (tag == bc_wall) {
      const T mn = Uin[1] * n[0] + Uin[2] * n[1];
      T Ug[NC];
      Ug[0] = Uin[0];
      Ug[1] = Uin[1] - T(2.0) * mn * n[0];
      Ug[2] = Uin[2] - T(2.0) * mn * n[1];
      Ug[3] = Uin[3];
      numflux(Uin, Ug, n, out);
    } else {
      double Uf[NC];
      freestream(Uf);
      T Ubc[NC] = {T(Uf[0]), T(Uf[1]), T(Uf[2]), T(Uf[3])};
      numflux(Uin, Ubc, n, out);
    }
  }

  template <class T>
  void check_admissible_t(const T U[NC]) const {
    if (!(value_of(U[0]) > 0.0) || !(value_of(pressure(U)) > 0.0))
      throw physics_error("Euler2D: inadmissible state");
  }
  void check_admissible(const double U[NC]) const { check_admissible_t(U); }
  double wavespeed(const double U[NC]) const {
    const double u = U[1] / U[0], v = U[2] / U[0];
    return std::sqrt(u * u + v * v) + std::sqrt(prm.gamma * pressure(U) / U[0]);
  }
};

}  // namespace dgtrack
