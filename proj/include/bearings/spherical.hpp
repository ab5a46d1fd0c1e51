#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearings/config.hpp"
#include "bearings/errors.hpp"
#include "bearings/geometry.hpp"

namespace bearings {

/// Full parameter set of the spherical system: geometry, per-ball masses and
/// scalar inertias, and the principal inertias diag(A, B, C) of the moving
/// sphere. eps, delta and rho are derived from the geometry at construction.
struct SphericalParams {
  Configuration config = Configuration::I;
  double R = 1.0;      ///< fixed-sphere radius
  double r = 1.0;      ///< ball radius
  double rho = 3.0;    ///< moving-sphere radius (derived)
  double eps = 0.0;
  double delta = 0.0;
  double sign = 1.0;   ///< +1 for I/III, -1 for II/IV
  double A = 1.0, B = 1.0, C = 1.0;
  std::vector<double> mass;     ///< per-ball masses
  std::vector<double> inertia;  ///< per-ball scalar inertias
  bool synthetic = false;       ///< eps/delta set directly, not from geometry

  int n() const { return static_cast<int>(mass.size()); }

  static SphericalParams make(Configuration config, double R, double r,
                              const Vec3& sphere_inertia,
                              std::vector<double> masses,
                              std::vector<double> inertias) {
    SphericalParams p;
    p.config = config;
    p.R = R;
    p.r = r;
    const DerivedGeometry g = derive_params(config, R, r);
    p.eps = g.eps;
    p.delta = g.delta;
    p.rho = g.rho;
    p.sign = sign_convention(config);
    p.A = sphere_inertia.x();
    p.B = sphere_inertia.y();
    p.C = sphere_inertia.z();
    p.mass = std::move(masses);
    p.inertia = std::move(inertias);
    p.validate();
    return p;
  }

  /// Parameter set with eps/delta prescribed directly instead of derived from
  /// an admissible geometry. Used for formal limits (eps = 1 reproduces the
  /// fixed-center support system) and for parameter sweeps of the integral
  /// ansatz; the reduced equations are well defined for any eps, delta.
  static SphericalParams synthetic_params(double eps, double delta, double r,
                                          const Vec3& sphere_inertia,
                                          std::vector<double> masses,
                                          std::vector<double> inertias) {
    SphericalParams p;
    p.config = Configuration::I;
    p.R = 1.0;
    p.r = r;
    p.rho = 1.0;
    p.eps = eps;
    p.delta = delta;
    p.sign = 1.0;
    p.A = sphere_inertia.x();
    p.B = sphere_inertia.y();
    p.C = sphere_inertia.z();
    p.mass = std::move(masses);
    p.inertia = std::move(inertias);
    p.synthetic = true;
    p.validate();
    return p;
  }

  void validate() const {
    if (mass.empty()) throw std::domain_error("at least one ball is required");
    if (mass.size() != inertia.size())
      throw std::domain_error("mass and inertia lists must have equal length");
    if ((config == Configuration::III || config == Configuration::IV) &&
        mass.size() != 1)
      throw std::domain_error("configurations III and IV admit exactly one ball");
    if (!(A > 0.0 && B > 0.0 && C > 0.0))
      throw std::domain_error("sphere inertias A, B, C must be positive");
    for (double m : mass)
      if (!(m > 0.0)) throw std::domain_error("ball masses must be positive");
    for (double i : inertia)
      if (!(i > 0.0)) throw std::domain_error("ball inertias must be positive");
    if (!(r > 0.0)) throw std::domain_error("ball radius must be positive");
  }

  Mat3 sphere_inertia() const { return Vec3(A, B, C).asDiagonal(); }

  /// Per-ball coupling coefficient delta^2 (I_i + m_i r^2); for n = 1 this is
  /// the parameter D of the reduced single-ball system.
  double ball_coupling(int i) const {
    return delta * delta * (inertia[i] + mass[i] * r * r);
  }

  double coupling_D() const {
    require_single_ball("coupling_D");
    return ball_coupling(0);
  }

  /// d = delta I_1 c_1 of the reduced single-ball system.
  double coupling_d(double c1) const {
    require_single_ball("coupling_d");
    return delta * inertia[0] * c1;
  }

  /// Distance factor between the ball-center velocity and gamma-dot in the
  /// frame of the fixed sphere; positive in all admissible geometries.
  double contact_lever() const {
    switch (config) {
      case Configuration::I: return R + r;
      case Configuration::II: return R - r;
      case Configuration::III: return r - R;
      case Configuration::IV: return R - r;
    }
    throw std::logic_error("unreachable configuration tag");
  }

  /// Minimal admissible |Gamma_i - Gamma_j| at the initial state (ball
  /// non-overlap), defined for configurations I and II with n >= 2.
  double feasibility_bound() const {
    return 2.0 * r / (config == Configuration::I ? (R + r) : (R - r));
  }

  void require_single_ball(const char* who) const {
    if (mass.size() != 1)
      throw std::invalid_argument(std::string(who) + " requires n = 1");
  }
};

/// A point of the second reduced phase space R^3 x (S^2)^n together with the
/// spin constants c_i = <Omega_i, Gamma_i> (first integrals, fixed at
/// construction and never integrated).
struct ReducedState {
  Vec3 omega = Vec3::Zero();
  std::vector<Vec3> gamma;
  std::vector<double> c;

  int n() const { return static_cast<int>(gamma.size()); }
};

/// Reduced state plus the attitude matrices of the moving sphere and the
/// balls, for reconstruction of the full motion.
struct FullState {
  ReducedState reduced;
  Mat3 g = Mat3::Identity();
  std::vector<Mat3> gi;
};

inline constexpr double kUnitGammaTol = 1e-9;

/// Validates sizes, unit gamma vectors, and (configurations I and II with
/// n >= 2) the initial ball non-overlap condition. Invariance of the pairwise
/// products makes a one-time check sufficient.
inline void validate_state(const SphericalParams& params,
                           const ReducedState& state) {
  if (state.gamma.size() != static_cast<size_t>(params.n()) ||
      state.c.size() != static_cast<size_t>(params.n()))
    throw std::invalid_argument("state arity does not match parameter set");
  for (const Vec3& g : state.gamma) {
    if (std::abs(g.norm() - 1.0) > kUnitGammaTol)
      throw std::invalid_argument("gamma vectors must be unit length (|1 - |gamma|| <= 1e-9)");
  }
  if (!state.omega.allFinite())
    throw std::invalid_argument("omega must be finite");
  if (params.n() >= 2 && !params.synthetic &&
      (params.config == Configuration::I || params.config == Configuration::II)) {
    const double bound = params.feasibility_bound();
    for (int i = 0; i < params.n(); ++i)
      for (int j = i + 1; j < params.n(); ++j) {
        const double dist = (state.gamma[i] - state.gamma[j]).norm();
        if (dist < bound)
          throw std::domain_error(
              "balls " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
              " overlap: |gamma_i - gamma_j| = " + std::to_string(dist) +
              " < 2r/(R " + (params.config == Configuration::I ? "+" : "-") +
              " r) = " + std::to_string(bound));
      }
  }
}

/// Modified inertia operator: diag(A,B,C) + sum_i delta^2 (I_i + m_i r^2)
/// (E - Gamma_i Gamma_i^T). Symmetric positive definite for admissible
/// parameters.
inline Mat3 modified_inertia(const SphericalParams& params,
                             const std::vector<Vec3>& gammas) {
  Mat3 op = params.sphere_inertia();
  for (size_t i = 0; i < gammas.size(); ++i) {
    const double k = params.ball_coupling(static_cast<int>(i));
    op += k * (Mat3::Identity() - gammas[i] * gammas[i].transpose());
  }
  return op;
}

/// Angular velocity of ball i recovered from the constraints:
/// Omega_i = c_i Gamma_i + delta Omega - delta <Gamma_i, Omega> Gamma_i.
inline Vec3 omega_ball(const SphericalParams& params, const Vec3& omega,
                       const Vec3& gamma_i, double c_i) {
  return c_i * gamma_i + params.delta * (omega - gamma_i.dot(omega) * gamma_i);
}

/// Quantities derived from a reduced state. D, d, L are populated for n = 1.
struct DerivedQuantities {
  Mat3 inertia = Mat3::Zero();  ///< modified inertia operator
  Vec3 M = Vec3::Zero();        ///< inertia * omega
  Vec3 N = Vec3::Zero();        ///< delta sum_i I_i c_i Gamma_i
  Vec3 M_total = Vec3::Zero();  ///< M + N
  double D = 0.0;
  double d = 0.0;
  double L = 0.0;
  bool single_ball = false;
};

inline DerivedQuantities derived_quantities(const SphericalParams& params,
                                            const ReducedState& state) {
  DerivedQuantities q;
  q.inertia = modified_inertia(params, state.gamma);
  q.M = q.inertia * state.omega;
  for (int i = 0; i < state.n(); ++i)
    q.N += params.delta * params.inertia[i] * state.c[i] * state.gamma[i];
  q.M_total = q.M + q.N;
  if (state.n() == 1) {
    q.single_ball = true;
    q.D = params.ball_coupling(0);
    q.d = params.coupling_d(state.c[0]);
    q.L = state.omega.dot(state.gamma[0]);
  }
  return q;
}

/// Relative floor under det(inertia) before the 3x3 solve is declared
/// degenerate; scale-aware via the product of the shifted principal inertias.
inline double inertia_det_floor(const SphericalParams& params) {
  double shift = 0.0;
  for (int i = 0; i < params.n(); ++i) shift += params.ball_coupling(i);
  return 1e-12 * (params.A + shift) * (params.B + shift) * (params.C + shift);
}

struct ReducedDeriv {
  Vec3 omega_dot = Vec3::Zero();
  std::vector<Vec3> gamma_dot;
};

/// Reduced equations of motion on R^3 x (S^2)^n.
///
/// d(M + N)/dt = (M + N) x Omega together with dGamma_i/dt = eps Gamma_i x
/// Omega closes into a single 3x3 symmetric solve: the Gamma-induced time
/// dependence of the inertia operator and of N moves to the right-hand side,
///
///   inertia * dOmega/dt = (M + N) x Omega
///                         + eps sum_i k_i <Gamma_i, Omega> (Gamma_i x Omega)
///                         - eps N x Omega,
///
/// which for n = 1 reproduces the explicit single-ball form
/// dOmega/dt = inertia^-1 (diag(A,B,C) Omega x Omega
///                         + (eps - 1)(D L - d) Gamma x Omega).
inline ReducedDeriv reduced_field(const SphericalParams& params,
                                  const ReducedState& state) {
  const int n = state.n();
  const Mat3 op = modified_inertia(params, state.gamma);
  const double det = op.determinant();
  if (!(det > inertia_det_floor(params)))
    throw NumericalError("modified inertia operator numerically degenerate (det = " +
                         std::to_string(det) + ")");

  Vec3 big_n = Vec3::Zero();
  for (int i = 0; i < n; ++i)
    big_n += params.delta * params.inertia[i] * state.c[i] * state.gamma[i];

  Vec3 rhs = (op * state.omega + big_n).cross(state.omega);
  for (int i = 0; i < n; ++i) {
    const double k = params.ball_coupling(i);
    rhs += params.eps * k * state.gamma[i].dot(state.omega) *
           state.gamma[i].cross(state.omega);
  }
  rhs -= params.eps * big_n.cross(state.omega);

  ReducedDeriv deriv;
  deriv.omega_dot = op.ldlt().solve(rhs);
  deriv.gamma_dot.resize(n);
  for (int i = 0; i < n; ++i)
    deriv.gamma_dot[i] = params.eps * state.gamma[i].cross(state.omega);
  return deriv;
}

struct FullDeriv {
  ReducedDeriv reduced;
  Mat3 g_dot = Mat3::Zero();
  std::vector<Mat3> gi_dot;
};

/// Complete equations of motion: the reduced field plus attitude
/// reconstruction dg/dt = g hat(Omega) and dg_i/dt = hat(g Omega_i) g_i,
/// where Omega_i comes from omega_ball(). The ball angular velocity lives in
/// the moving-sphere frame, so it is pushed to the space frame before acting
/// on g_i; this keeps every attitude on SO(3).
inline FullDeriv full_field(const SphericalParams& params,
                            const FullState& state) {
  FullDeriv deriv;
  deriv.reduced = reduced_field(params, state.reduced);
  deriv.g_dot = state.g * hat(state.reduced.omega);
  deriv.gi_dot.resize(state.gi.size());
  for (size_t i = 0; i < state.gi.size(); ++i) {
    const Vec3 w_i = omega_ball(params, state.reduced.omega,
                                state.reduced.gamma[i], state.reduced.c[i]);
    deriv.gi_dot[i] = hat(state.g * w_i) * state.gi[i];
  }
  return deriv;
}

// Flat vector layout: [omega, gamma_1, ..., gamma_n].
inline Eigen::VectorXd flatten(const ReducedState& state) {
  Eigen::VectorXd y(3 + 3 * state.n());
  y.segment<3>(0) = state.omega;
  for (int i = 0; i < state.n(); ++i) y.segment<3>(3 + 3 * i) = state.gamma[i];
  return y;
}

inline ReducedState unflatten(const Eigen::VectorXd& y,
                              const std::vector<double>& c) {
  ReducedState s;
  const int n = static_cast<int>(c.size());
  s.omega = y.segment<3>(0);
  s.gamma.resize(n);
  for (int i = 0; i < n; ++i) s.gamma[i] = y.segment<3>(3 + 3 * i);
  s.c = c;
  return s;
}

// Flat vector layout: [omega, gamma_1.., g (row-major), g_1.., row-major].
inline Eigen::VectorXd flatten_full(const FullState& state) {
  const int n = state.reduced.n();
  Eigen::VectorXd y(3 + 3 * n + 9 + 9 * n);
  y.head(3 + 3 * n) = flatten(state.reduced);
  int at = 3 + 3 * n;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) y(at++) = state.g(r, col);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) y(at++) = state.gi[i](r, col);
  return y;
}

inline FullState unflatten_full(const Eigen::VectorXd& y,
                                const std::vector<double>& c) {
  FullState s;
  const int n = static_cast<int>(c.size());
  s.reduced = unflatten(y.head(3 + 3 * n), c);
  int at = 3 + 3 * n;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) s.g(r, col) = y(at++);
  s.gi.resize(n);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) s.gi[i](r, col) = y(at++);
  return s;
}

}  // namespace bearings
