#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bearings/errors.hpp"
#include "bearings/spherical.hpp"

namespace bearings {

/// State of the unreduced balance laws: sphere angular velocity, per-ball
/// angular velocities and center velocities, all in the moving-sphere frame.
struct OracleState {
  Vec3 omega = Vec3::Zero();
  std::vector<Vec3> omega_i;
  std::vector<Vec3> v_center;
  std::vector<Vec3> gamma;
};

struct OracleDeriv {
  Vec3 omega_dot = Vec3::Zero();
  std::vector<Vec3> omega_i_dot;
  std::vector<Vec3> v_center_dot;
  std::vector<Vec3> gamma_dot;
  std::vector<Vec3> force_contact_fixed;   ///< F at the ball / fixed-side contact
  std::vector<Vec3> force_contact_sphere;  ///< F at the ball / moving-sphere contact
};

/// Embeds a reduced state into the unreduced one via the constraint
/// expressions (ball angular velocities and center velocities).
inline OracleState oracle_state_from_reduced(const SphericalParams& params,
                                             const ReducedState& state) {
  OracleState full;
  full.omega = state.omega;
  full.gamma = state.gamma;
  full.omega_i.resize(state.n());
  full.v_center.resize(state.n());
  for (int i = 0; i < state.n(); ++i) {
    full.omega_i[i] = omega_ball(params, state.omega, state.gamma[i], state.c[i]);
    full.v_center[i] =
        params.sign * params.r * full.omega_i[i].cross(state.gamma[i]);
  }
  return full;
}

/// Max-norm residual of the velocity constraints at the given state.
inline double constraint_residual(const SphericalParams& params,
                                  const OracleState& s) {
  double worst = 0.0;
  for (size_t i = 0; i < s.gamma.size(); ++i) {
    const Vec3 r1 =
        s.v_center[i] - params.sign * params.r * s.omega_i[i].cross(s.gamma[i]);
    const Vec3 r2 = s.omega_i[i].cross(s.gamma[i]) -
                    params.delta * s.omega.cross(s.gamma[i]);
    worst = std::max({worst, r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff()});
  }
  return worst;
}

/// Testing oracle for the reduced equations: evolves the unreduced system by
/// the momentum and angular-momentum balance laws with unknown contact
/// reaction forces, closed by the time-differentiated rolling constraints.
///
/// The (3 + 12n)-square linear system has an n-dimensional nullspace: the
/// radial split of each contact force pair is not observable (shifting both
/// forces of a pair along gamma_i in opposite directions changes nothing).
/// The accelerations are unique, so the minimum-norm solution is taken and
/// the residual checked.
///
/// Unknown layout: [omega_dot | per ball: omega_i_dot, v_center_dot, F_fixed,
/// F_sphere].
inline OracleDeriv oracle_field(const SphericalParams& params,
                                const OracleState& s) {
  const int n = static_cast<int>(s.gamma.size());
  const double res = constraint_residual(params, s);
  if (res > 1e-10)
    throw std::invalid_argument(
        "oracle_field: state violates the rolling constraints (residual " +
        std::to_string(res) + ")");

  const double sgn = params.sign;
  const double r = params.r;
  const double lever = params.contact_lever();
  // Coefficient of Omega x Gamma_i in the moving-sphere contact constraint.
  const double coef_a =
      (params.config == Configuration::I || params.config == Configuration::II)
          ? params.rho
          : sgn * params.rho;

  std::vector<Vec3> gamma_dot(n);
  for (int i = 0; i < n; ++i)
    gamma_dot[i] = s.gamma[i].cross(s.omega) + s.v_center[i] / lever;

  const int dim = 3 + 12 * n;
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  const Mat3 sphere_inertia = params.sphere_inertia();

  // Sphere angular-momentum balance.
  mat.block<3, 3>(0, 0) = sphere_inertia;
  rhs.segment<3>(0) = (sphere_inertia * s.omega).cross(s.omega);

  for (int i = 0; i < n; ++i) {
    const int xb = 3 + 12 * i;  // unknown base
    const int rb = 3 + 12 * i;  // row base
    const int col_wd = xb, col_vd = xb + 3, col_fa = xb + 6, col_fb = xb + 9;
    const Mat3 gx = hat(s.gamma[i]);
    const double mi = params.mass[i];
    const double ii = params.inertia[i];

    // sphere balance picks up the sphere-side contact forces
    mat.block<3, 3>(0, col_fb) += sgn * 2.0 * r * params.delta * gx;

    // ball angular-momentum balance
    mat.block<3, 3>(rb, col_wd) = ii * Mat3::Identity();
    mat.block<3, 3>(rb, col_fb) = -sgn * r * gx;
    mat.block<3, 3>(rb, col_fa) = sgn * r * gx;
    rhs.segment<3>(rb) = ii * s.omega_i[i].cross(s.omega);

    // ball momentum balance
    mat.block<3, 3>(rb + 3, col_vd) = mi * Mat3::Identity();
    mat.block<3, 3>(rb + 3, col_fa) = -Mat3::Identity();
    mat.block<3, 3>(rb + 3, col_fb) = -Mat3::Identity();
    rhs.segment<3>(rb + 3) = mi * s.v_center[i].cross(s.omega);

    // d/dt of the fixed-side rolling constraint
    mat.block<3, 3>(rb + 6, col_vd) = Mat3::Identity();
    mat.block<3, 3>(rb + 6, col_wd) = sgn * r * gx;
    rhs.segment<3>(rb + 6) = sgn * r * s.omega_i[i].cross(gamma_dot[i]);

    // d/dt of the moving-sphere-side rolling constraint
    mat.block<3, 3>(rb + 9, col_vd) = Mat3::Identity();
    mat.block<3, 3>(rb + 9, 0) = coef_a * gx;
    mat.block<3, 3>(rb + 9, col_wd) = -sgn * r * gx;
    rhs.segment<3>(rb + 9) = coef_a * s.omega.cross(gamma_dot[i]) +
                             sgn * r * gamma_dot[i].cross(s.omega_i[i]);
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(mat);
  const Eigen::VectorXd x = cod.solve(rhs);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  const double solve_res = (mat * x - rhs).cwiseAbs().maxCoeff();
  if (solve_res > 1e-8 * scale)
    throw NumericalError("oracle force-determination system inconsistent (residual " +
                         std::to_string(solve_res) + ")");

  OracleDeriv d;
  d.omega_dot = x.segment<3>(0);
  d.omega_i_dot.resize(n);
  d.v_center_dot.resize(n);
  d.gamma_dot = gamma_dot;
  d.force_contact_fixed.resize(n);
  d.force_contact_sphere.resize(n);
  for (int i = 0; i < n; ++i) {
    const int xb = 3 + 12 * i;
    d.omega_i_dot[i] = x.segment<3>(xb);
    d.v_center_dot[i] = x.segment<3>(xb + 3);
    d.force_contact_fixed[i] = x.segment<3>(xb + 6);
    d.force_contact_sphere[i] = x.segment<3>(xb + 9);
  }
  return d;
}

}  // namespace bearings
