#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bearings/errors.hpp"
#include "bearings/spherical.hpp"

namespace bearings {

/// Detection tolerances for the two integrable parameter families. These are
/// absolute: parameters are user-specified exactly in practice.
inline bool has_eps_minus_one(const SphericalParams& p) {
  return std::abs(p.eps + 1.0) <= 1e-12;
}

inline bool has_symmetry_axis(const SphericalParams& p) {
  return std::abs(p.B - p.C) <= 1e-12 * std::max({p.A, p.B, p.C});
}

/// Measure density sqrt(det inertia). The determinant is positive for every
/// admissible parameter set; the guard catches numerical degeneration only.
inline double measure_density(const SphericalParams& params,
                              const std::vector<Vec3>& gammas) {
  const double det = modified_inertia(params, gammas).determinant();
  if (!(det > 0.0))
    throw NumericalError("measure density undefined: det(inertia) = " +
                         std::to_string(det));
  return std::sqrt(det);
}

/// Third integral of the eps = -1 family (configuration III with 2r = 3R):
/// F3 = (B+C-A+D) Mt_1 Gamma_1 + (A+C-B+D) Mt_2 Gamma_2 + (A+B-C+D) Mt_3
/// Gamma_3 with Mt = M + N.
inline double integral_case_eps_minus_one(const SphericalParams& params,
                                          const ReducedState& state) {
  params.require_single_ball("integral_case_eps_minus_one");
  if (!has_eps_minus_one(params))
    throw std::invalid_argument("integral_case_eps_minus_one requires eps = -1");
  const DerivedQuantities q = derived_quantities(params, state);
  const Vec3 coeff(params.B + params.C - params.A + q.D,
                   params.A + params.C - params.B + q.D,
                   params.A + params.B - params.C + q.D);
  return coeff.dot(q.M_total.cwiseProduct(state.gamma[0]));
}

/// Primitive of 1/(eps rho) with rho^2 = C(A+D) + D(A-C) Gamma1^2, fixed so
/// that Phi(0) = 0. Any primitive works (the additive constant rescales the
/// exponential integral by a common positive factor); pinning one makes
/// values reproducible.
inline double phi_primitive_raw(double A, double C, double D, double eps,
                                double gamma1) {
  if (std::abs(gamma1) > 1.0 + 1e-12)
    throw std::domain_error("phi_primitive: |Gamma_1| must not exceed 1");
  const double a = C * (A + D);
  const double b = D * (A - C);
  if (!(a > 0.0)) throw std::domain_error("phi_primitive requires C(A+D) > 0");
  const double rho2 = a + b * gamma1 * gamma1;
  if (!(rho2 > 0.0))
    throw std::domain_error("phi_primitive: rho^2 <= 0 at this Gamma_1");
  if (b > 0.0) return std::asinh(std::sqrt(b / a) * gamma1) / (eps * std::sqrt(b));
  if (b < 0.0) return std::asin(std::sqrt(-b / a) * gamma1) / (eps * std::sqrt(-b));
  return gamma1 / (eps * std::sqrt(a));
}

inline double phi_primitive(const SphericalParams& params, double gamma1) {
  params.require_single_ball("phi_primitive");
  return phi_primitive_raw(params.A, params.C, params.coupling_D(), params.eps,
                           gamma1);
}

/// Axisymmetric-case working variables (B = C): the measure factor rho, the
/// weighted spin F = rho Omega_1, G = (A-C) Omega_1 Gamma_1 + C L, and Phi.
struct SymmetricAxisQuantities {
  double rho = 0.0;
  double F = 0.0;
  double G = 0.0;
  double Phi = 0.0;
};

inline SymmetricAxisQuantities symmetric_axis_quantities(
    const SphericalParams& params, const ReducedState& state) {
  params.require_single_ball("symmetric_axis_quantities");
  if (!has_symmetry_axis(params))
    throw std::invalid_argument("symmetric_axis_quantities requires B = C");
  const double D = params.coupling_D();
  const double g1 = state.gamma[0].x();
  const double w1 = state.omega.x();
  const double L = state.omega.dot(state.gamma[0]);
  SymmetricAxisQuantities q;
  const double rho2 = params.C * (params.A + D) + D * (params.A - params.C) * g1 * g1;
  if (!(rho2 > 0.0)) throw std::domain_error("rho^2 <= 0 at this state");
  q.rho = std::sqrt(rho2);
  q.F = q.rho * w1;
  q.G = (params.A - params.C) * w1 * g1 + params.C * L;
  q.Phi = phi_primitive(params, g1);
  return q;
}

/// Nonalgebraic third integral of the B = C family,
///   F3(+-) = (+-sqrt(D(A-C)) F + D G - d C) exp(+-(1-eps) sqrt(D(A-C)) Phi).
/// For A < C the square root is imaginary and the analytic continuation is
/// returned as a complex value whose real and imaginary parts are separately
/// conserved; for A >= C the imaginary part is zero.
inline std::complex<double> integral_case_BC(const SphericalParams& params,
                                             const ReducedState& state,
                                             int branch) {
  if (branch != 1 && branch != -1)
    throw std::invalid_argument("branch must be +1 or -1");
  if (!has_symmetry_axis(params))
    throw std::invalid_argument("integral_case_BC requires B = C");
  const SymmetricAxisQuantities q = symmetric_axis_quantities(params, state);
  const double D = params.coupling_D();
  const double d = params.coupling_d(state.c[0]);
  const double b = D * (params.A - params.C);
  const double base = D * q.G - d * params.C;
  const std::complex<double> root =
      std::sqrt(std::complex<double>(b, 0.0));  // i sqrt(-b) when A < C
  const std::complex<double> sgn(static_cast<double>(branch), 0.0);
  return (sgn * root * q.F + base) *
         std::exp(sgn * (1.0 - params.eps) * root * q.Phi);
}

/// Values of every first integral at a state, plus the measure density.
/// The case integrals are populated only when their parameter family is
/// detected.
struct IntegralReport {
  double F1 = 0.0;  ///< (1/2) <inertia omega, omega>
  double F2 = 0.0;  ///< |M + N|^2
  double mu = 0.0;  ///< sqrt(det inertia)
  Eigen::MatrixXd F_pairs;  ///< <Gamma_i, Gamma_j>
  std::vector<double> c;
  std::optional<double> F3_eps_minus_one;
  std::optional<std::array<std::complex<double>, 2>> F3_axisymmetric;  ///< {+, -}
};

inline IntegralReport integrals(const SphericalParams& params,
                                const ReducedState& state) {
  const DerivedQuantities q = derived_quantities(params, state);
  IntegralReport rep;
  rep.F1 = 0.5 * q.M.dot(state.omega);
  rep.F2 = q.M_total.squaredNorm();
  rep.mu = measure_density(params, state.gamma);
  const int n = state.n();
  rep.F_pairs.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rep.F_pairs(i, j) = state.gamma[i].dot(state.gamma[j]);
  rep.c = state.c;
  if (n == 1 && has_eps_minus_one(params))
    rep.F3_eps_minus_one = integral_case_eps_minus_one(params, state);
  if (n == 1 && has_symmetry_axis(params))
    rep.F3_axisymmetric = {integral_case_BC(params, state, +1),
                           integral_case_BC(params, state, -1)};
  return rep;
}

namespace measure_detail {

/// One-sided evaluation used by the divergence stencils: density (optional)
/// times a field component.
inline double weighted(const SphericalParams& params, const ReducedState& s,
                       bool use_density, double component) {
  return (use_density ? measure_density(params, s.gamma) : 1.0) * component;
}

inline double divergence_impl(const SphericalParams& params,
                              const ReducedState& state, double h,
                              bool use_density) {
  if (!(h >= 1e-7 && h <= 1e-2))
    throw std::invalid_argument("divergence step h must lie in [1e-7, 1e-2]");
  validate_state(params, state);
  double div = 0.0;

  // flat Omega block
  for (int k = 0; k < 3; ++k) {
    ReducedState sp = state, sm = state;
    sp.omega(k) += h;
    sm.omega(k) -= h;
    const double fp = weighted(params, sp, use_density,
                               reduced_field(params, sp).omega_dot(k));
    const double fm = weighted(params, sm, use_density,
                               reduced_field(params, sm).omega_dot(k));
    div += (fp - fm) / (2.0 * h);
  }

  // intrinsic tangent charts on each sphere factor. In the projection chart
  // p(u,v) = (Gamma + u e1 + v e2)/|...| the chart density and the Gram
  // factors cancel exactly against each other along the coordinate axes, so
  // the discretized term reduces to the frame component <X, e_dir> at the
  // displaced point.
  for (int i = 0; i < state.n(); ++i) {
    const auto [e1, e2] = tangent_basis(state.gamma[i]);
    for (const Vec3& dir : {e1, e2}) {
      double stencil[2];
      for (int s = 0; s < 2; ++s) {
        const double u = (s == 0) ? h : -h;
        ReducedState moved = state;
        moved.gamma[i] = (state.gamma[i] + u * dir).normalized();
        const Vec3 x = reduced_field(params, moved).gamma_dot[i];
        stencil[s] = weighted(params, moved, use_density, x.dot(dir));
      }
      div += (stencil[0] - stencil[1]) / (2.0 * h);
    }
  }
  return div;
}

}  // namespace measure_detail

/// Finite-difference divergence of the density-weighted reduced field over
/// R^3 x (S^2)^n; O(h^2)-accurate about zero when the measure is invariant.
inline double verify_measure(const SphericalParams& params,
                             const ReducedState& state, double h) {
  return measure_detail::divergence_impl(params, state, h, true);
}

/// Divergence of the bare field (no density weight); generically nonzero and
/// used as the discriminating control.
inline double divergence_unweighted(const SphericalParams& params,
                                    const ReducedState& state, double h) {
  return measure_detail::divergence_impl(params, state, h, false);
}

}  // namespace bearings
