#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "bearings/errors.hpp"
#include "bearings/integrate.hpp"
#include "bearings/random_states.hpp"
#include "bearings/spherical.hpp"

namespace bearings {

/// The homogeneous linear system governing linear integral candidates
/// x1 Mt_1 Gamma_1 + x2 Mt_2 Gamma_2 + x3 Mt_3 Gamma_3 of the single-ball
/// system: the time derivative of the candidate decomposes over nine monomial
/// groups, and the candidate is an integral iff every bracket vanishes.
struct LinearAnsatzSystem {
  Eigen::Matrix<double, 9, 3> rows;
  double A, B, C, D, d, eps;

  static constexpr std::array<const char*, 9> kMonomials = {
      "G1*W2*W3", "W1*G2*W3", "W1*W2*G3",
      "G1*G2*W3", "G1*W2*G3", "W1*G2*G3",
      "L*G1*G2*W3", "L*G1*W2*G3", "L*W1*G2*G3"};
};

inline LinearAnsatzSystem build_linear_system(double A, double B, double C,
                                              double D, double d, double eps) {
  LinearAnsatzSystem sys;
  sys.A = A;
  sys.B = B;
  sys.C = C;
  sys.D = D;
  sys.d = d;
  sys.eps = eps;
  const double pd = (1.0 + eps) * d;
  const double pD = (1.0 + eps) * D;
  sys.rows << (B - C), -eps * (B + D), eps * (C + D),
      eps * (A + D), (C - A), -eps * (C + D),
      -eps * (A + D), eps * (B + D), (A - B),
      pd, -pd, 0.0,
      -pd, 0.0, pd,
      0.0, pd, -pd,
      -pD, pD, 0.0,
      pD, 0.0, -pD,
      0.0, -pD, pD;
  return sys;
}

/// Orthonormal nullspace basis of the 9x3 system via singular-value
/// thresholding at tol times the largest singular value. Deterministic sign:
/// the first component above 1e-12 of each basis vector is positive. Vectors
/// are ordered by ascending singular value.
inline std::vector<Eigen::Vector3d> nullspace(const LinearAnsatzSystem& sys,
                                              double tol = 1e-10) {
  if (!(tol >= 1e-14 && tol <= 1e-6))
    throw std::invalid_argument("nullspace threshold must lie in [1e-14, 1e-6]");
  Eigen::Matrix<double, 9, 3> m = sys.rows;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale > 0.0) m /= scale;
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 3>> svd(
      m, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = (scale > 0.0) ? tol * sv(0) : 1.0;
  std::vector<Eigen::Vector3d> basis;
  for (int j = 2; j >= 0; --j) {  // smallest singular value first
    if (scale == 0.0 || sv(j) <= cutoff) {
      Eigen::Vector3d v = svd.matrixV().col(j);
      for (int k = 0; k < 3; ++k) {
        if (std::abs(v(k)) > 1e-12) {
          if (v(k) < 0.0) v = -v;
          break;
        }
      }
      basis.push_back(v);
    }
  }
  return basis;
}

/// Coefficients of the exponential integral family
/// F3 = (y1 F + y2 G + y3) exp(y4 Phi) of the axisymmetric case. y1 and y4
/// are imaginary when A < C (analytic continuation).
struct ExponentialAnsatz {
  std::complex<double> y1{0.0, 0.0};
  double y2 = 0.0;
  double y3 = 0.0;
  std::complex<double> y4{0.0, 0.0};
  bool degenerate = false;  ///< A = C: both branches collapse to y1 = y4 = 0
};

/// Solves the closed three-equation system for the exponential family with
/// the normalization y2 = D: y1 = +-sqrt(D(A-C)), y4 = +-(1-eps) y1,
/// y3 = -d C. Returns the {+, -} branch pair.
inline std::pair<ExponentialAnsatz, ExponentialAnsatz> solve_exponential(
    double A, double C, double D, double d, double eps) {
  if (!(D > 0.0)) throw std::invalid_argument("solve_exponential requires D > 0");
  const double b = D * (A - C);
  const std::complex<double> root = std::sqrt(std::complex<double>(b, 0.0));
  ExponentialAnsatz plus, minus;
  plus.y2 = minus.y2 = D;
  plus.y3 = minus.y3 = -d * C;
  plus.degenerate = minus.degenerate = (b == 0.0);
  plus.y1 = root;
  plus.y4 = (1.0 - eps) * root;
  minus.y1 = -root;
  minus.y4 = -(1.0 - eps) * root;
  return {plus, minus};
}

/// Residuals of the three defining equations for a coefficient set.
inline std::array<std::complex<double>, 3> exponential_residuals(
    const ExponentialAnsatz& y, double A, double C, double D, double d,
    double eps) {
  return {(eps - 1.0) * (A - C) * y.y2 + y.y1 * y.y4,
          D * (eps - 1.0) * y.y1 + y.y2 * y.y4,
          -C * d * (eps - 1.0) * y.y1 + y.y3 * y.y4};
}

using IntegralCandidate = std::function<double(const ReducedState&)>;

struct CertifyOptions {
  int n_states = 24;
  double t_span = 20.0;
  double integrator_tol = 1e-10;
  int n_samples = 33;
  std::uint64_t seed = 1;
  double certified_below = 1e-6;
};

/// Trajectory certification: integrates random initial conditions and reports
/// the worst relative drift of the candidate. Certified when the result is
/// below options.certified_below.
inline double certify(const IntegralCandidate& candidate,
                      const SphericalParams& params, const CertifyOptions& opt) {
  Rng rng(opt.seed);
  std::vector<double> initial_values;
  std::vector<double> drifts;
  initial_values.reserve(opt.n_states);
  drifts.reserve(opt.n_states);
  for (int k = 0; k < opt.n_states; ++k) {
    const ReducedState s0 = random_reduced_state(rng, params);
    const auto traj = integrate_reduced(params, s0, opt.t_span,
                                        opt.integrator_tol, opt.n_samples);
    const double f0 = candidate(traj.states.front());
    double worst = 0.0;
    for (const ReducedState& s : traj.states) {
      const double f = candidate(s);
      if (!std::isfinite(f))
        throw CandidateEvaluationError("candidate evaluated to a non-finite value",
                                       flatten(s));
      worst = std::max(worst, std::abs(f - f0));
    }
    initial_values.push_back(std::abs(f0));
    drifts.push_back(worst);
  }
  // relative drift with a floor at a small fraction of the candidate's
  // typical magnitude, so states where it nearly vanishes do not dominate
  double scale = 0.0;
  for (double v : initial_values) scale = std::max(scale, v);
  double worst_rel = 0.0;
  for (int k = 0; k < opt.n_states; ++k) {
    const double denom = std::max({initial_values[k], 1e-3 * scale, 1e-300});
    worst_rel = std::max(worst_rel, drifts[k] / denom);
  }
  return worst_rel;
}

/// Pointwise certification: the directional derivative of the candidate along
/// the reduced field at random states, via Richardson-extrapolated central
/// differences in the ambient coordinates. For candidates polynomial of
/// degree <= 4 along a ray the stencil is exact up to roundoff.
inline double certify_pointwise(const IntegralCandidate& candidate,
                                const SphericalParams& params, int n_states,
                                std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n_states; ++k) {
    const ReducedState s = random_reduced_state(rng, params);
    const ReducedDeriv d = reduced_field(params, s);
    Eigen::VectorXd dir(3 + 3 * s.n());
    dir.segment<3>(0) = d.omega_dot;
    for (int i = 0; i < s.n(); ++i) dir.segment<3>(3 + 3 * i) = d.gamma_dot[i];

    const Eigen::VectorXd y0 = flatten(s);
    auto eval = [&](double tau) {
      const double f = candidate(unflatten(y0 + tau * dir, s.c));
      if (!std::isfinite(f))
        throw CandidateEvaluationError("candidate evaluated to a non-finite value",
                                       y0 + tau * dir);
      return f;
    };
    const double tau = 1e-3;
    const double d_coarse = (eval(tau) - eval(-tau)) / (2.0 * tau);
    const double d_fine = (eval(tau / 2) - eval(-tau / 2)) / tau;
    const double ddt = (4.0 * d_fine - d_coarse) / 3.0;
    const double scale =
        std::max({1.0, std::abs(candidate(s)), dir.cwiseAbs().maxCoeff()});
    worst = std::max(worst, std::abs(ddt) / scale);
  }
  return worst;
}

/// The linear candidate defined by a coefficient vector x:
/// F3 = sum_i x_i (M + N)_i Gamma_i.
inline IntegralCandidate linear_candidate(const SphericalParams& params,
                                          const Eigen::Vector3d& x) {
  return [params, x](const ReducedState& s) {
    const DerivedQuantities q = derived_quantities(params, s);
    return x.dot(q.M_total.cwiseProduct(s.gamma[0]));
  };
}

}  // namespace bearings
