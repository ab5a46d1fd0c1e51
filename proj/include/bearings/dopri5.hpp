#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bearings/errors.hpp"

namespace bearings {

/// Dormand-Prince 5(4) embedded pair with 4th-order dense output
/// (coefficients of Hairer, Norsett & Wanner). The optional step hook runs
/// after every accepted step and may project the state back onto a manifold;
/// it returns the projection defect, whose maximum is reported.
namespace dopri5_detail {

inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                        a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                        c5 = 8.0 / 9;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                        e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace dopri5_detail

struct Dopri5Options {
  double tol = 1e-10;          ///< used for both absolute and relative scale
  double h_max = std::numeric_limits<double>::infinity();
  double h_init = 0.0;         ///< 0 = automatic
  std::int64_t max_steps = 20'000'000;

  static constexpr double kTolMin = 1e-13;
  static constexpr double kTolMax = 1e-3;

  void validate() const {
    if (!(tol >= kTolMin && tol <= kTolMax))
      throw std::invalid_argument("integrator tolerance must lie in [1e-13, 1e-3]");
  }
};

struct Dopri5Result {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  std::int64_t n_accepted = 0;
  std::int64_t n_rejected = 0;
  std::int64_t n_eval = 0;
  double max_hook_defect = 0.0;
};

/// Integrates dy/dt = f(t, y) from t0 to t1 >= t0, emitting states at the
/// requested sample times (dense output; samples must be sorted and lie in
/// [t0, t1]). Emitted samples also pass through the hook so observers see
/// on-manifold states.
inline Dopri5Result dopri5_solve(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    double t0, Eigen::VectorXd y0, double t1, const std::vector<double>& samples,
    const Dopri5Options& opt = {},
    const std::function<double(Eigen::VectorXd&)>& hook = {}) {
  using namespace dopri5_detail;
  opt.validate();

  Dopri5Result out;
  out.t.reserve(samples.size());
  out.y.reserve(samples.size());

  if (hook) {
    Eigen::VectorXd tmp = y0;
    hook(tmp);
    y0 = tmp;
  }

  auto emit = [&](double ts, Eigen::VectorXd ys) {
    if (hook) hook(ys);
    out.t.push_back(ts);
    out.y.push_back(std::move(ys));
  };

  size_t next_sample = 0;
  while (next_sample < samples.size() && samples[next_sample] <= t0) {
    emit(samples[next_sample], y0);
    ++next_sample;
  }
  if (t1 <= t0) {
    while (next_sample < samples.size()) emit(samples[next_sample++], y0);
    return out;
  }

  const long n = y0.size();
  double t = t0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1 = f(t, y), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  ++out.n_eval;

  auto err_norm = [&](const Eigen::VectorXd& err, const Eigen::VectorXd& ya,
                      const Eigen::VectorXd& yb) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const double sc =
          opt.tol + opt.tol * std::max(std::abs(ya(i)), std::abs(yb(i)));
      const double q = err(i) / sc;
      acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  double h = opt.h_init;
  if (h <= 0.0) {
    const double ynorm = y.norm();
    const double fnorm = k1.norm();
    h = (fnorm > 1e-12) ? 0.01 * std::max(ynorm, 1.0) / fnorm : 1e-3;
    h = std::min({h, t1 - t0, opt.h_max});
  }

  double facold = 1e-4;
  bool last = false;

  for (std::int64_t step = 0; step < opt.max_steps; ++step) {
    if (t >= t1) break;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }
    const double h_floor =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
    if (h < h_floor)
      throw StiffnessError("step size underflow at t = " + std::to_string(t), t, y);

    k2 = f(t + c2 * h, y + h * (a21 * k1));
    k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Eigen::VectorXd y_new =
        y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    k7 = f(t + h, y_new);
    out.n_eval += 6;

    const Eigen::VectorXd err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = err_norm(err_vec, y, y_new);

    if (err <= 1.0) {
      ++out.n_accepted;

      if (next_sample < samples.size() && samples[next_sample] <= t + h) {
        // dense-output polynomial on [t, t+h]
        const Eigen::VectorXd ydiff = y_new - y;
        const Eigen::VectorXd bspl = h * k1 - ydiff;
        const Eigen::VectorXd cont4 = ydiff - h * k7 - bspl;
        const Eigen::VectorXd cont5 =
            h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_sample < samples.size() && samples[next_sample] <= t + h) {
          const double th = (samples[next_sample] - t) / h;
          const double th1 = 1.0 - th;
          Eigen::VectorXd ys =
              y + th * (ydiff + th1 * (bspl + th * (cont4 + th1 * cont5)));
          emit(samples[next_sample], std::move(ys));
          ++next_sample;
        }
      }

      t = last ? t1 : t + h;
      y = y_new;
      if (hook) {
        const double defect = hook(y);
        out.max_hook_defect = std::max(out.max_hook_defect, defect);
        k1 = f(t, y);  // state moved; FSAL derivative is stale
        ++out.n_eval;
      } else {
        k1 = k7;
      }

      const double fac11 = std::pow(std::max(err, 1e-16), 0.2 - 0.04 * 0.75);
      double fac = fac11 / std::pow(facold, 0.04);
      fac = std::max(0.2, std::min(5.0, 0.9 / fac));
      facold = std::max(err, 1e-4);
      h = std::min(h * fac, opt.h_max);
      if (last && t >= t1) break;
    } else {
      ++out.n_rejected;
      last = false;
      const double fac11 = std::pow(err, 0.2 - 0.04 * 0.75);
      h *= std::max(0.2, 0.9 / fac11);
    }
  }

  if (t < t1)
    throw NumericalError("integrator exceeded the step budget before t_final");

  while (next_sample < samples.size()) emit(samples[next_sample++], y);
  return out;
}

/// The user-facing tolerance of the trajectory integrators is a long-horizon
/// drift target, not the raw per-step error bound: a 5(4) pair accumulates a
/// few hundred times the per-step tolerance over t ~ 100, so the stepper runs
/// tighter internally (floored near the double-precision limit).
inline Dopri5Options drift_targeted_options(double tol) {
  if (!(tol >= Dopri5Options::kTolMin && tol <= Dopri5Options::kTolMax))
    throw std::invalid_argument("integrator tolerance must lie in [1e-13, 1e-3]");
  Dopri5Options opt;
  opt.tol = std::max(tol / 64.0, 2.5e-14);
  return opt;
}

/// Uniform sample grid over [0, t_final] with n points (n >= 1; the first
/// sample is 0, the last is t_final).
inline std::vector<double> linspace(double t_final, int n) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  std::vector<double> t(n);
  if (n == 1) {
    t[0] = t_final;
    return t;
  }
  for (int i = 0; i < n; ++i)
    t[i] = t_final * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

}  // namespace bearings
