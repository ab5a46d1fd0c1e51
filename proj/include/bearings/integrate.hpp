#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bearings/dopri5.hpp"
#include "bearings/spherical.hpp"

namespace bearings {

struct SphericalTrajectory {
  std::vector<double> t;
  std::vector<ReducedState> states;
  double max_gamma_defect = 0.0;  ///< worst |1 - |gamma|| before renormalization
  std::int64_t n_accepted = 0;
  std::int64_t n_rejected = 0;
};

/// Renormalizes the gamma blocks of a flattened state to unit length and
/// returns the worst pre-projection defect.
inline double renormalize_gammas(Eigen::VectorXd& y, int n_balls) {
  double worst = 0.0;
  for (int i = 0; i < n_balls; ++i) {
    auto block = y.segment<3>(3 + 3 * i);
    const double norm = block.norm();
    worst = std::max(worst, std::abs(norm - 1.0));
    if (norm > 0.0) block /= norm;
  }
  return worst;
}

/// Integrates the reduced spherical system over [0, t_final], sampling at the
/// given times. Each accepted step projects the gamma vectors back to the
/// unit sphere; the worst pre-projection defect is reported.
inline SphericalTrajectory integrate_reduced(const SphericalParams& params,
                                             const ReducedState& initial,
                                             double t_final, double tol,
                                             const std::vector<double>& sample_times) {
  validate_state(params, initial);
  const Dopri5Options opt = drift_targeted_options(tol);

  const int n = initial.n();
  auto field = [&params, &initial](double, const Eigen::VectorXd& y) {
    const ReducedState s = unflatten(y, initial.c);
    const ReducedDeriv d = reduced_field(params, s);
    Eigen::VectorXd dy(y.size());
    dy.segment<3>(0) = d.omega_dot;
    for (int i = 0; i < s.n(); ++i) dy.segment<3>(3 + 3 * i) = d.gamma_dot[i];
    return dy;
  };
  auto hook = [n](Eigen::VectorXd& y) { return renormalize_gammas(y, n); };

  const Dopri5Result raw =
      dopri5_solve(field, 0.0, flatten(initial), t_final, sample_times, opt, hook);

  SphericalTrajectory traj;
  traj.t = raw.t;
  traj.states.reserve(raw.y.size());
  for (const Eigen::VectorXd& y : raw.y) traj.states.push_back(unflatten(y, initial.c));
  traj.max_gamma_defect = raw.max_hook_defect;
  traj.n_accepted = raw.n_accepted;
  traj.n_rejected = raw.n_rejected;
  return traj;
}

inline SphericalTrajectory integrate_reduced(const SphericalParams& params,
                                             const ReducedState& initial,
                                             double t_final, double tol,
                                             int n_samples) {
  return integrate_reduced(params, initial, t_final, tol,
                           linspace(t_final, n_samples));
}

struct FullTrajectory {
  std::vector<double> t;
  std::vector<FullState> states;
  double max_gamma_defect = 0.0;
  double max_orthogonality_defect = 0.0;  ///< worst |g^T g - E| over samples
};

/// Integrates the complete system including attitude reconstruction. The
/// attitude matrices are not projected, only drift-checked.
inline FullTrajectory integrate_full(const SphericalParams& params,
                                     const FullState& initial, double t_final,
                                     double tol, int n_samples) {
  validate_state(params, initial.reduced);
  const Dopri5Options opt = drift_targeted_options(tol);

  const int n = initial.reduced.n();
  auto field = [&params, &initial](double, const Eigen::VectorXd& y) {
    const FullState s = unflatten_full(y, initial.reduced.c);
    const FullDeriv d = full_field(params, s);
    FullState packed;
    packed.reduced.omega = d.reduced.omega_dot;
    packed.reduced.gamma = d.reduced.gamma_dot;
    packed.reduced.c = s.reduced.c;
    packed.g = d.g_dot;
    packed.gi = d.gi_dot;
    return flatten_full(packed);
  };
  auto hook = [n](Eigen::VectorXd& y) { return renormalize_gammas(y, n); };

  const Dopri5Result raw = dopri5_solve(field, 0.0, flatten_full(initial), t_final,
                                        linspace(t_final, n_samples), opt, hook);

  FullTrajectory traj;
  traj.t = raw.t;
  traj.max_gamma_defect = raw.max_hook_defect;
  for (const Eigen::VectorXd& y : raw.y) {
    FullState s = unflatten_full(y, initial.reduced.c);
    double defect = (s.g.transpose() * s.g - Mat3::Identity()).cwiseAbs().maxCoeff();
    for (const Mat3& gi : s.gi)
      defect = std::max(defect,
                        (gi.transpose() * gi - Mat3::Identity()).cwiseAbs().maxCoeff());
    traj.max_orthogonality_defect = std::max(traj.max_orthogonality_defect, defect);
    traj.states.push_back(std::move(s));
  }
  return traj;
}

}  // namespace bearings
