#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bearings/dopri5.hpp"
#include "bearings/errors.hpp"
#include "bearings/geometry.hpp"

namespace bearings {

/// Parameters of the planar system: a moving plane of mass m and inertia I
/// (about the normal at its mass center) riding on n balls of radius r that
/// roll between it and a fixed plane.
struct PlanarParams {
  double plane_mass = 1.0;
  double plane_inertia = 1.0;
  double r = 1.0;
  std::vector<double> mass;
  std::vector<double> inertia;
  std::vector<double> delta_i;  ///< (m_i r^2 + I_i) / (4 r^2)
  double delta = 0.0;           ///< sum of delta_i

  static PlanarParams make(double plane_mass, double plane_inertia, double r,
                           std::vector<double> masses,
                           std::vector<double> inertias) {
    PlanarParams p;
    p.plane_mass = plane_mass;
    p.plane_inertia = plane_inertia;
    p.r = r;
    p.mass = std::move(masses);
    p.inertia = std::move(inertias);
    if (!(plane_mass > 0.0) || !(plane_inertia > 0.0) || !(r > 0.0))
      throw std::domain_error("plane mass, plane inertia and ball radius must be positive");
    if (p.mass.empty() || p.mass.size() != p.inertia.size())
      throw std::domain_error("ball mass/inertia lists must be nonempty and equal length");
    p.delta_i.resize(p.mass.size());
    for (size_t i = 0; i < p.mass.size(); ++i) {
      if (!(p.mass[i] > 0.0) || !(p.inertia[i] > 0.0))
        throw std::domain_error("ball masses and inertias must be positive");
      p.delta_i[i] = (p.mass[i] * r * r + p.inertia[i]) / (4.0 * r * r);
      p.delta += p.delta_i[i];
    }
    return p;
  }
};

/// Point of the reduced planar phase space: plane velocity v = (v_x, v_y,
/// v_phi) and ball-configuration moments n = (N_1, N_2, M). The admissible
/// region requires delta M > N_1^2 + N_2^2.
struct PlanarState {
  Vec3 v = Vec3::Zero();
  Vec3 n = Vec3::Zero();
};

/// delta M - (N_1^2 + N_2^2); positive on the admissible region, and itself
/// the third first integral.
inline double q_margin(const PlanarParams& p, const PlanarState& s) {
  return p.delta * s.n.z() - s.n.x() * s.n.x() - s.n.y() * s.n.y();
}

inline void require_on_Q(const PlanarParams& p, const PlanarState& s) {
  if (!(q_margin(p, s) > 0.0))
    throw std::domain_error("state lies outside the admissible region (delta M <= N1^2 + N2^2)");
}

inline Mat3 planar_inertia(const PlanarParams& p, const PlanarState& s) {
  const double md = p.plane_mass + p.delta;
  Mat3 op;
  op << md, 0.0, -s.n.y(),
        0.0, md, s.n.x(),
        -s.n.y(), s.n.x(), p.plane_inertia + s.n.z();
  return op;
}

inline double planar_inertia_det(const PlanarParams& p, const PlanarState& s) {
  const double md = p.plane_mass + p.delta;
  return md * (md * p.plane_inertia + p.plane_mass * s.n.z() + q_margin(p, s));
}

struct PlanarDeriv {
  Vec3 v_dot = Vec3::Zero();
  Vec3 n_dot = Vec3::Zero();
};

/// Reduced equations of motion: dv/dt = inertia^-1 m, dn/dt = J v.
inline PlanarDeriv planar_field(const PlanarParams& p, const PlanarState& s) {
  require_on_Q(p, s);
  const double vx = s.v.x(), vy = s.v.y(), vphi = s.v.z();
  const double n1 = s.n.x(), n2 = s.n.y();
  const Vec3 torque(0.5 * (n1 * vphi * vphi - p.delta * vphi * vy),
                    0.5 * (n2 * vphi * vphi + p.delta * vphi * vx),
                    0.5 * vphi * (n1 * vx + n2 * vy));
  PlanarDeriv d;
  d.v_dot = planar_inertia(p, s).ldlt().solve(torque);
  d.n_dot = Vec3(-0.5 * (p.delta * vx + n2 * vphi),
                 -0.5 * (p.delta * vy - n1 * vphi),
                 -(n1 * vx + n2 * vy));
  return d;
}

/// First integrals (f1, f2, f3, f4); f4 is the kinetic energy.
inline std::array<double, 4> planar_integrals(const PlanarParams& p,
                                              const PlanarState& s) {
  const double md = p.plane_mass + p.delta;
  const double vx = s.v.x(), vy = s.v.y(), vphi = s.v.z();
  const double n1 = s.n.x(), n2 = s.n.y(), big_m = s.n.z();
  return {md * vx - vphi * n2, md * vy + vphi * n1, q_margin(p, s),
          0.5 * (p.plane_inertia + big_m) * vphi * vphi +
              0.5 * md * (vx * vx + vy * vy) + vphi * (n1 * vy - n2 * vx)};
}

namespace planar_detail {

inline double divergence_impl(const PlanarParams& p, const PlanarState& state,
                              double h, bool use_density) {
  if (!(h >= 1e-7 && h <= 1e-2))
    throw std::invalid_argument("divergence step h must lie in [1e-7, 1e-2]");
  require_on_Q(p, state);
  auto component = [&](const PlanarState& s, int k) {
    const PlanarDeriv d = planar_field(p, s);
    const double x = (k < 3) ? d.v_dot(k) : d.n_dot(k - 3);
    return (use_density ? std::sqrt(planar_inertia_det(p, s)) : 1.0) * x;
  };
  double div = 0.0;
  for (int k = 0; k < 6; ++k) {
    PlanarState sp = state, sm = state;
    ((k < 3) ? sp.v(k) : sp.n(k - 3)) += h;
    ((k < 3) ? sm.v(k) : sm.n(k - 3)) -= h;
    div += (component(sp, k) - component(sm, k)) / (2.0 * h);
  }
  return div;
}

}  // namespace planar_detail

/// Finite-difference divergence of the sqrt(det inertia)-weighted field over
/// the flat (v, n) coordinates; O(h^2) about zero.
inline double planar_measure_divergence(const PlanarParams& p,
                                        const PlanarState& s, double h) {
  return planar_detail::divergence_impl(p, s, h, true);
}

inline double planar_divergence_unweighted(const PlanarParams& p,
                                           const PlanarState& s, double h) {
  return planar_detail::divergence_impl(p, s, h, false);
}

/// Constants of a level set of (f1, f2, f3) plus the derived quadrature
/// constants: d5 closes det(inertia) as d5 + (m(m+delta)/delta) A^2 on the
/// level set, d6 is the signed integration constant of v_phi(A), alpha and k
/// define the rotated polar forcing, and d7 is the total-differential
/// constant.
struct LevelSetData {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double d5 = 0.0;
  double d6 = 0.0;
  double d7 = 0.0;
  double alpha = 0.0;
  double k = 0.0;
};

/// Reduced three-dimensional state on a level set.
struct Reduced3State {
  double vphi = 0.0;
  double n1 = 0.0;
  double n2 = 0.0;
};

/// Coefficient of A^2 under the level-set determinant.
inline double quad_coeff(const PlanarParams& p) {
  return p.plane_mass * (p.plane_mass + p.delta) / p.delta;
}

inline double v_phi_of_A(const PlanarParams& p, const LevelSetData& lv, double A) {
  return lv.d6 / std::sqrt(lv.d5 + quad_coeff(p) * A * A);
}

/// The radial primitive entering the total differential:
/// S(A) = (m+2 delta) delta d6 / (2 m (m+delta)^2) sqrt(d5 + c A^2), i.e. the
/// primitive of (m+2 delta)/(2(m+delta)) A v_phi(A).
inline double radial_primitive(const PlanarParams& p, const LevelSetData& lv,
                               double A) {
  const double m = p.plane_mass, dl = p.delta;
  const double beta = (m + 2.0 * dl) * dl * lv.d6 /
                      (2.0 * m * (m + dl) * (m + dl));
  return beta * std::sqrt(lv.d5 + quad_coeff(p) * A * A);
}

inline LevelSetData reduce_level_data(const PlanarParams& p,
                                      const PlanarState& s) {
  require_on_Q(p, s);
  const auto f = planar_integrals(p, s);
  LevelSetData lv;
  lv.d1 = f[0];
  lv.d2 = f[1];
  lv.d3 = f[2];
  const double md = p.plane_mass + p.delta;
  lv.d5 = md * md * (p.plane_inertia * p.delta + lv.d3) / p.delta;
  lv.alpha = (lv.d1 == 0.0 && lv.d2 == 0.0) ? 0.0 : std::atan2(lv.d2, lv.d1);
  lv.k = p.delta * std::hypot(lv.d1, lv.d2) / (2.0 * md);
  const double A0 = std::hypot(s.n.x(), s.n.y());
  lv.d6 = s.v.z() * std::sqrt(lv.d5 + quad_coeff(p) * A0 * A0);
  const double theta0 = std::atan2(s.n.y(), s.n.x());
  lv.d7 = lv.k * A0 * std::sin(theta0 - lv.alpha) + radial_primitive(p, lv, A0);
  return lv;
}

inline std::pair<LevelSetData, Reduced3State> reduce_to_level_set(
    const PlanarParams& p, const PlanarState& s) {
  return {reduce_level_data(p, s), Reduced3State{s.v.z(), s.n.x(), s.n.y()}};
}

/// Closed system on the level set in (v_phi, N_1, N_2).
inline Vec3 reduced3_field(const PlanarParams& p, const LevelSetData& lv,
                           const Reduced3State& s) {
  const double m = p.plane_mass, dl = p.delta, md = m + dl;
  const double det = md * (md * p.plane_inertia + (m / dl) * (s.n1 * s.n1 + s.n2 * s.n2) +
                           m * lv.d3 / dl + lv.d3);
  return Vec3(m * s.vphi * (s.n1 * lv.d1 + s.n2 * lv.d2) / (2.0 * det),
              -(m + 2.0 * dl) / (2.0 * md) * s.n2 * s.vphi -
                  dl * lv.d1 / (2.0 * md),
              (m + 2.0 * dl) / (2.0 * md) * s.n1 * s.vphi -
                  dl * lv.d2 / (2.0 * md));
}

/// Rebuilds the full six-dimensional state from a reduced one via the level
/// constants.
inline PlanarState reconstruct_full(const PlanarParams& p,
                                    const LevelSetData& lv,
                                    const Reduced3State& s) {
  const double md = p.plane_mass + p.delta;
  PlanarState out;
  out.v = Vec3((lv.d1 + s.vphi * s.n2) / md, (lv.d2 - s.vphi * s.n1) / md, s.vphi);
  out.n = Vec3(s.n1, s.n2,
               (lv.d3 + s.n1 * s.n1 + s.n2 * s.n2) / p.delta);
  return out;
}

/// sin(theta - alpha) on the admissible radial band, from the total
/// differential relation. Values |u| slightly above 1 (within 1e-12) are
/// clamped; beyond that the radius is outside the band of the motion.
inline double sin_theta_minus_alpha(const PlanarParams& p,
                                    const LevelSetData& lv, double A) {
  if (!(lv.k > 0.0))
    throw std::domain_error("theta_of_A requires k != 0 (d1, d2 not both zero)");
  if (!(A > 0.0)) throw std::domain_error("theta_of_A requires A > 0");
  const double u = (lv.d7 - radial_primitive(p, lv, A)) / (lv.k * A);
  if (std::abs(u) > 1.0 + 1e-12)
    throw std::domain_error("radius A = " + std::to_string(A) +
                            " is outside the admissible band (|arg| = " +
                            std::to_string(std::abs(u)) + " > 1)");
  return std::clamp(u, -1.0, 1.0);
}

/// Angle as a function of the radius on the selected branch: +1 selects
/// cos(theta - alpha) >= 0, -1 the opposite sign. Branch continuity across
/// turning points is the caller's bookkeeping.
inline double theta_of_A(const PlanarParams& p, const LevelSetData& lv, double A,
                         int branch) {
  if (branch != 1 && branch != -1)
    throw std::invalid_argument("branch must be +1 or -1");
  const double u = sin_theta_minus_alpha(p, lv, A);
  const double asin_u = std::asin(u);
  return lv.alpha + (branch == 1 ? asin_u : std::numbers::pi - asin_u);
}

struct PlanarTrajectory {
  std::vector<double> t;
  std::vector<PlanarState> states;
  std::int64_t n_accepted = 0;
};

/// Integrates the six-dimensional planar system; each accepted step verifies
/// the state stays in the admissible region.
inline PlanarTrajectory integrate_planar(const PlanarParams& p,
                                         const PlanarState& initial,
                                         double t_final, double tol,
                                         const std::vector<double>& samples) {
  require_on_Q(p, initial);
  const Dopri5Options opt = drift_targeted_options(tol);
  auto field = [&p](double, const Eigen::VectorXd& y) {
    PlanarState s;
    s.v = y.segment<3>(0);
    s.n = y.segment<3>(3);
    const PlanarDeriv d = planar_field(p, s);
    Eigen::VectorXd dy(6);
    dy.segment<3>(0) = d.v_dot;
    dy.segment<3>(3) = d.n_dot;
    return dy;
  };
  auto hook = [&p](Eigen::VectorXd& y) {
    PlanarState s;
    s.v = y.segment<3>(0);
    s.n = y.segment<3>(3);
    require_on_Q(p, s);  // trajectories must never exit the region
    return 0.0;
  };
  Eigen::VectorXd y0(6);
  y0.segment<3>(0) = initial.v;
  y0.segment<3>(3) = initial.n;
  const Dopri5Result raw = dopri5_solve(field, 0.0, y0, t_final, samples, opt, hook);
  PlanarTrajectory traj;
  traj.t = raw.t;
  traj.n_accepted = raw.n_accepted;
  traj.states.reserve(raw.y.size());
  for (const Eigen::VectorXd& y : raw.y) {
    PlanarState s;
    s.v = y.segment<3>(0);
    s.n = y.segment<3>(3);
    traj.states.push_back(s);
  }
  return traj;
}

inline PlanarTrajectory integrate_planar(const PlanarParams& p,
                                         const PlanarState& initial,
                                         double t_final, double tol,
                                         int n_samples) {
  return integrate_planar(p, initial, t_final, tol, linspace(t_final, n_samples));
}

struct Reduced3Trajectory {
  std::vector<double> t;
  std::vector<Reduced3State> states;
};

inline Reduced3Trajectory integrate_reduced3(const PlanarParams& p,
                                             const LevelSetData& lv,
                                             const Reduced3State& initial,
                                             double t_final, double tol,
                                             const std::vector<double>& samples) {
  const Dopri5Options opt = drift_targeted_options(tol);
  auto field = [&](double, const Eigen::VectorXd& y) {
    const Vec3 d = reduced3_field(p, lv, Reduced3State{y(0), y(1), y(2)});
    Eigen::VectorXd dy(3);
    dy = d;
    return dy;
  };
  Eigen::VectorXd y0(3);
  y0 << initial.vphi, initial.n1, initial.n2;
  const Dopri5Result raw = dopri5_solve(field, 0.0, y0, t_final, samples, opt);
  Reduced3Trajectory traj;
  traj.t = raw.t;
  for (const Eigen::VectorXd& y : raw.y)
    traj.states.push_back(Reduced3State{y(0), y(1), y(2)});
  return traj;
}

/// Divergence of the radius-weighted polar field A (dA/dt, dtheta/dt) over
/// (A, theta), with v_phi eliminated through the level constants; the
/// quadrature construction rests on this density being invariant.
inline double polar_measure_divergence(const PlanarParams& p,
                                       const LevelSetData& lv, double A,
                                       double theta, double h) {
  if (!(h >= 1e-7 && h <= 1e-2))
    throw std::invalid_argument("divergence step h must lie in [1e-7, 1e-2]");
  auto field = [&](double a, double th) {
    const double xi = th - lv.alpha;
    const double a_dot = -lv.k * std::cos(xi);
    const double th_dot = lv.k * std::sin(xi) / a +
                          (p.plane_mass + 2.0 * p.delta) /
                              (2.0 * (p.plane_mass + p.delta)) *
                              v_phi_of_A(p, lv, a);
    return std::pair{a * a_dot, a * th_dot};  // weighted by the density A
  };
  const double dA = (field(A + h, theta).first - field(A - h, theta).first) / (2 * h);
  const double dTh =
      (field(A, theta + h).second - field(A, theta - h).second) / (2 * h);
  return dA + dTh;
}

}  // namespace bearings
