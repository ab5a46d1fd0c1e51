#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bearings/errors.hpp"
#include "bearings/planar.hpp"

namespace bearings {

/// Gauss-Legendre nodes and weights on [-1, 1], computed once per order by
/// Newton iteration on the Legendre recurrence.
class GaussLegendre {
 public:
  explicit GaussLegendre(int n) : x_(n), w_(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      x_[i] = x;
      w_[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  double integrate(const std::function<double(double)>& f, double a,
                   double b) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (size_t i = 0; i < x_.size(); ++i) acc += w_[i] * f(mid + half * x_[i]);
    return acc * half;
  }

  static const GaussLegendre& order12() {
    static const GaussLegendre g(12);
    return g;
  }
  static const GaussLegendre& order24() {
    static const GaussLegendre g(24);
    return g;
  }

 private:
  std::vector<double> x_, w_;
};

/// Adaptive Gauss quadrature with a nested 12/24-point error estimate. Node
/// sets are open, so endpoint singularities integrable after substitution are
/// never evaluated.
inline double adaptive_gauss(const std::function<double(double)>& f, double a,
                             double b, double rel_tol = 1e-12,
                             double abs_tol = 1e-14, int max_depth = 48) {
  struct Frame {
    double a, b;
    int depth;
  };
  double total = 0.0;
  std::vector<Frame> stack{{a, b, 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    const double coarse = GaussLegendre::order12().integrate(f, fr.a, fr.b);
    const double fine = GaussLegendre::order24().integrate(f, fr.a, fr.b);
    const double err = std::abs(fine - coarse);
    if (err <= abs_tol + rel_tol * std::abs(fine) || fr.depth >= max_depth) {
      if (fr.depth >= max_depth && !(err <= 1e3 * (abs_tol + rel_tol * std::abs(fine))))
        throw NumericalError("quadrature refinement failed to converge on [" +
                             std::to_string(fr.a) + ", " + std::to_string(fr.b) + "]");
      total += fine;
      continue;
    }
    const double mid = 0.5 * (fr.a + fr.b);
    stack.push_back({fr.a, mid, fr.depth + 1});
    stack.push_back({mid, fr.b, fr.depth + 1});
  }
  return total;
}

/// Time-domain solution of the planar level-set system obtained by
/// quadratures: the radius band is located from the total-differential
/// relation, time over each monotone radial segment is an explicit integral
/// (with a square-root substitution absorbing the turning-point
/// singularities), and sampling inverts the monotone time map.
struct QuadratureSolution {
  std::vector<double> t;
  std::vector<double> A;
  std::vector<double> theta;
  std::vector<double> vphi;
  std::vector<PlanarState> states;  ///< reconstructed full states
  std::vector<double> turning_radii;
  int segments_used = 0;
  bool ode_fallback = false;
  std::string fallback_reason;
};

namespace quad_detail {

/// (k A)^2 (1 - sin^2(theta-alpha)) as a smooth function of A: positive
/// strictly inside the admissible radial band, zero at turning radii.
struct Band {
  const PlanarParams& p;
  const LevelSetData& lv;

  double g(double A) const {
    const double ka = lv.k * A;
    const double num = lv.d7 - radial_primitive(p, lv, A);
    return ka * ka - num * num;
  }
  double g_prime(double A) const {
    const double num = lv.d7 - radial_primitive(p, lv, A);
    const double c = quad_coeff(p);
    const double beta = (p.plane_mass + 2.0 * p.delta) * p.delta * lv.d6 /
                        (2.0 * p.plane_mass * (p.plane_mass + p.delta) *
                         (p.plane_mass + p.delta));
    const double s_prime = beta * c * A / std::sqrt(lv.d5 + c * A * A);
    return 2.0 * lv.k * lv.k * A + 2.0 * num * s_prime;
  }
  /// |dA/dt| = sqrt(g)/A inside the band.
  double speed(double A) const {
    return std::sqrt(std::max(g(A), 0.0)) / A;
  }
};

/// Locates the first zero of g in the given direction, starting strictly
/// inside the band. Bisection to a tight bracket, then Newton polish.
inline double find_turning(const Band& band, double a_start, int dir) {
  double step = 1e-4 * (1.0 + std::abs(a_start));
  double prev = a_start;
  double cur = a_start;
  for (int it = 0; it < 200000; ++it) {
    cur = prev + dir * step;
    if (cur <= 0.0) cur = 0.5 * prev;  // the band cannot reach A <= 0
    if (band.g(cur) <= 0.0) break;
    prev = cur;
    step = std::min(step * 1.3, 0.2 * (1.0 + cur));
    if (dir > 0 && cur > 1e6 * (1.0 + a_start))
      throw NumericalError("no turning radius found: the radial motion is unbounded");
    if (it == 199999)
      throw NumericalError("turning-radius search exhausted its budget");
  }
  double lo = std::min(prev, cur), hi = std::max(prev, cur);
  // keep g(inner) > 0 >= g(outer)
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool inner_is_lo = band.g(lo) > 0.0;
    if ((band.g(mid) > 0.0) == inner_is_lo)
      (inner_is_lo ? lo : hi) = mid;
    else
      (inner_is_lo ? hi : lo) = mid;
    if (hi - lo < 1e-15 * (1.0 + hi)) break;
  }
  double root = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    const double gp = band.g_prime(root);
    if (gp == 0.0) break;
    root -= band.g(root) / gp;
  }
  const double gp = band.g_prime(root);
  const double scale = band.lv.k * band.lv.k * (1.0 + std::abs(root));
  if (!(std::abs(gp) > 1e-9 * scale))
    throw NumericalError(
        "degenerate turning point at A = " + std::to_string(root) +
        " (tangential contact of the level curve; the radial motion stalls)");
  return root;
}

/// Time to travel between two radii inside one monotone segment. Endpoints
/// flagged singular sit at turning radii; the s = sqrt(|A - A_turn|)
/// substitution makes the integrand smooth there.
inline double segment_time(const Band& band, double a_from, double a_to,
                           bool singular_from, bool singular_to) {
  if (a_from == a_to) return 0.0;
  const double dir = (a_to > a_from) ? 1.0 : -1.0;
  auto dt_dA = [&](double A) { return A / std::sqrt(std::max(band.g(A), 1e-300)); };
  const double mid = 0.5 * (a_from + a_to);
  double total = 0.0;
  // half adjacent to a_from
  if (singular_from) {
    const double smax = std::sqrt(std::abs(mid - a_from));
    total += adaptive_gauss(
        [&](double s) { return 2.0 * s * dt_dA(a_from + dir * s * s); }, 0.0, smax);
  } else {
    total += dir * adaptive_gauss(dt_dA, a_from, mid);
  }
  // half adjacent to a_to
  if (singular_to) {
    const double smax = std::sqrt(std::abs(a_to - mid));
    total += adaptive_gauss(
        [&](double s) { return 2.0 * s * dt_dA(a_to - dir * s * s); }, 0.0, smax);
  } else {
    total += dir * adaptive_gauss(dt_dA, mid, a_to);
  }
  return total;
}

/// Inverts tau = segment_time(a_from -> A) for A within a monotone segment,
/// by bisection on the bracketing radii with a Newton accelerator. The
/// partial time is always integrated from the nearer segment end, so the
/// unsubstituted integrand never terminates next to a turning radius.
inline double invert_time(const Band& band, double a_from, double a_to,
                          bool singular_from, bool singular_to, double tau,
                          double t_total) {
  if (tau <= 0.0) return a_from;
  if (tau >= t_total) return a_to;
  double lo = std::min(a_from, a_to), hi = std::max(a_from, a_to);
  auto time_to = [&](double A) {
    if (std::abs(A - a_from) <= std::abs(a_to - A))
      return segment_time(band, a_from, A, singular_from, false);
    return t_total - segment_time(band, A, a_to, false, singular_to);
  };
  // bisection with Newton steps where they stay inside the bracket
  double a_cur = a_from + (a_to - a_from) * (tau / t_total);
  for (int it = 0; it < 120; ++it) {
    const double f = time_to(a_cur) - tau;
    if (std::abs(f) < 1e-14 * (1.0 + std::abs(tau))) break;
    const bool from_below = (a_from < a_to);
    if ((f > 0.0) == from_below)
      hi = a_cur;
    else
      lo = a_cur;
    const double speed = band.speed(a_cur);
    double next = (speed > 0.0) ? a_cur - (from_below ? f : -f) * speed : a_cur;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a_cur) < 1e-16 * (1.0 + std::abs(a_cur))) {
      a_cur = next;
      break;
    }
    a_cur = next;
  }
  return a_cur;
}

}  // namespace quad_detail

/// Explicit time-domain solution on the requested grid. Falls back to direct
/// integration of the reduced level-set system (with the fallback flagged)
/// when the radial quadrature does not apply: k = 0, the polar chart is
/// singular (N = 0), or the radius is stationary.
inline QuadratureSolution quadrature_solution(const PlanarParams& params,
                                              const PlanarState& initial,
                                              const std::vector<double>& t_grid) {
  require_on_Q(params, initial);
  const auto [lv, r3] = reduce_to_level_set(params, initial);
  const double a0 = std::hypot(r3.n1, r3.n2);
  const double theta0 = std::atan2(r3.n2, r3.n1);

  QuadratureSolution out;
  auto fallback = [&](const std::string& reason) {
    out.ode_fallback = true;
    out.fallback_reason = reason;
    const auto traj =
        integrate_reduced3(params, lv, r3, t_grid.empty() ? 0.0 : t_grid.back(),
                           1e-12, t_grid);
    for (size_t i = 0; i < traj.t.size(); ++i) {
      const Reduced3State& s = traj.states[i];
      out.t.push_back(traj.t[i]);
      out.A.push_back(std::hypot(s.n1, s.n2));
      out.theta.push_back(std::atan2(s.n2, s.n1));
      out.vphi.push_back(s.vphi);
      out.states.push_back(reconstruct_full(params, lv, s));
    }
    return out;
  };

  if (!(lv.k > 1e-13)) return fallback("k = 0: d1 = d2 = 0, the radius is constant");
  if (!(a0 > 1e-12)) return fallback("polar chart singular at N = 0");

  const quad_detail::Band band{params, lv};
  auto theta_rate = [&](double A, double sin_xi) {
    return (lv.k * sin_xi + (params.plane_mass + 2.0 * params.delta) /
                                (2.0 * (params.plane_mass + params.delta)) * A *
                                v_phi_of_A(params, lv, A)) /
           A;
  };

  const double cos_xi0 = std::cos(theta0 - lv.alpha);
  const double speed_scale = lv.k;
  int dir;          // radial direction of the first segment
  bool start_at_tp;  // whether the motion starts on a turning radius
  if (std::abs(lv.k * cos_xi0) > 1e-9 * speed_scale) {
    dir = (cos_xi0 > 0.0) ? -1 : +1;  // dA/dt = -k cos(theta - alpha)
    start_at_tp = false;
  } else {
    const double sin_xi0 = std::sin(theta0 - lv.alpha);
    const double accel = lv.k * sin_xi0 * theta_rate(a0, sin_xi0);
    if (std::abs(accel) < 1e-12 * speed_scale)
      return fallback("stationary radius: dA/dt vanishes identically on this level set");
    dir = (accel > 0.0) ? +1 : -1;
    start_at_tp = true;
  }

  // Chain monotone radial segments until the grid is exhausted. Within a
  // segment cos(theta - alpha) keeps one sign: sign = -dir.
  double t_cur = 0.0;
  double a_cur = a0;
  bool cur_singular = start_at_tp;
  int branch = -dir;
  size_t next = 0;
  const double t_end = t_grid.empty() ? 0.0 : t_grid.back();
  double theta_prev = theta0;

  while (next < t_grid.size() && t_grid[next] <= t_cur + 1e-300) {
    // leading samples at t = 0
    out.t.push_back(t_grid[next]);
    out.A.push_back(a0);
    out.theta.push_back(theta0);
    out.vphi.push_back(r3.vphi);
    out.states.push_back(initial);
    ++next;
  }

  for (int seg = 0; seg < 100000 && next < t_grid.size(); ++seg) {
    const double a_next = quad_detail::find_turning(band, a_cur, dir);
    const double t_seg =
        quad_detail::segment_time(band, a_cur, a_next, cur_singular, true);
    out.turning_radii.push_back(a_next);
    ++out.segments_used;

    while (next < t_grid.size() && t_grid[next] <= t_cur + t_seg) {
      const double tau = t_grid[next] - t_cur;
      const double A = quad_detail::invert_time(band, a_cur, a_next, cur_singular,
                                                true, tau, t_seg);
      double theta = theta_of_A(params, lv, A, branch);
      // report an unwrapped angle: theta is continuous modulo 2 pi
      theta += 2.0 * std::numbers::pi *
               std::round((theta_prev - theta) / (2.0 * std::numbers::pi));
      theta_prev = theta;
      const double vphi = v_phi_of_A(params, lv, A);
      out.t.push_back(t_grid[next]);
      out.A.push_back(A);
      out.theta.push_back(theta);
      out.vphi.push_back(vphi);
      out.states.push_back(reconstruct_full(
          params, lv, Reduced3State{vphi, A * std::cos(theta), A * std::sin(theta)}));
      ++next;
    }

    t_cur += t_seg;
    a_cur = a_next;
    cur_singular = true;
    dir = -dir;
    branch = -branch;
    if (t_cur > t_end && next >= t_grid.size()) break;
  }

  if (next < t_grid.size())
    throw NumericalError("quadrature segment budget exhausted before the grid end");
  return out;
}

}  // namespace bearings
