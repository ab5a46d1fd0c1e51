#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bearings/planar.hpp"
#include "bearings/spherical.hpp"

namespace bearings {

/// Seeded generator with a platform-independent uniform double, so reports
/// and tests reproduce bit-for-bit everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vec3 unit_vec3() {
    // rejection sampling from the cube, then normalize
    for (;;) {
      Vec3 v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      const double n2 = v.squaredNorm();
      if (n2 > 1e-4 && n2 <= 1.0) return v / std::sqrt(n2);
    }
  }

  Vec3 vec3(double lo, double hi) {
    return Vec3(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi));
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Random admissible geometry and inertias for a configuration. Sphere
/// inertias are distinct and satisfy the triangle inequality; ball inertias
/// are near the homogeneous-ball / spherical-shell values.
inline SphericalParams random_spherical_params(Rng& rng, Configuration config,
                                               int n_balls) {
  for (;;) {
    const double R = rng.uniform(0.8, 2.0);
    double r = 0.0;
    switch (config) {
      case Configuration::I: r = rng.uniform(0.2, 0.8) * R; break;
      case Configuration::II: r = rng.uniform(0.15, 0.4) * R; break;
      case Configuration::III: r = rng.uniform(1.05, 2.0) * R; break;
      case Configuration::IV: r = rng.uniform(0.55, 0.95) * R; break;
    }
    Vec3 inertia(rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0));
    const double a = inertia.x(), b = inertia.y(), c = inertia.z();
    if (a + b < c || b + c < a || a + c < b) continue;  // keep physically realizable
    if (std::abs(a - b) < 0.05 || std::abs(b - c) < 0.05 || std::abs(a - c) < 0.05)
      continue;  // keep generic
    std::vector<double> masses(n_balls), inertias(n_balls);
    const double shell_factor =
        (config == Configuration::III || config == Configuration::IV) ? 2.0 / 3.0
                                                                      : 2.0 / 5.0;
    for (int i = 0; i < n_balls; ++i) {
      masses[i] = rng.uniform(0.5, 2.0);
      inertias[i] = shell_factor * masses[i] * r * r * rng.uniform(0.8, 1.2);
    }
    return SphericalParams::make(config, R, r, inertia, masses, inertias);
  }
}

inline PlanarParams random_planar_params(Rng& rng, int n_balls) {
  const double r = rng.uniform(0.3, 1.0);
  std::vector<double> masses(n_balls), inertias(n_balls);
  for (int i = 0; i < n_balls; ++i) {
    masses[i] = rng.uniform(0.5, 2.0);
    inertias[i] = 0.4 * masses[i] * r * r * rng.uniform(0.8, 1.2);
  }
  return PlanarParams::make(rng.uniform(0.8, 2.5), rng.uniform(0.5, 2.0), r,
                            std::move(masses), std::move(inertias));
}

/// Random admissible planar state, scaled like a physical ball layout: the
/// moments derive from sampled contact positions OB_i (plus a positive
/// second-moment slack, which keeps the margin delta M - |N|^2 interior and
/// covers the single-ball case, whose physical states sit on the boundary).
inline PlanarState random_planar_state(Rng& rng, const PlanarParams& p) {
  PlanarState s;
  s.v = rng.vec3(-1.0, 1.0);
  s.n.setZero();
  for (size_t i = 0; i < p.delta_i.size(); ++i) {
    const double radius = rng.uniform(0.6, 1.8);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double bx = radius * std::cos(angle), by = radius * std::sin(angle);
    s.n.x() += p.delta_i[i] * bx;
    s.n.y() += p.delta_i[i] * by;
    s.n.z() += p.delta_i[i] * (bx * bx + by * by);
  }
  s.n.z() += rng.uniform(0.2, 0.8);
  return s;
}

/// Random planar state whose radial coordinate A = |N| oscillates in a
/// bounded band with nonzero speed: k bounded away from zero, the state
/// strictly inside the band, and a bounded band guaranteed by the asymptotic
/// value of sin(theta - alpha) exceeding 1 in magnitude.
inline PlanarState random_oscillatory_planar_state(Rng& rng,
                                                   const PlanarParams& p) {
  for (;;) {
    PlanarState s = random_planar_state(rng, p);
    if (std::abs(s.v.z()) < 0.4) continue;
    const double a0 = std::hypot(s.n.x(), s.n.y());
    if (a0 < 0.25) continue;
    const auto lv = reduce_level_data(p, s);
    if (lv.k < 0.05) continue;
    const double c = quad_coeff(p);
    const double beta = (p.plane_mass + 2.0 * p.delta) * p.delta * lv.d6 /
                        (2.0 * p.plane_mass * (p.plane_mass + p.delta) *
                         (p.plane_mass + p.delta));
    if (!(std::abs(beta) * std::sqrt(c) > 1.15 * lv.k)) continue;  // bounded band
    const double u0 = (lv.d7 - radial_primitive(p, lv, a0)) / (lv.k * a0);
    if (std::abs(u0) > 0.92) continue;  // keep clear of the turning radii
    return s;
  }
}

/// Random reduced state with |omega| = O(1); for n >= 2 the gammas are
/// resampled until the ball non-overlap condition holds with margin.
inline ReducedState random_reduced_state(Rng& rng, const SphericalParams& params) {
  ReducedState state;
  state.omega = rng.vec3(-1.0, 1.0);
  const int n = params.n();
  state.gamma.resize(n);
  state.c.resize(n);
  for (int i = 0; i < n; ++i) state.c[i] = rng.uniform(-1.0, 1.0);
  const bool constrained =
      n >= 2 && (params.config == Configuration::I || params.config == Configuration::II);
  const double bound = constrained ? params.feasibility_bound() : 0.0;
  for (;;) {
    for (int i = 0; i < n; ++i) state.gamma[i] = rng.unit_vec3();
    if (!constrained) break;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n && ok; ++j)
        if ((state.gamma[i] - state.gamma[j]).norm() < 1.05 * bound) ok = false;
    if (ok) break;
  }
  return state;
}

}  // namespace bearings
