#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "bearings/integrate.hpp"
#include "bearings/invariants.hpp"
#include "bearings/random_states.hpp"

using namespace bearings;

namespace {

SphericalParams case3_integrable(double c_A = 2.0, double c_B = 3.0,
                                 double c_C = 4.0) {
  // configuration III with 2r = 3R: eps = -1 exactly
  return SphericalParams::make(Configuration::III, 1.0, 1.5, Vec3(c_A, c_B, c_C),
                               {1.1}, {0.9});
}

SphericalParams axisymmetric(double c_A, double c_C, Configuration config,
                             double R, double r) {
  return SphericalParams::make(config, R, r, Vec3(c_A, c_C, c_C), {1.0}, {0.45});
}

double relative_drift(const std::vector<double>& values) {
  const double f0 = values.front();
  double worst = 0.0;
  for (double f : values) worst = std::max(worst, std::abs(f - f0));
  return worst / std::max(std::abs(f0), 1e-9);
}

// independent cofactor-expansion determinant
double det_brute(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// adaptive Simpson, used as the quadrature oracle for Phi
double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth > 40 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth + 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth + 1);
}

double simpson(const std::function<double(double)>& f, double a, double b,
               double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0);
}

}  // namespace

TEST_CASE("integrals at omega = 0: F1 vanishes, F2 = d^2") {
  const auto p = case3_integrable();
  ReducedState s;
  s.omega = Vec3::Zero();
  s.gamma = {Vec3(0.48, -0.6, 0.64).normalized()};
  s.c = {0.8};
  const auto rep = integrals(p, s);
  const double d = p.coupling_d(0.8);
  REQUIRE(rep.F1 == 0.0);
  REQUIRE(rep.F2 == Catch::Approx(d * d).epsilon(1e-13));
  REQUIRE(rep.F_pairs(0, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("fully symmetric eps = -1 integral collapses to (A+D)<Mt, Gamma>") {
  const auto p = case3_integrable(2.5, 2.5, 2.5);
  Rng rng(12);
  for (int k = 0; k < 20; ++k) {
    ReducedState s;
    s.omega = rng.vec3(-1, 1);
    s.gamma = {rng.unit_vec3()};
    s.c = {rng.uniform(-1, 1)};
    const DerivedQuantities q = derived_quantities(p, s);
    const double expect = (p.A + q.D) * q.M_total.dot(s.gamma[0]);
    REQUIRE(integral_case_eps_minus_one(p, s) ==
            Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("measure density: diagonal case and brute-force determinant") {
  const auto p = case3_integrable();
  const double D = p.coupling_D();
  REQUIRE(measure_density(p, {Vec3(0, 0, 1)}) ==
          Catch::Approx(std::sqrt((p.A + D) * (p.B + D) * p.C)).epsilon(1e-13));

  Rng rng(9);
  for (int k = 0; k < 40; ++k) {
    const std::vector<Vec3> gs = {rng.unit_vec3()};
    const double mu = measure_density(p, gs);
    REQUIRE(mu * mu ==
            Catch::Approx(det_brute(modified_inertia(p, gs))).epsilon(1e-12));
  }
}

TEST_CASE("measure density factorizes through rho in the axisymmetric case") {
  const auto p = axisymmetric(2.0, 3.2, Configuration::I, 2.0, 0.8);
  const double D = p.coupling_D();
  Rng rng(14);
  for (int k = 0; k < 40; ++k) {
    ReducedState s;
    s.omega = rng.vec3(-1, 1);
    s.gamma = {rng.unit_vec3()};
    s.c = {0.3};
    const double mu = measure_density(p, s.gamma);
    const double rho = symmetric_axis_quantities(p, s).rho;
    REQUIRE(mu / std::sqrt(p.C + D) == Catch::Approx(rho).epsilon(1e-12));
  }
}

TEST_CASE("weighted divergence vanishes, bare divergence does not") {
  Rng rng(77);
  int control_hits = 0, control_total = 0;
  for (auto config : {Configuration::I, Configuration::II, Configuration::III,
                      Configuration::IV}) {
    const int n_balls = (config == Configuration::I) ? 2 : 1;
    const auto p = random_spherical_params(rng, config, n_balls);
    for (int k = 0; k < 10; ++k) {
      const ReducedState s = random_reduced_state(rng, p);
      const ReducedDeriv d = reduced_field(p, s);
      double field_scale = std::max(1.0, d.omega_dot.cwiseAbs().maxCoeff());
      for (const Vec3& gd : d.gamma_dot)
        field_scale = std::max(field_scale, gd.cwiseAbs().maxCoeff());
      REQUIRE(std::abs(verify_measure(p, s, 1e-4)) < 1e-6 * field_scale);
      ++control_total;
      if (std::abs(divergence_unweighted(p, s, 1e-4)) > 1e-3) ++control_hits;
    }
  }
  REQUIRE(control_hits >= (9 * control_total) / 10);
}

TEST_CASE("weighted divergence at a rest state") {
  const auto p = case3_integrable();
  ReducedState s;
  s.omega = Vec3::Zero();
  s.gamma = {Vec3(0.6, 0.64, 0.48).normalized()};
  s.c = {0.5};
  REQUIRE(std::abs(verify_measure(p, s, 1e-4)) < 1e-6);
}

TEST_CASE("divergence step outside [1e-7, 1e-2] is rejected") {
  const auto p = case3_integrable();
  ReducedState s;
  s.omega = Vec3(0.1, 0.2, 0.3);
  s.gamma = {Vec3(0, 0, 1)};
  s.c = {0.0};
  REQUIRE_THROWS_AS(verify_measure(p, s, 1e-8), std::invalid_argument);
  REQUIRE_THROWS_AS(verify_measure(p, s, 0.1), std::invalid_argument);
}

TEST_CASE("eps = -1 integral: rest-state closed form and usage guard") {
  const auto p = case3_integrable();
  const double D = p.coupling_D();
  Rng rng(31);
  for (int k = 0; k < 20; ++k) {
    ReducedState s;
    s.omega = Vec3::Zero();
    s.gamma = {rng.unit_vec3()};
    s.c = {rng.uniform(-1, 1)};
    const double d = p.coupling_d(s.c[0]);
    const Vec3 g = s.gamma[0];
    const double expect =
        d * ((p.B + p.C - p.A + D) * g.x() * g.x() +
             (p.A + p.C - p.B + D) * g.y() * g.y() +
             (p.A + p.B - p.C + D) * g.z() * g.z());
    REQUIRE(integral_case_eps_minus_one(p, s) ==
            Catch::Approx(expect).margin(1e-13));
  }

  const auto p_wrong = SphericalParams::make(Configuration::I, 2.0, 1.0,
                                             Vec3(2, 3, 4), {1.0}, {0.4});
  ReducedState s;
  s.omega = Vec3(0.1, 0.2, 0.3);
  s.gamma = {Vec3(0, 0, 1)};
  s.c = {0.1};
  REQUIRE_THROWS_AS(integral_case_eps_minus_one(p_wrong, s), std::invalid_argument);
}

TEST_CASE("eps = -1 integral is conserved, including the d = 0 subcase") {
  Rng rng(47);
  SECTION("d = 0 reduces to the ball-on-sphere structure") {
    const auto p = case3_integrable(2.2, 3.1, 4.3);
    ReducedState s = random_reduced_state(rng, p);
    s.c = {0.0};
    const auto traj = integrate_reduced(p, s, 100.0, 1e-10, 101);
    std::vector<double> values;
    for (const ReducedState& st : traj.states)
      values.push_back(integral_case_eps_minus_one(p, st));
    REQUIRE(relative_drift(values) < 1e-8);
  }
  SECTION("random case-III states") {
    for (int k = 0; k < 3; ++k) {
      const double R = rng.uniform(0.8, 1.6);
      const auto p = SphericalParams::make(
          Configuration::III, R, 1.5 * R,
          Vec3(rng.uniform(1.5, 2.5), rng.uniform(2.6, 3.5), rng.uniform(3.6, 4.5)),
          {rng.uniform(0.8, 1.5)}, {rng.uniform(0.3, 1.0)});
      const ReducedState s = random_reduced_state(rng, p);
      const auto traj = integrate_reduced(p, s, 100.0, 1e-10, 101);
      std::vector<double> values;
      for (const ReducedState& st : traj.states)
        values.push_back(integral_case_eps_minus_one(p, st));
      REQUIRE(relative_drift(values) < 1e-8);
    }
  }
}

TEST_CASE("axisymmetric integral: F vanishes on the symmetry equator") {
  const auto p = axisymmetric(3.0, 1.5, Configuration::I, 2.0, 0.8);
  ReducedState s;
  s.omega = Vec3(0.0, 0.7, -0.4);             // Omega_1 = 0
  s.gamma = {Vec3(0.0, 0.28, 0.96)};          // Gamma_1 = 0, so Phi = 0
  s.c = {0.6};
  const auto q = symmetric_axis_quantities(p, s);
  REQUIRE(q.F == 0.0);
  REQUIRE(q.Phi == 0.0);
  const double D = p.coupling_D();
  const double d = p.coupling_d(0.6);
  const double expect = D * q.G - d * p.C;
  REQUIRE(integral_case_BC(p, s, +1).real() == Catch::Approx(expect).epsilon(1e-12));
  REQUIRE(integral_case_BC(p, s, -1).real() == Catch::Approx(expect).epsilon(1e-12));
  REQUIRE(integral_case_BC(p, s, +1).imag() == 0.0);
}

TEST_CASE("axisymmetric integral rejects B != C") {
  const auto p = SphericalParams::make(Configuration::I, 2.0, 1.0, Vec3(2, 3, 4),
                                       {1.0}, {0.4});
  ReducedState s;
  s.omega = Vec3(0.1, 0.2, 0.3);
  s.gamma = {Vec3(0, 0, 1)};
  s.c = {0.1};
  REQUIRE_THROWS_AS(integral_case_BC(p, s, +1), std::invalid_argument);
}

TEST_CASE("product identity F3+ F3- is an affine combination of F1 and F2") {
  Rng rng(53);
  for (const auto& [cA, cC] : {std::pair{3.1, 1.4}, std::pair{1.4, 3.1}}) {
    const auto p = axisymmetric(cA, cC, Configuration::I, 2.0, 0.8);
    const double D = p.coupling_D();
    for (int k = 0; k < 200; ++k) {
      ReducedState s;
      s.omega = rng.vec3(-1.5, 1.5);
      s.gamma = {rng.unit_vec3()};
      s.c = {rng.uniform(-1, 1)};
      const double d = p.coupling_d(s.c[0]);
      const DerivedQuantities q = derived_quantities(p, s);
      const std::complex<double> prod =
          integral_case_BC(p, s, +1) * integral_case_BC(p, s, -1);
      // affine combination of <M, Omega> = 2 F1 and F2; the d^2 term enters
      // with a plus sign (constant on each invariant manifold)
      const double expect = p.C * D * (p.C + D) * q.M.dot(s.omega) -
                            p.C * D * q.M_total.squaredNorm() +
                            p.C * (p.C + D) * d * d;
      REQUIRE(prod.real() ==
              Catch::Approx(expect).epsilon(1e-10).margin(1e-12));
      REQUIRE(std::abs(prod.imag()) < 1e-10 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("axisymmetric integrals are conserved on both branches") {
  Rng rng(59);
  SECTION("A > C, real branches, all four configurations") {
    for (auto [config, R, r] :
         {std::tuple{Configuration::I, 2.0, 0.8},
          std::tuple{Configuration::II, 2.0, 0.5},
          std::tuple{Configuration::III, 1.0, 1.4},
          std::tuple{Configuration::IV, 1.0, 0.8}}) {
      const auto p = axisymmetric(3.1, 1.3, config, R, r);
      const ReducedState s = random_reduced_state(rng, p);
      const auto traj = integrate_reduced(p, s, 50.0, 1e-10, 81);
      std::vector<double> plus, minus;
      for (const ReducedState& st : traj.states) {
        plus.push_back(integral_case_BC(p, st, +1).real());
        minus.push_back(integral_case_BC(p, st, -1).real());
      }
      REQUIRE(relative_drift(plus) < 1e-7);
      REQUIRE(relative_drift(minus) < 1e-7);
    }
  }
  SECTION("A < C: both components of the continued pair are conserved") {
    const auto p = axisymmetric(1.2, 2.9, Configuration::I, 2.0, 0.8);
    const ReducedState s = random_reduced_state(rng, p);
    const auto traj = integrate_reduced(p, s, 50.0, 1e-10, 81);
    std::vector<double> re, im, modulus;
    for (const ReducedState& st : traj.states) {
      const std::complex<double> v = integral_case_BC(p, st, +1);
      re.push_back(v.real());
      im.push_back(v.imag());
      modulus.push_back(std::abs(v));
    }
    REQUIRE(relative_drift(re) < 1e-7);
    REQUIRE(relative_drift(im) < 1e-7);
    REQUIRE(relative_drift(modulus) < 1e-7);
  }
}

TEST_CASE("shifting the Phi base point rescales both branches by a constant") {
  Rng rng(61);
  const auto p = axisymmetric(3.1, 1.3, Configuration::I, 2.0, 0.8);
  const double D = p.coupling_D();
  const double b = D * (p.A - p.C);
  const double shift = 0.37;
  const double factor = std::exp((1.0 - p.eps) * std::sqrt(b) * shift);

  const ReducedState s0 = random_reduced_state(rng, p);
  const auto traj = integrate_reduced(p, s0, 30.0, 1e-10, 61);
  std::vector<double> shifted;
  for (const ReducedState& st : traj.states) {
    const auto q = symmetric_axis_quantities(p, st);
    const double d = p.coupling_d(st.c[0]);
    const double val = (std::sqrt(b) * q.F + D * q.G - d * p.C) *
                       std::exp((1.0 - p.eps) * std::sqrt(b) * (q.Phi + shift));
    shifted.push_back(val);
    REQUIRE(val == Catch::Approx(integral_case_BC(p, st, +1).real() * factor)
                       .epsilon(1e-11));
  }
  REQUIRE(relative_drift(shifted) < 1e-7);
}

TEST_CASE("phi primitive: normalization, symmetry-limit, derivative") {
  REQUIRE(phi_primitive_raw(3.0, 1.5, 2.0, 0.25, 0.0) == 0.0);

  // A = C: Phi is linear in Gamma_1
  const double lin = phi_primitive_raw(2.0, 2.0, 1.5, 0.5, 0.7);
  REQUIRE(lin == Catch::Approx(0.7 / (0.5 * std::sqrt(2.0 * (2.0 + 1.5))))
                     .epsilon(1e-14));

  Rng rng(67);
  for (int k = 0; k < 60; ++k) {
    const double A = rng.uniform(0.5, 3.0), C = rng.uniform(0.5, 3.0);
    const double D = rng.uniform(0.2, 2.0);
    const double eps = rng.uniform(-1.5, 1.5);
    if (std::abs(eps) < 0.05) continue;
    const double g1 = rng.uniform(-0.95, 0.95);
    const double rho2 = C * (A + D) + D * (A - C) * g1 * g1;
    if (rho2 <= 1e-3) continue;
    const double h = 1e-5;
    const double fd = (phi_primitive_raw(A, C, D, eps, g1 + h) -
                       phi_primitive_raw(A, C, D, eps, g1 - h)) /
                      (2.0 * h);
    REQUIRE(fd == Catch::Approx(1.0 / (eps * std::sqrt(rho2))).epsilon(1e-9));
  }
}

TEST_CASE("phi primitive matches the quadrature oracle") {
  Rng rng(71);
  for (int k = 0; k < 40; ++k) {
    const double A = rng.uniform(0.5, 3.0), C = rng.uniform(0.5, 3.0);
    const double D = rng.uniform(0.2, 2.0);
    double eps = rng.uniform(-1.5, 1.5);
    if (std::abs(eps) < 0.05) eps = 0.5;
    const double g1 = rng.uniform(-0.98, 0.98);
    if (C * (A + D) + D * (A - C) * g1 * g1 <= 1e-3) continue;
    auto integrand = [&](double t) {
      return 1.0 / (eps * std::sqrt(C * (A + D) + D * (A - C) * t * t));
    };
    const double oracle = simpson(integrand, 0.0, g1, 1e-14);
    REQUIRE(phi_primitive_raw(A, C, D, eps, g1) ==
            Catch::Approx(oracle).epsilon(1e-10).margin(1e-12));
  }
}
