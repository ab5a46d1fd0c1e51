#pragma once

#include <stdexcept>
#include <string>

namespace bearings {

/// The four mounting configurations of the spherical system.
///
///   I   balls roll outside the fixed sphere, moving sphere outside them
///   II  balls roll inside the fixed sphere, moving sphere inside them
///   III spherical shell encloses the fixed sphere, moving sphere encloses
///       the shell (single ball only)
///   IV  spherical shell inside the fixed sphere, moving sphere inside the
///       shell (single ball only)
enum class Configuration { I, II, III, IV };

/// Sign convention: +1 for configurations I and III, -1 for II and IV.
inline double sign_convention(Configuration c) {
  return (c == Configuration::I || c == Configuration::III) ? 1.0 : -1.0;
}

inline std::string to_string(Configuration c) {
  switch (c) {
    case Configuration::I: return "I";
    case Configuration::II: return "II";
    case Configuration::III: return "III";
    case Configuration::IV: return "IV";
  }
  throw std::logic_error("unreachable configuration tag");
}

inline Configuration configuration_from_string(const std::string& s) {
  if (s == "I") return Configuration::I;
  if (s == "II") return Configuration::II;
  if (s == "III") return Configuration::III;
  if (s == "IV") return Configuration::IV;
  throw std::invalid_argument("unknown configuration tag '" + s +
                              "' (expected I, II, III or IV)");
}

/// Dimensionless coupling parameters and the moving-sphere radius implied by
/// the geometry. rho is always derived, never user-supplied, so the three
/// radii cannot get out of sync.
struct DerivedGeometry {
  double eps;    ///< gamma-transport rate factor
  double delta;  ///< ball/sphere angular-velocity ratio across the contacts
  double rho;    ///< radius of the moving sphere
};

/// Derives (eps, delta, rho) from the fixed-sphere radius R and the ball
/// radius r. Throws std::domain_error naming the violated inequality when the
/// geometry is inadmissible for the requested configuration.
inline DerivedGeometry derive_params(Configuration config, double R, double r) {
  if (!(R > 0.0)) throw std::domain_error("geometry requires R > 0");
  if (!(r > 0.0)) throw std::domain_error("geometry requires r > 0");
  switch (config) {
    case Configuration::I:
      return {R / (2.0 * R + 2.0 * r), (R + 2.0 * r) / (2.0 * r), R + 2.0 * r};
    case Configuration::II: {
      const double rho = R - 2.0 * r;
      if (!(rho > 0.0))
        throw std::domain_error("case II requires R > 2r (rho = R - 2r > 0)");
      return {R / (2.0 * R - 2.0 * r), -rho / (2.0 * r), rho};
    }
    case Configuration::III: {
      const double rho = 2.0 * r - R;
      if (!(rho > 0.0))
        throw std::domain_error("case III requires 2r > R (rho = 2r - R > 0)");
      if (!(rho > R))
        throw std::domain_error("case III requires rho = 2r - R > R, i.e. r > R");
      return {R / (2.0 * R - 2.0 * r), rho / (2.0 * r), rho};
    }
    case Configuration::IV: {
      const double rho = 2.0 * r - R;
      if (!(rho > 0.0))
        throw std::domain_error("case IV requires 2r > R (rho = 2r - R > 0)");
      if (!(rho < R))
        throw std::domain_error("case IV requires rho = 2r - R < R, i.e. r < R");
      return {R / (2.0 * R - 2.0 * r), rho / (2.0 * r), rho};
    }
  }
  throw std::logic_error("unreachable configuration tag");
}

}  // namespace bearings
