#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace bearings {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Absolute tolerance on |S + S^T| entries when converting a matrix back to
/// its axial vector. Inputs are O(1)-scaled throughout the library.
inline constexpr double kSkewTol = 1e-12;

/// Lie-algebra isomorphism so(3) ~ R^3: hat(v) w = v x w.
inline Mat3 hat(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

/// Inverse of hat(). Rejects matrices that are not skew-symmetric within
/// kSkewTol; a failure here signals a caller bug, not a data problem.
inline Vec3 vee(const Mat3& s) {
  const double defect = (s + s.transpose()).cwiseAbs().maxCoeff();
  if (!(defect <= kSkewTol)) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric (defect " +
                                std::to_string(defect) + ")");
  }
  return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

/// Deterministic orthonormal basis of the plane orthogonal to a unit vector.
inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& unit_n) {
  // Seed with the coordinate axis least aligned with n.
  int k = 0;
  unit_n.cwiseAbs().minCoeff(&k);
  Vec3 e1 = Vec3::Unit(k) - unit_n.dot(Vec3::Unit(k)) * unit_n;
  e1.normalize();
  Vec3 e2 = unit_n.cross(e1);
  return {e1, e2};
}

/// Rotation exp(hat(w)) by the Rodrigues formula.
inline Mat3 rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    const Mat3 s = hat(w);
    return Mat3::Identity() + s + 0.5 * s * s;
  }
  const Vec3 axis = w / angle;
  const Mat3 s = hat(axis);
  return Mat3::Identity() + std::sin(angle) * s +
         (1.0 - std::cos(angle)) * s * s;
}

}  // namespace bearings
