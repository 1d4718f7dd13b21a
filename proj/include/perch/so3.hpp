#pragma once

#include <Eigen/Dense>

namespace perch {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kHalfPi = kPi / 2.0;

/// Skew-symmetric matrix of v, satisfying hat(v) * y == v.cross(y).
Mat3 hat(const Vec3& v);

/// Inverse of hat. The symmetric part of m must have Frobenius norm
/// below 1e-9; throws NotSkewSymmetric otherwise.
Vec3 vee(const Mat3& m);

/// Nearest rotation matrix to m (polar projection). Input must be
/// full-rank with positive determinant; throws Degenerate otherwise.
/// The result satisfies ||R^T R - I||_F < 1e-12.
Mat3 orthonormalize(const Mat3& m);

/// True if r is orthonormal with positive determinant within tol.
bool is_rotation(const Mat3& r, double tol = 1e-6);

/// Attitude error -0.5 * vee(rc^T rf - rf^T rc) between a commanded
/// rotation rc and a feedback rotation rf.
Vec3 rotation_error(const Mat3& rc, const Mat3& rf);

/// Pitch angle under the Z-Y-X (yaw-pitch-roll) convention,
/// theta = -asin(r(2,0)), in [-pi/2, pi/2].
double pitch_of(const Mat3& r);

// Elementary rotations about the body axes.
Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

}  // namespace perch
