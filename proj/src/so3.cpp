#include "perch/so3.hpp"

#include <cmath>

#include "perch/errors.hpp"

namespace perch {

Mat3 hat(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
        v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

Vec3 vee(const Mat3& m) {
    const Mat3 sym = 0.5 * (m + m.transpose());
    if (sym.norm() > 1e-9) {
        throw NotSkewSymmetric("vee: symmetric part norm " + std::to_string(sym.norm()));
    }
    return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Mat3 orthonormalize(const Mat3& m) {
    const double det = m.determinant();
    if (std::abs(det) < 1e-9) {
        throw Degenerate("orthonormalize: rank-deficient input");
    }
    // Newton iteration for the orthogonal polar factor. Quadratic
    // convergence; near-rotations finish in one or two sweeps.
    Mat3 x = m;
    for (int i = 0; i < 32; ++i) {
        const Mat3 next = 0.5 * (x + x.inverse().transpose());
        const double delta = (next - x).norm();
        x = next;
        if (delta < 1e-14) {
            break;
        }
    }
    if (x.determinant() < 0.0) {
        throw Degenerate("orthonormalize: input is closer to a reflection");
    }
    return x;
}

bool is_rotation(const Mat3& r, double tol) {
    const Mat3 gram = r.transpose() * r;
    return (gram - Mat3::Identity()).norm() < tol && r.determinant() > 0.0;
}

Vec3 rotation_error(const Mat3& rc, const Mat3& rf) {
    // rc^T rf and its transpose are formed from the same product so the
    // difference is antisymmetric to the last bit.
    const Mat3 e = rc.transpose() * rf;
    return -0.5 * vee(e - Mat3(e.transpose()));
}

double pitch_of(const Mat3& r) {
    const double s = std::clamp(-r(2, 0), -1.0, 1.0);
    return std::asin(s);
}

Mat3 rot_x(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m;
    m << 1, 0, 0,
        0, c, -s,
        0, s, c;
    return m;
}

Mat3 rot_y(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m;
    m << c, 0, s,
        0, 1, 0,
        -s, 0, c;
    return m;
}

Mat3 rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m;
    m << c, -s, 0,
        s, c, 0,
        0, 0, 1;
    return m;
}

}  // namespace perch
