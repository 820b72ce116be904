#include "pae/pose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pae/error.hpp"

namespace pae {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

Quaternion Quaternion::from_array(std::span<const double> v) {
  if (v.size() != 4) throw ValidationError("quaternion needs 4 components, got " + std::to_string(v.size()));
  return {v[0], v[1], v[2], v[3]};
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (!(n >= 1e-12)) throw NumericalError("cannot normalize a quaternion with norm " + std::to_string(n));
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::canonical() const {
  for (double c : {w, x, y, z}) {
    if (c > 0.0) return *this;
    if (c < 0.0) return -*this;
  }
  return *this;
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = pae::norm(axis);
  if (n < 1e-15) return {};
  const double s = std::sin(0.5 * angle_rad) / n;
  return {std::cos(0.5 * angle_rad), axis[0] * s, axis[1] * s, axis[2] * s};
}

Mat3 Quaternion::to_matrix() const {
  const Quaternion u = normalized();
  const double ww = u.w * u.w, xx = u.x * u.x, yy = u.y * u.y, zz = u.z * u.z;
  const double xy = u.x * u.y, xz = u.x * u.z, yz = u.y * u.z;
  const double wx = u.w * u.x, wy = u.w * u.y, wz = u.w * u.z;
  return {{{ww + xx - yy - zz, 2 * (xy - wz), 2 * (xz + wy)},
           {2 * (xy + wz), ww - xx + yy - zz, 2 * (yz - wx)},
           {2 * (xz - wy), 2 * (yz + wx), ww - xx - yy + zz}}};
}

Quaternion Quaternion::from_matrix(const Mat3& r) {
  // Shepperd's method: pivot on the largest diagonal term.
  const double trace = r[0][0] + r[1][1] + r[2][2];
  Quaternion q;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s, (r[1][0] - r[0][1]) / s};
  } else if (r[0][0] > r[1][1] && r[0][0] > r[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + r[0][0] - r[1][1] - r[2][2]);
    q = {(r[2][1] - r[1][2]) / s, 0.25 * s, (r[0][1] + r[1][0]) / s, (r[0][2] + r[2][0]) / s};
  } else if (r[1][1] > r[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + r[1][1] - r[0][0] - r[2][2]);
    q = {(r[0][2] - r[2][0]) / s, (r[0][1] + r[1][0]) / s, 0.25 * s, (r[1][2] + r[2][1]) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r[2][2] - r[0][0] - r[1][1]);
    q = {(r[1][0] - r[0][1]) / s, (r[0][2] + r[2][0]) / s, (r[1][2] + r[2][1]) / s, 0.25 * s};
  }
  return q.normalized().canonical();
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion operator*(double s, const Quaternion& q) { return {s * q.w, s * q.x, s * q.y, s * q.z}; }
Quaternion operator+(const Quaternion& a, const Quaternion& b) {
  return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
}
double dot(const Quaternion& a, const Quaternion& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 rotate(const Quaternion& q, const Vec3& v) {
  const Mat3 r = q.to_matrix();
  return {dot(r[0], v), dot(r[1], v), dot(r[2], v)};
}

Pose Pose::make(const Vec3& x, const Quaternion& q) { return Pose{x, q.normalized().canonical()}; }

bool Pose::valid() const {
  if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2])) return false;
  if (std::abs(q.norm() - 1.0) > 1e-6) return false;
  return q.canonical() == q;
}

double angular_error_deg(const Quaternion& q1, const Quaternion& q2) {
  // atan2 of the relative rotation stays exact at 0 where acos(|<q1, q2>|) does not.
  const Quaternion r = q1.conjugate() * q2;
  const double v = std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z);
  return 2.0 * std::atan2(v, std::abs(r.w)) * 180.0 / std::numbers::pi;
}

Quaternion look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
  const Vec3 fwd = target - eye;
  const double fn = norm(fwd);
  if (fn < 1e-12) throw ValidationError("look_at: eye and target coincide");
  const Vec3 z = (1.0 / fn) * fwd;
  Vec3 right = cross(z, world_up);
  if (norm(right) < 1e-9) right = cross(z, Vec3{1.0, 0.0, 0.0});
  const Vec3 x = (1.0 / norm(right)) * right;
  const Vec3 y = cross(z, x);  // image-down
  const Mat3 r{{{x[0], y[0], z[0]}, {x[1], y[1], z[1]}, {x[2], y[2], z[2]}}};
  return Quaternion::from_matrix(r);
}

bool LatentPair::valid() const {
  if (z_x.size() != z_q.size() || z_x.empty()) return false;
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
  };
  return finite(z_x) && finite(z_q);
}

std::vector<double> LatentPair::concatenated() const {
  std::vector<double> out(z_x);
  out.insert(out.end(), z_q.begin(), z_q.end());
  return out;
}

}  // namespace pae
