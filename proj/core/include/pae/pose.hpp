#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace pae {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // row-major

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
double distance(const Vec3& a, const Vec3& b);

/// Quaternion stored as (w, x, y, z). Not necessarily unit: regressor outputs
/// pass through here before normalization.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion from_array(std::span<const double> v);
  std::array<double, 4> to_array() const { return {w, x, y, z}; }
  double norm() const;
  Quaternion normalized() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  /// Flip sign so that the first nonzero component is positive.
  Quaternion canonical() const;
  Quaternion operator-() const { return {-w, -x, -y, -z}; }

  static Quaternion from_axis_angle(const Vec3& axis, double angle_rad);
  /// Rotation whose matrix has the given columns.
  static Quaternion from_matrix(const Mat3& r);
  Mat3 to_matrix() const;

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);
Quaternion operator*(double s, const Quaternion& q);
Quaternion operator+(const Quaternion& a, const Quaternion& b);
double dot(const Quaternion& a, const Quaternion& b);
Vec3 rotate(const Quaternion& q, const Vec3& v);

/// Camera pose: position in world metres and the camera-to-world rotation.
/// The camera looks down its +z axis, +x right, +y down.
struct Pose {
  Vec3 x{0.0, 0.0, 0.0};
  Quaternion q{};

  /// Normalizes and canonicalizes `q`.
  static Pose make(const Vec3& x, const Quaternion& q);
  /// Unit within 1e-6, canonical sign, finite position.
  bool valid() const;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Rotation angle between two unit quaternions in degrees, sign-invariant.
double angular_error_deg(const Quaternion& q1, const Quaternion& q2);

/// Camera-to-world rotation for a camera at `eye` looking at `target`, with
/// image-up as close to `world_up` as possible.
Quaternion look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up = {0.0, 0.0, 1.0});

/// Latent position/orientation codes, each of length d.
struct LatentPair {
  std::vector<double> z_x;
  std::vector<double> z_q;

  std::size_t dim() const { return z_x.size(); }
  bool valid() const;
  /// z_p = [z_x; z_q].
  std::vector<double> concatenated() const;
};

}  // namespace pae
