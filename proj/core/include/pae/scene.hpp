#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pae/pose.hpp"

namespace pae::sim {

using Color = std::array<double, 3>;

struct Landmark {
  Vec3 position{};
  Color color{};
};

/// Pinhole intrinsics in pixels, defined for `width` x `width` images and
/// rescaled when rendering at another resolution.
struct Intrinsics {
  double focal = 32.0;
  double cx = 16.0;
  double cy = 16.0;
  std::size_t width = 32;
};

struct SceneSpec {
  int scene_id = 0;
  std::vector<Landmark> landmarks;
  Intrinsics intrinsics;
  double extent = 10.0;
  /// World radius of each landmark disc in metres.
  double landmark_radius = 1.5;
  std::uint64_t seed = 0;
};

struct SceneOptions {
  std::size_t resolution = 32;
  /// Focal length as a multiple of the image width.
  double focal_ratio = 1.0;
  double landmark_radius = 1.5;
  int scene_id = 0;
};

/// Landmarks uniform in the ball of radius `extent`, colors uniform in
/// [0.2, 1.0] per channel. Throws if fewer than 8 landmarks are requested.
SceneSpec generate_scene(std::uint64_t seed, std::size_t n_landmarks, double extent, const SceneOptions& options = {});

/// H x W x 3 image, row-major, channels interleaved, values in [0, 1].
struct Image {
  std::size_t resolution = 0;
  std::vector<float> pixels;

  std::size_t size() const { return pixels.size(); }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Splats every landmark in front of the camera as an anti-aliased disc whose
/// pixel radius falls off with depth. Far discs are painted first so the
/// nearest landmark wins each pixel. Background is black.
Image render(const SceneSpec& scene, const Pose& pose, std::size_t resolution);

/// Pixel coordinates (u, v) and depth of a world point, or depth <= 0 when it
/// is behind the camera.
struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};
Projection project(const SceneSpec& scene, const Pose& pose, const Vec3& point, std::size_t resolution);

enum class SamplingMode { kOrbitShell, kRandomJitter };
SamplingMode sampling_mode_from_name(std::string_view name);

/// Where cameras may sit. Radii are multiples of the scene extent.
struct ShellOptions {
  double radius_min = 1.5;
  double radius_max = 2.5;
  /// Orbit band: azimuth is centred on +x, elevation measured from the xy-plane.
  double azimuth_span_deg = 60.0;
  double elevation_min_deg = 5.0;
  double elevation_max_deg = 35.0;
  /// Standard deviation of the random rotation applied after look-at.
  double jitter_deg = 1.0;
  /// When set, one uniform parameter t in [0, 1] drives radius, azimuth and
  /// elevation together, so orbit-shell cameras lie on a single curve through
  /// the band instead of filling it.
  bool trajectory = true;
};

/// `kOrbitShell` draws positions in the band and aims each camera at the
/// origin with small jitter. `kRandomJitter` uses every direction of the
/// shell with three times the jitter. Sample i uses its own stream derived
/// from (seed, i).
std::vector<Pose> sample_poses(const SceneSpec& scene, std::size_t n, std::uint64_t seed, SamplingMode mode,
                               const ShellOptions& shell = {});

/// Mean absolute per-channel difference between two images of equal size.
double mean_abs_difference(const Image& a, const Image& b);

}  // namespace pae::sim
