#include "pae/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pae/error.hpp"
#include "pae/rng.hpp"

namespace pae::sim {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kNearPlane = 0.1;
}  // namespace

SceneSpec generate_scene(std::uint64_t seed, std::size_t n_landmarks, double extent, const SceneOptions& options) {
  if (n_landmarks < 8) throw ValidationError("a scene needs at least 8 landmarks, got " + std::to_string(n_landmarks));
  if (!(extent > 0.0)) throw ValidationError("scene extent must be positive");
  if (options.resolution < 16) throw ValidationError("resolution must be at least 16");

  SceneSpec scene;
  scene.scene_id = options.scene_id;
  scene.extent = extent;
  scene.seed = seed;
  scene.landmark_radius = options.landmark_radius;
  const double w = static_cast<double>(options.resolution);
  scene.intrinsics = Intrinsics{options.focal_ratio * w, 0.5 * w, 0.5 * w, options.resolution};

  SplitMix64 rng(seed);
  scene.landmarks.reserve(n_landmarks);
  while (scene.landmarks.size() < n_landmarks) {
    // Rejection sampling from the bounding cube keeps the ball uniform.
    const Vec3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (dot(p, p) > 1.0) continue;
    Landmark lm;
    lm.position = extent * p;
    for (double& c : lm.color) c = rng.uniform(0.2, 1.0);
    scene.landmarks.push_back(lm);
  }
  return scene;
}

Projection project(const SceneSpec& scene, const Pose& pose, const Vec3& point, std::size_t resolution) {
  // World to camera: R^T (p - x).
  const Mat3 r = pose.q.to_matrix();
  const Vec3 d = point - pose.x;
  const Vec3 pc{r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2], r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
                r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2]};
  const double scale = static_cast<double>(resolution) / static_cast<double>(scene.intrinsics.width);
  const double f = scene.intrinsics.focal * scale;
  Projection out;
  out.depth = pc[2];
  if (pc[2] <= 0.0) return out;
  out.u = f * pc[0] / pc[2] + scene.intrinsics.cx * scale;
  out.v = f * pc[1] / pc[2] + scene.intrinsics.cy * scale;
  return out;
}

Image render(const SceneSpec& scene, const Pose& pose, std::size_t resolution) {
  if (resolution < 16) throw ValidationError("render resolution must be at least 16");
  const std::size_t res = resolution;
  const double scale = static_cast<double>(res) / static_cast<double>(scene.intrinsics.width);
  const double f = scene.intrinsics.focal * scale;

  struct Splat {
    double u, v, radius, depth;
    std::size_t index;
  };
  std::vector<Splat> splats;
  splats.reserve(scene.landmarks.size());
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    const Projection p = project(scene, pose, scene.landmarks[i].position, res);
    if (p.depth <= kNearPlane) continue;
    splats.push_back({p.u, p.v, f * scene.landmark_radius / p.depth, p.depth, i});
  }
  std::stable_sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) { return a.depth > b.depth; });

  std::vector<double> canvas(res * res * 3, 0.0);
  const auto limit = static_cast<long>(res) - 1;
  for (const Splat& s : splats) {
    const long x0 = std::max(0L, static_cast<long>(std::floor(s.u - s.radius - 1.0)));
    const long x1 = std::min(limit, static_cast<long>(std::ceil(s.u + s.radius + 1.0)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(s.v - s.radius - 1.0)));
    const long y1 = std::min(limit, static_cast<long>(std::ceil(s.v + s.radius + 1.0)));
    const Color& color = scene.landmarks[s.index].color;
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - s.u;
        const double dy = static_cast<double>(y) + 0.5 - s.v;
        // Coverage ramps linearly over one pixel at the disc edge.
        const double coverage = std::clamp(s.radius + 0.5 - std::sqrt(dx * dx + dy * dy), 0.0, 1.0);
        if (coverage <= 0.0) continue;
        double* px = &canvas[(static_cast<std::size_t>(y) * res + static_cast<std::size_t>(x)) * 3];
        for (int c = 0; c < 3; ++c) px[c] = (1.0 - coverage) * px[c] + coverage * color[c];
      }
    }
  }

  Image img;
  img.resolution = res;
  img.pixels.resize(canvas.size());
  for (std::size_t i = 0; i < canvas.size(); ++i) img.pixels[i] = static_cast<float>(std::clamp(canvas[i], 0.0, 1.0));
  return img;
}

SamplingMode sampling_mode_from_name(std::string_view name) {
  if (name == "orbit-shell") return SamplingMode::kOrbitShell;
  if (name == "random-jitter") return SamplingMode::kRandomJitter;
  throw ValidationError("unknown sampling mode '" + std::string(name) + "'");
}

std::vector<Pose> sample_poses(const SceneSpec& scene, std::size_t n, std::uint64_t seed, SamplingMode mode,
                               const ShellOptions& shell) {
  if (n == 0) throw ValidationError("sample_poses: n must be at least 1");
  if (!(shell.radius_min > 0.0) || shell.radius_max < shell.radius_min) {
    throw ValidationError("sample_poses: invalid shell radii");
  }
  std::vector<Pose> poses;
  poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(derive_seed(seed, 0, i));
    double radius = scene.extent * rng.uniform(shell.radius_min, shell.radius_max);
    double azimuth = 0.0;
    double elevation = 0.0;
    double jitter = shell.jitter_deg;
    if (mode == SamplingMode::kOrbitShell && shell.trajectory) {
      const double t = rng.uniform(0.0, 1.0);
      radius = scene.extent * (shell.radius_min + t * (shell.radius_max - shell.radius_min));
      azimuth = (t - 0.5) * shell.azimuth_span_deg * kDeg;
      elevation = (shell.elevation_min_deg + t * (shell.elevation_max_deg - shell.elevation_min_deg)) * kDeg;
    } else if (mode == SamplingMode::kOrbitShell) {
      azimuth = rng.uniform(-0.5, 0.5) * shell.azimuth_span_deg * kDeg;
      elevation = rng.uniform(shell.elevation_min_deg, shell.elevation_max_deg) * kDeg;
    } else {
      azimuth = rng.uniform(-std::numbers::pi, std::numbers::pi);
      elevation = std::asin(rng.uniform(-1.0, 1.0));
      jitter *= 3.0;
    }
    const Vec3 eye = radius * Vec3{std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                                   std::sin(elevation)};
    const Quaternion aim = look_at(eye, Vec3{0.0, 0.0, 0.0});
    const Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    const double angle = rng.normal() * jitter * kDeg;
    const Quaternion delta = Quaternion::from_axis_angle(axis, angle);
    poses.push_back(Pose::make(eye, aim * delta));
  }
  return poses;
}

double mean_abs_difference(const Image& a, const Image& b) {
  if (a.pixels.size() != b.pixels.size()) throw ValidationError("mean_abs_difference: image sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    s += std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
  }
  return s / static_cast<double>(a.pixels.size());
}

}  // namespace pae::sim
