#include "pae/dataset.hpp"

#include <limits>

#include "binio.hpp"
#include "pae/digest.hpp"
#include "pae/error.hpp"
#include "pae/rng.hpp"

namespace pae::sim {

using nlohmann::json;

json DatasetConfig::to_json() const {
  return json{{"n_scenes", n_scenes},
              {"n_train", n_train},
              {"n_test", n_test},
              {"resolution", resolution},
              {"seed", seed},
              {"n_landmarks", n_landmarks},
              {"extent", extent},
              {"landmark_radius", landmark_radius},
              {"focal_ratio", focal_ratio},
              {"sampling", sampling},
              {"shell",
               {{"radius_min", shell.radius_min},
                {"radius_max", shell.radius_max},
                {"azimuth_span_deg", shell.azimuth_span_deg},
                {"elevation_min_deg", shell.elevation_min_deg},
                {"elevation_max_deg", shell.elevation_max_deg},
                {"jitter_deg", shell.jitter_deg},
                {"trajectory", shell.trajectory}}}};
}

DatasetConfig DatasetConfig::from_json(const json& j) {
  DatasetConfig c;
  c.n_scenes = j.at("n_scenes").get<std::size_t>();
  c.n_train = j.at("n_train").get<std::size_t>();
  c.n_test = j.at("n_test").get<std::size_t>();
  c.resolution = j.at("resolution").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_landmarks = j.at("n_landmarks").get<std::size_t>();
  c.extent = j.at("extent").get<double>();
  c.landmark_radius = j.at("landmark_radius").get<double>();
  c.focal_ratio = j.at("focal_ratio").get<double>();
  c.sampling = j.at("sampling").get<std::string>();
  const json& s = j.at("shell");
  c.shell.radius_min = s.at("radius_min").get<double>();
  c.shell.radius_max = s.at("radius_max").get<double>();
  c.shell.azimuth_span_deg = s.at("azimuth_span_deg").get<double>();
  c.shell.elevation_min_deg = s.at("elevation_min_deg").get<double>();
  c.shell.elevation_max_deg = s.at("elevation_max_deg").get<double>();
  c.shell.jitter_deg = s.at("jitter_deg").get<double>();
  c.shell.trajectory = s.at("trajectory").get<bool>();
  return c;
}

std::span<const float> Split::image(std::size_t i) const {
  return std::span<const float>(images).subspan(i * image_size(), image_size());
}

Image Split::image_copy(std::size_t i) const {
  auto px = image(i);
  return Image{resolution, std::vector<float>(px.begin(), px.end())};
}

const SceneSpec& Dataset::scene(int scene_id) const {
  for (const auto& s : scenes) {
    if (s.scene_id == scene_id) return s;
  }
  throw ValidationError("dataset has no scene " + std::to_string(scene_id));
}

std::string Dataset::digest() const { return json_digest(config.to_json()); }

namespace {

void append_split(Split& split, const SceneSpec& scene, const std::vector<Pose>& poses) {
  for (const Pose& p : poses) {
    const Image img = render(scene, p, split.resolution);
    split.poses.push_back(p);
    split.scene_ids.push_back(scene.scene_id);
    split.images.insert(split.images.end(), img.pixels.begin(), img.pixels.end());
  }
}

}  // namespace

Dataset build_dataset(const DatasetConfig& config) {
  if (config.n_scenes == 0) throw ValidationError("dataset needs at least one scene");
  if (config.n_train == 0 || config.n_test == 0) throw ValidationError("dataset splits must be non-empty");
  const SamplingMode mode = sampling_mode_from_name(config.sampling);

  Dataset ds;
  ds.config = config;
  ds.train.resolution = config.resolution;
  ds.test.resolution = config.resolution;
  for (std::size_t s = 0; s < config.n_scenes; ++s) {
    SceneOptions opts;
    opts.resolution = config.resolution;
    opts.focal_ratio = config.focal_ratio;
    opts.landmark_radius = config.landmark_radius;
    opts.scene_id = static_cast<int>(s);
    ds.scenes.push_back(generate_scene(derive_seed(config.seed, stream::kScene, s), config.n_landmarks,
                                       config.extent, opts));
  }
  for (const SceneSpec& scene : ds.scenes) {
    const auto sid = static_cast<std::uint64_t>(scene.scene_id);
    const auto train = sample_poses(scene, config.n_train, derive_seed(config.seed, stream::kTrainPoses, sid), mode,
                                    config.shell);
    auto test = sample_poses(scene, config.n_test, derive_seed(config.seed, stream::kTestPoses, sid), mode,
                             config.shell);
    for (const Pose& t : test) {
      for (const Pose& r : train) {
        if (distance(t.x, r.x) <= 0.0) throw NumericalError("test pose coincides with a train pose");
      }
    }
    append_split(ds.train, scene, train);
    append_split(ds.test, scene, test);
  }
  return ds;
}

json pose_to_json(const Pose& pose, int scene_id) {
  return json{{"x", {pose.x[0], pose.x[1], pose.x[2]}},
              {"q", {pose.q.w, pose.q.x, pose.q.y, pose.q.z}},
              {"scene", scene_id}};
}

Pose pose_from_json(const json& j, int* scene_id) {
  const auto x = j.at("x").get<std::vector<double>>();
  const auto q = j.at("q").get<std::vector<double>>();
  if (x.size() != 3 || q.size() != 4) throw ValidationError("pose entry needs x:[3] and q:[4]");
  if (scene_id != nullptr) *scene_id = j.at("scene").get<int>();
  return Pose{{x[0], x[1], x[2]}, Quaternion{q[0], q[1], q[2], q[3]}};
}

json scene_to_json(const SceneSpec& scene) {
  json lms = json::array();
  for (const auto& lm : scene.landmarks) {
    lms.push_back({{"p", {lm.position[0], lm.position[1], lm.position[2]}},
                   {"rgb", {lm.color[0], lm.color[1], lm.color[2]}}});
  }
  return json{{"scene_id", scene.scene_id},
              {"seed", scene.seed},
              {"extent", scene.extent},
              {"landmark_radius", scene.landmark_radius},
              {"intrinsics",
               {{"focal", scene.intrinsics.focal},
                {"cx", scene.intrinsics.cx},
                {"cy", scene.intrinsics.cy},
                {"width", scene.intrinsics.width}}},
              {"landmarks", lms}};
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.scene_id = j.at("scene_id").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.extent = j.at("extent").get<double>();
  s.landmark_radius = j.at("landmark_radius").get<double>();
  const json& in = j.at("intrinsics");
  s.intrinsics = Intrinsics{in.at("focal").get<double>(), in.at("cx").get<double>(), in.at("cy").get<double>(),
                            in.at("width").get<std::size_t>()};
  for (const json& lm : j.at("landmarks")) {
    const auto p = lm.at("p").get<std::vector<double>>();
    const auto c = lm.at("rgb").get<std::vector<double>>();
    s.landmarks.push_back(Landmark{{p.at(0), p.at(1), p.at(2)}, {c.at(0), c.at(1), c.at(2)}});
  }
  return s;
}

namespace {

json split_index(const Split& split) {
  json idx = json::array();
  for (std::size_t i = 0; i < split.size(); ++i) idx.push_back(split.scene_ids[i]);
  return json{{"count", split.size()}, {"scene_ids", idx}};
}

void save_split(const Split& split, const std::filesystem::path& dir, const std::string& name) {
  std::string blob;
  blob.reserve(split.images.size() * sizeof(float));
  detail::append_le(blob, split.images.data(), split.images.size());
  detail::write_file(dir / (name + ".images.bin"), blob);
  json poses = json::array();
  for (std::size_t i = 0; i < split.size(); ++i) poses.push_back(pose_to_json(split.poses[i], split.scene_ids[i]));
  detail::write_file(dir / (name + ".poses.json"), poses.dump(1) + "\n");
}

Split load_split(const std::filesystem::path& dir, const std::string& name, std::size_t resolution) {
  Split split;
  split.resolution = resolution;
  const json poses = json::parse(detail::read_file(dir / (name + ".poses.json")));
  for (const json& p : poses) {
    int sid = 0;
    split.poses.push_back(pose_from_json(p, &sid));
    split.scene_ids.push_back(sid);
  }
  const std::string blob = detail::read_file(dir / (name + ".images.bin"));
  const std::size_t expected = split.size() * split.image_size() * sizeof(float);
  if (blob.size() != expected) {
    throw IoError("'" + (dir / (name + ".images.bin")).string() + "' holds " + std::to_string(blob.size()) +
                  " bytes, expected " + std::to_string(expected));
  }
  split.images.resize(split.size() * split.image_size());
  detail::read_le(blob.data(), split.images.data(), split.images.size());
  return split;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  json scenes = json::array();
  for (const auto& s : dataset.scenes) scenes.push_back(scene_to_json(s));
  json meta{{"config", dataset.config.to_json()},
            {"digest", dataset.digest()},
            {"scenes", scenes},
            {"seeds",
             {{"dataset", dataset.config.seed},
              {"stream_tags", {{"scene", stream::kScene}, {"train", stream::kTrainPoses}, {"test", stream::kTestPoses}}}}},
            {"splits", {{"train", split_index(dataset.train)}, {"test", split_index(dataset.test)}}}};
  detail::write_file(dir / "meta.json", meta.dump(1) + "\n");
  save_split(dataset.train, dir, "train");
  save_split(dataset.test, dir, "test");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const json meta = json::parse(detail::read_file(dir / "meta.json"));
  Dataset ds;
  ds.config = DatasetConfig::from_json(meta.at("config"));
  for (const json& s : meta.at("scenes")) ds.scenes.push_back(scene_from_json(s));
  ds.train = load_split(dir, "train", ds.config.resolution);
  ds.test = load_split(dir, "test", ds.config.resolution);
  return ds;
}

}  // namespace pae::sim
