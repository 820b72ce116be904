#include "pae/refine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "binio.hpp"
#include "pae/error.hpp"
#include "pae/graph.hpp"
#include "pae/optim.hpp"

namespace pae::refine {

using nlohmann::json;

PoseDatabase::PoseDatabase(std::vector<Pose> poses, std::vector<int> scene_ids)
    : poses_(std::move(poses)), scene_ids_(std::move(scene_ids)) {
  if (poses_.size() != scene_ids_.size()) throw ValidationError("PoseDatabase: poses and scene ids differ in length");
  for (std::size_t i = 0; i < poses_.size(); ++i) {
    if (!poses_[i].valid()) throw ValidationError("PoseDatabase: invalid pose at entry " + std::to_string(i));
  }
}

PoseDatabase PoseDatabase::from_split(const sim::Split& split) { return PoseDatabase(split.poses, split.scene_ids); }

std::vector<std::size_t> PoseDatabase::knn(const Vec3& position, std::size_t k, std::optional<int> scene) const {
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(poses_.size());
  for (std::size_t i = 0; i < poses_.size(); ++i) {
    if (scene && scene_ids_[i] != *scene) continue;
    candidates.emplace_back(distance(poses_[i].x, position), i);
  }
  if (k > candidates.size()) {
    throw ValidationError("knn: k = " + std::to_string(k) + " exceeds the " + std::to_string(candidates.size()) +
                          " available entries");
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = candidates[i].second;
  return out;
}

json PoseDatabase::to_json() const {
  json arr = json::array();
  for (std::size_t i = 0; i < poses_.size(); ++i) arr.push_back(sim::pose_to_json(poses_[i], scene_ids_[i]));
  return arr;
}

PoseDatabase PoseDatabase::from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("pose database must be a JSON array");
  std::vector<Pose> poses;
  std::vector<int> scenes;
  for (const auto& e : j) {
    int scene = 0;
    poses.push_back(sim::pose_from_json(e, &scene));
    scenes.push_back(scene);
  }
  return PoseDatabase(std::move(poses), std::move(scenes));
}

void PoseDatabase::save(const std::filesystem::path& path) const {
  const std::string text = to_json().dump();
  detail::write_file(path, text);
}

PoseDatabase PoseDatabase::load(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::exception& e) {
    throw IoError("cannot parse pose database " + path.string() + ": " + e.what());
  }
}

void RefineConfig::validate() const {
  if (k < 2) throw ValidationError("refine: k must be at least 2, got " + std::to_string(k));
  if (iterations < 1 || inner_steps < 1) throw ValidationError("refine: iterations and inner steps must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("refine: learning rate must be positive");
}

json RefineConfig::to_json() const {
  return json{{"k", k},
              {"iterations", iterations},
              {"inner_steps", inner_steps},
              {"learning_rate", learning_rate},
              {"weight_decay", weight_decay},
              {"closed_form", closed_form}};
}

RefineConfig RefineConfig::from_json(const json& j) {
  RefineConfig c;
  c.k = j.at("k").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.inner_steps = j.at("inner_steps").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.closed_form = j.at("closed_form").get<bool>();
  return c;
}

double AffineWeights::sum() const { return std::accumulate(a.begin(), a.end(), 0.0); }

std::vector<double> project_affine(std::span<const double> w) {
  if (w.empty()) throw ValidationError("project_affine: empty weight vector");
  const double shift = (1.0 - std::accumulate(w.begin(), w.end(), 0.0)) / static_cast<double>(w.size());
  std::vector<double> a(w.begin(), w.end());
  for (double& v : a) v += shift;
  return a;
}

namespace {

void check_columns(std::span<const double> z_p, const Encodings& columns) {
  if (columns.size() < 2) throw ValidationError("affine weights need at least 2 encodings");
  for (const auto& c : columns) {
    if (c.size() != z_p.size()) {
      throw ValidationError("encoding length " + std::to_string(c.size()) + " differs from query length " +
                            std::to_string(z_p.size()));
    }
  }
}

ad::Tensor encoding_matrix(const Encodings& columns) {
  // [k, m] so that a [1, k] times it is the combination as a row.
  const std::size_t k = columns.size(), m = columns.front().size();
  ad::Tensor t({k, m});
  for (std::size_t i = 0; i < k; ++i) std::copy(columns[i].begin(), columns[i].end(), t.ptr() + i * m);
  return t;
}

}  // namespace

double affine_objective(std::span<const double> z_p, const Encodings& columns, std::span<const double> a) {
  check_columns(z_p, columns);
  if (a.size() != columns.size()) throw ValidationError("affine_objective: weight count differs from encodings");
  double total = 0.0;
  for (std::size_t r = 0; r < z_p.size(); ++r) {
    double v = z_p[r];
    for (std::size_t i = 0; i < columns.size(); ++i) v -= a[i] * columns[i][r];
    total += v * v;
  }
  return std::sqrt(total);
}

AffineWeights closed_form_affine_weights(std::span<const double> z_p, const Encodings& columns) {
  check_columns(z_p, columns);
  const auto k = static_cast<Eigen::Index>(columns.size());
  const auto m = static_cast<Eigen::Index>(z_p.size());
  Eigen::MatrixXd e(m, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index r = 0; r < m; ++r) e(r, i) = columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
  }
  const Eigen::Map<const Eigen::VectorXd> z(z_p.data(), m);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = e.transpose() * e + 1e-8 * Eigen::MatrixXd::Identity(k, k);
  kkt.block(0, k, k, 1).setOnes();
  kkt.block(k, 0, 1, k).setOnes();
  Eigen::VectorXd rhs(k + 1);
  rhs.head(k) = e.transpose() * z;
  rhs(k) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) throw NumericalError("closed-form affine weights: singular KKT system");
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw NumericalError("closed-form affine weights: non-finite solution");
  AffineWeights out;
  out.a.assign(sol.data(), sol.data() + k);
  out.a = project_affine(out.a);
  return out;
}

SolveResult solve_affine_weights(std::span<const double> z_p, const Encodings& columns, const RefineConfig& cfg) {
  cfg.validate();
  check_columns(z_p, columns);
  const std::size_t k = columns.size();
  const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
  SolveResult out;
  out.trace.push_back(affine_objective(z_p, columns, uniform));
  if (cfg.closed_form) {
    out.weights = closed_form_affine_weights(z_p, columns);
    out.trace.push_back(affine_objective(z_p, columns, out.weights.a));
    return out;
  }

  ad::ParameterList params;
  params.add("w", ad::Tensor({1, k}, uniform));
  ad::Tensor& w = params[0].value;
  ad::OptimState optim = ad::OptimState::adamw(cfg.learning_rate, cfg.weight_decay);
  const ad::Tensor e = encoding_matrix(columns);
  const ad::Tensor target({1, z_p.size()}, std::vector<double>(z_p.begin(), z_p.end()));
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t s = 0; s < cfg.inner_steps; ++s) {
      ad::Graph g;
      const ad::NodeId wn = g.parameter(w);
      const ad::NodeId deficit = g.add(g.constant(ad::Tensor::scalar(1.0)), g.negate(g.sum(wn)));
      const ad::NodeId a = g.add(wn, g.scale(deficit, 1.0 / static_cast<double>(k)));
      const ad::NodeId residual = g.sub(g.constant(target), g.matmul(a, g.constant(e)));
      const ad::NodeId objective = g.sum(g.l2norm(residual));
      if (!std::isfinite(g.value(objective).item())) {
        throw NumericalError("refinement objective became non-finite at iteration " + std::to_string(it));
      }
      ad::step(optim, params, g.backward(objective));
    }
    out.trace.push_back(affine_objective(z_p, columns, project_affine(w.data())));
    if (!std::isfinite(out.trace.back())) {
      json trace = out.trace;
      throw NumericalError("refinement objective became non-finite; trace " + trace.dump());
    }
  }
  out.weights.a = project_affine(w.data());
  return out;
}

std::vector<double> stacked(const LatentPair& latent) { return latent.concatenated(); }

RefineResult refine_position(const LatentPair& query, std::span<const std::size_t> neighbors, const PoseDatabase& db,
                             const models::PaeModel& pae, const RefineConfig& cfg) {
  if (neighbors.size() < 2) throw ValidationError("refine_position needs at least 2 neighbors");
  std::vector<Pose> poses;
  std::vector<int> scenes;
  for (auto i : neighbors) {
    poses.push_back(db.pose(i));
    scenes.push_back(db.scene_id(i));
  }
  Encodings columns;
  for (const auto& latent : pae.forward_batch(poses, scenes)) columns.push_back(stacked(latent));
  const std::vector<double> z_p = stacked(query);
  SolveResult solved = solve_affine_weights(z_p, columns, cfg);

  RefineResult out;
  for (std::size_t i = 0; i < poses.size(); ++i) out.x = out.x + solved.weights.a[i] * poses[i].x;
  out.weights = std::move(solved.weights);
  out.trace = std::move(solved.trace);
  out.neighbors.assign(neighbors.begin(), neighbors.end());
  return out;
}

EstimateRefinement refine_apr_estimate(const models::AprModel& apr, std::span<const float> image, int scene_id,
                                       const PoseDatabase& db, const models::PaeModel& pae,
                                       const RefineConfig& cfg) {
  const auto out = apr.forward(image);
  const auto neighbors = db.knn(out.pose.x, cfg.k, scene_id);
  EstimateRefinement r;
  r.initial = out.pose;
  r.detail = refine_position(out.latent, neighbors, db, pae, cfg);
  r.refined = Pose{r.detail.x, out.pose.q};
  return r;
}

GuessResult refine_with_random_guess(const Pose& truth, int scene_id, const GuessOptions& options,
                                     const models::PaeModel& pae, const PoseDatabase& db, const RefineConfig& cfg,
                                     SplitMix64& rng) {
  if (!(options.sigma > 0.0)) throw ValidationError("random guess: sigma must be positive");
  const Vec3 noise{rng.normal(), rng.normal(), rng.normal()};
  Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
  while (norm(axis) < 1e-9) axis = Vec3{rng.normal(), rng.normal(), rng.normal()};
  const double angle = rng.normal() * options.orientation_jitter_deg * std::numbers::pi / 180.0;
  GuessResult out;
  out.guess = Pose::make(truth.x + options.sigma * noise, truth.q * Quaternion::from_axis_angle(axis, angle));
  const auto neighbors = db.knn(out.guess.x, cfg.k, scene_id);
  const auto refined = refine_position(pae.forward(out.guess, scene_id), neighbors, db, pae, cfg);
  out.refined = refined.x;
  out.initial_error = distance(out.guess.x, truth.x);
  out.refined_error = distance(out.refined, truth.x);
  return out;
}

Quaternion affine_orientation(std::span<const Quaternion> quaternions, std::span<const double> a) {
  if (quaternions.empty() || quaternions.size() != a.size()) {
    throw ValidationError("affine_orientation: need one weight per quaternion");
  }
  Quaternion acc{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < quaternions.size(); ++i) {
    const Quaternion q = dot(quaternions[i], quaternions[0]) < 0.0 ? -quaternions[i] : quaternions[i];
    acc = acc + a[i] * q;
  }
  if (acc.norm() < 1e-9) throw NumericalError("affine_orientation: weighted quaternions cancel");
  return acc.normalized().canonical();
}

RelativeRegressor rpr_regressor(const models::RprModel& rpr) {
  return [&rpr](const sim::Image& reference, std::span<const float> query, const Pose&) {
    return rpr.predict(reference.pixels, query);
  };
}

VirtualRprResult virtual_rpr_refine(std::span<const float> query_image, int scene_id, const models::AprModel& apr,
                                    const models::PaeModel& pae, const models::DecoderModel& decoder,
                                    const RelativeRegressor& rpr, const PoseDatabase& db) {
  VirtualRprResult out;
  out.apr = apr.forward(query_image).pose;
  out.reference = db.knn(out.apr.x, 1, scene_id).front();
  const Pose& ref = db.pose(out.reference);
  const sim::Image reconstructed = decoder.decode(pae.forward(ref, scene_id));
  out.refined = Pose{ref.x + rpr(reconstructed, query_image, ref), out.apr.q};
  return out;
}

}  // namespace pae::refine
