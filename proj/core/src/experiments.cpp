#include "pae/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "binio.hpp"
#include "pae/digest.hpp"
#include "pae/error.hpp"
#include "pae/evaluation.hpp"
#include "pae/refine.hpp"
#include "pae/rng.hpp"
#include "pae/training.hpp"

namespace pae::experiments {

namespace fs = std::filesystem;
using nlohmann::json;
using report::fixed;
using report::Report;
using report::Table;

void Context::note(const std::string& message) const {
  if (progress) progress(message);
}

namespace {

fs::path dataset_dir(const Context& ctx) { return ctx.config.run_dir() / "dataset"; }
fs::path checkpoint_path(const Context& ctx, std::string_view model) {
  return ctx.config.run_dir() / (std::string(model) + ".ckpt");
}

std::string expected_dataset_digest(const Context& ctx) { return json_digest(ctx.config.dataset().to_json()); }

void check_digest(const Context& ctx, const std::string& what, const std::string& recorded,
                  const std::string& expected) {
  if (recorded == expected || ctx.force) return;
  throw ValidationError(what + " digest " + recorded + " does not match the current configuration (" + expected +
                        "); regenerate it or pass --force");
}

Report make_report(const Context& ctx, std::string kind) {
  Report r;
  r.kind = std::move(kind);
  r.config = ctx.config.values();
  r.config_digest = ctx.config.digest();
  return r;
}

Report finish(const Context& ctx, Report r) {
  report::write_report(r, ctx.config.run_dir());
  ctx.note("wrote " + (ctx.config.run_dir() / (r.kind + ".report.json")).string());
  return r;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

json timing_summary(std::vector<double> ms) {
  if (ms.empty()) return json::object();
  const double total = std::accumulate(ms.begin(), ms.end(), 0.0);
  const double worst = *std::max_element(ms.begin(), ms.end());
  return json{{"median_ms", median(ms)}, {"max_ms", worst}, {"total_ms", total}, {"count", ms.size()}};
}

/// Replaces `model`'s records in log.jsonl with `records`.
void rewrite_log(const Context& ctx, std::string_view model, const std::vector<json>& records) {
  const fs::path path = ctx.config.run_dir() / "log.jsonl";
  std::string kept;
  if (fs::exists(path)) {
    std::istringstream in(detail::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.value("model", "") == model) continue;
      kept += line + "\n";
    }
  }
  for (const auto& r : records) kept += r.dump() + "\n";
  detail::write_file(path, kept);
}

std::vector<std::string> median_row(const std::string& label, const MedianReport& m) {
  return {label, fixed(m.position_m), fixed(m.orientation_deg, 2), std::to_string(m.count)};
}

template <typename Model, typename Config>
Checkpoint require_checkpoint(const Context& ctx, std::string_view model, const sim::Dataset& dataset) {
  const fs::path path = checkpoint_path(ctx, model);
  if (!fs::exists(path)) {
    throw ValidationError("missing prerequisite " + path.string() + " (run train-" + std::string(model) + ")");
  }
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.kind != Model::kKind) throw ValidationError(path.string() + " holds a '" + ckpt.kind + "' model");
  check_digest(ctx, path.string() + " config", ckpt.config_digest, ctx.config.model_digest(model));
  check_digest(ctx, path.string() + " dataset", ckpt.dataset_digest, dataset.digest());
  return ckpt;
}

template <typename Model>
Checkpoint make_checkpoint(const Context& ctx, std::string_view model, const sim::Dataset& dataset,
                           const train::Trained<Model>& trained, const std::string& parent) {
  Checkpoint ckpt;
  ckpt.kind = Model::kKind;
  ckpt.model_config = trained.model.config().to_json();
  ckpt.config_digest = ctx.config.model_digest(model);
  ckpt.dataset_digest = dataset.digest();
  ckpt.parent_digest = parent;
  ckpt.epoch = trained.epochs;
  ckpt.capture(trained.model.params());
  ckpt.optim = trained.optim;
  ckpt.extra = trained.summary;
  return ckpt;
}

struct LogCollector {
  const Context& ctx;
  std::string model;
  std::size_t epochs;
  std::vector<json> records;

  train::LogSink sink() {
    return [this](const json& j) {
      records.push_back(j);
      const auto e = j.at("epoch").get<std::size_t>();
      if (e == 1 || e % 10 == 0 || e == epochs) {
        ctx.note("[" + model + "] epoch " + std::to_string(e) + "/" + std::to_string(epochs) + " loss " +
                 fixed(j.at("loss").get<double>(), 5));
      }
    };
  }
};

refine::PoseDatabase load_database(const Context& ctx, const sim::Dataset& dataset) {
  const fs::path path = ctx.config.run_dir() / "poses.db.json";
  if (!fs::exists(path)) return refine::PoseDatabase::from_split(dataset.train);
  return refine::PoseDatabase::load(path);
}

}  // namespace

sim::Dataset load_run_dataset(const Context& ctx) {
  const fs::path dir = dataset_dir(ctx);
  if (!fs::exists(dir / "meta.json")) {
    throw ValidationError("missing prerequisite " + dir.string() + " (run gen-scene)");
  }
  sim::Dataset ds = sim::load_dataset(dir);
  check_digest(ctx, "dataset " + dir.string(), ds.digest(), expected_dataset_digest(ctx));
  return ds;
}

LoadedApr load_apr(const Context& ctx, const sim::Dataset& dataset) {
  Checkpoint ckpt = require_checkpoint<models::AprModel, models::AprConfig>(ctx, "apr", dataset);
  auto model = model_from_checkpoint<models::AprModel, models::AprConfig>(ckpt);
  return {std::move(model), std::move(ckpt)};
}

LoadedPae load_pae(const Context& ctx, const sim::Dataset& dataset, const Checkpoint& teacher) {
  Checkpoint ckpt = require_checkpoint<models::PaeModel, models::PaeConfig>(ctx, "pae", dataset);
  check_digest(ctx, "teacher of pae.ckpt", ckpt.parent_digest, teacher.digest());
  auto model = model_from_checkpoint<models::PaeModel, models::PaeConfig>(ckpt);
  return {std::move(model), std::move(ckpt)};
}

LoadedDecoder load_decoder(const Context& ctx, const sim::Dataset& dataset, const Checkpoint& pae) {
  Checkpoint ckpt = require_checkpoint<models::DecoderModel, models::DecoderConfig>(ctx, "decoder", dataset);
  check_digest(ctx, "PAE of decoder.ckpt", ckpt.parent_digest, pae.digest());
  auto model = model_from_checkpoint<models::DecoderModel, models::DecoderConfig>(ckpt);
  return {std::move(model), std::move(ckpt)};
}

LoadedRpr load_rpr(const Context& ctx, const sim::Dataset& dataset) {
  Checkpoint ckpt = require_checkpoint<models::RprModel, models::RprConfig>(ctx, "rpr", dataset);
  auto model = model_from_checkpoint<models::RprModel, models::RprConfig>(ckpt);
  return {std::move(model), std::move(ckpt)};
}

Report gen_scene(const Context& ctx) {
  const sim::DatasetConfig dc = ctx.config.dataset();
  ctx.note("rendering " + std::to_string(dc.n_scenes * (dc.n_train + dc.n_test)) + " samples at " +
           std::to_string(dc.resolution) + "x" + std::to_string(dc.resolution));
  const sim::Dataset ds = sim::build_dataset(dc);
  sim::save_dataset(ds, dataset_dir(ctx));
  const refine::PoseDatabase db = refine::PoseDatabase::from_split(ds.train);
  db.save(ctx.config.run_dir() / "poses.db.json");
  detail::write_file(ctx.config.run_dir() / "config.json", ctx.config.values().dump(2) + "\n");

  Report r = make_report(ctx, "gen-scene");
  r.results = json{{"dataset_digest", ds.digest()},
                   {"n_scenes", ds.scenes.size()},
                   {"train", ds.train.size()},
                   {"test", ds.test.size()},
                   {"resolution", dc.resolution},
                   {"database_entries", db.size()},
                   {"database_bytes", fs::file_size(ctx.config.run_dir() / "poses.db.json")}};
  Table t{"Synthetic dataset", {"scene", "landmarks", "extent_m", "train", "test"}, {}};
  for (const auto& s : ds.scenes) {
    const auto count = [&](const sim::Split& sp) {
      return std::to_string(std::count(sp.scene_ids.begin(), sp.scene_ids.end(), s.scene_id));
    };
    t.rows.push_back({std::to_string(s.scene_id), std::to_string(s.landmarks.size()), fixed(s.extent, 1),
                      count(ds.train), count(ds.test)});
  }
  r.tables.push_back(std::move(t));
  return finish(ctx, std::move(r));
}

namespace {

Report train_apr_command(const Context& ctx, const sim::Dataset& ds) {
  const train::TrainConfig tc = ctx.config.training("apr");
  LogCollector log{ctx, "apr", tc.epochs, {}};
  const auto t0 = std::chrono::steady_clock::now();
  auto trained = train::train_apr(ds, ctx.config.apr(), tc, log.sink());
  const double ms = ms_since(t0);
  const Checkpoint ckpt = make_checkpoint(ctx, "apr", ds, trained, "");
  save_checkpoint(ckpt, checkpoint_path(ctx, "apr"));
  rewrite_log(ctx, "apr", log.records);

  const auto test = eval::evaluate_apr(trained.model, ds.test);
  const auto train_eval = eval::evaluate_apr(trained.model, ds.train);
  Report r = make_report(ctx, "train-apr");
  const LossWeights w = trained.model.loss_weights();
  r.results = json{{"checkpoint_digest", ckpt.digest()},
                   {"epochs", trained.epochs},
                   {"s_x", w.s_x},
                   {"s_q", w.s_q},
                   {"train", eval::to_json(train_eval)},
                   {"test", eval::to_json(test)},
                   {"summary", trained.summary}};
  r.tables.push_back(Table{"Teacher APR median errors", {"split", "position_m", "orientation_deg", "count"},
                           {median_row("train", train_eval.median), median_row("test", test.median)}});
  r.timing = json{{"train_ms", ms}};
  return r;
}

Report train_pae_command(const Context& ctx, const sim::Dataset& ds) {
  const LoadedApr teacher = load_apr(ctx, ds);
  const train::TrainConfig tc = ctx.config.training("pae");
  LogCollector log{ctx, "pae", tc.epochs, {}};
  const auto t0 = std::chrono::steady_clock::now();
  auto trained = train::train_pae(teacher.model, ds, ctx.config.pae(train::position_scale(ds.train)), tc, log.sink());
  const double ms = ms_since(t0);
  const Checkpoint ckpt = make_checkpoint(ctx, "pae", ds, trained, teacher.checkpoint.digest());
  save_checkpoint(ckpt, checkpoint_path(ctx, "pae"));
  rewrite_log(ctx, "pae", log.records);

  const auto test = eval::evaluate_pae(trained.model, teacher.model, ds.test);
  Report r = make_report(ctx, "train-pae");
  r.results = json{{"checkpoint_digest", ckpt.digest()},
                   {"teacher_digest", teacher.checkpoint.digest()},
                   {"epochs", trained.epochs},
                   {"test", eval::to_json(test)},
                   {"summary", trained.summary}};
  r.tables.push_back(Table{"Student PAE through teacher heads",
                           {"split", "position_m", "orientation_deg", "count"},
                           {median_row("test", test.median)}});
  r.timing = json{{"train_ms", ms}};
  return r;
}

Report train_decoder_command(const Context& ctx, const sim::Dataset& ds) {
  const LoadedApr teacher = load_apr(ctx, ds);
  const LoadedPae pae = load_pae(ctx, ds, teacher.checkpoint);
  const train::TrainConfig tc = ctx.config.training("decoder");
  LogCollector log{ctx, "decoder", tc.epochs, {}};
  const auto t0 = std::chrono::steady_clock::now();
  auto trained = train::train_decoder(pae.model, ds, ctx.config.decoder(), tc, log.sink());
  const double ms = ms_since(t0);
  const Checkpoint ckpt = make_checkpoint(ctx, "decoder", ds, trained, pae.checkpoint.digest());
  save_checkpoint(ckpt, checkpoint_path(ctx, "decoder"));
  rewrite_log(ctx, "decoder", log.records);

  const double offset = ctx.config.decoder_offset_fraction() * ds.config.extent;
  const auto de = eval::evaluate_decoder(trained.model, pae.model, ds, ds.test, offset,
                                         derive_seed(ctx.config.seed(), stream::kEval, 1));
  const double baseline = trained.summary.at("untrained_test_l1").get<double>();
  Report r = make_report(ctx, "train-decoder");
  r.results = json{{"checkpoint_digest", ckpt.digest()},
                   {"epochs", trained.epochs},
                   {"untrained_test_l1", baseline},
                   {"test_l1", de.mean_l1},
                   {"l1_ratio", de.mean_l1 / baseline},
                   {"offset_m", offset},
                   {"median_l1_same_pose", de.median_l1_same},
                   {"median_l1_offset_pose", de.median_l1_far}};
  r.tables.push_back(Table{"Decoder reconstruction (held-out)",
                           {"measure", "value"},
                           {{"untrained L1", fixed(baseline, 4)},
                            {"trained L1", fixed(de.mean_l1, 4)},
                            {"median L1 vs same-pose render", fixed(de.median_l1_same, 4)},
                            {"median L1 vs offset-pose render", fixed(de.median_l1_far, 4)}}});
  r.timing = json{{"train_ms", ms}};
  return r;
}

Report train_rpr_command(const Context& ctx, const sim::Dataset& ds) {
  const train::TrainConfig tc = ctx.config.training("rpr");
  LogCollector log{ctx, "rpr", tc.epochs, {}};
  const auto t0 = std::chrono::steady_clock::now();
  auto trained = train::train_rpr(ds, ctx.config.rpr(), tc, log.sink());
  const double ms = ms_since(t0);
  const Checkpoint ckpt = make_checkpoint(ctx, "rpr", ds, trained, "");
  save_checkpoint(ckpt, checkpoint_path(ctx, "rpr"));
  rewrite_log(ctx, "rpr", log.records);

  const train::PairSet pairs = train::make_rpr_pairs(ds.test, derive_seed(ctx.config.seed(), stream::kEval, 2));
  std::vector<double> errors, offsets;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec3 truth = ds.test.poses[pairs.b[i]].x - ds.test.poses[pairs.a[i]].x;
    const Vec3 pred = trained.model.predict(ds.test.image(pairs.a[i]), ds.test.image(pairs.b[i]));
    errors.push_back(norm(pred - truth));
    offsets.push_back(norm(truth));
  }
  const double mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  const double mean_offset = std::accumulate(offsets.begin(), offsets.end(), 0.0) / static_cast<double>(offsets.size());
  Report r = make_report(ctx, "train-rpr");
  r.results = json{{"checkpoint_digest", ckpt.digest()},
                   {"epochs", trained.epochs},
                   {"test_pairs", pairs.size()},
                   {"mean_translation_error_m", mean_error},
                   {"median_translation_error_m", median(errors)},
                   {"mean_pair_distance_m", mean_offset}};
  r.tables.push_back(Table{"Relative translation (held-out pairs)",
                           {"measure", "value"},
                           {{"mean error m", fixed(mean_error)},
                            {"median error m", fixed(median(errors))},
                            {"mean pair distance m", fixed(mean_offset)}}});
  r.timing = json{{"train_ms", ms}};
  return r;
}

}  // namespace

Report train(const Context& ctx, std::string_view model) {
  const sim::Dataset ds = load_run_dataset(ctx);
  Report r;
  if (model == "apr") {
    r = train_apr_command(ctx, ds);
  } else if (model == "pae") {
    r = train_pae_command(ctx, ds);
  } else if (model == "decoder") {
    r = train_decoder_command(ctx, ds);
  } else if (model == "rpr") {
    r = train_rpr_command(ctx, ds);
  } else {
    throw ValidationError("unknown model '" + std::string(model) + "'");
  }
  return finish(ctx, std::move(r));
}

namespace {

void comparison_rows(Table& t, const eval::PoseEvaluation& a, const eval::PoseEvaluation& b) {
  for (const auto& [scene, ma] : a.per_scene) {
    const MedianReport& mb = b.per_scene.at(scene);
    t.rows.push_back({std::to_string(scene), fixed(ma.position_m), fixed(ma.orientation_deg, 2),
                      fixed(mb.position_m), fixed(mb.orientation_deg, 2)});
  }
  t.rows.push_back({"all", fixed(a.median.position_m), fixed(a.median.orientation_deg, 2),
                    fixed(b.median.position_m), fixed(b.median.orientation_deg, 2)});
}

double ratio(double num, double den) { return den > 0.0 ? num / den : (num > 0.0 ? 1e300 : 1.0); }

}  // namespace

Report evaluate(const Context& ctx) {
  const sim::Dataset ds = load_run_dataset(ctx);
  const LoadedApr teacher = load_apr(ctx, ds);
  const LoadedPae pae = load_pae(ctx, ds, teacher.checkpoint);
  const auto t_test = eval::evaluate_apr(teacher.model, ds.test);
  const auto t_train = eval::evaluate_apr(teacher.model, ds.train);
  const auto s_test = eval::evaluate_pae(pae.model, teacher.model, ds.test);

  Report r = make_report(ctx, "eval");
  r.results = json{{"teacher", eval::to_json(t_test)},
                   {"teacher_train", eval::to_json(t_train)},
                   {"student", eval::to_json(s_test)},
                   {"position_ratio", ratio(s_test.median.position_m, t_test.median.position_m)},
                   {"orientation_ratio", ratio(s_test.median.orientation_deg, t_test.median.orientation_deg)},
                   {"extent_m", ds.config.extent}};
  Table t{"Teacher APR vs student PAE (held-out medians)",
          {"scene", "teacher_m", "teacher_deg", "student_m", "student_deg"},
          {}};
  comparison_rows(t, t_test, s_test);
  r.tables.push_back(std::move(t));
  return finish(ctx, std::move(r));
}

Report refine(const Context& ctx) {
  const sim::Dataset ds = load_run_dataset(ctx);
  const LoadedApr teacher = load_apr(ctx, ds);
  const LoadedPae pae = load_pae(ctx, ds, teacher.checkpoint);
  const refine::PoseDatabase db = load_database(ctx, ds);
  const refine::RefineConfig rc = ctx.config.refine();
  rc.validate();

  std::vector<Pose> before, after;
  std::vector<double> refine_ms;
  double max_sum_error = 0.0;
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = refine::refine_apr_estimate(teacher.model, ds.test.image(i), ds.test.scene_ids[i], db,
                                                 pae.model, rc);
    refine_ms.push_back(ms_since(t0));
    before.push_back(res.initial);
    after.push_back(res.refined);
    max_sum_error = std::max(max_sum_error, std::abs(res.detail.weights.sum() - 1.0));
  }
  const auto eb = eval::summarize(before, ds.test);
  const auto ea = eval::summarize(after, ds.test);
  Report r = make_report(ctx, "refine");
  json per_scene = json::object();
  for (const auto& [scene, m] : eb.per_scene) {
    per_scene[std::to_string(scene)] = json{{"apr_m", m.position_m},
                                            {"refined_m", ea.per_scene.at(scene).position_m},
                                            {"ratio", ratio(ea.per_scene.at(scene).position_m, m.position_m)}};
  }
  r.results = json{{"apr", eval::to_json(eb)},
                   {"refined", eval::to_json(ea)},
                   {"position_ratio", ratio(ea.median.position_m, eb.median.position_m)},
                   {"per_scene_position", per_scene},
                   {"max_weight_sum_error", max_sum_error},
                   {"refine", rc.to_json()}};
  Table t{"Test-time position refinement (held-out medians)",
          {"scene", "apr_m", "apr_deg", "refined_m", "refined_deg"},
          {}};
  comparison_rows(t, eb, ea);
  r.tables.push_back(std::move(t));
  r.timing = json{{"refine_per_query", timing_summary(refine_ms)}};
  return finish(ctx, std::move(r));
}

namespace {

struct GuessSummary {
  double initial = 0.0;
  double refined = 0.0;
  std::size_t trials = 0;
  std::vector<double> ms;
};

GuessSummary run_guesses(const Context& ctx, const sim::Dataset& ds, const models::PaeModel& pae,
                         const refine::PoseDatabase& db) {
  const config::GuessSettings gs = ctx.config.guess();
  const refine::RefineConfig rc = ctx.config.refine();
  rc.validate();
  if (gs.trials == 0) throw ValidationError("guess.trials must be positive");
  const refine::GuessOptions opts{gs.sigma_fraction * ds.config.extent, gs.orientation_jitter_deg};
  std::vector<double> initial, refined;
  GuessSummary out;
  for (std::size_t t = 0; t < gs.trials; ++t) {
    const std::size_t i = t % ds.test.size();
    SplitMix64 rng(derive_seed(ctx.config.seed(), stream::kGuess, t));
    const auto t0 = std::chrono::steady_clock::now();
    const auto g = refine::refine_with_random_guess(ds.test.poses[i], ds.test.scene_ids[i], opts, pae, db, rc, rng);
    out.ms.push_back(ms_since(t0));
    initial.push_back(g.initial_error);
    refined.push_back(g.refined_error);
  }
  out.initial = median(initial);
  out.refined = median(refined);
  out.trials = gs.trials;
  return out;
}

}  // namespace

Report refine_random_guess(const Context& ctx) {
  const sim::Dataset ds = load_run_dataset(ctx);
  const LoadedApr teacher = load_apr(ctx, ds);
  const LoadedPae pae = load_pae(ctx, ds, teacher.checkpoint);
  const refine::PoseDatabase db = load_database(ctx, ds);
  const GuessSummary g = run_guesses(ctx, ds, pae.model, db);
  const config::GuessSettings gs = ctx.config.guess();

  Report r = make_report(ctx, "refine-random-guess");
  r.results = json{{"trials", g.trials},
                   {"sigma_m", gs.sigma_fraction * ds.config.extent},
                   {"orientation_jitter_deg", gs.orientation_jitter_deg},
                   {"median_initial_m", g.initial},
                   {"median_refined_m", g.refined},
                   {"ratio", ratio(g.refined, g.initial)}};
  r.tables.push_back(Table{"Refinement from a random guess",
                           {"trials", "sigma_m", "initial_m", "refined_m"},
                           {{std::to_string(g.trials), fixed(gs.sigma_fraction * ds.config.extent, 2),
                             fixed(g.initial), fixed(g.refined)}}});
  r.timing = json{{"per_trial", timing_summary(g.ms)}};
  return finish(ctx, std::move(r));
}

Report virtual_rpr(const Context& ctx) {
  const sim::Dataset ds = load_run_dataset(ctx);
  const LoadedApr teacher = load_apr(ctx, ds);
  const LoadedPae pae = load_pae(ctx, ds, teacher.checkpoint);
  const LoadedDecoder decoder = load_decoder(ctx, ds, pae.checkpoint);
  const LoadedRpr rpr = load_rpr(ctx, ds);
  const refine::PoseDatabase db = load_database(ctx, ds);
  const refine::RelativeRegressor learned = refine::rpr_regressor(rpr.model);

  std::vector<Pose> apr_poses, refined, oracle;
  std::vector<double> ms;
  double oracle_max = 0.0;
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = refine::virtual_rpr_refine(ds.test.image(i), ds.test.scene_ids[i], teacher.model, pae.model,
                                                decoder.model, learned, db);
    ms.push_back(ms_since(t0));
    apr_poses.push_back(res.apr);
    refined.push_back(res.refined);
    const Pose truth = ds.test.poses[i];
    const refine::RelativeRegressor exact = [&truth](const sim::Image&, std::span<const float>, const Pose& ref) {
      return truth.x - ref.x;
    };
    const auto o = refine::virtual_rpr_refine(ds.test.image(i), ds.test.scene_ids[i], teacher.model, pae.model,
                                              decoder.model, exact, db);
    oracle.push_back(o.refined);
    oracle_max = std::max(oracle_max, distance(o.refined.x, truth.x));
  }
  const auto ea = eval::summarize(apr_poses, ds.test);
  const auto er = eval::summarize(refined, ds.test);
  const auto eo = eval::summarize(oracle, ds.test);
  Report r = make_report(ctx, "virtual-rpr");
  r.results = json{{"apr", eval::to_json(ea)},
                   {"refined", eval::to_json(er)},
                   {"oracle", eval::to_json(eo)},
                   {"oracle_max_position_error_m", oracle_max},
                   {"position_ratio", ratio(er.median.position_m, ea.median.position_m)}};
  Table t{"Virtual relative pose regression (held-out medians)",
          {"scene", "apr_m", "apr_deg", "refined_m", "refined_deg"},
          {}};
  comparison_rows(t, ea, er);
  r.tables.push_back(std::move(t));
  r.tables.push_back(Table{"Oracle relative regressor",
                           {"measure", "value"},
                           {{"median position error m", fixed(eo.median.position_m, 6)},
                            {"max position error m", fixed(oracle_max, 6)}}});
  r.timing = json{{"per_query", timing_summary(ms)}};
  return finish(ctx, std::move(r));
}

Report ablate_fourier(const Context& ctx) {
  const sim::Dataset ds = load_run_dataset(ctx);
  const LoadedApr teacher = load_apr(ctx, ds);
  const refine::PoseDatabase db = load_database(ctx, ds);
  const double scale = train::position_scale(ds.train);

  Report r = make_report(ctx, "ablate-fourier");
  Table t{"Fourier level ablation", {"L", "student_m", "student_deg", "guess_initial_m", "guess_refined_m"}, {}};
  json sweep = json::array();
  for (std::size_t level : ctx.config.ablation_levels()) {
    Context sub{ctx.config, ctx.force, ctx.progress};
    sub.config.set("pae.fourier_levels=" + std::to_string(level));
    const train::TrainConfig tc = sub.config.training("pae");
    ctx.note("[ablate-fourier] L = " + std::to_string(level));
    LogCollector log{ctx, "pae-L" + std::to_string(level), tc.epochs, {}};
    auto trained = train::train_pae(teacher.model, ds, sub.config.pae(scale), tc, log.sink());
    Checkpoint ckpt = make_checkpoint(sub, "pae", ds, trained, teacher.checkpoint.digest());
    save_checkpoint(ckpt, ctx.config.run_dir() / ("pae-L" + std::to_string(level) + ".ckpt"));

    const auto student = eval::evaluate_pae(trained.model, teacher.model, ds.test);
    const GuessSummary g = run_guesses(sub, ds, trained.model, db);
    Report level_report = make_report(sub, "ablate-fourier-L" + std::to_string(level));
    level_report.results = json{{"fourier_levels", level},
                                {"checkpoint_digest", ckpt.digest()},
                                {"student", eval::to_json(student)},
                                {"guess_median_initial_m", g.initial},
                                {"guess_median_refined_m", g.refined}};
    level_report.tables.push_back(Table{"Fourier levels L = " + std::to_string(level),
                                        {"student_m", "student_deg", "guess_initial_m", "guess_refined_m"},
                                        {{fixed(student.median.position_m), fixed(student.median.orientation_deg, 2),
                                          fixed(g.initial), fixed(g.refined)}}});
    report::write_report(level_report, ctx.config.run_dir());
    sweep.push_back(json{{"fourier_levels", level},
                         {"config_digest", level_report.config_digest},
                         {"results", level_report.results}});
    t.rows.push_back({std::to_string(level), fixed(student.median.position_m),
                      fixed(student.median.orientation_deg, 2), fixed(g.initial), fixed(g.refined)});
  }
  r.results = json{{"sweep", sweep}};
  r.tables.push_back(std::move(t));
  return finish(ctx, std::move(r));
}

Report orientation_affine(const Context& ctx) {
  const sim::Dataset ds = load_run_dataset(ctx);
  const LoadedApr teacher = load_apr(ctx, ds);
  const LoadedPae pae = load_pae(ctx, ds, teacher.checkpoint);
  const refine::PoseDatabase db = load_database(ctx, ds);
  const refine::RefineConfig rc = ctx.config.refine();
  rc.validate();

  std::vector<Pose> apr_poses, combined;
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const auto res =
        refine::refine_apr_estimate(teacher.model, ds.test.image(i), ds.test.scene_ids[i], db, pae.model, rc);
    std::vector<Quaternion> qs;
    for (auto n : res.detail.neighbors) qs.push_back(db.pose(n).q);
    apr_poses.push_back(res.initial);
    combined.push_back(Pose{res.refined.x, refine::affine_orientation(qs, res.detail.weights.a)});
  }
  const auto ea = eval::summarize(apr_poses, ds.test);
  const auto ec = eval::summarize(combined, ds.test);
  Report r = make_report(ctx, "orientation-affine");
  r.results = json{{"apr_median_orientation_deg", ea.median.orientation_deg},
                   {"affine_median_orientation_deg", ec.median.orientation_deg},
                   {"apr", eval::to_json(ea)},
                   {"affine", eval::to_json(ec)}};
  r.tables.push_back(Table{"Affine combination of neighbor orientations (held-out medians)",
                           {"estimate", "orientation_deg"},
                           {{"APR", fixed(ea.median.orientation_deg, 3)},
                            {"affine combination", fixed(ec.median.orientation_deg, 3)}}});
  return finish(ctx, std::move(r));
}

Report summarize(const Context& ctx) {
  const fs::path dir = ctx.config.run_dir();
  if (!fs::exists(dir)) throw ValidationError("run directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 12 && name.ends_with(".report.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no reports in " + dir.string());

  Report r = make_report(ctx, "summary");
  json collected = json::object();
  std::string text;
  for (const auto& f : files) {
    const Report sub = report::read_report(f);
    collected[sub.kind] = json{{"config_digest", sub.config_digest}, {"results", sub.results}};
    for (const auto& t : sub.tables) r.tables.push_back(t);
  }
  r.results = json{{"reports", collected}};
  detail::write_file(dir / "report.json", report::to_json(r).dump(2) + "\n");
  detail::write_file(dir / "report.txt", report::render_text(r));
  ctx.note("wrote " + (dir / "report.json").string());
  return r;
}

}  // namespace pae::experiments
