#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "pae/config.hpp"
#include "pae/error.hpp"
#include "pae/experiments.hpp"
#include "pae/report.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

struct Command {
  const char* name;
  const char* help;
};

constexpr Command kCommands[] = {
    {"gen-scene", "Render the synthetic dataset and write the pose database"},
    {"train-apr", "Train the teacher absolute pose regressor"},
    {"train-pae", "Distill the pose auto-encoder from the frozen teacher"},
    {"train-decoder", "Train the image decoder on frozen PAE encodings"},
    {"train-rpr", "Train the Siamese relative translation regressor"},
    {"eval", "Compare teacher and student on the held-out split"},
    {"refine", "Refine teacher position estimates by affine combination"},
    {"refine-random-guess", "Refine from random guesses around the ground truth"},
    {"virtual-rpr", "Relative regression against decoded neighbor images"},
    {"ablate-fourier", "Retrain the PAE for each configured Fourier level"},
    {"orientation-affine", "Affine combination of neighbor orientations"},
    {"report", "Collect all reports of the run into report.json"},
    {"pipeline", "Run every step above in order"},
    {"show-config", "Print the effective configuration"},
};

pae::report::Report run(const std::string& command, const pae::experiments::Context& ctx) {
  namespace ex = pae::experiments;
  if (command == "gen-scene") return ex::gen_scene(ctx);
  if (command == "train-apr") return ex::train(ctx, "apr");
  if (command == "train-pae") return ex::train(ctx, "pae");
  if (command == "train-decoder") return ex::train(ctx, "decoder");
  if (command == "train-rpr") return ex::train(ctx, "rpr");
  if (command == "eval") return ex::evaluate(ctx);
  if (command == "refine") return ex::refine(ctx);
  if (command == "refine-random-guess") return ex::refine_random_guess(ctx);
  if (command == "virtual-rpr") return ex::virtual_rpr(ctx);
  if (command == "ablate-fourier") return ex::ablate_fourier(ctx);
  if (command == "orientation-affine") return ex::orientation_affine(ctx);
  if (command == "report") return ex::summarize(ctx);
  throw pae::ValidationError("unknown command '" + command + "'");
}

const std::vector<std::string> kPipeline{"gen-scene", "train-apr",           "train-pae",   "train-decoder",
                                         "train-rpr", "eval",                "refine",      "refine-random-guess",
                                         "virtual-rpr", "ablate-fourier",    "orientation-affine", "report"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose regression, pose encoding and test-time refinement on a synthetic scene"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string name;
  bool force = false;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "JSON config file merged over the defaults")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "Override a config value, e.g. --set apr.train.epochs=20");
  app.add_option("-n,--name", name, "Run name; artifacts go to <output_dir>/<name>/");
  app.add_flag("-f,--force", force, "Accept artifacts whose digests differ from the current config");
  app.add_flag("-q,--quiet", quiet, "Only print reports");
  for (const auto& c : kCommands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    pae::experiments::Context ctx;
    if (!config_path.empty()) ctx.config = pae::config::RunConfig::load(config_path);
    for (const auto& o : overrides) ctx.config.set(o);
    if (!name.empty()) ctx.config.set("name=\"" + name + "\"");
    ctx.force = force;
    if (!quiet) ctx.progress = [](const std::string& m) { std::cerr << m << '\n'; };

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "show-config") {
      std::cout << ctx.config.values().dump(2) << '\n';
      return kOk;
    }
    const std::vector<std::string> steps = command == "pipeline" ? kPipeline : std::vector<std::string>{command};
    for (const auto& step : steps) {
      const pae::report::Report r = run(step, ctx);
      std::cout << pae::report::render_text(r);
    }
    return kOk;
  } catch (const pae::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}
