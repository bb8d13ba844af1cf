// nodencg: dataset generation, NCG / RMSProp training and CSV exports.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime or solver failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nodencg/baseline.hpp"
#include "nodencg/datasets.hpp"
#include "nodencg/io.hpp"
#include "nodencg/ncg.hpp"

namespace fs = std::filesystem;
using namespace nodencg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Validation failure detected by the CLI itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_output(const std::string& path, bool force = true) {
  if (!force && fs::exists(path)) throw UsageError("'" + path + "' exists; pass --force to overwrite");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

LabeledSet load_for_model(const std::string& path, std::size_t model_dim) {
  LabeledSet set = io::load_dataset(path);
  if (set.dim() == 2 && model_dim == 3) return augment_to_3d(set);
  if (set.dim() != model_dim) {
    throw UsageError("'" + path + "' has dimension " + std::to_string(set.dim()) + ", model expects " +
                     std::to_string(model_dim));
  }
  return set;
}

SolverOptions inference_options(const io::Checkpoint& ckpt, const std::string& solver_override) {
  SolverOptions opts;
  opts.mode = solver_override.empty() ? ckpt.inference : io::parse_step_mode(solver_override);
  opts.fixed_steps = ckpt.params.mesh().intervals();
  return opts;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string kind = "moons";
  std::size_t count = 1000;
  double sigma = 0.07;
  std::uint64_t seed = 0;
  bool augment = false;
  bool force = false;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  DatasetSpec spec;
  spec.kind = parse_dataset_kind(a.kind);
  spec.count = a.count;
  spec.noise_sigma = a.sigma;
  spec.seed = a.seed;
  spec.augmented = a.augment;
  if (a.count == 0 || a.count % 2 != 0) throw UsageError("--count must be a positive even number");
  if (!(a.sigma >= 0.0)) throw UsageError("--sigma must be nonnegative");
  const LabeledSet set = make_dataset(spec);
  auto out = open_output(a.out, a.force);
  io::write_dataset_csv(out, set);
  std::cout << "wrote " << set.size() << " samples to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string train;
  std::string clean;
  std::string noisy;
  std::string out;
  std::string metrics;
  std::string resume;
  std::vector<std::string> settings;
  // Shorthands for common keys.
  std::string optimizer, descent, solver, dataset;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

io::RunConfig build_config(const TrainArgs& a) {
  std::map<std::string, std::string> kv;
  if (!a.config.empty()) kv = io::parse_key_values(read_file(a.config));
  for (const auto& s : a.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError({"--set expects key=value, got '" + s + "'"});
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!a.optimizer.empty()) kv["train.optimizer"] = a.optimizer;
  if (!a.descent.empty()) kv["train.descent"] = a.descent;
  if (!a.solver.empty()) kv["solver.mode"] = a.solver;
  if (!a.dataset.empty()) kv["dataset.kind"] = a.dataset;
  if (a.epochs) kv["train.epochs"] = std::to_string(*a.epochs);
  if (a.seed) kv["run.seed"] = std::to_string(*a.seed);

  io::RunConfig cfg;
  if (!kv.count("cost.mu1") && !kv.count("cost.mu2") && !kv.count("cost.mu3")) {
    // Loss preset follows the dataset unless the cost weights are given.
    const auto kind = kv.count("dataset.kind") ? kv["dataset.kind"] : std::string("moons");
    if (kind == "circles") cfg.train.weights = CostWeights::cross_entropy();
  }
  io::apply_settings(kv, cfg);
  return cfg;
}

void print_batch(const TrainState& s) {
  const MetricRow& r = s.metrics.back();
  std::printf("epoch %d batch %d  cost %.6g  train %.3f", r.epoch, r.batch, r.cost, r.train_acc);
  if (r.clean_acc == r.clean_acc) std::printf("  clean %.3f", r.clean_acc);
  if (r.noisy_acc == r.noisy_acc) std::printf("  noisy %.3f", r.noisy_acc);
  std::printf("  |theta|_W12 %.4g\n", r.w12_norm);
  std::fflush(stdout);
}

io::Checkpoint checkpoint_of(const TrainState& s, const TrainConfig& cfg) {
  io::Checkpoint c;
  c.params = s.params;
  c.weights = cfg.weights;
  c.seed = cfg.seed;
  c.epoch = s.epoch;
  c.batch = s.batch;
  c.iteration = s.iteration;
  c.descent = cfg.descent;
  c.inference = cfg.solver.mode;
  return c;
}

int run_train_ncg(const TrainArgs& a, io::RunConfig& cfg) {
  std::optional<TrainState> resume;
  std::size_t dim = cfg.augment ? 3 : 2;
  if (!a.resume.empty()) {
    const io::Checkpoint ckpt = io::load_checkpoint(a.resume);
    cfg.train.seed = ckpt.seed;
    cfg.train.weights = ckpt.weights;
    cfg.train.descent = ckpt.descent;
    cfg.train.mesh = ckpt.params.mesh();
    dim = ckpt.params.state_dim();
    TrainState s;
    s.params = ckpt.params;
    s.epoch = ckpt.epoch;
    s.batch = ckpt.batch;
    s.iteration = ckpt.iteration;
    resume = std::move(s);
  }
  cfg.train.solver.fixed_steps = cfg.train.mesh.intervals();
  const LabeledSet train = load_for_model(a.train, dim);
  EvalSets eval;
  if (!a.clean.empty()) eval.clean = load_for_model(a.clean, dim);
  if (!a.noisy.empty()) eval.noisy = load_for_model(a.noisy, dim);

  auto observer = [&](const TrainState& s) {
    if (!a.quiet) print_batch(s);
    io::save_checkpoint(a.out, checkpoint_of(s, cfg.train));
  };
  TrainState state;
  try {
    state = ncg_train(cfg.train, train, eval, std::move(resume), observer);
  } catch (const TrainingAborted& e) {
    io::save_checkpoint(a.out, checkpoint_of(e.snapshot(), cfg.train));
    if (!a.metrics.empty()) {
      auto out = open_output(a.metrics);
      io::write_metrics_csv(out, e.snapshot().metrics);
    }
    std::cerr << e.what() << "\nlast good state saved to " << a.out << '\n';
    return kExitRuntime;
  }
  io::save_checkpoint(a.out, checkpoint_of(state, cfg.train));
  if (!a.metrics.empty()) {
    auto out = open_output(a.metrics);
    io::write_metrics_csv(out, state.metrics);
  }
  if (state.best_clean.accuracy >= 0.0) {
    std::printf("best clean accuracy %.4f at epoch %.1f\n", state.best_clean.accuracy, state.best_clean.epoch);
  }
  if (state.best_noisy.accuracy >= 0.0) {
    std::printf("best noisy accuracy %.4f at epoch %.1f\n", state.best_noisy.accuracy, state.best_noisy.epoch);
  }
  return 0;
}

int run_train_sgd(const TrainArgs& a, io::RunConfig& cfg) {
  if (!a.resume.empty()) throw ConfigError({"--resume is supported for the ncg optimizer only"});
  const std::size_t dim = cfg.augment ? 3 : 2;
  const LabeledSet train = load_for_model(a.train, dim);
  std::optional<LabeledSet> clean, noisy;
  if (!a.clean.empty()) clean = load_for_model(a.clean, dim);
  if (!a.noisy.empty()) noisy = load_for_model(a.noisy, dim);
  const SgdResult result = sgd_train(cfg.sgd, train, clean ? &*clean : nullptr, noisy ? &*noisy : nullptr);
  if (!a.quiet) {
    for (const auto& m : result.metrics) {
      std::printf("epoch %d  loss %.6g  train %.3f", m.epoch, m.loss, m.train_acc);
      if (m.clean_acc >= 0.0) std::printf("  clean %.3f", m.clean_acc);
      if (m.noisy_acc >= 0.0) std::printf("  noisy %.3f", m.noisy_acc);
      std::printf("\n");
    }
  }
  io::Checkpoint c;
  c.params = trajectory_from_net(result.net);
  c.weights = cfg.sgd.weights;
  c.seed = cfg.sgd.seed;
  c.epoch = cfg.sgd.epochs;
  c.inference = StepMode::fixed_euler;
  io::save_checkpoint(a.out, c);
  if (!a.metrics.empty()) {
    auto out = open_output(a.metrics);
    io::write_sgd_metrics_csv(out, result.metrics);
  }
  return 0;
}

int run_train(const TrainArgs& a) {
  io::RunConfig cfg = build_config(a);
  return cfg.optimizer == "sgd" ? run_train_sgd(a, cfg) : run_train_ncg(a, cfg);
}

// ---------------------------------------------------------------- eval / exports

struct ModelArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string solver;
  std::vector<double> extent;
  double resolution = 400.0;
  std::size_t per_class = 25;
  std::size_t times = 101;
};

int run_eval(const ModelArgs& a) {
  const io::Checkpoint ckpt = io::load_checkpoint(a.checkpoint);
  const LabeledSet set = load_for_model(a.data, ckpt.params.state_dim());
  const double acc = accuracy(ckpt.params, set, inference_options(ckpt, a.solver));
  std::printf("accuracy %.6f (%zu samples)\n", acc, set.size());
  return 0;
}

int run_boundary(const ModelArgs& a) {
  if (!(a.resolution > 0.0)) throw UsageError("--resolution must be positive");
  const io::Checkpoint ckpt = io::load_checkpoint(a.checkpoint);
  io::Extent extent;
  if (!a.extent.empty()) {
    if (a.extent.size() != 4) throw UsageError("--extent expects x_min x_max y_min y_max");
    extent = {a.extent[0], a.extent[1], a.extent[2], a.extent[3]};
    if (!(extent.x_max > extent.x_min && extent.y_max > extent.y_min)) throw UsageError("--extent is empty");
  } else if (!a.data.empty()) {
    extent = io::padded_bounds(io::load_dataset(a.data));
  } else {
    throw UsageError("boundary needs --extent or --data");
  }
  auto out = open_output(a.out);
  io::write_boundary_csv(out, ckpt.params, inference_options(ckpt, a.solver), extent, a.resolution);
  return 0;
}

int run_trajectories(const ModelArgs& a) {
  const io::Checkpoint ckpt = io::load_checkpoint(a.checkpoint);
  const LabeledSet set = load_for_model(a.data, ckpt.params.state_dim());
  auto out = open_output(a.out);
  io::write_trajectories_csv(out, ckpt.params, inference_options(ckpt, a.solver), set, a.per_class, a.times);
  return 0;
}

int run_params_export(const ModelArgs& a) {
  const io::Checkpoint ckpt = io::load_checkpoint(a.checkpoint);
  auto out = open_output(a.out);
  io::write_params_csv(out, ckpt.params);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-varying neural ODE classifiers trained by nonlinear conjugate gradients"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a moons or circles dataset as CSV");
  generate->add_option("--kind", gen.kind, "moons | circles")->check(CLI::IsMember({"moons", "circles"}));
  generate->add_option("--count", gen.count, "Number of samples (even, split evenly over the classes)");
  generate->add_option("--sigma", gen.sigma, "Standard deviation of the Gaussian noise");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_flag("--augment", gen.augment, "Append a zero third coordinate");
  generate->add_flag("--force", gen.force, "Overwrite an existing output file");
  generate->add_option("-o,--out", gen.out, "Output CSV")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("-c,--config", tr.config, "key = value config file");
  train->add_option("--train", tr.train, "Training set CSV")->required();
  train->add_option("--clean", tr.clean, "Clean test set CSV, evaluated after every batch");
  train->add_option("--noisy", tr.noisy, "Noisy test set CSV, evaluated after every batch");
  train->add_option("-o,--out", tr.out, "Checkpoint path")->required();
  train->add_option("--metrics", tr.metrics, "Metrics CSV path");
  train->add_option("--resume", tr.resume, "Continue from this checkpoint (ncg only)");
  train->add_option("--set", tr.settings, "Override a config key: --set cost.mu4=1e-5");
  train->add_option("--optimizer", tr.optimizer, "ncg | sgd");
  train->add_option("--descent", tr.descent, "L2 | W12");
  train->add_option("--solver", tr.solver, "rk45 | rk4 | euler");
  train->add_option("--dataset", tr.dataset, "moons | circles (selects the default loss)");
  train->add_option("--epochs", tr.epochs, "Number of epochs");
  train->add_option("--seed", tr.seed, "Seed for initialization and batching");
  train->add_flag("-q,--quiet", tr.quiet, "No per-batch progress");

  ModelArgs ma;
  auto* eval = app.add_subcommand("eval", "Print the classification accuracy of a checkpoint");
  auto* boundary = app.add_subcommand("boundary", "Decision-boundary grid (x, y, score) as CSV");
  auto* traj = app.add_subcommand("trajectories", "Sample trajectories through the flow as CSV");
  auto* params = app.add_subcommand("params-export", "Parameter graphs W(t), b(t) as CSV");
  for (auto* sub : {eval, boundary, traj, params}) {
    sub->add_option("--checkpoint", ma.checkpoint, "Checkpoint file")->required();
  }
  for (auto* sub : {eval, boundary, traj}) {
    sub->add_option("--solver", ma.solver, "Override the inference solver: rk45 | rk4 | euler");
  }
  for (auto* sub : {boundary, traj, params}) sub->add_option("-o,--out", ma.out, "Output CSV")->required();
  eval->add_option("--data", ma.data, "Dataset CSV")->required();
  traj->add_option("--data", ma.data, "Dataset CSV to draw samples from")->required();
  traj->add_option("--per-class", ma.per_class, "Samples per class");
  traj->add_option("--times", ma.times, "Output instants on [0, T]");
  boundary->add_option("--data", ma.data, "Dataset CSV whose padded bounding box is the extent");
  boundary->add_option("--extent", ma.extent, "x_min x_max y_min y_max")->expected(4);
  boundary->add_option("--resolution", ma.resolution, "Grid points per unit length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ma);
    if (*boundary) return run_boundary(ma);
    if (*traj) return run_trajectories(ma);
    if (*params) return run_params_export(ma);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
