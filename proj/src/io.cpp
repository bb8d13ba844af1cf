#include "nodencg/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nodencg/model.hpp"

namespace nodencg::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

double require_double(const std::string& s, const std::string& where) {
  if (auto v = to_double(s)) return *v;
  throw std::runtime_error(where + ": expected a number, got '" + s + "'");
}

long long require_integer(const std::string& s, const std::string& where) {
  if (auto v = to_integer(s)) return *v;
  throw std::runtime_error(where + ": expected an integer, got '" + s + "'");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

}  // namespace

// ---------------------------------------------------------------- datasets

void write_dataset_csv(std::ostream& out, const LabeledSet& set) {
  static constexpr const char* names[] = {"x", "y", "z"};
  for (std::size_t j = 0; j < set.dim(); ++j) out << (j < 3 ? names[j] : ("x" + std::to_string(j + 1)).c_str()) << ',';
  out << "class\n";
  for (std::size_t k = 0; k < set.size(); ++k) {
    for (double v : set.input(k)) out << format_double(v) << ',';
    out << set.label(k) << '\n';
  }
}

LabeledSet read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: empty file");
  const auto header = split(line, ',');
  if (header.size() < 3 || header.back() != "class") {
    throw std::runtime_error("dataset: header must be x,y[,z],class");
  }
  const std::size_t dim = header.size() - 1;
  LabeledSet set(dim);
  std::vector<double> x(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = "dataset line " + std::to_string(line_no);
    if (cells.size() != header.size()) throw std::runtime_error(where + ": wrong number of columns");
    for (std::size_t j = 0; j < dim; ++j) x[j] = require_double(cells[j], where);
    const long long label = require_integer(cells.back(), where);
    if (label < 0 || static_cast<std::size_t>(label) >= dim) throw std::runtime_error(where + ": bad class id");
    set.add(x, static_cast<int>(label));
  }
  return set;
}

LabeledSet load_dataset(const std::string& path) {
  auto in = open_input(path);
  return read_dataset_csv(in);
}

// ---------------------------------------------------------------- checkpoints

std::string to_string(StepMode mode) {
  switch (mode) {
    case StepMode::adaptive_rk45: return "rk45";
    case StepMode::fixed_rk4: return "rk4";
    case StepMode::fixed_euler: return "euler";
  }
  return "rk4";
}

StepMode parse_step_mode(const std::string& name) {
  if (name == "rk45" || name == "adaptive") return StepMode::adaptive_rk45;
  if (name == "rk4" || name == "fixed") return StepMode::fixed_rk4;
  if (name == "euler") return StepMode::fixed_euler;
  throw ConfigError({"unknown solver mode '" + name + "' (expected rk45, rk4 or euler)"});
}

std::string serialize_checkpoint(const Checkpoint& c) {
  const ParamTrajectory& p = c.params;
  std::ostringstream out;
  out << kCheckpointTag << '\n';
  out << "T " << format_double(p.mesh().final_time()) << '\n';
  out << "N_state " << p.state_dim() << '\n';
  out << "M_param " << p.param_dim() << '\n';
  out << "nodes " << p.node_count() << '\n';
  const CostWeights& w = c.weights;
  out << "weights";
  for (double v : {w.mu1, w.mu2, w.mu3, w.mu4, w.mu5, w.mu_run}) out << ' ' << format_double(v);
  out << '\n';
  out << "seed " << c.seed << '\n';
  out << "counters " << c.epoch << ' ' << c.batch << ' ' << c.iteration << '\n';
  out << "descent " << to_string(c.descent) << '\n';
  out << "inference " << to_string(c.inference) << '\n';
  out << "rows\n";
  for (std::size_t i = 0; i < p.node_count(); ++i) {
    out << format_double(p.mesh().node(i));
    for (double v : p.node(i)) out << ' ' << format_double(v);
    out << '\n';
  }
  return out.str();
}

Checkpoint parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const char* key) {
    ++line_no;
    if (!std::getline(in, line)) throw std::runtime_error(std::string("checkpoint: missing '") + key + "' line");
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] != key) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": expected '" + key + "'");
    }
    return tok;
  };
  auto where = [&] { return "checkpoint line " + std::to_string(line_no); };

  ++line_no;
  if (!std::getline(in, line) || trim(line) != kCheckpointTag) throw std::runtime_error("checkpoint: bad format tag");
  auto tok = next("T");
  const double final_time = require_double(tok.at(1), where());
  tok = next("N_state");
  const auto dim = static_cast<std::size_t>(require_integer(tok.at(1), where()));
  tok = next("M_param");
  const auto m = static_cast<std::size_t>(require_integer(tok.at(1), where()));
  if (dim == 0 || dim > kMaxStateDim || m != param_count(dim)) throw std::runtime_error(where() + ": inconsistent dims");
  tok = next("nodes");
  const auto node_count = require_integer(tok.at(1), where());
  if (node_count < 2) throw std::runtime_error(where() + ": need at least two nodes");

  Checkpoint c;
  tok = next("weights");
  if (tok.size() != 7) throw std::runtime_error(where() + ": expected 6 weights");
  double* fields[] = {&c.weights.mu1, &c.weights.mu2, &c.weights.mu3, &c.weights.mu4, &c.weights.mu5,
                      &c.weights.mu_run};
  for (std::size_t i = 0; i < 6; ++i) *fields[i] = require_double(tok[i + 1], where());
  tok = next("seed");
  c.seed = std::stoull(tok.at(1));
  tok = next("counters");
  if (tok.size() != 4) throw std::runtime_error(where() + ": expected epoch batch iteration");
  c.epoch = static_cast<int>(require_integer(tok[1], where()));
  c.batch = static_cast<int>(require_integer(tok[2], where()));
  c.iteration = static_cast<long>(require_integer(tok[3], where()));
  tok = next("descent");
  c.descent = parse_descent_space(tok.at(1));
  tok = next("inference");
  c.inference = parse_step_mode(tok.at(1));
  next("rows");

  c.params = ParamTrajectory(TimeMesh(final_time, static_cast<int>(node_count - 1)), dim);
  for (long long i = 0; i < node_count; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: expected " + std::to_string(node_count) + " rows");
    tok = split_ws(line);
    if (tok.size() != m + 1) throw std::runtime_error(where() + ": wrong number of columns");
    const double t = require_double(tok[0], where());
    if (std::abs(t - c.params.mesh().node(static_cast<std::size_t>(i))) > 1e-9 * std::max(1.0, final_time)) {
      throw std::runtime_error(where() + ": time does not match a uniform mesh");
    }
    auto theta = c.params.node(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < m; ++j) theta[j] = require_double(tok[j + 1], where());
  }
  while (std::getline(in, line)) {
    if (!trim(line).empty()) throw std::runtime_error("checkpoint: trailing data after rows");
  }
  if (!all_finite(c.params.values())) throw std::runtime_error("checkpoint: non-finite parameter value");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize_checkpoint(ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto in = open_input(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

// ---------------------------------------------------------------- config

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("config line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    out[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
  }
  if (!problems.empty()) throw ConfigError(problems);
  return out;
}

void apply_settings(const std::map<std::string, std::string>& settings, RunConfig& cfg) {
  std::vector<std::string> problems;
  auto number = [&](const std::string& key, const std::string& value, auto& field) {
    if (auto v = to_double(value)) {
      field = static_cast<std::remove_reference_t<decltype(field)>>(*v);
    } else {
      problems.push_back(key + ": expected a number, got '" + value + "'");
    }
  };
  auto integer = [&](const std::string& key, const std::string& value, auto& field) {
    if (auto v = to_integer(value)) {
      field = static_cast<std::remove_reference_t<decltype(field)>>(*v);
    } else {
      problems.push_back(key + ": expected an integer, got '" + value + "'");
    }
  };
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.violations().begin(), e.violations().end());
    }
  };

  for (const auto& [key, value] : settings) {
    if (key == "dataset.kind") {
      guarded([&] { cfg.dataset = parse_dataset_kind(value); });
    } else if (key == "dataset.seed") {
      integer(key, value, cfg.dataset_seed);
    } else if (key == "dataset.augment") {
      if (value == "true" || value == "1") {
        cfg.augment = true;
      } else if (value == "false" || value == "0") {
        cfg.augment = false;
      } else {
        problems.push_back(key + ": expected true or false");
      }
    } else if (key == "train.optimizer") {
      if (value == "ncg" || value == "sgd") {
        cfg.optimizer = value;
      } else {
        problems.push_back(key + ": expected ncg or sgd");
      }
    } else if (key == "train.epochs") {
      integer(key, value, cfg.train.epochs);
      integer(key, value, cfg.sgd.epochs);
    } else if (key == "train.descent") {
      guarded([&] { cfg.train.descent = parse_descent_space(value); });
    } else if (key == "train.batches") {
      integer(key, value, cfg.train.batches_per_epoch);
    } else if (key == "train.batch_size") {
      integer(key, value, cfg.train.batch_size);
      integer(key, value, cfg.sgd.batch_size);
    } else if (key == "train.iterations") {
      integer(key, value, cfg.train.iterations_per_batch);
    } else if (key == "train.beta_max") {
      number(key, value, cfg.train.line_search.beta_max);
    } else if (key == "cost.mu1") {
      number(key, value, cfg.train.weights.mu1);
    } else if (key == "cost.mu2") {
      number(key, value, cfg.train.weights.mu2);
    } else if (key == "cost.mu3") {
      number(key, value, cfg.train.weights.mu3);
    } else if (key == "cost.mu4") {
      number(key, value, cfg.train.weights.mu4);
    } else if (key == "cost.mu5") {
      number(key, value, cfg.train.weights.mu5);
    } else if (key == "cost.mu_run") {
      number(key, value, cfg.train.weights.mu_run);
    } else if (key == "solver.mode") {
      guarded([&] { cfg.train.solver.mode = parse_step_mode(value); });
    } else if (key == "solver.abs_tol") {
      number(key, value, cfg.train.solver.abs_tol);
    } else if (key == "solver.rel_tol") {
      number(key, value, cfg.train.solver.rel_tol);
    } else if (key == "run.seed") {
      integer(key, value, cfg.train.seed);
      integer(key, value, cfg.sgd.seed);
    } else if (key == "sgd.learning_rate") {
      number(key, value, cfg.sgd.learning_rate);
    } else {
      problems.push_back("unknown key '" + key + "'");
    }
  }
  cfg.sgd.weights = cfg.train.weights;
  const auto more = cfg.train.violations();
  problems.insert(problems.end(), more.begin(), more.end());
  if (cfg.optimizer == "sgd" && (cfg.train.weights.mu4 != 0.0 || cfg.train.weights.mu5 != 0.0 ||
                                 cfg.train.weights.mu_run != 0.0)) {
    problems.emplace_back("the sgd baseline supports terminal losses only (mu4 = mu5 = mu_run = 0)");
  }
  if (!(cfg.sgd.learning_rate > 0.0)) problems.emplace_back("sgd.learning_rate must be positive");
  if (!problems.empty()) throw ConfigError(problems);
}

// ---------------------------------------------------------------- exports

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.batch << ',' << r.iteration << ',' << cell(r.cost) << ',' << cell(r.train_acc) << ','
        << cell(r.clean_acc) << ',' << cell(r.noisy_acc) << ',' << cell(r.l2_norm) << ',' << cell(r.w12_norm) << ','
        << cell(r.beta) << ',' << cell(r.gamma) << '\n';
  }
}

void write_sgd_metrics_csv(std::ostream& out, const std::vector<SgdEpochMetrics>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ",,," << cell(r.loss) << ',' << cell(r.train_acc) << ','
        << (r.clean_acc < 0 ? std::string() : cell(r.clean_acc)) << ','
        << (r.noisy_acc < 0 ? std::string() : cell(r.noisy_acc)) << ",,,,\n";
  }
}

Extent padded_bounds(const LabeledSet& set, double margin) {
  if (set.empty()) throw DomainError("padded_bounds: empty set");
  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto x = set.input(k);
    e.x_min = std::min(e.x_min, x[0]);
    e.x_max = std::max(e.x_max, x[0]);
    e.y_min = std::min(e.y_min, x[1]);
    e.y_max = std::max(e.y_max, x[1]);
  }
  e.x_min -= margin;
  e.x_max += margin;
  e.y_min -= margin;
  e.y_max += margin;
  return e;
}

void write_boundary_csv(std::ostream& out, const ParamTrajectory& params, const SolverOptions& opts,
                        const Extent& extent, double resolution, Exec exec) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw DomainError("boundary: resolution must be positive");
  if (!(extent.x_max > extent.x_min && extent.y_max > extent.y_min)) throw DomainError("boundary: empty extent");
  const auto nx = static_cast<std::size_t>(std::max(1.0, std::round((extent.x_max - extent.x_min) * resolution)));
  const auto ny = static_cast<std::size_t>(std::max(1.0, std::round((extent.y_max - extent.y_min) * resolution)));
  const std::size_t dim = params.state_dim();
  const double dx = (extent.x_max - extent.x_min) / static_cast<double>(nx);
  const double dy = (extent.y_max - extent.y_min) / static_cast<double>(ny);

  LabeledSet grid(dim);
  std::vector<double> x(dim, 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      x[0] = extent.x_min + (static_cast<double>(i) + 0.5) * dx;
      x[1] = extent.y_min + (static_cast<double>(j) + 0.5) * dy;
      grid.add(x, 0);
    }
  }
  const auto outputs = network_outputs(params, grid, opts, exec);
  out << "x,y,score\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto in = grid.input(k);
    out << format_double(in[0]) << ',' << format_double(in[1]) << ','
        << format_double(outputs[k * dim + 1] - outputs[k * dim]) << '\n';
  }
}

void write_trajectories_csv(std::ostream& out, const ParamTrajectory& params, const SolverOptions& opts,
                            const LabeledSet& set, std::size_t per_class, std::size_t times) {
  if (set.dim() != params.state_dim()) throw DomainError("trajectories: model and data dimensions differ");
  if (times < 2) throw DomainError("trajectories: need at least two output times");
  std::vector<std::size_t> chosen;
  std::size_t taken[2] = {0, 0};
  for (std::size_t k = 0; k < set.size(); ++k) {
    const int c = set.label(k);
    if (c < 2 && taken[c] < per_class) {
      ++taken[c];
      chosen.push_back(k);
    }
  }
  const NodeModel model(params);
  const double final_time = params.mesh().final_time();
  out << "sample_id,class,t";
  for (std::size_t j = 0; j < set.dim(); ++j) out << ",x" << j + 1;
  out << '\n';
  std::vector<double> x(set.dim());
  for (std::size_t id = 0; id < chosen.size(); ++id) {
    const std::size_t k = chosen[id];
    const DenseSolution sol = solve_ivp(forward_problem(model, set.input(k), opts));
    for (std::size_t s = 0; s < times; ++s) {
      const double t = s + 1 == times ? final_time : final_time * static_cast<double>(s) / static_cast<double>(times - 1);
      sol.eval(t, x);
      out << id << ',' << set.label(k) << ',' << format_double(t);
      for (double v : x) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_params_csv(std::ostream& out, const ParamTrajectory& params) {
  const std::size_t n = params.state_dim();
  out << 't';
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = 0; row < n; ++row) out << ",W" << row + 1 << col + 1;
  }
  for (std::size_t row = 0; row < n; ++row) out << ",b" << row + 1;
  out << '\n';
  for (std::size_t i = 0; i < params.node_count(); ++i) {
    out << format_double(params.mesh().node(i));
    for (double v : params.node(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace nodencg::io
