// Copyright 2026 The dmft Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmft/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "dmft/error.hpp"
#include "dmft/kernel_io.hpp"
#include "dmft/reference_nn.hpp"
#include "dmft/static_kernels.hpp"

#ifndef DMFT_VERSION_STRING
#define DMFT_VERSION_STRING "0.0.0"
#endif

namespace dmft {

using nlohmann::json;

std::string_view version() { return DMFT_VERSION_STRING; }

namespace {

struct ModeName {
  Mode mode;
  const char* name;
};
constexpr ModeName kModes[] = {
    {Mode::dmft, "dmft"},         {Mode::linear, "linear"},
    {Mode::two_layer, "two-layer"}, {Mode::static_kernels, "static"},
    {Mode::grad_indep, "grad-indep"}, {Mode::perturb, "perturb"},
    {Mode::nn_train, "nn-train"}, {Mode::compare, "compare"},
};

}  // namespace

Mode parse_mode(std::string_view name) {
  for (const auto& m : kModes)
    if (name == m.name) return m.mode;
  fail(ErrorKind::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Mode mode) {
  for (const auto& m : kModes)
    if (mode == m.mode) return m.name;
  return "?";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::InvalidConfig, where + " must be an object");
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) > 0, ErrorKind::InvalidConfig,
            "unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

DataSpec parse_data(const json& j, const std::filesystem::path& base) {
  check_keys(j, {"synthetic", "csv", "gram"}, "data");
  require(j.size() == 1, ErrorKind::InvalidConfig, "data needs exactly one of synthetic, csv, gram");
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    check_keys(s, {"n_train", "n_test", "dim", "seed", "inputs", "target", "y", "whiten"},
               "data.synthetic");
    SyntheticData d;
    d.n_train = get_or(s, "n_train", d.n_train);
    d.n_test = get_or(s, "n_test", d.n_test);
    d.dim = get_or(s, "dim", d.dim);
    d.seed = get_or<std::uint64_t>(s, "seed", d.seed);
    const auto inputs = get_or<std::string>(s, "inputs", "gaussian");
    require(inputs == "gaussian" || inputs == "basis", ErrorKind::InvalidConfig,
            "data.synthetic.inputs must be gaussian or basis");
    d.inputs = inputs == "basis" ? InputRule::basis : InputRule::gaussian;
    const auto target = get_or<std::string>(s, "target", "linear");
    if (target == "linear") d.target = TargetRule::linear;
    else if (target == "sign") d.target = TargetRule::sign;
    else if (target == "explicit") d.target = TargetRule::explicit_values;
    else fail(ErrorKind::InvalidConfig, "data.synthetic.target must be linear, sign or explicit");
    d.y = get_or(s, "y", std::vector<double>{});
    if (!d.y.empty() && !s.contains("target")) d.target = TargetRule::explicit_values;
    d.whiten = get_or(s, "whiten", false);
    return d;
  }
  if (j.contains("csv")) {
    const json& c = j.at("csv");
    check_keys(c, {"inputs", "targets", "n_test", "whiten"}, "data.csv");
    CsvData d;
    d.inputs = resolve(base, c.at("inputs").get<std::string>());
    d.targets = resolve(base, c.at("targets").get<std::string>());
    d.n_test = get_or(c, "n_test", 0);
    d.whiten = get_or(c, "whiten", false);
    return d;
  }
  const json& g = j.at("gram");
  check_keys(g, {"gram", "targets", "n_test"}, "data.gram");
  GramData d;
  d.gram = resolve(base, g.at("gram").get<std::string>());
  d.targets = resolve(base, g.at("targets").get<std::string>());
  d.n_test = get_or(g, "n_test", 0);
  return d;
}

DmftConfig parse_solver(const json& j) {
  check_keys(j,
             {"depth", "gamma0", "activation", "n_mc", "beta", "tol", "max_iters", "seed",
              "lambda_wd", "use_bias", "loss", "moments", "rng_streams", "batch_size", "n_quad",
              "time_segments"},
             "solver");
  DmftConfig c;
  c.depth = get_or(j, "depth", c.depth);
  c.gamma0 = get_or(j, "gamma0", c.gamma0);
  c.activation = parse_activation(get_or<std::string>(j, "activation", "tanh"));
  c.n_mc = get_or(j, "n_mc", c.n_mc);
  c.beta = get_or(j, "beta", c.beta);
  c.tol = get_or(j, "tol", c.tol);
  c.max_iters = get_or(j, "max_iters", c.max_iters);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.lambda_wd = get_or(j, "lambda_wd", c.lambda_wd);
  c.use_bias = get_or(j, "use_bias", c.use_bias);
  c.loss = parse_loss(get_or<std::string>(j, "loss", "mse"));
  const auto moments = get_or<std::string>(j, "moments", "auto");
  require(moments == "auto" || moments == "monte_carlo", ErrorKind::InvalidConfig,
          "solver.moments must be auto or monte_carlo");
  c.moments = moments == "auto" ? MomentMode::automatic : MomentMode::monte_carlo;
  const auto streams = get_or<std::string>(j, "rng_streams", "fixed");
  require(streams == "fixed" || streams == "fresh", ErrorKind::InvalidConfig,
          "solver.rng_streams must be fixed or fresh");
  c.rng_streams = streams == "fixed" ? RngStreams::fixed : RngStreams::fresh;
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.n_quad = get_or(j, "n_quad", c.n_quad);
  c.time_segments = get_or(j, "time_segments", c.time_segments);
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  const bool needs_data = mode != Mode::two_layer || !two_layer_y_norm.has_value();
  require(!needs_data || data.has_value(), ErrorKind::InvalidConfig,
          std::string("mode ") + std::string(to_string(mode)) + " needs a data section");
  if (mode != Mode::linear && mode != Mode::two_layer && mode != Mode::perturb) solver.validate();
  if (mode == Mode::linear || mode == Mode::perturb) linear.validate();
  if (mode == Mode::perturb)
    require(!perturb_gamma0s.empty(), ErrorKind::InvalidConfig, "perturb needs perturb.gamma0s");
  if (mode == Mode::nn_train || mode == Mode::compare) {
    require(nn.width >= 1 && !nn.seeds.empty(), ErrorKind::InvalidConfig,
            "nn needs width >= 1 and at least one seed");
    require(solver.gamma0 > 0, ErrorKind::InvalidConfig, "the reference network needs gamma0 > 0");
    require(!std::holds_alternative<GramData>(*data), ErrorKind::InvalidConfig,
            "the reference network needs raw inputs (synthetic or csv data)");
    const double eta0 = nn.eta0.value_or(grid.dt());
    const double ratio = grid.dt() / eta0;
    require(eta0 > 0 && std::abs(ratio - std::round(ratio)) < 1e-9 * ratio && ratio >= 1 - 1e-12,
            ErrorKind::InvalidConfig, "grid dt must be an integer multiple of nn.eta0");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    check_keys(j, {"mode", "grid", "data", "solver", "linear", "nn", "perturb", "two_layer", "output"},
               "config");
    require(j.contains("mode") && j.contains("grid"), ErrorKind::InvalidConfig,
            "config needs mode and grid");
    cfg.mode = parse_mode(j.at("mode").get<std::string>());
    const json& g = j.at("grid");
    check_keys(g, {"T", "dt"}, "grid");
    cfg.grid = TimeGrid(g.at("T").get<int>(), g.at("dt").get<double>());
    if (j.contains("data")) cfg.data = parse_data(j.at("data"), base);
    cfg.solver = parse_solver(get_or(j, "solver", json::object()));
    const json lin = get_or(j, "linear", json::object());
    check_keys(lin, {"beta", "tol", "max_iters"}, "linear");
    cfg.linear.depth = cfg.solver.depth;
    cfg.linear.gamma0 = cfg.solver.gamma0;
    cfg.linear.loss = cfg.solver.loss;
    cfg.linear.beta = get_or(lin, "beta", cfg.linear.beta);
    cfg.linear.tol = get_or(lin, "tol", cfg.linear.tol);
    cfg.linear.max_iters = get_or(lin, "max_iters", cfg.linear.max_iters);
    const json nn = get_or(j, "nn", json::object());
    check_keys(nn, {"width", "eta0", "seeds", "log_fields"}, "nn");
    cfg.nn.width = get_or(nn, "width", cfg.nn.width);
    if (nn.contains("eta0") && !nn.at("eta0").is_null()) cfg.nn.eta0 = nn.at("eta0").get<double>();
    cfg.nn.seeds = get_or(nn, "seeds", cfg.nn.seeds);
    cfg.nn.log_fields = get_or(nn, "log_fields", cfg.nn.log_fields);
    const json pt = get_or(j, "perturb", json::object());
    check_keys(pt, {"gamma0s", "quadrature"}, "perturb");
    cfg.perturb_gamma0s = get_or(pt, "gamma0s", std::vector<double>{});
    const auto quad = get_or<std::string>(pt, "quadrature", "discrete");
    require(quad == "discrete" || quad == "exact", ErrorKind::InvalidConfig,
            "perturb.quadrature must be discrete or exact");
    cfg.perturb_quadrature =
        quad == "exact" ? PerturbativeQuadrature::exact : PerturbativeQuadrature::discrete;
    const json tl = get_or(j, "two_layer", json::object());
    check_keys(tl, {"y_norm"}, "two_layer");
    if (tl.contains("y_norm")) cfg.two_layer_y_norm = tl.at("y_norm").get<double>();
    cfg.output_dir = resolve(base, get_or<std::string>(j, "output", "out"));
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("bad config field: ") + e.what());
  }
  cfg.config_json = j.dump();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.solver.seed = seed;
  for (size_t i = 0; i < cfg.nn.seeds.size(); ++i) cfg.nn.seeds[i] = seed + i;
  json j = json::parse(cfg.config_json);
  j["solver"]["seed"] = seed;
  j["nn"]["seeds"] = cfg.nn.seeds;
  cfg.config_json = j.dump();
}

namespace {

class Artifacts {
 public:
  explicit Artifacts(const std::filesystem::path& dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    require(!ec, ErrorKind::Io, "cannot create output directory " + dir_.string());
  }

  void kernel(const std::string& file, const Kernel& k,
              const std::map<std::string, std::string>& extra = {}) {
    write_kernel(dir_ / file, k, extra);
    files_.push_back(dir_ / file);
  }

  std::ofstream text(const std::string& file) {
    std::ofstream out(dir_ / file);
    require(out.good(), ErrorKind::Io, "cannot write " + (dir_ / file).string());
    out << std::setprecision(17);
    files_.push_back(dir_ / file);
    return out;
  }

  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
};

void write_grid_loss(Artifacts& a, const TimeGrid& grid, const Eigen::VectorXd& loss,
                     const Eigen::VectorXd* extra = nullptr, const char* extra_name = nullptr) {
  auto out = a.text("loss.csv");
  out << "step,t,loss";
  if (extra) out << ',' << extra_name;
  out << '\n';
  for (int k = 0; k < grid.n_steps(); ++k) {
    out << k << ',' << grid.time(k) << ',' << loss[k];
    if (extra) out << ',' << (*extra)[k];
    out << '\n';
  }
}

void write_preds(Artifacts& a, const TimeGrid& grid, const Eigen::MatrixXd& f) {
  auto out = a.text("preds.csv");
  out << 't';
  for (Eigen::Index mu = 0; mu < f.rows(); ++mu) out << ",f_" << mu;
  out << '\n';
  for (int k = 0; k < grid.n_steps(); ++k) {
    out << grid.time(k);
    for (Eigen::Index mu = 0; mu < f.rows(); ++mu) out << ',' << f(mu, k);
    out << '\n';
  }
}

json diagnostics_json(const IterationDiagnostics& d) {
  return {{"iteration", d.iteration},   {"change_phi", d.change_phi}, {"change_g", d.change_g},
          {"change_a", d.change_a},     {"change_b", d.change_b},     {"max_change", d.max_change},
          {"final_loss", d.final_loss}, {"ntk_trace", d.ntk_trace}};
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void write_dmft_state(Artifacts& a, const DmftState& st, json& report, const std::string& prefix = "") {
  const int L = st.depth();
  for (int l = 1; l <= L; ++l) {
    a.kernel(prefix + "phi" + std::to_string(l) + ".kern", st.phi[l]);
    a.kernel(prefix + "g" + std::to_string(l) + ".kern", st.g[l]);
    if (l < L) a.kernel(prefix + "a" + std::to_string(l) + ".kern", st.a[l]);
    if (l > 1) a.kernel(prefix + "b" + std::to_string(l - 1) + ".kern", st.b[l - 1]);
  }
  a.kernel(prefix + "ntk.kern", st.ntk());
  {
    auto out = a.text(prefix + "diagnostics.jsonl");
    for (const auto& d : st.diagnostics) out << diagnostics_json(d).dump() << '\n';
  }
  report["converged"] = st.converged;
  report["iterations"] = st.iterations;
  json diags = json::array();
  for (const auto& d : st.diagnostics) diags.push_back(diagnostics_json(d));
  report["diagnostics"] = diags;
  report["final_loss"] = st.loss[st.loss.size() - 1];
}

RunResult finish(const ExperimentConfig& cfg, Artifacts& a, json report, int exit_code) {
  report["version"] = std::string(version());
  report["mode"] = std::string(to_string(cfg.mode));
  report["config"] = json::parse(cfg.config_json);
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(cfg.config_json);
  report["config_hash"] = hash.str();
  report["grid"] = {{"T", cfg.grid.n_steps()}, {"dt", cfg.grid.dt()}, {"horizon", cfg.grid.horizon()}};
  report["seeds"] = {{"solver", cfg.solver.seed}, {"nn", cfg.nn.seeds}};
  report["exit_code"] = exit_code;
  const std::string text = report.dump(2);
  a.text("report.json") << text << '\n';
  return {exit_code, text, a.files()};
}

struct NnRun {
  Eigen::VectorXd loss;       // per grid point, averaged over seeds
  Eigen::VectorXd step_loss;  // per GD step, averaged over seeds
  Eigen::MatrixXd f;          // first seed
  std::optional<MeasuredKernels> kernels;  // averaged over seeds
  double eta0 = 0;
};

NnRun run_network(const ExperimentConfig& cfg, const SampleSet& data) {
  NetworkConfig net_cfg{cfg.nn.width, cfg.solver.depth, cfg.solver.gamma0, cfg.solver.activation,
                        cfg.solver.use_bias, cfg.solver.lambda_wd};
  const double eta0 = cfg.nn.eta0.value_or(cfg.grid.dt());
  NnRun out;
  out.eta0 = eta0;
  const double n_seeds = static_cast<double>(cfg.nn.seeds.size());
  for (size_t i = 0; i < cfg.nn.seeds.size(); ++i) {
    Mlp net(net_cfg, static_cast<int>(data.inputs()->cols()), cfg.nn.seeds[i]);
    const TrainLog log = train(net, data, cfg.grid, eta0, {cfg.solver.loss, cfg.nn.log_fields});
    if (i == 0) {
      out.loss = log.loss / n_seeds;
      out.step_loss = log.step_loss / n_seeds;
      out.f = log.f;
    } else {
      out.loss += log.loss / n_seeds;
      out.step_loss += log.step_loss / n_seeds;
    }
    if (cfg.nn.log_fields) {
      MeasuredKernels m = measure_kernels(log);
      if (!out.kernels) {
        out.kernels = std::move(m);
        for (auto& k : out.kernels->phi) k.values() /= n_seeds;
        for (auto& k : out.kernels->g) k.values() /= n_seeds;
        out.kernels->ntk.values() /= n_seeds;
      } else {
        for (size_t l = 0; l < m.phi.size(); ++l) out.kernels->phi[l].values() += m.phi[l].values() / n_seeds;
        for (size_t l = 0; l < m.g.size(); ++l) out.kernels->g[l].values() += m.g[l].values() / n_seeds;
        out.kernels->ntk.values() += m.ntk.values() / n_seeds;
      }
    }
  }
  if (out.kernels) out.kernels->phi[0].values() = Kernel::constant_in_time(data.input_gram(), cfg.grid).values();
  return out;
}

RunResult run_dmft(const ExperimentConfig& cfg, const SampleSet& data, bool grad_indep) {
  Artifacts a(cfg.output_dir);
  const DmftState st = grad_indep ? gradient_independence_solve(cfg.solver, data, cfg.grid)
                                  : dmft_solve(cfg.solver, data, cfg.grid);
  json report;
  write_dmft_state(a, st, report);
  write_grid_loss(a, cfg.grid, st.loss);
  write_preds(a, cfg.grid, st.f.values());
  if (cfg.solver.lambda_wd > 0) {
    const auto rep = representer_check(st, data, cfg.solver.lambda_wd, cfg.solver.depth + 1.0);
    report["representer"] = {{"f_dmft", to_vec(rep.f_dmft)},
                             {"f_regression", to_vec(rep.f_regression)},
                             {"max_abs_deviation", rep.max_abs_deviation},
                             {"relative_deviation", rep.relative_deviation}};
  }
  return finish(cfg, a, report, st.converged ? 0 : 2);
}

RunResult run_linear(const ExperimentConfig& cfg, const SampleSet& data) {
  Artifacts a(cfg.output_dir);
  const LinearDmftState st = linear_solve(cfg.linear, data, cfg.grid);
  const int L = st.depth(), P = st.n_samples(), T = cfg.grid.n_steps();
  for (int l = 1; l <= L; ++l) {
    a.kernel("h" + std::to_string(l) + ".kern", st.h_kernel(l));
    a.kernel("g" + std::to_string(l) + ".kern", st.g_kernel(l));
    auto out = a.text("h" + std::to_string(l) + "_diag.csv");
    out << "t,mu,nu,value\n";
    for (int k = 0; k < T; ++k)
      for (int mu = 0; mu < P; ++mu)
        for (int nu = 0; nu < P; ++nu)
          out << cfg.grid.time(k) << ',' << mu << ',' << nu << ',' << st.h[l](mu * T + k, nu * T + k) << '\n';
  }
  a.kernel("ntk.kern", st.ntk());
  write_grid_loss(a, cfg.grid, st.loss);
  write_preds(a, cfg.grid, st.f.values());
  json report;
  report["converged"] = st.converged;
  report["iterations"] = st.iterations;
  report["changes"] = st.changes;
  report["final_loss"] = st.loss[T - 1];
  return finish(cfg, a, report, st.converged ? 0 : 2);
}

RunResult run_static(const ExperimentConfig& cfg, const SampleSet& data) {
  Artifacts a(cfg.output_dir);
  const auto& s = cfg.solver;
  const StaticKernels sk = static_kernels(s.activation, data.input_gram(), s.depth, s.n_quad, s.use_bias);
  for (int l = 1; l <= s.depth; ++l) {
    a.kernel("phi" + std::to_string(l) + ".kern", Kernel::constant_in_time(sk.phi[l], cfg.grid, "phi" + std::to_string(l)));
    a.kernel("g" + std::to_string(l) + ".kern", Kernel::constant_in_time(sk.g[l], cfg.grid, "g" + std::to_string(l)));
  }
  a.kernel("ntk.kern", Kernel::constant_in_time(sk.ntk, cfg.grid, "ntk"));
  const Predictions p = integrate_predictions(std::vector<Eigen::MatrixXd>(cfg.grid.n_steps(), sk.ntk),
                                              data.targets(), data.n_train(), s.loss, cfg.grid);
  write_grid_loss(a, cfg.grid, p.loss);
  write_preds(a, cfg.grid, p.f.values());
  json report;
  report["final_loss"] = p.loss[p.loss.size() - 1];
  return finish(cfg, a, report, 0);
}

RunResult run_two_layer(const ExperimentConfig& cfg, const std::optional<SampleSet>& data) {
  Artifacts a(cfg.output_dir);
  const double g0 = cfg.solver.gamma0;
  const int T = cfg.grid.n_steps();
  json report;
  Eigen::VectorXd loss(T);
  if (cfg.two_layer_y_norm) {
    const auto r = two_layer_whitened(g0, *cfg.two_layer_y_norm, cfg.grid);
    loss = 0.5 * r.delta.array().square();
    Eigen::MatrixXd f(1, T);
    f.row(0) = (*cfg.two_layer_y_norm - r.delta.array()).matrix().transpose();
    write_preds(a, cfg.grid, f);
    auto out = a.text("two_layer.csv");
    out << "t,delta,h_y\n";
    for (int k = 0; k < T; ++k) out << cfg.grid.time(k) << ',' << r.delta[k] << ',' << r.h_y[k] << '\n';
    report["final_h_y"] = r.h_y[T - 1];
  } else {
    const SampleSet& d = *data;
    require(d.n_test() == 0, ErrorKind::InvalidConfig, "two-layer mode uses train samples only");
    const auto r = two_layer_general(g0, d.input_gram(), d.targets(), cfg.grid);
    for (int k = 0; k < T; ++k) loss[k] = 0.5 * r.delta.col(k).squaredNorm();
    Eigen::MatrixXd f = (-r.delta).colwise() + d.targets();
    write_preds(a, cfg.grid, f);
    auto out = a.text("two_layer.csv");
    out << "t,g,y_h_y\n";
    const double yy = d.targets().squaredNorm();
    for (int k = 0; k < T; ++k)
      out << cfg.grid.time(k) << ',' << r.g[k] << ','
          << (yy > 0 ? d.targets().dot(r.h[k] * d.targets()) / yy : 0.0) << '\n';
    report["final_g"] = r.g[T - 1];
  }
  write_grid_loss(a, cfg.grid, loss);
  report["final_loss"] = loss[T - 1];
  return finish(cfg, a, report, 0);
}

RunResult run_perturb(const ExperimentConfig& cfg, const SampleSet& data) {
  Artifacts a(cfg.output_dir);
  std::vector<double> gammas = cfg.perturb_gamma0s;
  std::sort(gammas.begin(), gammas.end());
  json rows = json::array();
  std::vector<double> residuals;
  bool converged = true;
  for (double g0 : gammas) {
    LinearConfig lc = cfg.linear;
    lc.gamma0 = g0;
    const LinearDmftState full = linear_solve(lc, data, cfg.grid);
    converged = converged && full.converged;
    const PerturbativeNtk pert = perturbative_linear_ntk(data.input_gram(), data.targets(), cfg.grid,
                                                         g0, lc.depth, cfg.perturb_quadrature);
    const Kernel kf = full.ntk();
    const double res = relative_frobenius(pert.ntk.values(), kf.values());
    residuals.push_back(res);
    rows.push_back({{"gamma0", g0}, {"residual", res}, {"linear_iterations", full.iterations}});
    if (g0 == gammas.back())
      a.kernel("ntk_perturbative.kern", pert.ntk,
               {{"scheme", "perturbative-gamma0^2"}, {"gamma0", std::to_string(g0)}});
  }
  json ratios = json::array();
  for (size_t i = 1; i < residuals.size(); ++i)
    ratios.push_back({{"gamma0_low", gammas[i - 1]}, {"gamma0_high", gammas[i]},
                      {"ratio", residuals[i] / residuals[i - 1]}});
  json report;
  report["sweep"] = rows;
  report["residual_ratios"] = ratios;
  report["converged"] = converged;
  return finish(cfg, a, report, converged ? 0 : 2);
}

RunResult run_nn(const ExperimentConfig& cfg, const SampleSet& data) {
  Artifacts a(cfg.output_dir);
  const NnRun nn = run_network(cfg, data);
  {
    auto out = a.text("loss.csv");
    out << "step,t,loss\n";
    for (Eigen::Index s = 0; s < nn.step_loss.size(); ++s)
      out << s << ',' << s * nn.eta0 << ',' << nn.step_loss[s] << '\n';
  }
  write_preds(a, cfg.grid, nn.f);
  if (nn.kernels) {
    for (int l = 1; l <= cfg.solver.depth; ++l) {
      a.kernel("phi" + std::to_string(l) + ".kern", nn.kernels->phi[l]);
      a.kernel("g" + std::to_string(l) + ".kern", nn.kernels->g[l]);
    }
    a.kernel("ntk.kern", nn.kernels->ntk);
  }
  json report;
  report["final_loss"] = nn.loss[nn.loss.size() - 1];
  report["eta0"] = nn.eta0;
  return finish(cfg, a, report, 0);
}

RunResult run_compare(const ExperimentConfig& cfg, const SampleSet& data) {
  Artifacts a(cfg.output_dir);
  ExperimentConfig nn_cfg = cfg;
  nn_cfg.nn.log_fields = true;
  const DmftState st = dmft_solve(cfg.solver, data, cfg.grid);
  const NnRun nn = run_network(nn_cfg, data);
  json report;
  write_dmft_state(a, st, report, "dmft_");
  const int L = st.depth();
  json align = json::array();
  for (int l = 1; l <= L; ++l) {
    align.push_back({{"layer", l},
                     {"phi", alignment(st.phi[l], nn.kernels->phi[l])},
                     {"g", alignment(st.g[l], nn.kernels->g[l])}});
    a.kernel("nn_phi" + std::to_string(l) + ".kern", nn.kernels->phi[l]);
    a.kernel("nn_g" + std::to_string(l) + ".kern", nn.kernels->g[l]);
  }
  report["alignments"] = align;
  report["ntk_alignment"] = alignment(st.ntk(), nn.kernels->ntk);
  const int T = cfg.grid.n_steps();
  const double final_gap = std::abs(st.loss[T - 1] - nn.loss[T - 1]) / nn.loss[T - 1];
  report["final_loss_nn"] = nn.loss[T - 1];
  report["final_loss_relative_gap"] = final_gap;
  write_grid_loss(a, cfg.grid, st.loss, &nn.loss, "loss_nn");
  write_preds(a, cfg.grid, st.f.values());
  return finish(cfg, a, report, st.converged ? 0 : 2);
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  std::optional<SampleSet> data;
  if (cfg.data) data = load_data(*cfg.data);
  switch (cfg.mode) {
    case Mode::dmft: return run_dmft(cfg, *data, false);
    case Mode::grad_indep: return run_dmft(cfg, *data, true);
    case Mode::linear: return run_linear(cfg, *data);
    case Mode::static_kernels: return run_static(cfg, *data);
    case Mode::two_layer: return run_two_layer(cfg, data);
    case Mode::perturb: return run_perturb(cfg, *data);
    case Mode::nn_train: return run_nn(cfg, *data);
    case Mode::compare: return run_compare(cfg, *data);
  }
  fail(ErrorKind::InvalidConfig, "unhandled mode");
}

}  // namespace dmft
