// Copyright 2026 The plds Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// plds: simulate, fit, track, compare and evaluate switching linear
// dynamical systems from the command line.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "plds/error.hpp"
#include "plds/experiment.hpp"
#include "plds/gpb2.hpp"
#include "plds/io.hpp"
#include "plds/metrics.hpp"
#include "plds/static_em.hpp"
#include "plds/synthetic.hpp"
#include "plds/variational.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace plds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON configuration file");
  app->add_option("--seed", c.seed, "Random seed (overrides the config)");
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "config " + path + ": top level must be an object");
  return j;
}

// Rejects misspelled keys instead of silently ignoring them.
void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::kInvalidParameters, where + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

SyntheticSpec parse_spec(const json& j) {
  check_keys(j,
             {"K", "D", "L", "separation", "obs_noise", "proc_noise", "stay", "prior_scale", "outlier_rate",
              "outlier_scale", "sigma_diagonal"},
             "spec");
  SyntheticSpec s;
  read(j, "K", s.K);
  read(j, "D", s.D);
  read(j, "L", s.L);
  read(j, "separation", s.separation);
  read(j, "obs_noise", s.obs_noise);
  read(j, "proc_noise", s.proc_noise);
  read(j, "stay", s.stay);
  read(j, "prior_scale", s.prior_scale);
  read(j, "outlier_rate", s.outlier_rate);
  read(j, "outlier_scale", s.outlier_scale);
  read(j, "sigma_diagonal", s.sigma_diagonal);
  return s;
}

VemConfig parse_vem(const json& j) {
  check_keys(j,
             {"max_em_iters", "inner_e_sweeps", "tol_elbo_rel", "tol_eta", "update_C", "window", "rho_floor",
              "jitter", "learn"},
             "vem");
  VemConfig c;
  read(j, "max_em_iters", c.max_em_iters);
  read(j, "inner_e_sweeps", c.inner_e_sweeps);
  read(j, "tol_elbo_rel", c.tol_elbo_rel);
  read(j, "tol_eta", c.tol_eta);
  read(j, "update_C", c.update_C);
  read(j, "window", c.window);
  read(j, "rho_floor", c.rho_floor);
  read(j, "jitter", c.jitter);
  read(j, "learn", c.learn);
  if (c.max_em_iters < 1 || c.inner_e_sweeps < 1 || c.window < 1) {
    throw Error(ErrorCode::kInvalidParameters, "vem: max_em_iters, inner_e_sweeps and window must be positive");
  }
  return c;
}

Gpb2LearnConfig parse_gpb2(const json& j) {
  check_keys(j, {"max_iters", "tol_rel", "update_C"}, "gpb2");
  Gpb2LearnConfig c;
  read(j, "max_iters", c.max_iters);
  read(j, "tol_rel", c.tol_rel);
  read(j, "update_C", c.update_C);
  if (c.max_iters < 1) throw Error(ErrorCode::kInvalidParameters, "gpb2: max_iters must be positive");
  return c;
}

StaticFitConfig parse_static(const json& j) {
  check_keys(j,
             {"K", "k_range", "max_iters", "tol", "restarts", "sigma_diagonal", "sigma_floor", "holdout_fraction",
              "criterion"},
             "static fit config");
  StaticFitConfig c;
  read(j, "max_iters", c.max_iters);
  read(j, "tol", c.tol);
  read(j, "restarts", c.restarts);
  read(j, "sigma_diagonal", c.sigma_diagonal);
  read(j, "sigma_floor", c.sigma_floor);
  read(j, "holdout_fraction", c.holdout_fraction);
  read(j, "criterion", c.criterion);
  if (c.criterion != "bic" && c.criterion != "mae") {
    throw Error(ErrorCode::kInvalidParameters, "criterion must be \"bic\" or \"mae\"");
  }
  if (c.max_iters < 1 || c.restarts < 1) {
    throw Error(ErrorCode::kInvalidParameters, "max_iters and restarts must be positive");
  }
  return c;
}

fs::path out_dir(const Common& c) {
  const fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + p.string() + ": " + ec.message());
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + p.string());
}

void check_sequences(const StaticParams& theta, const std::vector<Sequence>& seqs,
                     const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].T() == 0) throw Error(ErrorCode::kInvalidParameters, names[i] + ": empty sequence");
    if (seqs[i].y.front().size() != theta.D) {
      throw Error(ErrorCode::kDimensionMismatch, names[i] + ": observation length " +
                                                     std::to_string(seqs[i].y.front().size()) +
                                                     " differs from model D=" + std::to_string(theta.D));
    }
  }
}

void warn_starved(const std::vector<int>& starved) {
  for (int z : starved) std::cerr << "warning: STARVED_COMPONENT " << z + 1 << "\n";
}

// ---- simulate ----

struct SimulateArgs {
  Common common;
};

int cmd_simulate(const SimulateArgs& a) {
  const json cfg = load_config(a.common.config_path);
  check_keys(cfg, {"spec", "model", "T", "sequences", "training_pairs"}, "simulate config");
  const SyntheticSpec spec = parse_spec(cfg.value("spec", json::object()));
  for (const std::string& w : check_spec(spec)) std::cerr << "warning: " << w << "\n";
  int T = 200, count = 1, pairs = 0;
  read(cfg, "T", T);
  read(cfg, "sequences", count);
  read(cfg, "training_pairs", pairs);
  if (T < 1 || count < 1 || pairs < 0) {
    throw Error(ErrorCode::kInvalidParameters, "T and sequences must be positive, training_pairs nonnegative");
  }
  const std::uint64_t seed = a.common.seed.value_or(0);
  SyntheticModel model;
  if (cfg.contains("model")) {
    const ModelFile m = read_model(cfg.at("model").get<std::string>());
    require_valid(m.theta, m.phi);
    model = {m.theta, m.phi};
  } else {
    model = make_synthetic_model(spec, seed);
  }
  const fs::path dir = out_dir(a.common);
  const fs::path model_path = dir / "model.json";
  write_model(model_path.string(), model.theta, model.phi);
  std::cout << model_path.string() << "\n";
  const int width = std::max<int>(3, static_cast<int>(std::to_string(count).size()));
  for (int i = 0; i < count; ++i) {
    std::string idx = std::to_string(i + 1);
    idx.insert(0, width - idx.size(), '0');
    const fs::path p = dir / ("seq_" + idx + ".csv");
    write_sequence(p.string(), simulate(model, spec, T, seed + 1 + static_cast<std::uint64_t>(i)));
    std::cout << p.string() << "\n";
  }
  if (pairs > 0) {
    const fs::path p = dir / "train.csv";
    write_training_set(p.string(), sample_training_set(model.theta, pairs, seed + 1000003));
    std::cout << p.string() << "\n";
  }
  return kExitOk;
}

// ---- fit ----

struct FitArgs {
  Common common;
  std::string data;
  std::string model;
  std::vector<std::string> sequences;
};

int fit_static_cmd(const FitArgs& a) {
  const json cfg = load_config(a.common.config_path);
  StaticFitConfig sc = parse_static(cfg);
  sc.seed = a.common.seed.value_or(0);
  const TrainingSet data = read_training_set(a.data);
  const fs::path dir = out_dir(a.common);
  int K = 2;
  read(cfg, "K", K);
  if (cfg.contains("k_range")) {
    const SelectKResult sel = select_k(data, cfg.at("k_range").get<std::vector<int>>(), sc);
    CsvTable t;
    t.header = {"K", "log_likelihood", "parameters", "bic", "mae"};
    for (const SelectKRow& r : sel.table) {
      t.rows.push_back({double(r.K), r.log_likelihood, double(r.parameters), r.bic, r.mae});
    }
    write_csv((dir / "select_k.csv").string(), t);
    std::cout << "chosen K = " << sel.chosen_K << " (" << sc.criterion << ")\n";
    K = sel.chosen_K;
  }
  const StaticFitResult r = fit_static(data, K, sc);
  if (!r.converged) std::cerr << "warning: CONVERGENCE_NOT_REACHED\n";
  for (int it : r.reinitialized) std::cerr << "warning: component reinitialized at iteration " << it + 1 << "\n";
  write_model((dir / "model.json").string(), r.theta, initial_dynamics(r.theta));
  CsvTable t;
  t.header = {"iter", "log_likelihood"};
  for (std::size_t i = 0; i < r.log_likelihood.size(); ++i) t.rows.push_back({double(i + 1), r.log_likelihood[i]});
  write_csv((dir / "trace.csv").string(), t);
  std::cout << (dir / "model.json").string() << "\n" << (dir / "trace.csv").string() << "\n";
  return kExitOk;
}

int fit_dynamic_cmd(const FitArgs& a, bool variational) {
  const json cfg = load_config(a.common.config_path);
  check_keys(cfg, {"vem", "gpb2", "init"}, "dynamic fit config");
  const ModelFile m = read_model(a.model);
  std::vector<Sequence> seqs;
  for (const std::string& p : a.sequences) seqs.push_back(read_sequence(p));
  check_sequences(m.theta, seqs, a.sequences);
  std::vector<std::vector<Vec>> ys;
  for (const Sequence& s : seqs) ys.push_back(s.y);
  const std::string init = cfg.value("init", std::string("default"));
  if (init != "default" && init != "model") {
    throw Error(ErrorCode::kInvalidParameters, "init must be \"default\" or \"model\"");
  }
  const DynamicParams phi0 = init == "model" ? m.phi : initial_dynamics(m.theta);
  require_valid(m.theta, phi0);
  const fs::path dir = out_dir(a.common);
  CsvTable t;
  DynamicParams phi;
  if (variational) {
    const VemConfig vc = parse_vem(cfg.value("vem", json::object()));
    const VemResult r = run_vem(m.theta, phi0, ys, vc);
    if (!r.converged) std::cerr << "warning: CONVERGENCE_NOT_REACHED\n";
    warn_starved(r.starved);
    phi = r.phi;
    t.header = {"iter", "elbo", "elbo_after_e", "inner_sweeps"};
    for (const VemIteration& it : r.trace) {
      t.rows.push_back({double(it.iter), it.elbo_after_m, it.elbo_after_e, double(it.inner_sweeps)});
    }
  } else {
    const Gpb2LearnConfig gc = parse_gpb2(cfg.value("gpb2", json::object()));
    const Gpb2LearnResult r = gpb2_learn(m.theta, phi0, ys, gc);
    if (!r.converged) std::cerr << "warning: CONVERGENCE_NOT_REACHED\n";
    warn_starved(r.starved);
    phi = r.phi;
    t.header = {"iter", "log_likelihood"};
    for (std::size_t i = 0; i < r.trace.size(); ++i) t.rows.push_back({double(i + 1), r.trace[i]});
  }
  write_model((dir / "model.json").string(), m.theta, phi);
  write_csv((dir / "trace.csv").string(), t);
  std::cout << (dir / "model.json").string() << "\n" << (dir / "trace.csv").string() << "\n";
  return kExitOk;
}

// ---- track ----

struct TrackArgs {
  Common common;
  std::string method;
  std::string model;
  std::string sequence;
};

TrackConfig parse_track(const json& cfg) {
  check_keys(cfg, {"vem"}, "track config");
  TrackConfig tc;
  tc.vem = parse_vem(cfg.value("vem", json::object()));
  return tc;
}

int cmd_track(const TrackArgs& a) {
  require_method(a.method);
  const TrackConfig tc = parse_track(load_config(a.common.config_path));
  const ModelFile m = read_model(a.model);
  require_valid(m.theta, m.phi);
  const Sequence s = read_sequence(a.sequence);
  check_sequences(m.theta, {s}, {a.sequence});
  const PosteriorTrack tr = track(a.method, m.theta, m.phi, s.y, tc);
  const fs::path p = out_dir(a.common) / ("track_" + a.method + ".csv");
  write_posterior(p.string(), tr);
  std::cout << p.string() << "\n";
  return kExitOk;
}

// ---- compare ----

int cmd_compare(const Common& c) {
  const json cfg = load_config(c.config_path);
  check_keys(cfg, {"spec", "model", "model_seed", "methods", "seeds", "T", "vem"}, "compare config");
  CompareConfig cc;
  cc.spec = parse_spec(cfg.value("spec", json::object()));
  for (const std::string& w : check_spec(cc.spec)) std::cerr << "warning: " << w << "\n";
  if (cfg.contains("model")) {
    ModelFile m = read_model(cfg.at("model").get<std::string>());
    require_valid(m.theta, m.phi);
    cc.model = std::move(m);
  }
  read(cfg, "model_seed", cc.model_seed);
  if (c.seed) cc.model_seed = *c.seed;
  cc.methods = cfg.value("methods", method_registry());
  for (const std::string& m : cc.methods) require_method(m);
  cc.seeds = cfg.value("seeds", std::vector<std::uint64_t>{});
  if (cc.seeds.empty()) throw Error(ErrorCode::kInvalidParameters, "seeds must be nonempty");
  read(cfg, "T", cc.T);
  if (cc.T < 1) throw Error(ErrorCode::kInvalidParameters, "T must be positive");
  cc.track.vem = parse_vem(cfg.value("vem", json::object()));
  const fs::path dir = out_dir(c);
  cc.out_dir = dir.string();
  const CompareResult r = compare(cc);
  write_file(dir / "report.csv", report_csv(r.report));
  write_file(dir / "report.txt", report_text(r.report));
  std::cout << report_text(r.report);
  if (std::isfinite(r.time_ratio)) {
    std::cout << "time ratio gpb2-filter / var-filter: " << format_number(r.time_ratio) << "\n";
  }
  for (const MetricsRow& row : r.report.rows) {
    if (row.failed) std::cerr << "warning: " << row.method << " failed: " << row.failure << "\n";
  }
  return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  Common common;
  std::string estimates;
  std::string truth;
  std::string method = "estimate";
};

int cmd_evaluate(const EvaluateArgs& a) {
  const PosteriorTrack est = read_posterior(a.estimates);
  const Sequence truth = read_sequence(a.truth);
  MetricsReport rep;
  rep.rows.push_back(evaluate_track(a.method, est, truth));
  const StateErrors e = state_errors(est.eta, truth.x_true);
  const fs::path dir = out_dir(a.common);
  write_file(dir / "report.csv", report_csv(rep));
  CsvTable per_dim;
  per_dim.header = {"dim", "mae", "std"};
  for (Eigen::Index i = 0; i < e.mae_per_dim.size(); ++i) {
    per_dim.rows.push_back({double(i + 1), e.mae_per_dim(i), e.std_per_dim(i)});
  }
  write_csv((dir / "per_dim.csv").string(), per_dim);
  std::cout << report_text(rep);
  return kExitOk;
}

int exit_code(const Error& e) {
  if (is_numerical(e.code())) return kExitNumerical;
  if (e.code() == ErrorCode::kIo) return kExitFailure;
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switching linear dynamical systems: simulation, learning and tracking"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Generate a model and synthetic sequences");
  add_common(simulate_cmd, sim.common);

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Learn model parameters");
  fit_cmd->require_subcommand(1);
  CLI::App* fit_static_sub = fit_cmd->add_subcommand("static", "Mixture of regressions from paired (x, y) CSV");
  add_common(fit_static_sub, fit.common);
  fit_static_sub->add_option("--data", fit.data, "Paired training CSV")->required();
  CLI::App* fit_var_sub = fit_cmd->add_subcommand("dynamic-var", "Dynamics by variational EM");
  CLI::App* fit_gpb2_sub = fit_cmd->add_subcommand("dynamic-gpb2", "Dynamics by GPB2 EM");
  for (CLI::App* sub : {fit_var_sub, fit_gpb2_sub}) {
    add_common(sub, fit.common);
    sub->add_option("--model", fit.model, "Model JSON holding the static parameters")->required();
    sub->add_option("--sequences", fit.sequences, "Sequence CSV files")->required();
  }

  TrackArgs tr;
  CLI::App* track_cmd = app.add_subcommand("track", "Estimate states for one sequence");
  add_common(track_cmd, tr.common);
  track_cmd->add_option("--method", tr.method, "One of: static, kalman, gpb2-filter, gpb2-smoother, var-filter, var-smoother")
      ->required();
  track_cmd->add_option("--model", tr.model, "Model JSON")->required();
  track_cmd->add_option("--sequence", tr.sequence, "Sequence CSV")->required();

  Common cmp;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Run several methods over simulated seeds");
  add_common(compare_cmd, cmp);

  EvaluateArgs ev;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score a posterior CSV against ground truth");
  add_common(evaluate_cmd, ev.common);
  evaluate_cmd->add_option("--estimates", ev.estimates, "Posterior CSV")->required();
  evaluate_cmd->add_option("--truth", ev.truth, "Sequence CSV with ground truth")->required();
  evaluate_cmd->add_option("--method", ev.method, "Row label in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*fit_static_sub) return fit_static_cmd(fit);
    if (*fit_var_sub) return fit_dynamic_cmd(fit, true);
    if (*fit_gpb2_sub) return fit_dynamic_cmd(fit, false);
    if (*track_cmd) return cmd_track(tr);
    if (*compare_cmd) return cmd_compare(cmp);
    if (*evaluate_cmd) return cmd_evaluate(ev);
  } catch (const Error& e) {
    std::cerr << "error: " << code_name(e.code()) << ": " << e.detail() << "\n";
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: PARSE_ERROR: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
