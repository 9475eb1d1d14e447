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

#include "plds/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "plds/error.hpp"
#include "plds/gpb2.hpp"
#include "plds/kalman.hpp"
#include "plds/static_em.hpp"

namespace plds {
namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

PosteriorTrack empty_track(int T, int K) {
  PosteriorTrack p;
  p.eta.resize(T);
  p.V.resize(T);
  p.rho = Mat::Zero(T, K);
  p.us.assign(T, 0.0);
  return p;
}

void spread_time(PosteriorTrack& p, double total_us) {
  const double per = p.T() ? total_us / p.T() : 0.0;
  std::fill(p.us.begin(), p.us.end(), per);
}

PosteriorTrack run_static(const StaticParams& theta, std::span<const Vec> y) {
  const int T = static_cast<int>(y.size());
  PosteriorTrack p = empty_track(T, theta.K);
  const InversePredictor pred(theta);
  Vec w;
  for (int t = 0; t < T; ++t) {
    const auto a = Clock::now();
    pred.predict_moments(y[t], p.eta[t], p.V[t], w);
    p.us[t] = micros(a, Clock::now());
    p.rho.row(t) = w.transpose();
  }
  return p;
}

PosteriorTrack run_kalman(const StaticParams& theta0, const DynamicParams& phi0, std::span<const Vec> y) {
  ModelFile single;
  const bool project = theta0.K != 1;
  if (project) single = single_mode_projection(theta0, phi0);
  const StaticParams& theta = project ? single.theta : theta0;
  const DynamicParams& phi = project ? single.phi : phi0;
  require_valid(theta, phi);
  const int T = static_cast<int>(y.size());
  PosteriorTrack p = empty_track(T, theta0.K);
  Vec mean;
  Mat cov;
  for (int t = 0; t < T; ++t) {
    const auto a = Clock::now();
    KalmanStep s = kalman_step(theta, phi, 0, t == 0, mean, cov, y[t], t);
    p.us[t] = micros(a, Clock::now());
    mean = s.filtered_mean;
    cov = s.filtered_cov;
    p.eta[t] = mean;
    p.V[t] = cov;
    p.rho.row(t) = theta0.pi.transpose();
  }
  return p;
}

PosteriorTrack run_gpb2(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y, bool smooth) {
  require_valid(theta, phi);
  const int T = static_cast<int>(y.size());
  const int K = theta.K;
  PosteriorTrack p = empty_track(T, K);
  if (smooth) {
    const auto a = Clock::now();
    const Gpb2FilterResult f = gpb2_filter(theta, phi, y);
    const Gpb2Smoothed s = gpb2_smoother(theta, phi, y, f);
    spread_time(p, micros(a, Clock::now()));
    p.eta = s.mean;
    p.V = s.cov;
    p.rho = s.mode_posterior;
    return p;
  }
  const Gpb2Model model(theta, phi);
  Gpb2Belief b;
  for (int t = 0; t < T; ++t) {
    const auto a = Clock::now();
    b = t == 0 ? gpb2_initial(model, y[0]) : gpb2_step(model, b, y[t]);
    moment_match(b.weight.data(), b.mean.data(), b.cov.data(), K, p.eta[t], p.V[t], 1e-14);
    p.us[t] = micros(a, Clock::now());
    p.rho.row(t) = b.weight.transpose();
  }
  return p;
}

PosteriorTrack run_var_filter(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                              const VemConfig& cfg) {
  const int T = static_cast<int>(y.size());
  PosteriorTrack p = empty_track(T, theta.K);
  VariationalFilter f(theta, phi, cfg);
  for (int t = 0; t < T; ++t) {
    const auto a = Clock::now();
    FilterOutput o = f.push(y[t]);
    p.us[t] = micros(a, Clock::now());
    p.eta[t] = std::move(o.eta);
    p.V[t] = std::move(o.V);
    p.rho.row(t) = o.rho.transpose();
  }
  return p;
}

PosteriorTrack run_var_smoother(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                                VemConfig cfg) {
  cfg.learn = false;
  const int T = static_cast<int>(y.size());
  PosteriorTrack p = empty_track(T, theta.K);
  const auto a = Clock::now();
  VemResult r = run_vem_smoother(theta, phi, y, cfg);
  spread_time(p, micros(a, Clock::now()));
  VariationalPosterior& post = r.posteriors.front();
  p.eta = std::move(post.eta);
  p.V = std::move(post.V);
  p.rho = std::move(post.rho);
  return p;
}

struct Accumulator {
  std::vector<double> abs_errors;
  double sq = 0.0;
  double mode_acc_sum = 0.0;
  int mode_acc_n = 0;
  double us_sum = 0.0;
  int runs = 0;
  bool failed = false;
  std::string failure;
};

}  // namespace

const std::vector<std::string>& method_registry() {
  static const std::vector<std::string> names{"static",     "kalman",    "gpb2-filter",
                                              "gpb2-smoother", "var-filter", "var-smoother"};
  return names;
}

void require_method(const std::string& method) {
  const auto& r = method_registry();
  if (std::find(r.begin(), r.end(), method) != r.end()) return;
  std::string list;
  for (const auto& n : r) list += (list.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::kUnknownMethod, "unknown method \"" + method + "\"; known methods: " + list);
}

PosteriorTrack track(const std::string& method, const StaticParams& theta, const DynamicParams& phi,
                     std::span<const Vec> y, const TrackConfig& config) {
  require_method(method);
  for (const Vec& v : y) {
    if (v.size() != theta.D) {
      throw Error(ErrorCode::kDimensionMismatch, "observation length " + std::to_string(v.size()) +
                                                     " differs from model D=" + std::to_string(theta.D));
    }
  }
  if (y.empty()) throw Error(ErrorCode::kInvalidParameters, "empty sequence");
  if (method == "static") return run_static(theta, y);
  if (method == "kalman") return run_kalman(theta, phi, y);
  if (method == "gpb2-filter") return run_gpb2(theta, phi, y, false);
  if (method == "gpb2-smoother") return run_gpb2(theta, phi, y, true);
  if (method == "var-filter") return run_var_filter(theta, phi, y, config.vem);
  return run_var_smoother(theta, phi, y, config.vem);
}

ModelFile single_mode_projection(const StaticParams& theta, const DynamicParams& phi) {
  const int K = theta.K, D = theta.D, L = theta.L;
  Vec mx = Vec::Zero(L), my = Vec::Zero(D);
  Mat Sxx = Mat::Zero(L, L), Syx = Mat::Zero(D, L), Syy = Mat::Zero(D, D);
  for (int k = 0; k < K; ++k) {
    const double w = theta.pi(k);
    const Vec mk = theta.A[k] * theta.gamma[k] + theta.b[k];
    const Mat Exx = theta.Gamma[k] + theta.gamma[k] * theta.gamma[k].transpose();
    mx += w * theta.gamma[k];
    my += w * mk;
    Sxx += w * Exx;
    Syx += w * (theta.A[k] * Exx + theta.b[k] * theta.gamma[k].transpose());
    Syy += w * (theta.A[k] * theta.Gamma[k] * theta.A[k].transpose() + theta.Sigma[k] + mk * mk.transpose());
  }
  Sxx = symmetrize(Sxx - mx * mx.transpose());
  Syx -= my * mx.transpose();
  Syy = symmetrize(Syy - my * my.transpose());

  ModelFile m;
  StaticParams& t = m.theta;
  t.K = 1;
  t.D = D;
  t.L = L;
  t.sigma_diagonal = false;
  const SpdFactor xf(Sxx, false, "projected state covariance");
  const Mat A = xf.solve(Mat(Syx.transpose())).transpose();
  t.A = {A};
  t.b = {my - A * mx};
  t.Sigma = {make_spd(Syy - A * Syx.transpose())};
  t.pi = Vec::Ones(1);
  t.gamma = {mx};
  t.Gamma = {Sxx};

  DynamicParams& p = m.phi;
  p.K = 1;
  p.L = L;
  Mat C = Mat::Zero(L, L), Q = Mat::Zero(L, L);
  for (int k = 0; k < K; ++k) {
    C += theta.pi(k) * phi.C[k];
    Q += theta.pi(k) * phi.Q[k];
  }
  p.C = {C};
  p.Q = {make_spd(Q)};
  p.tau = Mat::Ones(1, 1);
  return m;
}

MetricsRow evaluate_track(const std::string& method, const PosteriorTrack& tr, const Sequence& truth) {
  MetricsRow row;
  row.method = method;
  if (!truth.has_states()) throw Error(ErrorCode::kMissingLatents, "ground truth lacks x columns");
  const StateErrors e = state_errors(tr.eta, truth.x_true);
  row.mae = e.mae;
  row.std = e.std;
  row.rmse = e.rmse;
  row.mode_acc = std::nan("");
  if (truth.has_modes() && tr.rho.cols() > 0) {
    const int K = static_cast<int>(std::max<Eigen::Index>(tr.rho.cols(),
                                                          *std::max_element(truth.z_true.begin(), truth.z_true.end()) + 1));
    row.mode_acc = mode_accuracy(argmax_rows(tr.rho), truth.z_true, K);
  }
  double us = 0.0;
  for (double u : tr.us) us += u;
  row.us_per_step = tr.us.empty() ? std::nan("") : us / static_cast<double>(tr.us.size());
  return row;
}

CompareResult compare(const CompareConfig& cfg) {
  if (cfg.methods.empty()) throw Error(ErrorCode::kInvalidParameters, "no methods given");
  if (cfg.seeds.empty()) throw Error(ErrorCode::kInvalidParameters, "no seeds given");
  for (const auto& m : cfg.methods) require_method(m);
  SyntheticModel model;
  if (cfg.model) {
    model.theta = cfg.model->theta;
    model.phi = cfg.model->phi;
  } else {
    model = make_synthetic_model(cfg.spec, cfg.model_seed);
  }
  require_valid(model.theta, model.phi);
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  CompareResult res;
  std::map<std::string, Accumulator> acc;
  for (const auto seed : cfg.seeds) {
    const Sequence seq = simulate(model, cfg.spec, cfg.T, seed);
    const PosteriorTrack base = track("static", model.theta, model.phi, seq.y, cfg.track);
    std::vector<std::pair<std::string, PosteriorTrack>> tracks;
    for (const auto& m : cfg.methods) {
      Accumulator& a = acc[m];
      try {
        PosteriorTrack tr = m == "static" ? base : track(m, model.theta, model.phi, seq.y, cfg.track);
        const MetricsRow row = evaluate_track(m, tr, seq);
        const StateErrors e = state_errors(tr.eta, seq.x_true);
        a.abs_errors.insert(a.abs_errors.end(), e.abs_errors.begin(), e.abs_errors.end());
        for (double v : e.abs_errors) a.sq += v * v;
        if (std::isfinite(row.mode_acc)) {
          a.mode_acc_sum += row.mode_acc;
          ++a.mode_acc_n;
        }
        a.us_sum += row.us_per_step;
        ++a.runs;
        tracks.emplace_back(m, std::move(tr));
      } catch (const Error& e) {
        a.failed = true;
        a.failure = std::string(code_name(e.code())) + ": " + e.detail();
      }
    }
    if (!cfg.out_dir.empty()) {
      CsvTable t;
      const int L = model.theta.L;
      t.header.emplace_back("t");
      for (int i = 1; i <= L; ++i) t.header.push_back("truth_" + std::to_string(i));
      for (int i = 1; i <= L; ++i) t.header.push_back("static_" + std::to_string(i));
      for (const auto& [name, tr] : tracks) {
        if (name == "static") continue;
        for (int i = 1; i <= L; ++i) t.header.push_back(name + "_" + std::to_string(i));
      }
      for (int n = 0; n < cfg.T; ++n) {
        std::vector<double> row{static_cast<double>(n + 1)};
        row.insert(row.end(), seq.x_true[n].data(), seq.x_true[n].data() + L);
        row.insert(row.end(), base.eta[n].data(), base.eta[n].data() + L);
        for (const auto& [name, tr] : tracks) {
          if (name != "static") row.insert(row.end(), tr.eta[n].data(), tr.eta[n].data() + L);
        }
        t.rows.push_back(std::move(row));
      }
      const std::string path = (std::filesystem::path(cfg.out_dir) / ("trajectory_seed" + std::to_string(seed) + ".csv")).string();
      write_csv(path, t);
      res.files.push_back(path);
    }
  }

  std::map<std::string, double> us;
  for (const auto& m : cfg.methods) {
    const Accumulator& a = acc[m];
    MetricsRow row;
    row.method = m;
    if (a.failed || a.runs == 0) {
      row.failed = true;
      row.failure = a.failure;
      res.report.rows.push_back(row);
      continue;
    }
    const double n = static_cast<double>(a.abs_errors.size());
    double sum = 0.0;
    for (double v : a.abs_errors) sum += v;
    row.mae = sum / n;
    row.rmse = std::sqrt(a.sq / n);
    row.std = std::sqrt(std::max(0.0, a.sq / n - row.mae * row.mae));
    row.mode_acc = a.mode_acc_n ? a.mode_acc_sum / a.mode_acc_n : std::nan("");
    row.us_per_step = a.us_sum / a.runs;
    us[m] = row.us_per_step;
    res.report.rows.push_back(row);
  }
  res.time_ratio = (us.count("gpb2-filter") && us.count("var-filter") && us["var-filter"] > 0.0)
                       ? us["gpb2-filter"] / us["var-filter"]
                       : std::nan("");
  if (!cfg.out_dir.empty()) {
    const auto dir = std::filesystem::path(cfg.out_dir);
    const std::string csv = (dir / "report.csv").string();
    const std::string txt = (dir / "report.txt").string();
    std::FILE* f = std::fopen(csv.c_str(), "w");
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + csv);
    const std::string body = report_csv(res.report);
    std::fwrite(body.data(), 1, body.size(), f);
    std::fclose(f);
    f = std::fopen(txt.c_str(), "w");
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + txt);
    std::string text = report_text(res.report);
    if (std::isfinite(res.time_ratio)) text += "time ratio gpb2-filter / var-filter: " + format_number(res.time_ratio) + "\n";
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    res.files.push_back(csv);
    res.files.push_back(txt);
  }
  return res;
}

}  // namespace plds
