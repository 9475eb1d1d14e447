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

#include "plds/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "plds/error.hpp"
#include "plds/static_em.hpp"
#include "variational_internal.hpp"

namespace plds {
namespace detail {

void score_row(const StaticParams& theta, const DynamicParams& phi, const ModelCaches& c, int t, const Vec& y,
               const Vec& eta, const Mat& V, const Vec* eta_prev, const Mat* V_prev, const Mat* W,
               double* out) {
  for (int z = 0; z < theta.K; ++z) {
    double s = log_gauss(y, theta.A[z] * eta + theta.b[z], c.obs.sigma[z]) -
               0.5 * (c.obs.AtSiA[z].cwiseProduct(V)).sum();
    if (t == 0) {
      s += log_gauss(eta, theta.gamma[z], c.obs.Gamma[z]) - 0.5 * (c.obs.Gamma_inv[z].cwiseProduct(V)).sum();
    } else {
      s += log_gauss(eta, phi.C[z] * *eta_prev, c.dyn.Q[z]) -
           0.5 * (c.dyn.CtQiC[z].cwiseProduct(*V_prev)).sum() - 0.5 * (c.dyn.Q_inv[z].cwiseProduct(V)).sum() +
           (c.dyn.QiC[z] * *W).trace();
    }
    out[z] = s;
  }
}

Vec floored(const Vec& rho, double floor) {
  Vec r = rho.cwiseMax(floor);
  return r / r.sum();
}

NodeAggregates node_aggregates(const StaticParams& theta, const ModelCaches& c, int t, const Vec& y,
                               const Vec& rho) {
  const int L = theta.L;
  NodeAggregates a;
  a.unary_precision = Mat::Zero(L, L);
  a.unary_shift = Vec::Zero(L);
  if (t > 0) {
    a.Qbar_inv = Mat::Zero(L, L);
    a.Rbar = Mat::Zero(L, L);
    a.Sbar_inv = Mat::Zero(L, L);
  }
  for (int z = 0; z < theta.K; ++z) {
    const double r = rho(z);
    a.unary_precision += r * c.obs.AtSiA[z];
    a.unary_shift += r * (c.obs.AtSi[z] * (y - theta.b[z]));
    if (t == 0) {
      a.unary_precision += r * c.obs.Gamma_inv[z];
      a.unary_shift += r * (c.obs.Gamma_inv[z] * theta.gamma[z]);
    } else {
      a.Qbar_inv += r * c.dyn.Q_inv[z];
      a.Rbar += r * c.dyn.QiC[z];
      a.Sbar_inv += r * c.dyn.CtQiC[z];
    }
  }
  return a;
}

}  // namespace detail

namespace {

using detail::ModelCaches;

void check_lengths(std::span<const Vec> y, std::size_t n, const char* what) {
  if (n != y.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::string(what) + " has " + std::to_string(n) + " entries, expected " + std::to_string(y.size()));
  }
}

double gaussian_entropy(const Mat& cov, const std::string& what) {
  const SpdFactor f(cov, false, what);
  return 0.5 * (static_cast<double>(cov.rows()) * (1.0 + kLog2Pi) + f.log_det());
}

Vec log_pi(const StaticParams& theta) { return theta.pi.array().log().matrix(); }

double max_abs_change(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) m = std::max(m, (a[t] - b[t]).cwiseAbs().maxCoeff());
  return m;
}

void apply_ex(VariationalPosterior& post, EXResult&& ex) {
  post.eta = std::move(ex.eta);
  post.V = std::move(ex.V);
  post.W = std::move(ex.W);
  post.f_eta = std::move(ex.f_eta);
  post.f_V = std::move(ex.f_V);
  post.b_precision = std::move(ex.b_precision);
  post.b_shift = std::move(ex.b_shift);
}

void apply_ez(VariationalPosterior& post, EZResult&& ez) {
  post.rho = std::move(ez.rho);
  post.rho_joint = std::move(ez.rho_joint);
  post.log_scores = std::move(ez.log_scores);
}

}  // namespace

Mat variational_log_scores(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                           std::span<const Vec> eta, std::span<const Mat> V, std::span<const Mat> W) {
  check_lengths(y, eta.size(), "eta");
  check_lengths(y, V.size(), "V");
  check_lengths(y, W.size(), "W");
  const ModelCaches c(theta, phi);
  const int T = static_cast<int>(y.size());
  Mat scores(T, theta.K);
  Vec row(theta.K);
  for (int t = 0; t < T; ++t) {
    if (t == 0) {
      detail::score_row(theta, phi, c, 0, y[0], eta[0], V[0], nullptr, nullptr, nullptr, row.data());
    } else {
      detail::score_row(theta, phi, c, t, y[t], eta[t], V[t], &eta[t - 1], &V[t - 1], &W[t], row.data());
    }
    scores.row(t) = row.transpose();
  }
  return scores;
}

EZResult e_z_step(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                  std::span<const Vec> eta, std::span<const Mat> V, std::span<const Mat> W) {
  EZResult out;
  out.log_scores = variational_log_scores(theta, phi, y, eta, V, W);
  const DynamicsCache dyn(phi);
  HmmPosterior hp = hmm_forward_backward(out.log_scores, log_pi(theta), dyn.log_tau);
  out.rho = std::move(hp.marginals);
  out.rho_joint = std::move(hp.pairwise);
  out.log_normalizer = hp.log_normalizer;
  return out;
}

EZAggregates build_aggregates(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                              const Mat& rho, double rho_floor) {
  if (rho.rows() != static_cast<Eigen::Index>(y.size()) || rho.cols() != theta.K) {
    throw Error(ErrorCode::kDimensionMismatch, "responsibilities must be T x K");
  }
  const ModelCaches c(theta, phi);
  const int T = static_cast<int>(y.size());
  const int L = theta.L;
  EZAggregates ag;
  ag.iv_precision.resize(T);
  ag.iv_shift.resize(T);
  ag.Qbar_inv.resize(T);
  ag.Rbar.resize(T);
  ag.Sbar_inv.resize(T);
  ag.gamma_precision = Mat::Zero(L, L);
  ag.gamma_shift = Vec::Zero(L);
  for (int t = 0; t < T; ++t) {
    const Vec r = detail::floored(rho.row(t).transpose(), rho_floor);
    Mat P = Mat::Zero(L, L);
    Vec h = Vec::Zero(L);
    for (int z = 0; z < theta.K; ++z) {
      P += r(z) * c.obs.AtSiA[z];
      h += r(z) * (c.obs.AtSi[z] * (y[t] - theta.b[z]));
      if (t == 0) {
        ag.gamma_precision += r(z) * c.obs.Gamma_inv[z];
        ag.gamma_shift += r(z) * (c.obs.Gamma_inv[z] * theta.gamma[z]);
      }
    }
    ag.iv_precision[t] = std::move(P);
    ag.iv_shift[t] = std::move(h);
    if (t > 0) {
      const detail::NodeAggregates na = detail::node_aggregates(theta, c, t, y[t], r);
      ag.Qbar_inv[t] = na.Qbar_inv;
      ag.Rbar[t] = na.Rbar;
      ag.Sbar_inv[t] = na.Sbar_inv;
    }
  }
  return ag;
}

ChainSolution solve_chain(const ChainProblem& p, int time_offset) {
  const int n = static_cast<int>(p.unary_precision.size());
  ChainSolution s;
  if (n == 0) return s;
  const int L = static_cast<int>(p.unary_precision[0].rows());
  s.f_precision.resize(n);
  s.f_shift.resize(n);
  s.b_precision.resize(n);
  s.b_shift.resize(n);
  s.Omega_inv.resize(n);
  s.eta.resize(n);
  s.V.resize(n);
  s.W.resize(n);
  std::vector<SpdFactor> M(n);
  std::vector<bool> linked(n, false);

  auto when = [&](int u) { return " at t=" + std::to_string(u + time_offset + 1); };

  for (int u = 0; u < n; ++u) {
    const bool has_link = u > 0 || p.has_incoming;
    if (!has_link) {
      s.f_precision[u] = p.unary_precision[u];
      s.f_shift[u] = p.unary_shift[u];
      continue;
    }
    linked[u] = true;
    const Mat& prevP = u > 0 ? s.f_precision[u - 1] : p.in_precision;
    const Vec& prevh = u > 0 ? s.f_shift[u - 1] : p.in_shift;
    M[u] = SpdFactor(symmetrize(p.Sbar_inv[u] + prevP), false, "Sbar_inv + forward precision" + when(u));
    const Mat& R = p.Rbar[u];
    s.f_precision[u] = symmetrize(p.unary_precision[u] + p.Qbar_inv[u] - R * M[u].solve(Mat(R.transpose())));
    s.f_shift[u] = p.unary_shift[u] + R * M[u].solve(prevh);
  }

  s.b_precision[n - 1] = Mat::Zero(L, L);
  s.b_shift[n - 1] = Vec::Zero(L);
  for (int u = n - 1; u >= 0; --u) {
    if (linked[u]) s.Omega_inv[u] = symmetrize(p.unary_precision[u] + p.Qbar_inv[u] + s.b_precision[u]);
    if (u == 0) break;
    const SpdFactor omega(s.Omega_inv[u], false, "Omega_inv" + when(u));
    const Mat& R = p.Rbar[u];
    s.b_precision[u - 1] = symmetrize(p.Sbar_inv[u] - R.transpose() * omega.solve(R));
    s.b_shift[u - 1] = R.transpose() * omega.solve(Vec(p.unary_shift[u] + s.b_shift[u]));
  }

  for (int u = 0; u < n; ++u) {
    const SpdFactor post(symmetrize(s.f_precision[u] + s.b_precision[u]), false, "posterior precision" + when(u));
    s.V[u] = symmetrize(post.inverse());
    s.eta[u] = post.solve(Vec(s.f_shift[u] + s.b_shift[u]));
    if (linked[u]) s.W[u] = M[u].solve(Mat(p.Rbar[u].transpose() * s.V[u]));
  }
  return s;
}

EXResult e_x_step(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y, const Mat& rho,
                  double rho_floor) {
  EXResult out;
  out.aggregates = build_aggregates(theta, phi, y, rho, rho_floor);
  EZAggregates& ag = out.aggregates;
  const int T = ag.T();

  ChainProblem p;
  p.unary_precision = ag.iv_precision;
  p.unary_shift = ag.iv_shift;
  if (T > 0) {
    p.unary_precision[0] += ag.gamma_precision;
    p.unary_shift[0] += ag.gamma_shift;
  }
  p.Qbar_inv = ag.Qbar_inv;
  p.Rbar = ag.Rbar;
  p.Sbar_inv = ag.Sbar_inv;
  ChainSolution s = solve_chain(p);

  ag.Omega_inv = s.Omega_inv;
  out.eta = std::move(s.eta);
  out.V = std::move(s.V);
  out.W = std::move(s.W);
  out.f_eta.resize(T);
  out.f_V.resize(T);
  for (int t = 0; t < T; ++t) {
    const SpdFactor f(s.f_precision[t], false, "forward precision at t=" + std::to_string(t + 1));
    out.f_V[t] = symmetrize(f.inverse());
    out.f_eta[t] = f.solve(s.f_shift[t]);
  }
  out.b_precision = std::move(s.b_precision);
  out.b_shift = std::move(s.b_shift);
  return out;
}

TransitionStats variational_stats(const VariationalPosterior& post) {
  TransitionStats st = TransitionStats::zeros(post.K, post.L);
  for (int t = 1; t < post.T; ++t) {
    const Mat cur = post.V[t] + post.eta[t] * post.eta[t].transpose();
    const Mat prev = post.V[t - 1] + post.eta[t - 1] * post.eta[t - 1].transpose();
    const Mat cross = post.W[t].transpose() + post.eta[t] * post.eta[t - 1].transpose();
    for (int k = 0; k < post.K; ++k) {
      const double r = post.rho(t, k);
      st.weight(k) += r;
      st.S_cur[k] += r * cur;
      st.S_prev[k] += r * prev;
      st.S_cross[k] += r * cross;
    }
    st.transitions += post.rho_joint[t].transpose();
  }
  return st;
}

MStepResult m_step(const VariationalPosterior& post, const DynamicParams& previous, const MStepConfig& config) {
  return m_step(variational_stats(post), previous, config);
}

double elbo(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
            const VariationalPosterior& post) {
  const Mat scores = variational_log_scores(theta, phi, y, post.eta, post.V, post.W);
  const int T = post.T;
  const int K = post.K;
  const int L = post.L;
  auto xlogy = [](double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; };

  double e = (post.rho.array() * scores.array()).sum();
  for (int k = 0; k < K; ++k) e += xlogy(post.rho(0, k), theta.pi(k));
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) e += xlogy(post.rho_joint[t](j, k), phi.tau(k, j));
    }
  }

  double hz = 0.0;
  for (int k = 0; k < K; ++k) hz -= xlogy(post.rho(0, k), post.rho(0, k));
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < K; ++j) {
      const double from = post.rho_joint[t].row(j).sum();
      for (int k = 0; k < K; ++k) {
        const double p = post.rho_joint[t](j, k);
        if (p > 0.0) hz -= p * std::log(p / from);
      }
    }
  }

  double hx = gaussian_entropy(post.V[0], "V at t=1");
  for (int t = 1; t < T; ++t) {
    Mat pair(2 * L, 2 * L);
    pair << post.V[t - 1], post.W[t], post.W[t].transpose(), post.V[t];
    hx += gaussian_entropy(pair, "pairwise covariance at t=" + std::to_string(t + 1)) -
          gaussian_entropy(post.V[t - 1], "V at t=" + std::to_string(t));
  }
  return e + hz + hx;
}

DynamicParams initial_dynamics(const StaticParams& theta) {
  const int K = theta.K;
  const int L = theta.L;
  DynamicParams phi;
  phi.K = K;
  phi.L = L;
  phi.C.assign(K, Mat::Identity(L, L));
  phi.Q.assign(K, Mat::Identity(L, L));
  phi.tau = Mat::Zero(K, K);
  std::vector<double> logdet(K);
  for (int k = 0; k < K; ++k) logdet[k] = SpdFactor(theta.Gamma[k], false, "Gamma").log_det();
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) {
      double d = 0.0;
      if (i != j) {
        const SpdFactor avg(0.5 * (theta.Gamma[i] + theta.Gamma[j]), false, "average Gamma");
        d = 0.125 * avg.quad(theta.gamma[i] - theta.gamma[j]) + 0.5 * (avg.log_det() - 0.5 * (logdet[i] + logdet[j]));
      }
      phi.tau(i, j) = std::exp(-d);
    }
    phi.tau.col(j) /= phi.tau.col(j).sum();
  }
  return phi;
}

VariationalPosterior initialize_posterior(const StaticParams& theta, std::span<const Vec> y) {
  const int T = static_cast<int>(y.size());
  VariationalPosterior post;
  post.T = T;
  post.K = theta.K;
  post.L = theta.L;
  post.rho = Mat::Zero(T, theta.K);
  post.eta.resize(T);
  post.V.resize(T);
  post.W.resize(T);
  post.rho_joint.resize(T);
  const InversePredictor pred(theta);
  Vec w;
  for (int t = 0; t < T; ++t) {
    pred.predict_moments(y[t], post.eta[t], post.V[t], w);
    post.V[t] = make_spd(post.V[t]);
    post.rho.row(t) = w.transpose();
    if (t > 0) {
      post.W[t] = Mat::Zero(theta.L, theta.L);
      post.rho_joint[t] = post.rho.row(t - 1).transpose() * post.rho.row(t);
    }
  }
  return post;
}

void e_sweep(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
             VariationalPosterior& post, const VemConfig& config) {
  apply_ez(post, e_z_step(theta, phi, y, post.eta, post.V, post.W));
  apply_ex(post, e_x_step(theta, phi, y, post.rho, config.rho_floor));
}

VemResult run_vem_smoother(const StaticParams& theta, const DynamicParams& phi0, std::span<const Vec> y,
                           const VemConfig& config) {
  const std::vector<std::vector<Vec>> seqs{std::vector<Vec>(y.begin(), y.end())};
  return run_vem(theta, phi0, seqs, config);
}

VemResult run_vem(const StaticParams& theta, const DynamicParams& phi0,
                  std::span<const std::vector<Vec>> sequences, const VemConfig& config) {
  require_valid(theta, phi0);
  if (sequences.empty()) throw Error(ErrorCode::kInvalidParameters, "no sequences given");
  for (const auto& s : sequences) {
    if (s.empty()) throw Error(ErrorCode::kInvalidParameters, "empty sequence");
    for (const Vec& v : s) {
      if (v.size() != theta.D) throw Error(ErrorCode::kDimensionMismatch, "observation length differs from D");
    }
  }
  const std::size_t S = sequences.size();
  VemResult res;
  res.phi = phi0;
  res.posteriors.reserve(S);
  for (const auto& s : sequences) res.posteriors.push_back(initialize_posterior(theta, s));

  auto total_elbo = [&]() {
    double e = 0.0;
    for (std::size_t i = 0; i < S; ++i) e += elbo(theta, res.phi, sequences[i], res.posteriors[i]);
    return e;
  };

  std::set<int> starved;
  double previous = -std::numeric_limits<double>::infinity();
  const MStepConfig mcfg{config.update_C, 1e-8};
  for (int iter = 0; iter < config.max_em_iters; ++iter) {
    VemIteration it;
    it.iter = iter + 1;
    for (int sweep = 0; sweep < std::max(1, config.inner_e_sweeps); ++sweep) {
      std::vector<std::vector<Vec>> old_eta(S);
      for (std::size_t i = 0; i < S; ++i) {
        old_eta[i] = res.posteriors[i].eta;
        apply_ez(res.posteriors[i], e_z_step(theta, res.phi, sequences[i], res.posteriors[i].eta,
                                              res.posteriors[i].V, res.posteriors[i].W));
      }
      if (config.trace_steps) res.step_elbos.push_back(total_elbo());
      double change = 0.0;
      for (std::size_t i = 0; i < S; ++i) {
        apply_ex(res.posteriors[i], e_x_step(theta, res.phi, sequences[i], res.posteriors[i].rho, config.rho_floor));
        change = std::max(change, max_abs_change(old_eta[i], res.posteriors[i].eta));
      }
      if (config.trace_steps) res.step_elbos.push_back(total_elbo());
      it.inner_sweeps = sweep + 1;
      if (change < config.tol_eta) break;
    }
    for (std::size_t i = 0; i < S; ++i) {
      res.posteriors[i].elbo_trace.push_back(elbo(theta, res.phi, sequences[i], res.posteriors[i]));
    }
    it.elbo_after_e = total_elbo();
    it.elbo_after_m = it.elbo_after_e;
    if (config.learn) {
      TransitionStats st = TransitionStats::zeros(theta.K, theta.L);
      for (const auto& p : res.posteriors) st += variational_stats(p);
      MStepResult m = m_step(st, res.phi, mcfg);
      res.phi = std::move(m.phi);
      starved.insert(m.starved.begin(), m.starved.end());
      it.elbo_after_m = total_elbo();
      if (config.trace_steps) res.step_elbos.push_back(it.elbo_after_m);
    }
    res.trace.push_back(it);
    const double current = it.elbo_after_m;
    if (std::isfinite(previous) &&
        std::abs(current - previous) <= config.tol_elbo_rel * std::max(1.0, std::abs(previous))) {
      res.converged = true;
      break;
    }
    previous = current;
  }
  res.starved.assign(starved.begin(), starved.end());
  return res;
}

}  // namespace plds
