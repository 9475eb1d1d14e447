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

#include "plds/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "plds/error.hpp"

namespace plds {
namespace {

std::string idx(const char* name, int k) { return std::string(name) + "[" + std::to_string(k + 1) + "]"; }

void check_spd(std::vector<Violation>& out, const Mat& m, int rows, const std::string& what,
               const char* code) {
  if (m.rows() != rows || m.cols() != rows) {
    out.push_back({"SHAPE_MISMATCH", what + " has the wrong shape"});
    return;
  }
  if (!m.allFinite()) {
    out.push_back({"NONFINITE", what + " has non-finite entries"});
    return;
  }
  if (!is_spd(m, 0.0)) out.push_back({code, what + " is not symmetric positive definite"});
}

void check_static(std::vector<Violation>& out, const StaticParams& th) {
  if (th.K < 1 || th.D < 1 || th.L < 1) {
    out.push_back({"SHAPE_MISMATCH", "K, D and L must be positive"});
    return;
  }
  const auto K = static_cast<std::size_t>(th.K);
  if (th.A.size() != K || th.b.size() != K || th.Sigma.size() != K || th.gamma.size() != K ||
      th.Gamma.size() != K || th.pi.size() != th.K) {
    out.push_back({"SHAPE_MISMATCH", "theta component lists do not all have K entries"});
    return;
  }
  for (int k = 0; k < th.K; ++k) {
    if (th.A[k].rows() != th.D || th.A[k].cols() != th.L) {
      out.push_back({"SHAPE_MISMATCH", idx("A", k) + " is not D x L"});
    } else if (!th.A[k].allFinite()) {
      out.push_back({"NONFINITE", idx("A", k) + " has non-finite entries"});
    }
    if (th.b[k].size() != th.D) out.push_back({"SHAPE_MISMATCH", idx("b", k) + " is not length D"});
    if (th.gamma[k].size() != th.L) {
      out.push_back({"SHAPE_MISMATCH", idx("gamma", k) + " is not length L"});
    }
    if (th.sigma_diagonal) {
      const Mat& s = th.Sigma[k];
      if (s.rows() != th.D || s.cols() != th.D) {
        out.push_back({"SHAPE_MISMATCH", idx("Sigma", k) + " is not D x D"});
      } else if (!(s.diagonal().array() > 0.0).all()) {
        out.push_back({"SIGMA_NOT_SPD", idx("Sigma", k) + " has a nonpositive diagonal"});
      }
    } else {
      check_spd(out, th.Sigma[k], th.D, idx("Sigma", k), "SIGMA_NOT_SPD");
    }
    check_spd(out, th.Gamma[k], th.L, idx("Gamma", k), "GAMMA_NOT_SPD");
  }
  if ((th.pi.array() < 0.0).any() || std::abs(th.pi.sum() - 1.0) > 1e-12 * th.K + 1e-12) {
    out.push_back({"PI_SIMPLEX", "pi is not a probability vector"});
  }
}

void check_dynamic(std::vector<Violation>& out, const DynamicParams& ph, int K, int L) {
  if (ph.K != K || ph.L != L) {
    out.push_back({"SHAPE_MISMATCH", "phi (K, L) differs from theta"});
    return;
  }
  const auto Ks = static_cast<std::size_t>(K);
  if (ph.C.size() != Ks || ph.Q.size() != Ks || ph.tau.rows() != K || ph.tau.cols() != K) {
    out.push_back({"SHAPE_MISMATCH", "phi component lists do not all have K entries"});
    return;
  }
  for (int k = 0; k < K; ++k) {
    if (ph.C[k].rows() != L || ph.C[k].cols() != L) {
      out.push_back({"SHAPE_MISMATCH", idx("C", k) + " is not L x L"});
    } else if (!ph.C[k].allFinite()) {
      out.push_back({"NONFINITE", idx("C", k) + " has non-finite entries"});
    } else {
      Eigen::JacobiSVD<Mat> svd(ph.C[k]);
      if (svd.singularValues().minCoeff() <= 1e-10) {
        out.push_back({"C_RANK_DEFICIENT", idx("C", k) + " is rank deficient"});
      }
    }
    check_spd(out, ph.Q[k], L, idx("Q", k), "Q_NOT_SPD");
  }
  if ((ph.tau.array() < 0.0).any() || (ph.tau.array() > 1.0).any() || !ph.tau.allFinite()) {
    out.push_back({"TAU_RANGE", "tau has entries outside [0, 1]"});
  }
  for (int j = 0; j < K; ++j) {
    if (std::abs(ph.tau.col(j).sum() - 1.0) > 1e-10) {
      out.push_back({"TAU_COLUMN_STOCHASTIC", "column " + std::to_string(j + 1) + " of tau does not sum to 1"});
    }
  }
}

Mat chol_lower(const Mat& cov) {
  Eigen::LLT<Mat> llt(symmetrize(cov));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularMatrix, "sampling covariance is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

double DynamicParams::log_transition(int from, int to) const { return std::log(tau(to, from)); }

std::vector<Violation> validate(const StaticParams& theta) {
  std::vector<Violation> out;
  check_static(out, theta);
  return out;
}

std::vector<Violation> validate(const StaticParams& theta, const DynamicParams& phi) {
  std::vector<Violation> out;
  check_static(out, theta);
  check_dynamic(out, phi, theta.K, theta.L);
  return out;
}

void require_valid(const StaticParams& theta, const DynamicParams& phi) {
  const auto report = validate(theta, phi);
  if (report.empty()) return;
  std::ostringstream os;
  bool only_rank = true;
  for (const auto& v : report) {
    os << v.code << " (" << v.message << "); ";
    only_rank = only_rank && v.code == "C_RANK_DEFICIENT";
  }
  throw Error(only_rank ? ErrorCode::kCRankDeficient : ErrorCode::kInvalidParameters, os.str());
}

Sequence sample_sequence(const StaticParams& theta, const DynamicParams& phi, int T, Rng& rng) {
  require_valid(theta, phi);
  if (T < 1) throw Error(ErrorCode::kInvalidParameters, "T must be at least 1");
  const int K = theta.K;
  std::vector<Mat> chol_sigma(K), chol_gamma(K), chol_q(K);
  for (int k = 0; k < K; ++k) {
    chol_sigma[k] = theta.sigma_diagonal ? Mat(theta.Sigma[k].diagonal().cwiseSqrt().asDiagonal())
                                         : chol_lower(theta.Sigma[k]);
    chol_gamma[k] = chol_lower(theta.Gamma[k]);
    chol_q[k] = chol_lower(phi.Q[k]);
  }
  Sequence seq;
  seq.y.reserve(T);
  seq.x_true.reserve(T);
  seq.z_true.reserve(T);
  int z = rng.categorical(theta.pi);
  Vec x = rng.gaussian(theta.gamma[z], chol_gamma[z]);
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      z = rng.categorical(phi.tau.col(z));
      x = rng.gaussian(phi.C[z] * x, chol_q[z]);
    }
    seq.z_true.push_back(z);
    seq.x_true.push_back(x);
    seq.y.push_back(rng.gaussian(theta.A[z] * x + theta.b[z], chol_sigma[z]));
  }
  return seq;
}

Sequence sample_sequence(const StaticParams& theta, const DynamicParams& phi, int T,
                         std::uint64_t seed) {
  Rng rng(seed);
  return sample_sequence(theta, phi, T, rng);
}

LogLikelihoodTerms complete_log_likelihood_terms(const StaticParams& theta,
                                                 const DynamicParams& phi, const Sequence& seq) {
  if (!seq.has_states() || !seq.has_modes()) {
    throw Error(ErrorCode::kMissingLatents, "sequence lacks x_true or z_true");
  }
  const int T = seq.T();
  if (static_cast<int>(seq.x_true.size()) != T || static_cast<int>(seq.z_true.size()) != T) {
    throw Error(ErrorCode::kLengthMismatch, "latent annotations differ in length from y");
  }
  LogLikelihoodTerms terms;
  const int z1 = seq.z_true[0];
  terms.initial_mode = std::log(theta.pi(z1));
  terms.initial_state = log_gauss(seq.x_true[0], theta.gamma[z1], theta.Gamma[z1]);
  for (int t = 0; t < T; ++t) {
    const int z = seq.z_true[t];
    const SpdFactor sigma(theta.Sigma[z], theta.sigma_diagonal, "Sigma");
    terms.observations += log_gauss(seq.y[t], theta.A[z] * seq.x_true[t] + theta.b[z], sigma);
    if (t > 0) {
      terms.transitions += phi.log_transition(seq.z_true[t - 1], z);
      terms.dynamics += log_gauss(seq.x_true[t], phi.C[z] * seq.x_true[t - 1], phi.Q[z]);
    }
  }
  return terms;
}

double complete_log_likelihood(const StaticParams& theta, const DynamicParams& phi,
                               const Sequence& seq) {
  return complete_log_likelihood_terms(theta, phi, seq).total();
}

long long static_parameter_count(int K, int D, int L, bool sigma_diagonal) {
  const long long d = D, l = L;
  const long long per = d * l + d + (sigma_diagonal ? d : d * (d + 1) / 2) + l + l * (l + 1) / 2;
  return (K - 1) + K * per;
}

long long dynamic_parameter_count(int K, int L) {
  const long long l = L;
  return static_cast<long long>(K) * (K - 1) + K * (l * l + l * (l + 1) / 2);
}

StaticParams permute_labels(const StaticParams& theta, const std::vector<int>& perm) {
  StaticParams out = theta;
  for (int i = 0; i < theta.K; ++i) {
    const int o = perm[i];
    out.A[i] = theta.A[o];
    out.b[i] = theta.b[o];
    out.Sigma[i] = theta.Sigma[o];
    out.pi(i) = theta.pi(o);
    out.gamma[i] = theta.gamma[o];
    out.Gamma[i] = theta.Gamma[o];
  }
  return out;
}

DynamicParams permute_labels(const DynamicParams& phi, const std::vector<int>& perm) {
  DynamicParams out = phi;
  for (int i = 0; i < phi.K; ++i) {
    out.C[i] = phi.C[perm[i]];
    out.Q[i] = phi.Q[perm[i]];
    for (int j = 0; j < phi.K; ++j) out.tau(i, j) = phi.tau(perm[i], perm[j]);
  }
  return out;
}

ObservationCache::ObservationCache(const StaticParams& theta) {
  const int K = theta.K;
  sigma.reserve(K);
  Gamma.reserve(K);
  AtSi.resize(K);
  AtSiA.resize(K);
  Gamma_inv.resize(K);
  for (int k = 0; k < K; ++k) {
    sigma.emplace_back(theta.Sigma[k], theta.sigma_diagonal, "Sigma[" + std::to_string(k + 1) + "]");
    AtSi[k] = sigma[k].solve(theta.A[k]).transpose();
    AtSiA[k] = symmetrize(AtSi[k] * theta.A[k]);
    Gamma.emplace_back(theta.Gamma[k], false, "Gamma[" + std::to_string(k + 1) + "]");
    Gamma_inv[k] = Gamma[k].inverse();
  }
}

DynamicsCache::DynamicsCache(const DynamicParams& phi) {
  const int K = phi.K;
  Q.reserve(K);
  Q_inv.resize(K);
  QiC.resize(K);
  CtQiC.resize(K);
  for (int k = 0; k < K; ++k) {
    Q.emplace_back(phi.Q[k], false, "Q[" + std::to_string(k + 1) + "]");
    Q_inv[k] = Q[k].inverse();
    QiC[k] = Q[k].solve(phi.C[k]);
    CtQiC[k] = symmetrize(phi.C[k].transpose() * QiC[k]);
  }
  log_tau = phi.tau.array().log().matrix();
}

}  // namespace plds
