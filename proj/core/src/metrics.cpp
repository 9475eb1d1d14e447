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

#include "plds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "plds/error.hpp"

namespace plds {
namespace {

constexpr int kExhaustiveLimit = 6;

std::vector<int> identity(int K) {
  std::vector<int> p(K);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// Maximizes sum_e score(e, perm[e]).
std::vector<int> best_assignment(const Mat& score) {
  const int K = static_cast<int>(score.rows());
  std::vector<int> perm = identity(K);
  if (K <= kExhaustiveLimit) {
    std::vector<int> best = perm;
    double best_v = -std::numeric_limits<double>::infinity();
    do {
      double v = 0.0;
      for (int e = 0; e < K; ++e) v += score(e, perm[e]);
      if (v > best_v) {
        best_v = v;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> row_used(K, false), col_used(K, false);
  for (int step = 0; step < K; ++step) {
    double bv = -std::numeric_limits<double>::infinity();
    int br = -1, bc = -1;
    for (int r = 0; r < K; ++r) {
      if (row_used[r]) continue;
      for (int c = 0; c < K; ++c) {
        if (!col_used[c] && score(r, c) > bv) {
          bv = score(r, c);
          br = r;
          bc = c;
        }
      }
    }
    row_used[br] = col_used[bc] = true;
    perm[br] = bc;
  }
  return perm;
}

double tau_error(const Mat& est, const Mat& truth, const std::vector<int>& perm) {
  const int K = static_cast<int>(truth.rows());
  double m = 0.0;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) m = std::max(m, std::abs(est(perm[i], perm[j]) - truth(i, j)));
  }
  return m;
}

}  // namespace

StateErrors state_errors(const std::vector<Vec>& est, const std::vector<Vec>& truth) {
  if (est.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch, "estimates have " + std::to_string(est.size()) + " rows, truth has " +
                                                std::to_string(truth.size()));
  }
  StateErrors e;
  if (est.empty()) return e;
  const Eigen::Index L = truth[0].size();
  e.mae_per_dim = Vec::Zero(L);
  e.std_per_dim = Vec::Zero(L);
  e.rmse_per_dim = Vec::Zero(L);
  Vec sq = Vec::Zero(L);
  for (std::size_t t = 0; t < est.size(); ++t) {
    if (est[t].size() != L || truth[t].size() != L) {
      throw Error(ErrorCode::kLengthMismatch, "state dimension differs at t=" + std::to_string(t + 1));
    }
    const Vec a = (est[t] - truth[t]).cwiseAbs();
    e.mae_per_dim += a;
    sq += a.cwiseProduct(a);
    for (Eigen::Index i = 0; i < L; ++i) e.abs_errors.push_back(a(i));
  }
  const double T = static_cast<double>(est.size());
  e.mae_per_dim /= T;
  e.rmse_per_dim = (sq / T).cwiseSqrt();
  e.std_per_dim = ((sq / T).array() - e.mae_per_dim.array().square()).max(0.0).sqrt().matrix();
  const double n = static_cast<double>(e.abs_errors.size());
  e.mae = e.mae_per_dim.mean();
  e.rmse = std::sqrt(sq.sum() / n);
  e.std = std::sqrt(std::max(0.0, sq.sum() / n - e.mae * e.mae));
  return e;
}

std::vector<int> align_labels(const std::vector<int>& est, const std::vector<int>& truth, int K) {
  if (est.size() != truth.size()) throw Error(ErrorCode::kLengthMismatch, "mode label sequences differ in length");
  Mat counts = Mat::Zero(K, K);
  for (std::size_t t = 0; t < est.size(); ++t) {
    if (est[t] < 0 || est[t] >= K || truth[t] < 0 || truth[t] >= K) {
      throw Error(ErrorCode::kInvalidParameters, "mode label out of range");
    }
    counts(est[t], truth[t]) += 1.0;
  }
  return best_assignment(counts);
}

double mode_accuracy(const std::vector<int>& est, const std::vector<int>& truth, int K) {
  if (est.empty()) return std::nan("");
  const auto perm = align_labels(est, truth, K);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < est.size(); ++t) hits += perm[est[t]] == truth[t] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(est.size());
}

std::vector<int> argmax_rows(const Mat& p) {
  std::vector<int> out(p.rows());
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    Eigen::Index k = 0;
    p.row(t).maxCoeff(&k);
    out[t] = static_cast<int>(k);
  }
  return out;
}

std::vector<int> best_tau_permutation(const Mat& est, const Mat& truth) {
  const int K = static_cast<int>(truth.rows());
  if (est.rows() != K || est.cols() != K) throw Error(ErrorCode::kDimensionMismatch, "tau shapes differ");
  std::vector<int> perm = identity(K);
  if (K > kExhaustiveLimit + 2) {
    Mat score(K, K);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) score(i, j) = -std::abs(est(j, j) - truth(i, i));
    }
    return best_assignment(score);
  }
  std::vector<int> best = perm;
  double bv = std::numeric_limits<double>::infinity();
  do {
    const double v = tau_error(est, truth, perm);
    if (v < bv) {
      bv = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double aligned_max_abs_error(const Mat& est, const Mat& truth) {
  return tau_error(est, truth, best_tau_permutation(est, truth));
}

std::string report_csv(const MetricsReport& r) {
  std::string out = "method,mae,std,rmse,mode_acc,us_per_step\n";
  char buf[256];
  for (const auto& row : r.rows) {
    if (row.failed) {
      out += row.method + ",nan,nan,nan,nan,nan\n";
      continue;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g,%.17g\n", row.mae, row.std, row.rmse, row.mode_acc,
                  row.us_per_step);
    out += row.method + buf;
  }
  return out;
}

std::string report_text(const MetricsReport& r) {
  const int n = static_cast<int>(r.rows.size());
  const char* names[5] = {"mae", "std", "rmse", "mode_acc", "us_per_step"};
  auto value = [&](int i, int c) {
    const MetricsRow& m = r.rows[i];
    const double v[5] = {m.mae, m.std, m.rmse, m.mode_acc, m.us_per_step};
    return m.failed ? std::nan("") : v[c];
  };
  std::vector<std::vector<std::string>> cells(n, std::vector<std::string>(5));
  for (int c = 0; c < 5; ++c) {
    std::vector<int> order;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(value(i, c))) order.push_back(i);
    }
    const bool higher = c == 3;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return higher ? value(a, c) > value(b, c) : value(a, c) < value(b, c);
    });
    char buf[64];
    for (int i = 0; i < n; ++i) {
      const double v = value(i, c);
      if (r.rows[i].failed) {
        cells[i][c] = "FAILED";
        continue;
      }
      std::snprintf(buf, sizeof(buf), c == 4 ? "%.1f" : "%.4f", v);
      cells[i][c] = std::isfinite(v) ? buf : "-";
    }
    if (!order.empty()) cells[order[0]][c] += " [1]";
    if (order.size() > 1) cells[order[1]][c] += " [2]";
  }
  std::size_t mw = 6;
  for (const auto& row : r.rows) mw = std::max(mw, row.method.size());
  std::vector<std::size_t> w(5);
  for (int c = 0; c < 5; ++c) {
    w[c] = std::string(names[c]).size();
    for (int i = 0; i < n; ++i) w[c] = std::max(w[c], cells[i][c].size());
  }
  auto pad = [](const std::string& s, std::size_t width) { return s + std::string(width - s.size(), ' '); };
  std::string out = pad("method", mw);
  for (int c = 0; c < 5; ++c) out += "  " + pad(names[c], w[c]);
  out += "\n";
  for (int i = 0; i < n; ++i) {
    out += pad(r.rows[i].method, mw);
    for (int c = 0; c < 5; ++c) out += "  " + pad(cells[i][c], w[c]);
    if (r.rows[i].failed) out += "  (" + r.rows[i].failure + ")";
    out += "\n";
  }
  return out;
}

}  // namespace plds
