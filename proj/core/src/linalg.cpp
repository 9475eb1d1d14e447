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

#include "plds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plds/error.hpp"

namespace plds {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameters: return "INVALID_PARAMETERS";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kMissingLatents: return "MISSING_LATENTS";
    case ErrorCode::kEmptyMixture: return "EMPTY_MIXTURE";
    case ErrorCode::kNotSingleMode: return "NOT_SINGLE_MODE";
    case ErrorCode::kSingularMatrix: return "SINGULAR_MATRIX";
    case ErrorCode::kCRankDeficient: return "C_RANK_DEFICIENT";
    case ErrorCode::kEnumerationTooLarge: return "ENUMERATION_TOO_LARGE";
    case ErrorCode::kDegenerateResponsibilities: return "DEGENERATE_RESPONSIBILITIES";
    case ErrorCode::kUnknownMethod: return "UNKNOWN_METHOD";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kIo: return "IO_ERROR";
    case ErrorCode::kParse: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

bool is_numerical(ErrorCode code) {
  return code == ErrorCode::kSingularMatrix || code == ErrorCode::kDegenerateResponsibilities;
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(code_name(code)) + ": " + detail), code_(code), detail_(detail) {}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Mat& symmetric) {
  if (symmetric.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat make_spd(const Mat& m) {
  Mat s = symmetrize(m);
  const auto d = s.rows();
  if (d == 0) return s;
  if (min_eigenvalue(s) < 1e-10) {
    double eps = 1e-9 * s.trace() / static_cast<double>(d);
    if (!(eps > 0.0)) eps = 1e-9;
    s.diagonal().array() += eps;
  }
  return s;
}

bool is_spd(const Mat& m, double min_eig) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  return min_eigenvalue(symmetrize(m)) > min_eig;
}

double log_sum_exp(const double* values, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, values[i]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(values[i] - mx);
  return mx + std::log(s);
}

SpdFactor::SpdFactor(const Mat& m, bool diagonal, const std::string& what)
    : dim_(static_cast<int>(m.rows())), diagonal_(diagonal) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, what + " is not square");
  }
  if (diagonal_) {
    diag_ = m.diagonal();
    if (!(diag_.array() > 0.0).all() || !diag_.allFinite()) {
      throw Error(ErrorCode::kSingularMatrix, what + " has a nonpositive diagonal entry");
    }
    log_det_ = diag_.array().log().sum();
    return;
  }
  Mat s = symmetrize(m);
  llt_.compute(s);
  if (llt_.info() != Eigen::Success) {
    double eps = 1e-9 * std::abs(s.trace()) / std::max<Eigen::Index>(1, s.rows());
    if (!(eps > 0.0)) eps = 1e-9;
    s.diagonal().array() += eps;
    llt_.compute(s);
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingularMatrix, what + " is not positive definite");
    }
  }
  const auto& l = llt_.matrixLLT();
  log_det_ = 2.0 * l.diagonal().array().log().sum();
  if (!std::isfinite(log_det_)) {
    throw Error(ErrorCode::kSingularMatrix, what + " has a non-finite determinant");
  }
}

Vec SpdFactor::solve(const Vec& b) const {
  if (diagonal_) return b.cwiseQuotient(diag_);
  return llt_.solve(b);
}

Mat SpdFactor::solve(const Mat& b) const {
  if (diagonal_) return diag_.cwiseInverse().asDiagonal() * b;
  return llt_.solve(b);
}

Mat SpdFactor::inverse() const {
  if (diagonal_) return diag_.cwiseInverse().asDiagonal();
  return symmetrize(llt_.solve(Mat::Identity(dim_, dim_)));
}

double SpdFactor::quad(const Vec& b) const {
  if (diagonal_) return (b.array().square() / diag_.array()).sum();
  return llt_.matrixL().solve(b).squaredNorm();
}

double log_gauss(const Vec& x, const Vec& mean, const SpdFactor& cov) {
  const Vec r = x - mean;
  return -0.5 * (static_cast<double>(r.size()) * kLog2Pi + cov.log_det() + cov.quad(r));
}

double log_gauss(const Vec& x, const Vec& mean, const Mat& cov) {
  return log_gauss(x, mean, SpdFactor(cov, false, "covariance"));
}

Mat spd_inverse(const Mat& m, const std::string& what) { return SpdFactor(m, false, what).inverse(); }

Vec vech(const Mat& m) {
  const auto n = m.rows();
  Vec v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) v(k++) = m(i, j);
  }
  return v;
}

Mat unvech(const Vec& v, int dim) {
  Mat m(dim, dim);
  Eigen::Index k = 0;
  for (int j = 0; j < dim; ++j) {
    for (int i = j; i < dim; ++i) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return m;
}

}  // namespace plds
