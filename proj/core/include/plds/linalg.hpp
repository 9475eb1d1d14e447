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

#pragma once

#include <Eigen/Dense>

#include <string>

namespace plds {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// (M + M^T) / 2.
Mat symmetrize(const Mat& m);

/// Symmetrizes, then adds eps*I with eps = 1e-9 * trace / d when the
/// smallest eigenvalue falls below 1e-10.
Mat make_spd(const Mat& m);

/// True when m is symmetric within 1e-10 and its smallest eigenvalue is
/// above min_eig.
bool is_spd(const Mat& m, double min_eig = 0.0);

double min_eigenvalue(const Mat& symmetric);

double log_sum_exp(const double* values, int n);
inline double log_sum_exp(const Vec& v) { return log_sum_exp(v.data(), static_cast<int>(v.size())); }

// Cholesky factor of an SPD matrix with a one-shot jitter fallback. The
// diagonal mode keeps only the diagonal and solves elementwise.
class SpdFactor {
 public:
  SpdFactor() = default;

  /// Throws SINGULAR_MATRIX, tagged with the name in what, when the matrix is not
  /// positive definite even after jitter.
  explicit SpdFactor(const Mat& m, bool diagonal = false, const std::string& what = "matrix");

  int dim() const { return dim_; }
  bool diagonal() const { return diagonal_; }
  double log_det() const { return log_det_; }

  Vec solve(const Vec& b) const;
  Mat solve(const Mat& b) const;
  template <typename Derived>
  auto solve(const Eigen::MatrixBase<Derived>& b) const {
    if constexpr (Derived::ColsAtCompileTime == 1) {
      return solve(Vec(b));
    } else {
      return solve(Mat(b));
    }
  }
  Mat inverse() const;

  /// b^T M^{-1} b.
  double quad(const Vec& b) const;

 private:
  int dim_ = 0;
  bool diagonal_ = false;
  Vec diag_;
  Eigen::LLT<Mat> llt_;
  double log_det_ = 0.0;
};

/// log N(x; mean, cov) with cov given by its factor.
double log_gauss(const Vec& x, const Vec& mean, const SpdFactor& cov);
double log_gauss(const Vec& x, const Vec& mean, const Mat& cov);

/// Inverse of an SPD matrix, symmetrized.
Mat spd_inverse(const Mat& m, const std::string& what = "matrix");

/// Column-major lower-triangular half of a symmetric matrix.
Vec vech(const Mat& m);
Mat unvech(const Vec& v, int dim);

}  // namespace plds
