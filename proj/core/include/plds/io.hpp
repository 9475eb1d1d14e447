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

// File formats. Model: one JSON document
//   {version, K, D, L, sigma_diagonal, theta:{A,b,Sigma,pi,gamma,Gamma}, phi:{C,Q,tau}}
// with matrices as arrays of rows. CSV files carry a header row; numbers
// are written with 17 significant digits so they round-trip exactly.
// Mode labels are 1-based in every file.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plds/model.hpp"
#include "plds/static_em.hpp"

namespace plds {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  StaticParams theta;
  DynamicParams phi;
};

std::string model_to_json(const StaticParams& theta, const DynamicParams& phi);
ModelFile model_from_json(const std::string& text);

void write_model(const std::string& path, const StaticParams& theta, const DynamicParams& phi);
ModelFile read_model(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column, or -1.
  int column(const std::string& name) const;
};

/// Throws IO with the path on failure, PARSE with line context on bad cells.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);
std::string format_number(double v);

/// Columns y_1..y_D[, x_1..x_L, z].
CsvTable sequence_table(const Sequence& seq);
Sequence sequence_from_table(const CsvTable& table);
void write_sequence(const std::string& path, const Sequence& seq);
Sequence read_sequence(const std::string& path);

/// Columns x_1..x_L, y_1..y_D.
void write_training_set(const std::string& path, const TrainingSet& data);
TrainingSet read_training_set(const std::string& path);

/// Per-t state estimate: columns t, eta_1..eta_L, V_i_j (lower triangle,
/// column-major), rho_1..rho_K[, us].
struct PosteriorTrack {
  std::vector<Vec> eta;
  std::vector<Mat> V;
  Mat rho;                  // T x K
  std::vector<double> us;   // per-step wall time; empty when untimed

  int T() const { return static_cast<int>(eta.size()); }
};

CsvTable posterior_table(const PosteriorTrack& track);
PosteriorTrack posterior_from_table(const CsvTable& table);
void write_posterior(const std::string& path, const PosteriorTrack& track);
PosteriorTrack read_posterior(const std::string& path);

}  // namespace plds
