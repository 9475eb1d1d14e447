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

#include "plds/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "plds/error.hpp"

namespace plds {
namespace {

using nlohmann::json;

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Mat json_mat(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw Error(ErrorCode::kDimensionMismatch, what + ": expected " + std::to_string(rows) + " rows");
  }
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& r = j[i];
    if (!r.is_array() || static_cast<int>(r.size()) != cols) {
      throw Error(ErrorCode::kDimensionMismatch, what + ": expected " + std::to_string(cols) + " columns");
    }
    for (int c = 0; c < cols; ++c) m(i, c) = r[c].get<double>();
  }
  return m;
}

Vec json_vec(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, what + ": expected length " + std::to_string(n));
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = j[i].get<double>();
  return v;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::kParse, std::string("model JSON lacks \"") + key + "\"");
  return j.at(key);
}

template <typename F>
auto per_component(const json& j, int K, const std::string& what, F&& f) {
  if (!j.is_array() || static_cast<int>(j.size()) != K) {
    throw Error(ErrorCode::kDimensionMismatch, what + ": expected " + std::to_string(K) + " components");
  }
  std::vector<decltype(f(j[0], std::string()))> out;
  for (int k = 0; k < K; ++k) out.push_back(f(j[k], what + "[" + std::to_string(k + 1) + "]"));
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<int> prefixed_columns(const CsvTable& t, const std::string& prefix) {
  std::vector<int> idx;
  for (int i = 1;; ++i) {
    const int c = t.column(prefix + std::to_string(i));
    if (c < 0) break;
    idx.push_back(c);
  }
  return idx;
}

}  // namespace

std::string model_to_json(const StaticParams& theta, const DynamicParams& phi) {
  json j;
  j["version"] = kModelFormatVersion;
  j["K"] = theta.K;
  j["D"] = theta.D;
  j["L"] = theta.L;
  j["sigma_diagonal"] = theta.sigma_diagonal;
  json th, ph;
  th["A"] = json::array();
  th["b"] = json::array();
  th["Sigma"] = json::array();
  th["gamma"] = json::array();
  th["Gamma"] = json::array();
  for (int k = 0; k < theta.K; ++k) {
    th["A"].push_back(mat_json(theta.A[k]));
    th["b"].push_back(vec_json(theta.b[k]));
    th["Sigma"].push_back(mat_json(theta.Sigma[k]));
    th["gamma"].push_back(vec_json(theta.gamma[k]));
    th["Gamma"].push_back(mat_json(theta.Gamma[k]));
  }
  th["pi"] = vec_json(theta.pi);
  ph["C"] = json::array();
  ph["Q"] = json::array();
  for (int k = 0; k < phi.K; ++k) {
    ph["C"].push_back(mat_json(phi.C[k]));
    ph["Q"].push_back(mat_json(phi.Q[k]));
  }
  ph["tau"] = mat_json(phi.tau);
  j["theta"] = std::move(th);
  j["phi"] = std::move(ph);
  return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model JSON: ") + e.what());
  }
  try {
    ModelFile m;
    const int K = field(j, "K").get<int>();
    const int D = field(j, "D").get<int>();
    const int L = field(j, "L").get<int>();
    if (K < 1 || D < 1 || L < 1) throw Error(ErrorCode::kInvalidParameters, "K, D and L must be positive");
    const bool diag = j.value("sigma_diagonal", false);
    const json& th = field(j, "theta");
    StaticParams& t = m.theta;
    t.K = K;
    t.D = D;
    t.L = L;
    t.sigma_diagonal = diag;
    t.A = per_component(field(th, "A"), K, "A", [&](const json& e, const std::string& w) { return json_mat(e, D, L, w); });
    t.b = per_component(field(th, "b"), K, "b", [&](const json& e, const std::string& w) { return json_vec(e, D, w); });
    t.Sigma = per_component(field(th, "Sigma"), K, "Sigma", [&](const json& e, const std::string& w) -> Mat {
      if (diag && e.is_array() && !e.empty() && e[0].is_number()) return json_vec(e, D, w).asDiagonal();
      return json_mat(e, D, D, w);
    });
    t.pi = json_vec(field(th, "pi"), K, "pi");
    t.gamma = per_component(field(th, "gamma"), K, "gamma",
                            [&](const json& e, const std::string& w) { return json_vec(e, L, w); });
    t.Gamma = per_component(field(th, "Gamma"), K, "Gamma",
                            [&](const json& e, const std::string& w) { return json_mat(e, L, L, w); });
    const json& ph = field(j, "phi");
    DynamicParams& p = m.phi;
    p.K = K;
    p.L = L;
    p.C = per_component(field(ph, "C"), K, "C", [&](const json& e, const std::string& w) { return json_mat(e, L, L, w); });
    p.Q = per_component(field(ph, "Q"), K, "Q", [&](const json& e, const std::string& w) { return json_mat(e, L, L, w); });
    p.tau = json_mat(field(ph, "tau"), K, K, "tau");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model JSON: ") + e.what());
  }
}

void write_model(const std::string& path, const StaticParams& theta, const DynamicParams& phi) {
  write_text(path, model_to_json(theta, phi));
}

ModelFile read_model(const std::string& path) {
  try {
    return model_from_json(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path + ": " + e.detail());
  }
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path + ": empty file");
  t.header = split_line(line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(lineno) + ": expected " +
                                         std::to_string(t.header.size()) + " cells, found " +
                                         std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      if (s == "nan" || s.empty()) {
        row[c] = std::nan("");
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(ErrorCode::kParse, path + ":" + std::to_string(lineno) + ": bad number \"" + s + "\" in column " +
                                           t.header[c]);
      }
      row[c] = v;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += format_number(row[i]);
    }
    out += "\n";
  }
  write_text(path, out);
}

CsvTable sequence_table(const Sequence& seq) {
  CsvTable t;
  const int D = seq.T() ? static_cast<int>(seq.y[0].size()) : 0;
  const int L = seq.has_states() ? static_cast<int>(seq.x_true[0].size()) : 0;
  for (int i = 1; i <= D; ++i) t.header.push_back("y_" + std::to_string(i));
  for (int i = 1; i <= L; ++i) t.header.push_back("x_" + std::to_string(i));
  if (seq.has_modes()) t.header.emplace_back("z");
  for (int n = 0; n < seq.T(); ++n) {
    std::vector<double> row(seq.y[n].data(), seq.y[n].data() + D);
    if (L) row.insert(row.end(), seq.x_true[n].data(), seq.x_true[n].data() + L);
    if (seq.has_modes()) row.push_back(seq.z_true[n] + 1);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Sequence sequence_from_table(const CsvTable& t) {
  const auto yc = prefixed_columns(t, "y_");
  const auto xc = prefixed_columns(t, "x_");
  const int zc = t.column("z");
  if (yc.empty()) throw Error(ErrorCode::kParse, "sequence CSV has no y_1 column");
  Sequence s;
  for (const auto& row : t.rows) {
    Vec y(yc.size());
    for (std::size_t i = 0; i < yc.size(); ++i) y(i) = row[yc[i]];
    s.y.push_back(std::move(y));
    if (!xc.empty()) {
      Vec x(xc.size());
      for (std::size_t i = 0; i < xc.size(); ++i) x(i) = row[xc[i]];
      s.x_true.push_back(std::move(x));
    }
    if (zc >= 0) {
      const double z = row[zc];
      if (!(z >= 1.0) || z != std::floor(z)) throw Error(ErrorCode::kParse, "mode labels must be integers >= 1");
      s.z_true.push_back(static_cast<int>(z) - 1);
    }
  }
  return s;
}

void write_sequence(const std::string& path, const Sequence& seq) { write_csv(path, sequence_table(seq)); }

Sequence read_sequence(const std::string& path) {
  try {
    return sequence_from_table(read_csv(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path + ": " + e.detail());
  }
}

void write_training_set(const std::string& path, const TrainingSet& d) {
  CsvTable t;
  for (int i = 1; i <= d.L(); ++i) t.header.push_back("x_" + std::to_string(i));
  for (int i = 1; i <= d.D(); ++i) t.header.push_back("y_" + std::to_string(i));
  for (int n = 0; n < d.N(); ++n) {
    std::vector<double> row(d.x[n].data(), d.x[n].data() + d.L());
    row.insert(row.end(), d.y[n].data(), d.y[n].data() + d.D());
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

TrainingSet read_training_set(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto xc = prefixed_columns(t, "x_");
  const auto yc = prefixed_columns(t, "y_");
  if (xc.empty() || yc.empty()) throw Error(ErrorCode::kParse, path + ": training CSV needs x_ and y_ columns");
  TrainingSet d;
  for (const auto& row : t.rows) {
    Vec x(xc.size()), y(yc.size());
    for (std::size_t i = 0; i < xc.size(); ++i) x(i) = row[xc[i]];
    for (std::size_t i = 0; i < yc.size(); ++i) y(i) = row[yc[i]];
    d.x.push_back(std::move(x));
    d.y.push_back(std::move(y));
  }
  return d;
}

CsvTable posterior_table(const PosteriorTrack& p) {
  CsvTable t;
  const int T = p.T();
  const int L = T ? static_cast<int>(p.eta[0].size()) : 0;
  const int K = static_cast<int>(p.rho.cols());
  t.header.emplace_back("t");
  for (int i = 1; i <= L; ++i) t.header.push_back("eta_" + std::to_string(i));
  for (int j = 1; j <= L; ++j) {
    for (int i = j; i <= L; ++i) t.header.push_back("V_" + std::to_string(i) + "_" + std::to_string(j));
  }
  for (int k = 1; k <= K; ++k) t.header.push_back("rho_" + std::to_string(k));
  const bool timed = !p.us.empty();
  if (timed) t.header.emplace_back("us");
  for (int n = 0; n < T; ++n) {
    std::vector<double> row{static_cast<double>(n + 1)};
    row.insert(row.end(), p.eta[n].data(), p.eta[n].data() + L);
    const Vec v = vech(p.V[n]);
    row.insert(row.end(), v.data(), v.data() + v.size());
    for (int k = 0; k < K; ++k) row.push_back(p.rho(n, k));
    if (timed) row.push_back(p.us[n]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

PosteriorTrack posterior_from_table(const CsvTable& t) {
  const auto ec = prefixed_columns(t, "eta_");
  const auto rc = prefixed_columns(t, "rho_");
  if (ec.empty()) throw Error(ErrorCode::kParse, "posterior CSV has no eta_1 column");
  const int L = static_cast<int>(ec.size());
  std::vector<int> vc;
  for (int j = 1; j <= L; ++j) {
    for (int i = j; i <= L; ++i) vc.push_back(t.column("V_" + std::to_string(i) + "_" + std::to_string(j)));
  }
  const int uc = t.column("us");
  PosteriorTrack p;
  const int T = static_cast<int>(t.rows.size());
  p.rho = Mat::Zero(T, static_cast<Eigen::Index>(rc.size()));
  for (int n = 0; n < T; ++n) {
    const auto& row = t.rows[n];
    Vec e(L);
    for (int i = 0; i < L; ++i) e(i) = row[ec[i]];
    p.eta.push_back(std::move(e));
    Vec v(vc.size());
    bool have_v = true;
    for (std::size_t i = 0; i < vc.size(); ++i) {
      if (vc[i] < 0) have_v = false;
      else v(i) = row[vc[i]];
    }
    p.V.push_back(have_v ? unvech(v, L) : Mat::Zero(L, L));
    for (std::size_t k = 0; k < rc.size(); ++k) p.rho(n, static_cast<Eigen::Index>(k)) = row[rc[k]];
    if (uc >= 0) p.us.push_back(row[uc]);
  }
  return p;
}

void write_posterior(const std::string& path, const PosteriorTrack& track) {
  write_csv(path, posterior_table(track));
}

PosteriorTrack read_posterior(const std::string& path) {
  try {
    return posterior_from_table(read_csv(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path + ": " + e.detail());
  }
}

}  // namespace plds
