// Copyright 2026 The qpovm Authors
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

#pragma once

// JSON and CSV interchange formats and atomic file output.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpovm/error.hpp"
#include "qpovm/estimation.hpp"
#include "qpovm/naimark.hpp"
#include "qpovm/povm_core.hpp"
#include "qpovm/pulse_sim.hpp"
#include "qpovm/tomography.hpp"
#include "qpovm/transmon.hpp"

namespace qpovm::io {

using json = nlohmann::json;

/// Shortest round-trip decimal; "inf"/"nan" for non-finite values.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Seconds printed as nanoseconds to twelve significant digits, which hides
/// the unit-conversion round-off.
inline std::string fmt_ns(double seconds) {
  if (!std::isfinite(seconds)) return fmt(seconds);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", seconds * 1e9);
  return buf;
}

/// Writes to a sibling temporary file and renames it into place.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// JSON

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline Complex complex_from_json(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  throw ValidationError("complex entries must be numbers or [re, im] pairs");
}

inline CMatrix matrix_from_json(const json& rows, int dim) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != dim) throw DimensionError("operator has wrong row count");
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != dim) {
      throw DimensionError("operator has wrong column count");
    }
    for (int j = 0; j < dim; ++j) m(i, j) = complex_from_json(rows[i][j]);
  }
  return m;
}

inline json povm_to_json(const Povm& p) {
  json ops = json::array();
  for (const auto& op : p.operators()) ops.push_back(matrix_to_json(op));
  return {{"dim", p.dim()}, {"labels", p.labels()}, {"operators", ops}};
}

/// Structural parsing only; positivity and completeness are left to
/// validate_povm().
inline Povm povm_from_json(const json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    if (dim < 1) throw DimensionError("POVM dimension must be positive");
    std::vector<CMatrix> ops;
    for (const auto& o : j.at("operators")) ops.push_back(matrix_from_json(o, dim));
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return Povm(std::move(ops), std::move(labels));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed POVM JSON: ") + e.what());
  }
}

inline json report_to_json(const ValidationReport& r) {
  return {{"valid", r.valid},
          {"psd_violation", r.psd_violation},
          {"worst_operator", r.worst_operator},
          {"hermiticity_residual", r.hermiticity_residual},
          {"completeness_residual", r.completeness_residual},
          {"tolerance", r.tol},
          {"message", r.message()}};
}

inline json gates_to_json(const GateSequence& seq) {
  json out = json::array();
  for (const auto& g : seq) {
    if (const auto* gv = std::get_if<GivensGate>(&g)) {
      out.push_back({{"type", "givens"}, {"transition", gv->transition}, {"theta", gv->theta}, {"phi", gv->phi}});
    } else {
      const auto& z = std::get<ZGate>(g);
      out.push_back({{"type", "z"}, {"transition", z.transition}, {"phi", z.phi}});
    }
  }
  return out;
}

inline GateSequence gates_from_json(const json& j) {
  GateSequence seq;
  try {
    for (const auto& g : j) {
      const std::string type = g.at("type").get<std::string>();
      if (type == "givens") {
        seq.emplace_back(GivensGate{g.at("transition").get<int>(), g.at("theta").get<double>(), g.at("phi").get<double>()});
      } else if (type == "z") {
        seq.emplace_back(ZGate{g.at("transition").get<int>(), g.at("phi").get<double>()});
      } else {
        throw ValidationError("unknown gate type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed gate JSON: ") + e.what());
  }
  return seq;
}

inline json schedule_to_json(const PulseSchedule& s, bool with_envelopes = true) {
  json pulses = json::array();
  for (const auto& p : s.pulses) {
    json e = {{"transition", p.transition}, {"theta", p.theta},         {"drive_phase", p.drive_phase},
              {"duration", p.duration},     {"amplitude", p.amplitude}, {"samples", p.envelope.size()}};
    if (with_envelopes) e["envelope"] = p.envelope;
    pulses.push_back(e);
  }
  return {{"pulses", pulses},
          {"frame_phases", s.frame_phases},
          {"frame_freqs", s.frame_freqs},
          {"durations", s.durations},
          {"sample_dt", s.sample_dt},
          {"total_duration", s.total_duration()}};
}

inline json decay_fit_to_json(const DecayFit& f) {
  const auto g = f.model.channels();
  return {{"rates_per_us",
           {{"g32", g[0]}, {"g31", g[1]}, {"g30", g[2]}, {"g21", g[3]}, {"g20", g[4]}, {"g10", g[5]}}},
          {"t1_us", {f.t1_us[1], f.t1_us[2], f.t1_us[3]}},
          {"residual", f.residual}};
}

/// [[weight, "ZZIX"], ...] or [{"weight": w, "paulis": "ZZIX"}, ...].
inline Observable observable_from_json(const json& j) {
  try {
    std::vector<PauliTerm> terms;
    for (const auto& t : j) {
      if (t.is_array()) {
        terms.push_back({t.at(0).get<double>(), t.at(1).get<std::string>()});
      } else {
        terms.push_back({t.at("weight").get<double>(), t.at("paulis").get<std::string>()});
      }
    }
    if (terms.empty()) throw ValidationError("observable has no terms");
    return Observable(static_cast<int>(terms.front().paulis.size()), std::move(terms));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed observable JSON: ") + e.what());
  }
}

/// Amplitude list; entries are reals or [re, im] pairs. Normalized on read.
inline CVector state_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("state must be a non-empty amplitude list");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(j[k]);
  const double n = v.norm();
  if (n == 0.0) throw ValidationError("state vector is zero");
  return v / n;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string probabilities_csv(const RVector& values, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "outcome_index,label,value\n";
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    os << k << ',' << (static_cast<std::size_t>(k) < labels.size() ? labels[k] : std::to_string(k)) << ','
       << fmt(values(k)) << '\n';
  }
  return os.str();
}

inline std::string counts_csv(const CountsTable& t) {
  std::ostringstream os;
  os << "state_label,outcome,count\n";
  for (Eigen::Index j = 0; j < t.counts.rows(); ++j) {
    for (Eigen::Index m = 0; m < t.counts.cols(); ++m) {
      os << t.state_labels[j] << ',' << m << ',' << static_cast<long long>(t.counts(j, m)) << '\n';
    }
  }
  return os.str();
}

inline CountsTable counts_from_csv(const std::string& text, const ReferenceStateSet& states) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  std::vector<std::vector<double>> rows(states.size());
  int outcomes = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label, outcome, count;
    if (!std::getline(ls, label, ',') || !std::getline(ls, outcome, ',') || !std::getline(ls, count)) {
      throw ValidationError("malformed counts row: " + line);
    }
    const auto it = std::find(states.labels.begin(), states.labels.end(), label);
    if (it == states.labels.end()) throw ValidationError("unknown reference state '" + label + "'");
    const int m = std::stoi(outcome);
    auto& row = rows[it - states.labels.begin()];
    if (static_cast<int>(row.size()) <= m) row.resize(m + 1, 0.0);
    row[m] = std::stod(count);
    outcomes = std::max(outcomes, m + 1);
  }
  CountsTable t;
  t.state_labels = states.labels;
  t.counts = RMatrix::Zero(static_cast<Eigen::Index>(states.size()), outcomes);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t m = 0; m < rows[j].size(); ++m) t.counts(j, m) = rows[j][m];
  }
  return t;
}

inline std::string scaling_csv(const ScalingResult& r) {
  std::ostringstream os;
  os << "n_tomo,d_od\n";
  for (const auto& row : r.rows) os << row.n_tomo << ',' << fmt(row.d_od) << '\n';
  return os.str();
}

inline std::string spectrum_csv(const Spectrum& s) {
  std::ostringstream os;
  os << "n_g";
  for (Eigen::Index n = 0; n < s.energies.cols(); ++n) os << ",E_" << n;
  os << '\n';
  for (std::size_t i = 0; i < s.n_g.size(); ++i) {
    os << fmt(s.n_g[i]);
    for (Eigen::Index n = 0; n < s.energies.cols(); ++n) os << ',' << fmt(s.energies(i, n));
    os << '\n';
  }
  return os.str();
}

inline std::string calibration_csv(const CalibrationResult& c) {
  std::ostringstream os;
  os << "duration_ns,infidelity\n";
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    os << fmt_ns(c.duration_grid[i]) << ',' << fmt(1.0 - c.fidelities[i]) << '\n';
  }
  return os.str();
}

/// Sweep table; the trailing `error` column is empty for successful cells.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "ej_ec,t_max_ns,d_od,t_total_ns,f_sx01,f_sx12,f_sx23,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << fmt(r.ratio) << ',' << fmt_ns(r.t_max) << ',' << fmt(r.d_od) << ',' << fmt_ns(r.t_total) << ','
       << fmt(r.fidelities[0]) << ',' << fmt(r.fidelities[1]) << ',' << fmt(r.fidelities[2]) << ',' << err << '\n';
  }
  return os.str();
}

inline std::string scatter_csv(const ScatterTable& t) {
  std::ostringstream os;
  os << "outcome_index,c,p,c2p\n";
  double p_sum = 0.0;
  for (const auto& r : t.rows) {
    os << r.outcome << ',' << fmt(r.c) << ',' << fmt(r.p) << ',' << fmt(r.c2p) << '\n';
    p_sum += r.p;
  }
  os << "total,," << fmt(p_sum) << ',' << fmt(t.second_moment) << '\n';
  return os.str();
}

}  // namespace qpovm::io
