// Copyright 2026 The vbsprep Authors
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

// JSON and CSV artifacts: ansatz parameters, noise models, shot counts,
// oracle/unitary dumps and run reports.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vbs/analysis.hpp"
#include "vbs/error.hpp"
#include "vbs/pipeline.hpp"
#include "vbs/qcore.hpp"
#include "vbs/recompiler.hpp"

#ifndef VBS_VERSION
#define VBS_VERSION "0.0.0"
#endif

namespace vbs {

using Json = nlohmann::json;

inline constexpr std::string_view kToolVersion = VBS_VERSION;

/// Rounds to 12 significant decimal digits.
inline double round12(double x) {
  if (!std::isfinite(x) || x == 0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline Json num(double x) { return round12(x); }

inline Json num_or_null(const std::optional<double>& x) {
  return x ? Json(round12(*x)) : Json(nullptr);
}

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("malformed JSON in '" + path + "': " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

namespace detail {
template <class T>
T get_field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidArgument(std::string(what) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Ansatz parameters

struct ParamsFile {
  AnsatzParams params;
  double final_loss = 0;
  double fidelity_estimate = 0;
  int cx_count = 0;
  std::uint64_t seed = 0;
};

inline Json params_to_json(const ParamsFile& p) {
  Json angles = Json::array();
  for (double a : p.params.angles) angles.push_back(num(a));
  return Json{{"n_layers", p.params.n_layers},
              {"angles", angles},
              {"final_loss", num(p.final_loss)},
              {"fidelity_estimate", num(p.fidelity_estimate)},
              {"cx_count", p.cx_count},
              {"seed", p.seed},
              {"tool_version", kToolVersion}};
}

inline ParamsFile params_from_json(const Json& j) {
  constexpr const char* what = "params";
  ParamsFile p;
  p.params.n_layers = detail::get_field<int>(j, "n_layers", what);
  p.params.angles = detail::get_field<std::vector<double>>(j, "angles", what);
  p.params.validate();
  if (j.contains("final_loss")) p.final_loss = detail::get_field<double>(j, "final_loss", what);
  if (j.contains("fidelity_estimate")) {
    p.fidelity_estimate = detail::get_field<double>(j, "fidelity_estimate", what);
  }
  p.cx_count = j.contains("cx_count") ? detail::get_field<int>(j, "cx_count", what)
                                      : p.params.n_layers;
  if (j.contains("seed")) p.seed = detail::get_field<std::uint64_t>(j, "seed", what);
  return p;
}

inline ParamsFile to_params_file(const RecompileResult& r) {
  return {r.params, r.final_loss, r.fidelity_estimate, r.cx_count, r.seed};
}

// ---------------------------------------------------------------------------
// Noise model

inline Json readout_to_json(const ReadoutError& r) {
  return Json{{"p0to1", num(r.p0to1)}, {"p1to0", num(r.p1to0)}};
}

inline ReadoutError readout_from_json(const Json& j) {
  return {detail::get_field<double>(j, "p0to1", "readout"),
          detail::get_field<double>(j, "p1to0", "readout")};
}

inline Json noise_to_json(const NoiseModel& m) {
  Json per = Json::array();
  for (const auto& r : m.readout) per.push_back(readout_to_json(r));
  return Json{{"cx_depolarizing_prob", num(m.cx_depolarizing_prob)},
              {"single_qubit_depolarizing_prob", num(m.single_qubit_depolarizing_prob)},
              {"readout", readout_to_json(m.default_readout)},
              {"readout_per_qubit", per}};
}

/// Missing fields keep their zero defaults.
inline NoiseModel noise_from_json(const Json& j) {
  constexpr const char* what = "noise";
  if (!j.is_object()) throw InvalidArgument("noise: expected an object");
  NoiseModel m;
  if (j.contains("cx_depolarizing_prob")) {
    m.cx_depolarizing_prob = detail::get_field<double>(j, "cx_depolarizing_prob", what);
  }
  if (j.contains("single_qubit_depolarizing_prob")) {
    m.single_qubit_depolarizing_prob =
        detail::get_field<double>(j, "single_qubit_depolarizing_prob", what);
  }
  if (j.contains("readout")) m.default_readout = readout_from_json(j.at("readout"));
  if (j.contains("readout_per_qubit")) {
    for (const auto& r : j.at("readout_per_qubit")) m.readout.push_back(readout_from_json(r));
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Shot counts

/// Run context stored next to the histogram so reports can be built from
/// counts files alone.
struct CountsMeta {
  int sites = 0;
  Boundary boundary = Boundary::Open;
  ProjectorImpl impl = ProjectorImpl::Direct;
  int cx_count = 0;
  std::optional<NoiseModel> noise;
  std::optional<double> success_probability;  // noiseless ancilla branch weight
  std::optional<double> noiseless_energy;
};

struct CountsFile {
  ShotCounts counts;
  CountsMeta meta;
};

inline Json counts_to_json(const ShotCounts& c, const CountsMeta& meta) {
  Json hist = Json::object();
  for (const auto& [bits, n] : c.counts) hist[bits] = n;
  return Json{{"num_qubits", c.num_qubits},
              {"shots", c.shots},
              {"bit_order", kBitOrder},
              {"stage", to_string(c.stage)},
              {"counts", hist},
              {"seed", c.seed},
              {"noise", meta.noise ? noise_to_json(*meta.noise) : Json(nullptr)},
              {"sites", meta.sites},
              {"boundary", to_string(meta.boundary)},
              {"impl", to_string(meta.impl)},
              {"cx_count", meta.cx_count},
              {"success_probability", num_or_null(meta.success_probability)},
              {"noiseless_energy", num_or_null(meta.noiseless_energy)},
              {"tool_version", kToolVersion}};
}

inline CountsFile counts_from_json(const Json& j) {
  constexpr const char* what = "counts";
  CountsFile f;
  auto& c = f.counts;
  c.num_qubits = detail::get_field<int>(j, "num_qubits", what);
  c.shots = detail::get_field<std::uint64_t>(j, "shots", what);
  if (detail::get_field<std::string>(j, "bit_order", what) != kBitOrder) {
    throw InvalidArgument("counts: unsupported bit_order");
  }
  c.stage = parse_counts_stage(detail::get_field<std::string>(j, "stage", what));
  c.seed = detail::get_field<std::uint64_t>(j, "seed", what);
  c.counts = detail::get_field<std::map<std::string, std::uint64_t>>(j, "counts", what);
  for (const auto& [bits, _] : c.counts) {
    if (bits.size() != static_cast<std::size_t>(c.num_qubits) ||
        bits.find_first_not_of("01") != std::string::npos) {
      throw InvalidArgument("counts: bad bitstring '" + bits + "'");
    }
  }
  auto& m = f.meta;
  if (j.contains("sites")) m.sites = detail::get_field<int>(j, "sites", what);
  if (j.contains("boundary")) {
    m.boundary = parse_boundary(detail::get_field<std::string>(j, "boundary", what));
  }
  if (j.contains("impl")) {
    m.impl = parse_projector_impl(detail::get_field<std::string>(j, "impl", what));
  }
  if (j.contains("cx_count")) m.cx_count = detail::get_field<int>(j, "cx_count", what);
  if (j.contains("noise") && !j.at("noise").is_null()) m.noise = noise_from_json(j.at("noise"));
  auto opt = [&](const char* key, std::optional<double>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = detail::get_field<double>(j, key, what);
  };
  opt("success_probability", m.success_probability);
  opt("noiseless_energy", m.noiseless_energy);
  return f;
}

// ---------------------------------------------------------------------------
// Dumps

inline Json distribution_to_json(const std::map<std::string, double>& probs) {
  Json j = Json::object();
  for (const auto& [bits, p] : probs) j[bits] = num(p);
  return j;
}

/// Row-major 8x8 matrix as [[re, im], ...] rows.
inline Json unitary_to_json(const Mat8& u) {
  Json rows = Json::array();
  for (int r = 0; r < 8; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 8; ++c) row.push_back(Json::array({num(u(r, c).real()), num(u(r, c).imag())}));
    rows.push_back(row);
  }
  return Json{{"rows", 8}, {"cols", 8}, {"layout", "row-major [re, im]"}, {"data", rows}};
}

inline Mat8 unitary_from_json(const Json& j) {
  const auto data = detail::get_field<std::vector<std::vector<std::vector<double>>>>(j, "data", "unitary");
  if (data.size() != 8) throw InvalidArgument("unitary: need 8 rows");
  Mat8 u;
  for (int r = 0; r < 8; ++r) {
    if (data[r].size() != 8) throw InvalidArgument("unitary: need 8 columns");
    for (int c = 0; c < 8; ++c) {
      if (data[r][c].size() != 2) throw InvalidArgument("unitary: entries are [re, im]");
      u(r, c) = Complex(data[r][c][0], data[r][c][1]);
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Reports

inline Json run_to_json(const RunRecord& r) {
  return Json{{"L", r.sites},
              {"boundary", to_string(r.boundary)},
              {"impl", to_string(r.impl)},
              {"shots", r.shots},
              {"seed", r.seed},
              {"hellinger_unmitigated", num_or_null(r.hellinger_unmitigated)},
              {"hellinger_mitigated", num_or_null(r.hellinger_mitigated)},
              {"success_prob", num(r.success_prob)},
              {"energy", num_or_null(r.energy)},
              {"cx_count", r.cx_count}};
}

inline RunRecord run_from_json(const Json& j) {
  constexpr const char* what = "run";
  RunRecord r;
  r.sites = detail::get_field<int>(j, "L", what);
  r.boundary = parse_boundary(detail::get_field<std::string>(j, "boundary", what));
  r.impl = parse_projector_impl(detail::get_field<std::string>(j, "impl", what));
  r.shots = detail::get_field<std::uint64_t>(j, "shots", what);
  r.seed = detail::get_field<std::uint64_t>(j, "seed", what);
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return detail::get_field<double>(j, key, what);
  };
  r.hellinger_unmitigated = opt("hellinger_unmitigated");
  r.hellinger_mitigated = opt("hellinger_mitigated");
  r.success_prob = detail::get_field<double>(j, "success_prob", what);
  r.energy = opt("energy");
  r.cx_count = detail::get_field<int>(j, "cx_count", what);
  return r;
}

inline Json report_to_json(const std::vector<RunRecord>& runs) {
  Json arr = Json::array();
  for (const auto& r : runs) arr.push_back(run_to_json(r));
  Json trend = Json::array();
  for (const auto& t : fidelity_trend(runs)) {
    trend.push_back(Json{{"L", t.sites},
                         {"runs", t.runs},
                         {"mean_unmitigated", num(t.mean_unmitigated)},
                         {"stderr_unmitigated", num(t.stderr_unmitigated)},
                         {"mean_mitigated", num(t.mean_mitigated)},
                         {"stderr_mitigated", num(t.stderr_mitigated)}});
  }
  return Json{{"runs", arr},
              {"trend", trend},
              {"isometry_baseline_cx", kIsometryBaselineCx},
              {"tool_version", kToolVersion}};
}

inline std::vector<RunRecord> report_from_json(const Json& j) {
  std::vector<RunRecord> runs;
  for (const auto& r : detail::get_field<Json>(j, "runs", "report")) runs.push_back(run_from_json(r));
  return runs;
}

/// One CSV row per run, same columns as the JSON run entries.
inline std::string report_to_csv(const std::vector<RunRecord>& runs) {
  std::ostringstream out;
  out << "L,boundary,impl,shots,seed,hellinger_unmitigated,hellinger_mitigated,success_prob,"
         "energy,cx_count\n";
  auto cell = [](const std::optional<double>& x) {
    return x ? Json(round12(*x)).dump() : std::string();
  };
  for (const auto& r : runs) {
    out << r.sites << ',' << to_string(r.boundary) << ',' << to_string(r.impl) << ',' << r.shots
        << ',' << r.seed << ',' << cell(r.hellinger_unmitigated) << ','
        << cell(r.hellinger_mitigated) << ',' << cell(r.success_prob) << ',' << cell(r.energy)
        << ',' << r.cx_count << '\n';
  }
  return out.str();
}

}  // namespace vbs
