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

// vbs: recompile the projector block, prepare and sample AKLT chains,
// verify against the MPS oracle, mitigate readout errors, build reports.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vbs/vbs.hpp"

namespace {

using vbs::Json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitEmpty = 2;
constexpr const char* kDescription = "AKLT valence-bond-solid state preparation toolkit";

struct Options {
  std::string config;
  int threads = 0;

  // Shared by several subcommands.
  std::string out;
  std::uint64_t seed = 0;
  int sites = 2;
  std::string boundary = "obc";
  std::string impl = "direct";
  std::string params;
  std::uint64_t shots = 32000;
  std::string noise;
  bool default_noise = false;

  // recompile
  int layers = 8;
  int rounds = 20;
  int hops = 20;
  int max_iterations = 600;
  double perturbation = 0.3;
  double loss_tolerance = 1e-6;
  std::string target = "direct";

  // prepare
  std::string stage = "raw";

  // verify
  std::string dump_oracle;
  std::string dump_unitary;
  double tolerance = 1e-10;

  // mitigate
  std::string counts;
  std::uint64_t calibration_shots = 0;

  // report
  std::vector<std::string> inputs;
  std::string csv;
  std::string sweep;
};


void build_app(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
  app.add_option("--config", o.config, "JSON file with flag values; command-line flags win")
      ->check(CLI::ExistingFile);
  app.add_option("--threads", o.threads, "worker thread cap (fallback: VBS_THREADS)")
      ->check(CLI::NonNegativeNumber);

  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "output JSON path (default stdout)"); };
  auto add_chain = [&](CLI::App* s) {
    s->add_option("--sites", o.sites, "chain length L")->check(CLI::Range(2, 10));
    s->add_option("--boundary", o.boundary, "obc|pbc")->check(CLI::IsMember({"obc", "pbc"}));
    s->add_option("--impl", o.impl, "projector block: direct|qr|recompiled")
        ->check(CLI::IsMember({"direct", "qr", "recompiled"}));
    s->add_option("--params", o.params, "ansatz params JSON (recompiled impl)");
  };
  auto add_noise = [&](CLI::App* s) {
    auto* file = s->add_option("--noise", o.noise, "noise model JSON");
    s->add_flag("--default-noise", o.default_noise, "use the built-in synthetic noise model")
        ->excludes(file);
  };

  auto* recompile = app.add_subcommand("recompile", "variationally compile the projector block");
  recompile->add_option("--layers", o.layers, "ansatz layers (CX count)")->check(CLI::Range(1, 64));
  recompile->add_option("--rounds", o.rounds, "independent random restarts")->check(CLI::PositiveNumber);
  recompile->add_option("--hops", o.hops, "basin hops per round")->check(CLI::NonNegativeNumber);
  recompile->add_option("--max-iterations", o.max_iterations, "iterations per local descent")
      ->check(CLI::PositiveNumber);
  recompile->add_option("--perturbation", o.perturbation, "hop scale in radians")
      ->check(CLI::PositiveNumber);
  recompile->add_option("--loss-tolerance", o.loss_tolerance, "early-stop loss")
      ->check(CLI::PositiveNumber);
  recompile->add_option("--target", o.target, "direct|qr")->check(CLI::IsMember({"direct", "qr"}));
  recompile->add_option("--seed", o.seed, "RNG seed");
  add_out(recompile);

  auto* prepare = app.add_subcommand("prepare", "simulate the preparation circuit and sample shots");
  add_chain(prepare);
  prepare->add_option("--shots", o.shots, "number of shots")->check(CLI::PositiveNumber);
  prepare->add_option("--seed", o.seed, "RNG seed");
  prepare->add_option("--stage", o.stage, "raw|ancilla|conserved")
      ->check(CLI::IsMember({"raw", "ancilla", "conserved"}));
  add_noise(prepare);
  add_out(prepare);

  auto* verify = app.add_subcommand("verify", "compare the noiseless circuit with the MPS oracle");
  add_chain(verify);
  verify->add_option("--tolerance", o.tolerance, "max-norm tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--dump-oracle", o.dump_oracle, "write the oracle distribution here");
  verify->add_option("--dump-unitary", o.dump_unitary, "write the 8x8 block unitary here");
  add_out(verify);

  auto* mitigate = app.add_subcommand("mitigate", "readout-error mitigation of raw counts");
  mitigate->add_option("--counts", o.counts, "raw counts JSON")->required();
  mitigate->add_option("--calibration-shots", o.calibration_shots,
                         "estimate the confusion matrices from this many shots per circuit");
  mitigate->add_option("--seed", o.seed, "RNG seed for calibration runs");
  add_noise(mitigate);
  add_out(mitigate);

  auto* report = app.add_subcommand("report", "score runs and aggregate the fidelity trend");
  report->add_option("inputs", o.inputs, "counts JSON files");
  report->add_option("--csv", o.csv, "also write a CSV table here");
  report->add_option("--sweep", o.sweep, "simulate L=MIN..MAX instead of reading files (MIN:MAX)");
  report->add_option("--rounds", o.rounds, "seeds per L in a sweep")->check(CLI::PositiveNumber);
  report->add_option("--shots", o.shots, "shots per sweep run")->check(CLI::PositiveNumber);
  report->add_option("--seed", o.seed, "base seed of a sweep");
  report->add_option("--boundary", o.boundary, "obc|pbc")->check(CLI::IsMember({"obc", "pbc"}));
  report->add_option("--impl", o.impl, "direct|qr|recompiled")
      ->check(CLI::IsMember({"direct", "qr", "recompiled"}));
  report->add_option("--params", o.params, "ansatz params JSON (recompiled impl)");
  add_noise(report);
  add_out(report);
}

/// Turns config entries into flags for the chosen subcommand. A section
/// named after the subcommand is strict; top-level scalars apply when the
/// subcommand knows the flag.
std::vector<std::string> config_args(const Json& cfg, const CLI::App& sub) {
  if (!cfg.is_object()) throw vbs::InvalidArgument("config: expected a JSON object");
  std::vector<std::string> args;
  auto push = [&](const std::string& key, const Json& value, bool strict) {
    const auto* opt = sub.get_option_no_throw("--" + key);
    if (!opt) {
      if (strict) throw vbs::InvalidArgument("config: unknown key '" + key + "' for " + sub.get_name());
      return;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      args.insert(args.end(), {"--" + key, value.get<std::string>()});
    } else if (value.is_number()) {
      args.insert(args.end(), {"--" + key, value.dump()});
    } else {
      throw vbs::InvalidArgument("config: key '" + key + "' must be a scalar");
    }
  };
  for (const auto& [key, value] : cfg.items()) {
    if (key == sub.get_name() && value.is_object()) {
      for (const auto& [k, v] : value.items()) push(k, v, true);
    } else if (!value.is_object()) {
      push(key, value, false);
    }
  }
  return args;
}

void emit(const Json& payload, const std::string& out) {
  const std::string text = vbs::dump(payload);
  if (out.empty()) {
    std::cout << text << std::flush;
  } else {
    vbs::write_text_file(out, text);
  }
}

std::optional<vbs::NoiseModel> load_noise(const Options& o) {
  if (o.default_noise) return vbs::NoiseModel::synthetic_default();
  if (!o.noise.empty()) return vbs::noise_from_json(vbs::read_json_file(o.noise));
  return std::nullopt;
}

vbs::PrepConfig prep_config(const Options& o) {
  vbs::PrepConfig cfg;
  cfg.sites = o.sites;
  cfg.boundary = vbs::parse_boundary(o.boundary);
  cfg.impl = vbs::parse_projector_impl(o.impl);
  cfg.shots = o.shots;
  cfg.seed = o.seed;
  if (cfg.impl == vbs::ProjectorImpl::Recompiled) {
    if (o.params.empty()) throw vbs::InvalidArgument("--impl recompiled needs --params FILE");
    cfg.params = vbs::params_from_json(vbs::read_json_file(o.params)).params;
  } else if (!o.params.empty()) {
    throw vbs::InvalidArgument("--params only applies to --impl recompiled");
  }
  cfg.noise = load_noise(o);
  cfg.validate();
  return cfg;
}

vbs::Mat8 block_unitary(const vbs::PrepConfig& cfg) {
  switch (cfg.impl) {
    case vbs::ProjectorImpl::Direct: return vbs::to_complex(vbs::build_u_direct());
    case vbs::ProjectorImpl::QR: return vbs::to_complex(vbs::build_u_qr());
    case vbs::ProjectorImpl::Recompiled: return vbs::ansatz_unitary(*cfg.params);
  }
  return vbs::Mat8::Identity();
}

vbs::CountsMeta meta_for(const vbs::PrepConfig& cfg) {
  vbs::CountsMeta m;
  m.sites = cfg.sites;
  m.boundary = cfg.boundary;
  m.impl = cfg.impl;
  m.cx_count = static_cast<int>(vbs::build_prep_circuit(cfg).count(vbs::GateKind::CX));
  m.noise = cfg.noise;
  m.success_probability =
      vbs::project_ancillas(vbs::run_noiseless(cfg), cfg.sites).success_probability;
  m.noiseless_energy = vbs::noiseless_energy(cfg);
  return m;
}

int cmd_recompile(const Options& o) {
  vbs::OptimizerConfig oc;
  oc.max_iterations = o.max_iterations;
  oc.basin_hops = o.hops;
  oc.perturbation_scale = o.perturbation;
  oc.rounds = o.rounds;
  oc.seed = o.seed;
  oc.loss_tolerance = o.loss_tolerance;
  const vbs::Mat8 target = vbs::to_complex(o.target == "qr" ? vbs::build_u_qr() : vbs::build_u_direct());
  const auto summary = vbs::recompile(target, o.layers, oc);
  auto params = vbs::to_params_file(summary.best);
  params.seed = o.seed;
  Json j = vbs::params_to_json(params);
  j["rounds"] = o.rounds;
  j["basin_hops"] = o.hops;
  j["max_iterations"] = o.max_iterations;
  j["mean_fidelity"] = vbs::num(summary.mean_fidelity);
  j["stderr_fidelity"] = vbs::num(summary.stderr_fidelity);
  emit(j, o.out);
  std::fprintf(stderr, "recompile: %d layers, best loss %.3e, fidelity %.8f (mean over %d rounds %.6f)\n",
               o.layers, summary.best.final_loss, summary.best.fidelity_estimate, o.rounds,
               summary.mean_fidelity);
  return kExitOk;
}

int cmd_prepare(const Options& o) {
  const auto cfg = prep_config(o);
  vbs::ShotCounts counts = vbs::run_shots(cfg);
  const std::uint64_t survivors = vbs::postselect_ancillas(counts, cfg.sites).total();
  if (o.stage == "ancilla") counts = vbs::postselect_ancillas(counts, cfg.sites);
  if (o.stage == "conserved") counts = vbs::postselect(counts, cfg.sites, cfg.boundary);
  if (counts.total() == 0) throw vbs::EmptyResult("every shot was discarded");
  emit(vbs::counts_to_json(counts, meta_for(cfg)), o.out);
  std::fprintf(stderr, "prepare: L=%d %s %s, %llu shots, %llu with all ancillas up (%.1f%%)%s\n",
               cfg.sites, o.boundary.c_str(), o.impl.c_str(),
               static_cast<unsigned long long>(cfg.shots),
               static_cast<unsigned long long>(survivors),
               100.0 * static_cast<double>(survivors) / static_cast<double>(cfg.shots),
               cfg.noise ? ", noisy" : "");
  return kExitOk;
}

int cmd_verify(const Options& o) {
  Options noiseless = o;
  noiseless.noise.clear();
  noiseless.default_noise = false;
  const auto cfg = prep_config(noiseless);
  const auto projected = vbs::project_ancillas(vbs::run_noiseless(cfg), cfg.sites);
  const auto simulated = vbs::distribution(projected.state);
  const auto oracle = vbs::oracle_distribution(cfg.boundary, cfg.sites);
  const auto oracle_dense = oracle.dense();
  double diff = 0;
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    diff = std::max(diff, std::abs(simulated[i] - oracle_dense[i]));
  }
  if (!o.dump_oracle.empty()) {
    vbs::write_text_file(o.dump_oracle, vbs::dump(vbs::distribution_to_json(oracle.probs)));
  }
  const vbs::Mat8 block = block_unitary(cfg);
  if (!o.dump_unitary.empty()) vbs::write_text_file(o.dump_unitary, vbs::dump(vbs::unitary_to_json(block)));
  const auto energy = vbs::noiseless_energy(cfg);
  Json j{{"sites", cfg.sites},
         {"boundary", o.boundary},
         {"impl", o.impl},
         {"bit_order", vbs::kBitOrder},
         {"oracle", vbs::distribution_to_json(oracle.probs)},
         {"simulated", vbs::distribution_to_json(
                           vbs::ProbabilityDistribution::from_dense(simulated, 2 * cfg.sites, 1e-15).probs)},
         {"max_abs_diff", vbs::num(diff)},
         {"tolerance", vbs::num(o.tolerance)},
         {"within_tolerance", diff < o.tolerance},
         {"success_probability", vbs::num(projected.success_probability)},
         {"energy", vbs::num_or_null(energy)},
         {"unitarity_defect", vbs::num(vbs::unitarity_defect(block))},
         {"tool_version", vbs::kToolVersion}};
  emit(j, o.out);
  std::fprintf(stderr, "verify: L=%d %s %s, max |p_sim - p_oracle| = %.3e (%s)\n", cfg.sites,
               o.boundary.c_str(), o.impl.c_str(), diff, diff < o.tolerance ? "ok" : "exceeds tolerance");
  return kExitOk;
}

int cmd_mitigate(const Options& o) {
  const auto file = vbs::counts_from_json(vbs::read_json_file(o.counts));
  const auto& counts = file.counts;
  if (counts.stage != vbs::CountsStage::Raw) {
    throw vbs::InvalidArgument("mitigate: needs raw counts (stage \"raw\")");
  }
  auto noise = load_noise(o);
  if (!noise) noise = file.meta.noise;
  if (!noise) throw vbs::InvalidArgument("mitigate: no readout model (pass --noise or --default-noise)");
  const auto cal = o.calibration_shots > 0
                       ? vbs::estimate_calibration(*noise, counts.num_qubits, o.calibration_shots, o.seed)
                       : vbs::ReadoutCalibration::from_noise(*noise, counts.num_qubits);
  const auto mitigated = vbs::mitigate(counts, cal);
  Json j{{"num_qubits", counts.num_qubits},
         {"bit_order", vbs::kBitOrder},
         {"shots", counts.shots},
         {"seed", counts.seed},
         {"calibration_shots", o.calibration_shots},
         {"mitigated", vbs::distribution_to_json(mitigated.probs)}};
  const int sites = file.meta.sites;
  if (sites > 0 && counts.num_qubits == 3 * sites) {
    vbs::RunRecord r;
    r.sites = sites;
    r.boundary = file.meta.boundary;
    vbs::score_counts(r, counts, cal);
    if (!r.hellinger_mitigated) throw vbs::EmptyResult("mitigate: nothing survives post-selection");
    j["postselected"] = vbs::distribution_to_json(
        vbs::postselect_distribution(mitigated, sites, file.meta.boundary).probs);
    j["hellinger_unmitigated"] = vbs::num_or_null(r.hellinger_unmitigated);
    j["hellinger_mitigated"] = vbs::num_or_null(r.hellinger_mitigated);
    std::fprintf(stderr, "mitigate: L=%d, Hellinger fidelity %.6f -> %.6f\n", sites,
                 r.hellinger_unmitigated.value_or(0.0), *r.hellinger_mitigated);
  }
  j["tool_version"] = vbs::kToolVersion;
  emit(j, o.out);
  return kExitOk;
}

std::pair<int, int> parse_sweep(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    std::size_t used_lo = 0, used_hi = 0;
    const int lo = std::stoi(s.substr(0, colon), &used_lo);
    const int hi = std::stoi(s.substr(colon + 1), &used_hi);
    if (used_lo != colon || used_hi != s.size() - colon - 1 || lo < 2 || hi < lo || hi > 10) {
      throw std::invalid_argument(s);
    }
    return {lo, hi};
  } catch (const std::exception&) {
    throw vbs::InvalidArgument("--sweep expects MIN:MAX with 2 <= MIN <= MAX <= 10");
  }
}

int cmd_report(const Options& o) {
  if (!o.inputs.empty() && !o.sweep.empty()) {
    throw vbs::InvalidArgument("report: pass counts files or --sweep, not both");
  }
  std::vector<vbs::RunRecord> runs;
  const auto noise_override = load_noise(o);
  for (const auto& path : o.inputs) {
    const auto file = vbs::counts_from_json(vbs::read_json_file(path));
    const auto& m = file.meta;
    if (m.sites < 2) throw vbs::InvalidArgument("report: '" + path + "' lacks the sites field");
    vbs::RunRecord r;
    r.sites = m.sites;
    r.boundary = m.boundary;
    r.impl = m.impl;
    r.cx_count = m.cx_count;
    r.energy = m.noiseless_energy;
    const auto noise = noise_override ? noise_override : m.noise;
    std::optional<vbs::ReadoutCalibration> cal;
    if (noise && file.counts.stage == vbs::CountsStage::Raw) {
      cal = vbs::ReadoutCalibration::from_noise(*noise, file.counts.num_qubits);
    }
    vbs::score_counts(r, file.counts, cal);
    runs.push_back(r);
  }
  if (!o.sweep.empty()) {
    const auto [lo, hi] = parse_sweep(o.sweep);
    for (int sites = lo; sites <= hi; ++sites) {
      Options point = o;
      point.sites = sites;
      auto cfg = prep_config(point);
      const auto cal = cfg.noise ? std::optional(vbs::ReadoutCalibration::from_noise(*cfg.noise, cfg.num_qubits()))
                                 : std::nullopt;
      for (int r = 0; r < o.rounds; ++r) {
        cfg.seed = vbs::derive_seed(o.seed, static_cast<std::uint64_t>(sites), static_cast<std::uint64_t>(r));
        runs.push_back(vbs::evaluate_run(cfg, vbs::run_shots(cfg), cal, r == 0));
        if (r > 0) runs.back().energy = runs[runs.size() - 2].energy;
      }
    }
  }
  emit(vbs::report_to_json(runs), o.out);
  if (!o.csv.empty()) vbs::write_text_file(o.csv, vbs::report_to_csv(runs));
  for (const auto& t : vbs::fidelity_trend(runs)) {
    std::fprintf(stderr, "report: L=%d, %d run(s), Hellinger %.6f +- %.6f, mitigated %.6f +- %.6f\n",
                 t.sites, t.runs, t.mean_unmitigated, t.stderr_unmitigated, t.mean_mitigated,
                 t.stderr_mitigated);
  }
  for (const auto& r : runs) {
    if (!r.hellinger_unmitigated) {
      std::fprintf(stderr, "report: a run (L=%d, seed %llu) has no surviving shots\n", r.sites,
                   static_cast<unsigned long long>(r.seed));
      return kExitEmpty;
    }
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  Options o;
  auto app = std::make_unique<CLI::App>(kDescription, "vbs");
  build_app(*app, o);
  try {
    app->parse(argc, argv);
    if (!o.config.empty()) {
      const auto extra = config_args(vbs::read_json_file(o.config), *app->get_subcommands().front());
      std::vector<std::string> args(argv + 1, argv + argc);
      args.insert(args.end(), extra.begin(), extra.end());
      std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
      o = Options{};
      app = std::make_unique<CLI::App>(kDescription, "vbs");
      build_app(*app, o);
      app->parse(args);
    }
  } catch (const CLI::ParseError& e) {
    return app->exit(e) == 0 ? kExitOk : kExitInvalid;
  }
  if (o.threads > 0) vbs::set_max_threads(o.threads);
  const std::string cmd = app->get_subcommands().front()->get_name();
  if (cmd == "recompile") return cmd_recompile(o);
  if (cmd == "prepare") return cmd_prepare(o);
  if (cmd == "verify") return cmd_verify(o);
  if (cmd == "mitigate") return cmd_mitigate(o);
  return cmd_report(o);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vbs::EmptyResult& e) {
    std::fprintf(stderr, "vbs: %s\n", e.what());
    return kExitEmpty;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vbs: error: %s\n", e.what());
    return kExitInvalid;
  }
}
