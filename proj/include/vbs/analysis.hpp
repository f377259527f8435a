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

// Scoring prepared states: Hellinger fidelity against the oracle, readout
// error mitigation, and the AKLT projector energy.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vbs/error.hpp"
#include "vbs/mps_oracle.hpp"
#include "vbs/pipeline.hpp"
#include "vbs/qcore.hpp"

namespace vbs {

struct ProbabilityDistribution {
  int num_qubits = 0;
  std::map<std::string, double> probs;

  double total() const {
    double t = 0;
    for (const auto& [_, p] : probs) t += p;
    return t;
  }

  void validate(double tol = 1e-9) const {
    for (const auto& [bits, p] : probs) {
      if (bits.size() != static_cast<std::size_t>(num_qubits)) {
        throw InvalidArgument("distribution: key '" + bits + "' has wrong length");
      }
      if (!(p >= 0)) throw InvalidArgument("distribution: negative probability");
    }
    if (std::abs(total() - 1.0) > tol) throw InvalidArgument("distribution: does not sum to 1");
  }

  /// Dense vector indexed like StateVector amplitudes.
  std::vector<double> dense() const {
    std::vector<double> v(std::size_t{1} << num_qubits, 0.0);
    for (const auto& [bits, p] : probs) v[from_bitstring(bits)] = p;
    return v;
  }

  static ProbabilityDistribution from_dense(std::span<const double> v, int num_qubits,
                                            double drop_below = 0.0) {
    if (v.size() != (std::size_t{1} << num_qubits)) {
      throw InvalidArgument("distribution: dense vector has wrong size");
    }
    ProbabilityDistribution d{num_qubits, {}};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] > drop_below) d.probs[to_bitstring(i, num_qubits)] = v[i];
    }
    return d;
  }

  static ProbabilityDistribution from_map(std::map<std::string, double> m, int num_qubits) {
    return {num_qubits, std::move(m)};
  }
};

/// [sum_i sqrt(p_i q_i)]^2.
inline double hellinger_fidelity(const ProbabilityDistribution& p,
                                 const ProbabilityDistribution& q) {
  if (p.num_qubits != q.num_qubits) {
    throw InvalidArgument("hellinger_fidelity: distributions over different widths");
  }
  double bc = 0;
  for (const auto& [bits, pp] : p.probs) {
    if (auto it = q.probs.find(bits); it != q.probs.end()) bc += std::sqrt(pp * it->second);
  }
  return std::min(1.0, bc * bc);
}

inline ProbabilityDistribution counts_to_distribution(const ShotCounts& c) {
  const std::uint64_t total = c.total();
  if (total == 0) throw EmptyResult("counts_to_distribution: no counts");
  ProbabilityDistribution d{c.num_qubits, {}};
  for (const auto& [bits, n] : c.counts) {
    if (n > 0) d.probs[bits] = static_cast<double>(n) / static_cast<double>(total);
  }
  return d;
}

/// Oracle distribution over the 2L physical qubits.
inline ProbabilityDistribution oracle_distribution(Boundary b, int sites) {
  return {2 * sites, qubit_distribution(MpsAklt::make(b), sites)};
}

// ---------------------------------------------------------------------------
// Readout calibration and mitigation

/// Per-qubit column-stochastic confusion matrices: C(observed, true).
struct ReadoutCalibration {
  std::vector<Eigen::Matrix2d> confusion;

  int num_qubits() const { return static_cast<int>(confusion.size()); }

  static Eigen::Matrix2d confusion_matrix(const ReadoutError& e) {
    Eigen::Matrix2d c;
    c << 1 - e.p0to1, e.p1to0,
         e.p0to1, 1 - e.p1to0;
    return c;
  }

  static ReadoutCalibration identity(int n) {
    return {std::vector<Eigen::Matrix2d>(static_cast<std::size_t>(n),
                                         Eigen::Matrix2d::Identity())};
  }

  /// The exact confusion matrices of a noise model.
  static ReadoutCalibration from_noise(const NoiseModel& noise, int n) {
    ReadoutCalibration cal;
    for (int q = 0; q < n; ++q) cal.confusion.push_back(confusion_matrix(noise.readout_for(q)));
    return cal;
  }

  void validate() const {
    for (const auto& c : confusion) {
      for (int col = 0; col < 2; ++col) {
        if (c(0, col) < 0 || c(1, col) < 0 || c(0, col) > 1 || c(1, col) > 1 ||
            std::abs(c(0, col) + c(1, col) - 1.0) > 1e-9) {
          throw InvalidArgument("calibration: columns must be probability vectors");
        }
      }
    }
  }
};

/// Estimates each qubit's confusion matrix from two calibration runs
/// (all qubits prepared up, all prepared down) under the noise model's
/// readout channel.
inline ReadoutCalibration estimate_calibration(const NoiseModel& noise, int n,
                                               std::uint64_t shots, std::uint64_t seed) {
  NoiseModel readout_only = noise;
  readout_only.cx_depolarizing_prob = 0;
  readout_only.single_qubit_depolarizing_prob = 0;
  Circuit zeros(n), ones(n);
  for (int q = 0; q < n; ++q) ones.add(GateOp::x(q));
  const auto c0 = run_trajectories(zeros, readout_only, shots, derive_seed(seed, 0, 0x63616c));
  const auto c1 = run_trajectories(ones, readout_only, shots, derive_seed(seed, 1, 0x63616c));
  ReadoutCalibration cal;
  for (int q = 0; q < n; ++q) {
    auto flips = [&](const ShotCounts& c, char expected) {
      std::uint64_t f = 0;
      for (const auto& [bits, k] : c.counts) f += bits[static_cast<std::size_t>(q)] != expected ? k : 0;
      return static_cast<double>(f) / static_cast<double>(shots);
    };
    cal.confusion.push_back(ReadoutCalibration::confusion_matrix({flips(c0, '0'), flips(c1, '1')}));
  }
  return cal;
}

namespace detail {
/// v <- (M_{n-1} x ... x M_0) v, applying each 2x2 factor along its own
/// qubit axis.
inline void apply_per_qubit(std::vector<double>& v, int n,
                            const std::vector<Eigen::Matrix2d>& factors) {
  for (int q = 0; q < n; ++q) {
    const auto& m = factors[static_cast<std::size_t>(q)];
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i & mask) continue;
      const double a0 = v[i], a1 = v[i | mask];
      v[i] = m(0, 0) * a0 + m(0, 1) * a1;
      v[i | mask] = m(1, 0) * a0 + m(1, 1) * a1;
    }
  }
}
}  // namespace detail

/// Exact forward readout corruption of a distribution.
inline ProbabilityDistribution apply_readout(const ProbabilityDistribution& p,
                                             const ReadoutCalibration& cal) {
  if (cal.num_qubits() != p.num_qubits) {
    throw InvalidArgument("apply_readout: calibration width mismatch");
  }
  auto v = p.dense();
  detail::apply_per_qubit(v, p.num_qubits, cal.confusion);
  return ProbabilityDistribution::from_dense(v, p.num_qubits);
}

/// Inverts each qubit's confusion matrix along its axis of the empirical
/// distribution, clips negative quasi-probabilities and renormalizes.
inline ProbabilityDistribution mitigate(const ShotCounts& counts, const ReadoutCalibration& cal) {
  if (cal.num_qubits() < counts.num_qubits) {
    throw InvalidArgument("mitigate: calibration does not cover every measured qubit");
  }
  if (counts.num_qubits > 26) throw InvalidArgument("mitigate: too many qubits");
  cal.validate();
  std::vector<Eigen::Matrix2d> inverses;
  for (int q = 0; q < counts.num_qubits; ++q) {
    const auto& c = cal.confusion[static_cast<std::size_t>(q)];
    if (std::abs(c.determinant()) < 1e-9) {
      throw IllConditionedCalibration("mitigate: confusion matrix of qubit " +
                                      std::to_string(q) + " is singular");
    }
    inverses.push_back(c.inverse());
  }
  auto v = counts_to_distribution(counts).dense();
  detail::apply_per_qubit(v, counts.num_qubits, inverses);
  double total = 0;
  for (double& x : v) {
    x = std::max(x, 0.0);
    total += x;
  }
  if (!(total > 0)) throw EmptyResult("mitigate: nothing left after clipping");
  for (double& x : v) x /= total;
  return ProbabilityDistribution::from_dense(v, counts.num_qubits);
}

/// Both post-selection stages applied to a 3L-qubit distribution; the
/// survivors are renormalized. Throws EmptyResult when nothing survives.
inline ProbabilityDistribution postselect_distribution(const ProbabilityDistribution& raw,
                                                       int sites, Boundary b) {
  if (raw.num_qubits != 3 * sites) throw InvalidArgument("postselect: need 3L-bit distribution");
  const int ups = expected_up_count(sites, b);
  ProbabilityDistribution out{2 * sites, {}};
  double kept = 0;
  for (const auto& [bits, p] : raw.probs) {
    if (!ancillas_up(bits, sites)) continue;
    auto phys = physical_bits(bits, sites);
    if (up_count(phys) != ups) continue;
    out.probs[phys] += p;
    kept += p;
  }
  if (!(kept > 0)) throw EmptyResult("postselect: no weight survives");
  for (auto& [_, p] : out.probs) p /= kept;
  return out;
}

// ---------------------------------------------------------------------------
// AKLT energy

namespace detail {
/// Out-of-place swap of qubits a and b.
inline void add_swapped(const StateVector& in, int a, int b, double w, std::vector<Complex>& out) {
  const std::size_t ma = std::size_t{1} << a, mb = std::size_t{1} << b;
  for (std::size_t i = 0; i < in.dim(); ++i) {
    std::size_t j = i;
    if (((i & ma) != 0) != ((i & mb) != 0)) j = i ^ ma ^ mb;
    out[j] += w * in[i];
  }
}
}  // namespace detail

/// Weight of the two-qubit singlet component on spin-1 site j.
inline double singlet_weight(const StateVector& s, int site) {
  const std::size_t lo = std::size_t{1} << (2 * site), hi = lo << 1;
  double w = 0;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    if ((i & lo) || (i & hi)) continue;
    w += std::norm((s[i | hi] - s[i | lo]) / std::sqrt(2.0));
  }
  return w;
}

/// <psi| sum_bonds [S_i.S_j + (S_i.S_j)^2 / 3 + 2/3] |psi>, with spin-1 site
/// j realized on qubits 2j, 2j+1. Periodic chains include the (L-1, 0)
/// bond. On the triplet subspace S_i.S_j = (1/2) sum_{a in i, b in j}
/// SWAP_ab - 1.
inline double aklt_energy(const StateVector& state, int sites, Boundary b = Boundary::Open) {
  if (sites < 2 || state.num_qubits() != 2 * sites) {
    throw InvalidArgument("aklt_energy: state must have 2L qubits, L >= 2");
  }
  if (!state.normalized()) throw InvalidState("aklt_energy: state is not normalized");
  for (int j = 0; j < sites; ++j) {
    if (singlet_weight(state, j) > 1e-8) {
      throw InvalidState("aklt_energy: site " + std::to_string(j) +
                         " has weight outside the triplet subspace");
    }
  }
  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < sites; ++i) bonds.emplace_back(i, i + 1);
  if (b == Boundary::Periodic) bonds.emplace_back(sites - 1, 0);

  double energy = 0;
  for (const auto& [i, k] : bonds) {
    std::vector<Complex> heis(state.dim(), Complex{});
    for (int a : {2 * i, 2 * i + 1}) {
      for (int c : {2 * k, 2 * k + 1}) detail::add_swapped(state, a, c, 0.5, heis);
    }
    for (std::size_t x = 0; x < heis.size(); ++x) heis[x] -= state[x];
    Complex expect{};
    double sq = 0;
    for (std::size_t x = 0; x < heis.size(); ++x) {
      expect += std::conj(state[x]) * heis[x];
      sq += std::norm(heis[x]);
    }
    energy += expect.real() + sq / 3.0 + 2.0 / 3.0;
  }
  return energy;
}

// ---------------------------------------------------------------------------
// Run scoring

struct RunRecord {
  int sites = 0;
  Boundary boundary = Boundary::Open;
  ProjectorImpl impl = ProjectorImpl::Direct;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  /// Empty when post-selection discarded every shot.
  std::optional<double> hellinger_unmitigated;
  std::optional<double> hellinger_mitigated;
  double success_prob = 0;  // surviving fraction of raw shots
  std::optional<double> energy;
  int cx_count = 0;
};

/// Energy of the noiseless post-selected state, when it is defined.
inline std::optional<double> noiseless_energy(const PrepConfig& cfg) {
  try {
    const auto projected = project_ancillas(run_noiseless(cfg), cfg.sites);
    return aklt_energy(projected.state, cfg.sites, cfg.boundary);
  } catch (const InvalidState&) {
    return std::nullopt;
  }
}

/// Fills the fidelity and success fields of r from counts of a run with
/// r.sites and r.boundary already set. Mitigation needs raw 3L-bit counts.
inline void score_counts(RunRecord& r, const ShotCounts& counts,
                         const std::optional<ReadoutCalibration>& cal) {
  r.shots = counts.shots;
  r.seed = counts.seed;
  const auto oracle = oracle_distribution(r.boundary, r.sites);
  try {
    const auto survivors = postselect(counts, r.sites, r.boundary);
    r.success_prob = static_cast<double>(survivors.total()) / static_cast<double>(counts.shots);
    r.hellinger_unmitigated = hellinger_fidelity(counts_to_distribution(survivors), oracle);
  } catch (const EmptyResult&) {
    r.success_prob = 0;
  }
  if (cal && counts.stage == CountsStage::Raw) {
    try {
      const auto mitigated = postselect_distribution(mitigate(counts, *cal), r.sites, r.boundary);
      r.hellinger_mitigated = hellinger_fidelity(mitigated, oracle);
    } catch (const EmptyResult&) {
    }
  }
}

/// Scores raw 3L-bit counts of one run against the oracle.
inline RunRecord evaluate_run(const PrepConfig& cfg, const ShotCounts& raw,
                              const std::optional<ReadoutCalibration>& cal,
                              bool with_energy = true) {
  RunRecord r;
  r.sites = cfg.sites;
  r.boundary = cfg.boundary;
  r.impl = cfg.impl;
  r.cx_count = static_cast<int>(build_prep_circuit(cfg).count(GateKind::CX));
  score_counts(r, raw, cal);
  if (with_energy) r.energy = noiseless_energy(cfg);
  return r;
}

struct TrendPoint {
  int sites = 0;
  int runs = 0;
  double mean_unmitigated = 0;
  double stderr_unmitigated = 0;
  double mean_mitigated = 0;
  double stderr_mitigated = 0;
};

/// Mean and standard error of the fidelities per chain length. Runs with an
/// empty post-selection count as fidelity 0.
inline std::vector<TrendPoint> fidelity_trend(const std::vector<RunRecord>& runs) {
  std::map<int, std::vector<const RunRecord*>> by_sites;
  for (const auto& r : runs) by_sites[r.sites].push_back(&r);
  auto stats = [](const std::vector<double>& v, double& mean, double& se) {
    const double k = static_cast<double>(v.size());
    double s = 0, s2 = 0;
    for (double x : v) {
      s += x;
      s2 += x * x;
    }
    mean = s / k;
    se = v.size() > 1 ? std::sqrt(std::max(0.0, (s2 - k * mean * mean) / (k - 1)) / k) : 0.0;
  };
  std::vector<TrendPoint> out;
  for (const auto& [sites, group] : by_sites) {
    TrendPoint t;
    t.sites = sites;
    t.runs = static_cast<int>(group.size());
    std::vector<double> un, mit;
    for (const auto* r : group) {
      un.push_back(r->hellinger_unmitigated.value_or(0.0));
      mit.push_back(r->hellinger_mitigated.value_or(r->hellinger_unmitigated.value_or(0.0)));
    }
    stats(un, t.mean_unmitigated, t.stderr_unmitigated);
    stats(mit, t.mean_mitigated, t.stderr_mitigated);
    out.push_back(t);
  }
  return out;
}

}  // namespace vbs
