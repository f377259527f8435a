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

// AKLT preparation circuit, noiseless and noisy execution, and the
// two-stage post-selection.
//
// Register layout for L sites (3L qubits): site j owns the ancilla 3j and
// the two spin-1/2 qubits 3j+1, 3j+2. Physical spin k (0 <= k < 2L) lives
// on qubit 3(k/2) + 1 + k%2.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vbs/embedding.hpp"
#include "vbs/error.hpp"
#include "vbs/mps_oracle.hpp"
#include "vbs/parallel.hpp"
#include "vbs/qcore.hpp"
#include "vbs/recompiler.hpp"
#include "vbs/rng.hpp"

namespace vbs {

enum class ProjectorImpl { Direct, QR, Recompiled };

inline std::string_view to_string(ProjectorImpl p) {
  switch (p) {
    case ProjectorImpl::Direct: return "direct";
    case ProjectorImpl::QR: return "qr";
    case ProjectorImpl::Recompiled: return "recompiled";
  }
  return "?";
}

inline ProjectorImpl parse_projector_impl(std::string_view s) {
  if (s == "direct") return ProjectorImpl::Direct;
  if (s == "qr") return ProjectorImpl::QR;
  if (s == "recompiled") return ProjectorImpl::Recompiled;
  throw InvalidArgument("unknown projector impl '" + std::string(s) +
                        "' (expected direct|qr|recompiled)");
}

/// Asymmetric bit-flip probabilities applied at measurement.
struct ReadoutError {
  double p0to1 = 0;
  double p1to0 = 0;
};

/// Stochastic Pauli noise plus independent per-qubit readout flips. A gate
/// with error probability p is followed, with probability p, by a uniformly
/// chosen non-identity Pauli on its qubits. 3-qubit block gates are treated
/// as error-free.
struct NoiseModel {
  double cx_depolarizing_prob = 0;
  double single_qubit_depolarizing_prob = 0;
  ReadoutError default_readout;
  /// Per-qubit overrides; qubits past the end use default_readout.
  std::vector<ReadoutError> readout;

  static constexpr int kDefaultReadoutQubits = 30;

  /// Order-of-magnitude stand-in for a current superconducting device.
  static NoiseModel synthetic_default() {
    NoiseModel m;
    m.cx_depolarizing_prob = 1e-2;
    m.single_qubit_depolarizing_prob = 3e-4;
    m.default_readout = {1.5e-2, 3e-2};
    // Per-qubit spread around ~2e-2, with 1 -> 0 flips (relaxation) dominant.
    constexpr double kGolden = 0.6180339887498949;
    for (int q = 0; q < kDefaultReadoutQubits; ++q) {
      const double h0 = std::fmod(q * kGolden, 1.0), h1 = std::fmod(q * kGolden + 0.5, 1.0);
      m.readout.push_back({1e-2 + 1e-2 * h0, 2e-2 + 2e-2 * h1});
    }
    return m;
  }

  ReadoutError readout_for(int q) const {
    return q < static_cast<int>(readout.size()) ? readout[static_cast<std::size_t>(q)]
                                                 : default_readout;
  }

  void validate() const {
    auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    bool good = ok(cx_depolarizing_prob) && ok(single_qubit_depolarizing_prob) &&
                ok(default_readout.p0to1) && ok(default_readout.p1to0);
    for (const auto& r : readout) good = good && ok(r.p0to1) && ok(r.p1to0);
    if (!good) throw InvalidArgument("noise model: probabilities must lie in [0, 1]");
  }
};

struct PrepConfig {
  int sites = 2;
  Boundary boundary = Boundary::Open;
  ProjectorImpl impl = ProjectorImpl::Direct;
  std::optional<AnsatzParams> params;  // required for Recompiled
  std::uint64_t shots = 32000;
  std::uint64_t seed = 0;
  std::optional<NoiseModel> noise;

  int num_qubits() const { return 3 * sites; }

  void validate() const {
    if (sites < 2) throw InvalidArgument("prep: sites must be >= 2");
    if (3 * sites > kMaxQubits) throw InvalidArgument("prep: too many sites");
    if (impl == ProjectorImpl::Recompiled) {
      if (!params) throw InvalidArgument("prep: recompiled projector needs ansatz params");
      params->validate();
    }
    if (noise) noise->validate();
  }
};

inline int ancilla_qubit(int site) { return 3 * site; }
inline int chain_qubit(int spin) { return 3 * (spin / 2) + 1 + spin % 2; }

/// Number of spin-up qubits the projection must preserve: two free boundary
/// spins plus one per singlet (open), or one per singlet (periodic).
inline int expected_up_count(int sites, Boundary b) {
  return b == Boundary::Open ? sites + 1 : sites;
}

/// X, H, X on a, CX(a -> b), X on a: |00> -> (|01> - |10>)/sqrt(2).
inline void append_singlet(Circuit& c, int a, int b) {
  c.add(GateOp::x(a));
  c.add(GateOp::h(a));
  c.add(GateOp::x(a));
  c.add(GateOp::cx(a, b));
  c.add(GateOp::x(a));
}

/// Singlet layer only (everything before the projectors).
inline Circuit build_singlet_layer(int sites, Boundary boundary) {
  Circuit c(3 * sites);
  for (int j = 0; j + 1 < sites; ++j) append_singlet(c, 3 * j + 2, 3 * j + 4);
  if (boundary == Boundary::Periodic) append_singlet(c, 3 * sites - 1, 1);
  return c;
}

inline Circuit build_prep_circuit(const PrepConfig& cfg) {
  cfg.validate();
  Circuit c = build_singlet_layer(cfg.sites, cfg.boundary);
  std::optional<Mat8> block;
  std::optional<Circuit> ansatz;
  switch (cfg.impl) {
    case ProjectorImpl::Direct: block = to_complex(build_u_direct()); break;
    case ProjectorImpl::QR: block = to_complex(build_u_qr()); break;
    case ProjectorImpl::Recompiled: ansatz = ansatz_circuit(*cfg.params); break;
  }
  for (int j = 0; j < cfg.sites; ++j) {
    const int q0 = 3 * j, q1 = 3 * j + 1, q2 = 3 * j + 2;
    if (block) {
      c.add(GateOp::u8(q0, q1, q2, *block));
    } else {
      const int map[3] = {q0, q1, q2};
      c.append_mapped(*ansatz, map);
    }
  }
  return c;
}

inline StateVector run_noiseless(const PrepConfig& cfg) {
  StateVector s(cfg.num_qubits());
  apply_circuit_inplace(s, build_prep_circuit(cfg));
  return s;
}

struct ProjectedState {
  StateVector state;  // 2L physical qubits, normalized
  double success_probability;
};

/// Keeps the all-ancillas-up branch, drops the ancillas, renormalizes.
inline ProjectedState project_ancillas(const StateVector& state, int sites) {
  if (sites < 1 || state.num_qubits() != 3 * sites) {
    throw InvalidArgument("project_ancillas: state must have 3L qubits");
  }
  const int n_phys = 2 * sites;
  std::vector<Complex> kept(std::size_t{1} << n_phys);
  std::size_t ancilla_mask = 0;
  for (int j = 0; j < sites; ++j) ancilla_mask |= std::size_t{1} << ancilla_qubit(j);
  double norm2 = 0;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    if (i & ancilla_mask) continue;
    std::size_t phys = 0;
    for (int k = 0; k < n_phys; ++k) {
      if ((i >> chain_qubit(k)) & 1u) phys |= std::size_t{1} << k;
    }
    kept[phys] = state[i];
    norm2 += std::norm(state[i]);
  }
  if (!(norm2 > 1e-300)) throw EmptyResult("project_ancillas: ancilla-up branch is empty");
  StateVector out(n_phys, std::move(kept));
  out.normalize();
  return {std::move(out), norm2};
}

// ---------------------------------------------------------------------------
// Noisy sampling

namespace detail {

struct ErrorEvent {
  std::uint32_t gate;
  std::uint8_t pauli;  // 1q: 1..3 = X,Y,Z; CX: 1..15 = 4*p_control + p_target
  auto operator<=>(const ErrorEvent&) const = default;
};

inline void apply_pauli(StateVector& s, int q, int code) {
  switch (code) {
    case 1: s.apply_x(q); break;
    case 2: s.apply_y(q); break;
    case 3: s.apply_z(q); break;
    default: break;
  }
}

inline void apply_error(StateVector& s, const GateOp& op, int code) {
  if (op.kind() == GateKind::CX) {
    apply_pauli(s, op.qubit(0), code / 4);
    apply_pauli(s, op.qubit(1), code % 4);
  } else {
    apply_pauli(s, op.qubit(0), code);
  }
}

inline void apply_adjoint(StateVector& s, const GateOp& op) {
  switch (op.kind()) {
    case GateKind::U3: s.apply_1q(op.qubit(0), op.matrix2().adjoint()); break;
    case GateKind::U8:
      s.apply_u8(op.qubit(0), op.qubit(1), op.qubit(2), op.matrix8().adjoint());
      break;
    default: s.apply(op); break;  // X, H, CX are involutions
  }
}

/// Gates (ascending) reachable from the errors, and the qubits they touch.
struct Lightcone {
  std::vector<std::size_t> gates;
  std::vector<int> qubits;  // ascending
};

inline Lightcone forward_lightcone(const std::vector<GateOp>& ops,
                                   const std::vector<ErrorEvent>& pattern) {
  Lightcone cone;
  std::vector<bool> tainted;
  auto taint = [&](int q) {
    if (static_cast<std::size_t>(q) >= tainted.size()) tainted.resize(static_cast<std::size_t>(q) + 1);
    tainted[static_cast<std::size_t>(q)] = true;
  };
  auto is_tainted = [&](int q) {
    return static_cast<std::size_t>(q) < tainted.size() && tainted[static_cast<std::size_t>(q)];
  };
  std::size_t next = 0;
  for (std::size_t g = pattern.front().gate; g < ops.size(); ++g) {
    bool hit = false;
    while (next < pattern.size() && pattern[next].gate == g) {
      hit = true;
      ++next;
    }
    for (int q : ops[g].qubits()) hit = hit || is_tainted(q);
    if (!hit) continue;
    cone.gates.push_back(g);
    for (int q : ops[g].qubits()) taint(q);
  }
  for (std::size_t q = 0; q < tainted.size(); ++q) {
    if (tainted[q]) cone.qubits.push_back(static_cast<int>(q));
  }
  return cone;
}

/// Applies the listed gates in order, inserting each error after its gate.
inline void replay_with_errors(StateVector& s, const std::vector<GateOp>& ops,
                               const std::vector<ErrorEvent>& pattern,
                               std::span<const std::size_t> gates) {
  std::size_t next = 0;
  for (std::size_t g : gates) {
    s.apply(ops[g]);
    while (next < pattern.size() && pattern[next].gate < g) ++next;
    while (next < pattern.size() && pattern[next].gate == g) {
      apply_error(s, ops[g], pattern[next].pauli);
      ++next;
    }
  }
}

/// Remaps a gate onto a scratch register.
inline GateOp remap(const GateOp& op, std::span<const int> to_local) {
  auto m = [&](int i) { return to_local[static_cast<std::size_t>(op.qubit(i))]; };
  switch (op.kind()) {
    case GateKind::X: return GateOp::x(m(0));
    case GateKind::H: return GateOp::h(m(0));
    case GateKind::U3: {
      const auto& a = op.angles();
      return GateOp::u3(m(0), a[0], a[1], a[2]);
    }
    case GateKind::CX: return GateOp::cx(m(0), m(1));
    case GateKind::U8: return GateOp::u8(m(0), m(1), m(2), op.matrix8());
  }
  return op;
}

/// Cones spanning at most this many qubits are handled as a dense local
/// operator instead of a full-register replay.
inline constexpr std::size_t kMaxLocalConeQubits = 8;

/// Operator C on the cone's qubits with noisy final state = C |final>,
/// where C = (cone gates with errors) (cone gates)^dagger; every gate
/// outside the cone commutes past the errors.
struct LocalConjugation {
  std::vector<int> support;  // scratch index bit i is support[i]
  Eigen::MatrixXcd matrix;
  std::vector<std::uint64_t> masks;  // scratch index -> register bits
};

inline LocalConjugation local_conjugation(const std::vector<GateOp>& ops, int num_qubits,
                                          const std::vector<ErrorEvent>& pattern,
                                          const Lightcone& cone) {
  LocalConjugation out;
  out.support = cone.qubits;
  const int k = static_cast<int>(out.support.size());
  std::vector<int> to_local(static_cast<std::size_t>(num_qubits), -1);
  for (int i = 0; i < k; ++i) to_local[static_cast<std::size_t>(out.support[i])] = i;
  std::vector<GateOp> local_ops;
  local_ops.reserve(cone.gates.size());
  std::vector<ErrorEvent> local_pattern;
  for (std::size_t i = 0; i < cone.gates.size(); ++i) {
    local_ops.push_back(remap(ops[cone.gates[i]], to_local));
    for (const auto& e : pattern) {
      if (e.gate == cone.gates[i]) local_pattern.push_back({static_cast<std::uint32_t>(i), e.pauli});
    }
  }
  std::vector<std::size_t> order(local_ops.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::uint64_t dim = std::uint64_t{1} << k;
  out.matrix.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t col = 0; col < dim; ++col) {
    StateVector v(k, col);
    for (auto it = local_ops.rbegin(); it != local_ops.rend(); ++it) apply_adjoint(v, *it);
    replay_with_errors(v, local_ops, local_pattern, order);
    for (std::uint64_t row = 0; row < dim; ++row) {
      out.matrix(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = v[row];
    }
  }
  out.masks.resize(dim);
  for (std::uint64_t t = 0; t < dim; ++t) {
    std::uint64_t m = 0;
    for (int i = 0; i < k; ++i) {
      if ((t >> i) & 1u) m |= std::uint64_t{1} << out.support[static_cast<std::size_t>(i)];
    }
    out.masks[t] = m;
  }
  return out;
}

/// Draws from C|final>: the qubits outside C's support keep their noiseless
/// marginal, so they come from the noiseless sampler and the local bits
/// from the conditional amplitudes.
template <class Gen>
std::uint64_t draw_conjugated(const StateVector& final_state, const OutcomeSampler& noiseless,
                              const LocalConjugation& c, Gen& gen) {
  const std::size_t dim = c.masks.size();
  const std::uint64_t base = noiseless.draw(gen) & ~c.masks.back();
  Eigen::VectorXcd local(static_cast<Eigen::Index>(dim));
  for (std::size_t t = 0; t < dim; ++t) local(static_cast<Eigen::Index>(t)) = final_state[base | c.masks[t]];
  const Eigen::VectorXcd out = c.matrix * local;
  const Eigen::VectorXd weights = out.cwiseAbs2();
  double u = uniform01(gen) * weights.sum();
  std::size_t pick = dim - 1;
  for (std::size_t t = 0; t < dim; ++t) {
    const double wt = weights(static_cast<Eigen::Index>(t));
    if (u < wt) {
      pick = t;
      break;
    }
    u -= wt;
  }
  while (pick > 0 && weights(static_cast<Eigen::Index>(pick)) == 0) --pick;
  return base | c.masks[pick];
}

}  // namespace detail

/// Samples shots of circuit c run from |0...0> under the noise model, one
/// Pauli trajectory per shot. Each shot draws from its own stream derived
/// from (seed, shot index), so the histogram does not depend on thread
/// count. Shots with identical error patterns share one simulation.
inline ShotCounts run_trajectories(const Circuit& c, const NoiseModel& noise,
                                   std::uint64_t shots, std::uint64_t seed) {
  noise.validate();
  if (shots < 1) throw InvalidArgument("run_trajectories: shots must be >= 1");
  const auto& ops = c.ops();
  const int n = c.num_qubits();

  std::vector<double> error_prob(ops.size(), 0.0);
  for (std::size_t g = 0; g < ops.size(); ++g) {
    if (ops[g].kind() == GateKind::CX) {
      error_prob[g] = noise.cx_depolarizing_prob;
    } else if (ops[g].is_single_qubit()) {
      error_prob[g] = noise.single_qubit_depolarizing_prob;
    }
  }

  std::vector<SplitMix64> streams;
  streams.reserve(shots);
  std::map<std::vector<detail::ErrorEvent>, std::vector<std::uint64_t>> groups;
  std::vector<detail::ErrorEvent> pattern;
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    SplitMix64 gen(derive_seed(seed, shot, 0x7472616a));
    pattern.clear();
    for (std::size_t g = 0; g < ops.size(); ++g) {
      if (error_prob[g] > 0 && uniform01(gen) < error_prob[g]) {
        const std::uint64_t choices = ops[g].kind() == GateKind::CX ? 15 : 3;
        pattern.push_back({static_cast<std::uint32_t>(g),
                           static_cast<std::uint8_t>(1 + uniform_index(gen, choices))});
      }
    }
    streams.push_back(gen);
    groups[pattern].push_back(shot);
  }

  // Noiseless checkpoints so a trajectory only replays the gates after its
  // first error.
  const std::size_t stride = std::max<std::size_t>(1, ops.size() / 16);
  std::vector<StateVector> checkpoints;
  {
    StateVector s(n);
    for (std::size_t g = 0; g < ops.size(); ++g) {
      if (g % stride == 0) checkpoints.push_back(s);
      s.apply(ops[g]);
    }
    checkpoints.push_back(std::move(s));  // final noiseless state
  }
  const StateVector& final_state = checkpoints.back();

  std::vector<std::pair<const std::vector<detail::ErrorEvent>*, const std::vector<std::uint64_t>*>>
      work;
  work.reserve(groups.size());
  for (const auto& [pat, members] : groups) work.emplace_back(&pat, &members);

  const OutcomeSampler noiseless(distribution(final_state));
  std::vector<std::uint64_t> outcome(shots);
  parallel_for(work.size(), [&](std::size_t w) {
    const auto& pat = *work[w].first;
    const auto& members = *work[w].second;
    auto finish = [&](std::uint64_t shot, std::uint64_t idx, SplitMix64& gen) {
      for (int q = 0; q < n; ++q) {
        const auto ro = noise.readout_for(q);
        const double p = ((idx >> q) & 1u) ? ro.p1to0 : ro.p0to1;
        if (p > 0 && uniform01(gen) < p) idx ^= std::uint64_t{1} << q;
      }
      outcome[shot] = idx;
    };
    if (pat.empty()) {
      for (std::uint64_t shot : members) {
        SplitMix64 gen = streams[shot];
        finish(shot, noiseless.draw(gen), gen);
      }
      return;
    }
    const auto cone = detail::forward_lightcone(ops, pat);
    const double local_cost =
        std::ldexp(1.0, 2 * static_cast<int>(cone.qubits.size())) *
        static_cast<double>(cone.gates.size() + members.size());
    const double full_cost = std::ldexp(1.0, n) * static_cast<double>(2 * cone.gates.size() + 2);
    if (cone.qubits.size() <= detail::kMaxLocalConeQubits && local_cost < full_cost) {
      const auto conj = detail::local_conjugation(ops, n, pat, cone);
      for (std::uint64_t shot : members) {
        SplitMix64 gen = streams[shot];
        finish(shot, detail::draw_conjugated(final_state, noiseless, conj, gen), gen);
      }
      return;
    }
    const std::size_t first = pat.front().gate;
    const std::size_t start = (first / stride) * stride;
    StateVector s = final_state;
    if (2 * cone.gates.size() < ops.size() - start) {
      for (auto it = cone.gates.rbegin(); it != cone.gates.rend(); ++it) {
        detail::apply_adjoint(s, ops[*it]);
      }
      detail::replay_with_errors(s, ops, pat, cone.gates);
    } else {
      s = checkpoints[first / stride];
      std::vector<std::size_t> tail(ops.size() - start);
      for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = start + i;
      detail::replay_with_errors(s, ops, pat, tail);
    }
    const OutcomeSampler sampler(distribution(s));
    for (std::uint64_t shot : members) {
      SplitMix64 gen = streams[shot];
      finish(shot, sampler.draw(gen), gen);
    }
  });

  std::map<std::uint64_t, std::uint64_t> hist;
  for (auto idx : outcome) ++hist[idx];
  return make_counts(n, shots, seed, hist);
}

/// Raw 3L-bit counts for the configured run.
inline ShotCounts run_shots(const PrepConfig& cfg) {
  cfg.validate();
  if (cfg.shots < 1) throw InvalidArgument("prep: shots must be >= 1");
  if (!cfg.noise) return sample(run_noiseless(cfg), cfg.shots, cfg.seed);
  return run_trajectories(build_prep_circuit(cfg), *cfg.noise, cfg.shots, cfg.seed);
}

// ---------------------------------------------------------------------------
// Post-selection

inline bool ancillas_up(std::string_view raw, int sites) {
  for (int j = 0; j < sites; ++j) {
    if (raw[static_cast<std::size_t>(ancilla_qubit(j))] != '0') return false;
  }
  return true;
}

inline std::string physical_bits(std::string_view raw, int sites) {
  std::string out(static_cast<std::size_t>(2 * sites), '0');
  for (int k = 0; k < 2 * sites; ++k) {
    out[static_cast<std::size_t>(k)] = raw[static_cast<std::size_t>(chain_qubit(k))];
  }
  return out;
}

inline int up_count(std::string_view bits) {
  return static_cast<int>(std::count(bits.begin(), bits.end(), '0'));
}

/// Stage 1: keep shots with every ancilla up and drop the ancilla bits.
inline ShotCounts postselect_ancillas(const ShotCounts& raw, int sites) {
  if (raw.num_qubits != 3 * sites) {
    throw InvalidArgument("postselect: counts must have 3L bits");
  }
  ShotCounts out;
  out.num_qubits = 2 * sites;
  out.shots = raw.shots;
  out.seed = raw.seed;
  out.stage = CountsStage::Ancilla;
  for (const auto& [bits, n] : raw.counts) {
    if (bits.size() != static_cast<std::size_t>(raw.num_qubits)) {
      throw InvalidArgument("postselect: key '" + bits + "' has wrong length");
    }
    if (ancillas_up(bits, sites)) out.counts[physical_bits(bits, sites)] += n;
  }
  return out;
}

/// Stage 2: keep strings whose up-spin count matches the initial singlet
/// product state.
inline ShotCounts conserve_up_count(const ShotCounts& physical, int sites, Boundary b) {
  if (physical.num_qubits != 2 * sites) {
    throw InvalidArgument("postselect: physical counts must have 2L bits");
  }
  ShotCounts out = physical;
  out.stage = CountsStage::Conserved;
  out.counts.clear();
  const int ups = expected_up_count(sites, b);
  for (const auto& [bits, n] : physical.counts) {
    if (up_count(bits) == ups) out.counts[bits] += n;
  }
  return out;
}

/// Both stages. Throws EmptyResult when no shot survives.
inline ShotCounts postselect(const ShotCounts& counts, int sites, Boundary b) {
  ShotCounts stage1 = counts.stage == CountsStage::Raw ? postselect_ancillas(counts, sites)
                                                       : counts;
  ShotCounts out = conserve_up_count(stage1, sites, b);
  if (out.total() == 0) throw EmptyResult("postselect: every shot was discarded");
  return out;
}

}  // namespace vbs
