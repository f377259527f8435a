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

// Dense statevector simulation.
//
// Conventions used everywhere in this library:
//   * amplitude index i encodes qubit q as bit q of i;
//   * bit value 0 is spin up, 1 is spin down;
//   * bitstrings are written with qubit 0 leftmost.
// Multi-qubit gate matrices use the opposite (textbook) ordering: for a gate
// on the ordered qubits (a, b, c) the local row index is 4*bit(a) + 2*bit(b)
// + bit(c), so the first listed qubit is the most significant.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vbs/error.hpp"
#include "vbs/rng.hpp"

namespace vbs {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix<Complex, 2, 2>;
using Mat4 = Eigen::Matrix<Complex, 4, 4>;
using Mat8 = Eigen::Matrix<Complex, 8, 8>;

inline constexpr std::string_view kBitOrder = "q0-leftmost,0=up";
inline constexpr int kMaxQubits = 30;

// ---------------------------------------------------------------------------
// Gate matrices

/// U3(theta, phi, lambda) =
///   [[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]]
inline Mat2 u3_matrix(double theta, double phi, double lam) {
  if (!std::isfinite(theta) || !std::isfinite(phi) || !std::isfinite(lam)) {
    throw InvalidArgument("u3_matrix: non-finite angle");
  }
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Mat2 m;
  m << c, -std::polar(s, lam), std::polar(s, phi), std::polar(c, phi + lam);
  return m;
}

inline Mat2 pauli_x_matrix() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}

inline Mat2 hadamard_matrix() {
  const double r = 1.0 / std::sqrt(2.0);
  Mat2 m;
  m << r, r, r, -r;
  return m;
}

/// CX in the (control, target) basis; flips the target when control is 1.
inline Mat4 cx_matrix() {
  Mat4 m = Mat4::Zero();
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
  return m;
}

/// max |G^dagger G - I|.
template <class Derived>
double unitarity_defect(const Eigen::MatrixBase<Derived>& g) {
  const auto n = g.rows();
  return (g.adjoint() * g - Derived::Identity(n, n)).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Gates and circuits

enum class GateKind { X, H, CX, U3, U8 };

inline std::string_view to_string(GateKind k) {
  switch (k) {
    case GateKind::X: return "X";
    case GateKind::H: return "H";
    case GateKind::CX: return "CX";
    case GateKind::U3: return "U3";
    case GateKind::U8: return "U8";
  }
  return "?";
}

/// One primitive gate. Construct through the named factories.
class GateOp {
 public:
  static GateOp x(int q) { return single(GateKind::X, q, pauli_x_matrix()); }
  static GateOp h(int q) { return single(GateKind::H, q, hadamard_matrix()); }
  static GateOp u3(int q, double theta, double phi, double lam) {
    GateOp op = single(GateKind::U3, q, u3_matrix(theta, phi, lam));
    op.angles_ = {theta, phi, lam};
    return op;
  }
  static GateOp cx(int control, int target) {
    if (control == target) throw InvalidArgument("CX: control == target");
    GateOp op;
    op.kind_ = GateKind::CX;
    op.qubits_ = {control, target, -1};
    op.arity_ = 2;
    return op;
  }
  /// 3-qubit unitary on (q0, q1, q2); q0 is the most significant bit of
  /// the matrix basis.
  static GateOp u8(int q0, int q1, int q2, const Mat8& u) {
    if (q0 == q1 || q1 == q2 || q0 == q2) {
      throw InvalidArgument("U8: qubits must be distinct");
    }
    if (!u.allFinite() || unitarity_defect(u) > 1e-10) {
      throw InvalidArgument("U8: matrix is not unitary within 1e-10");
    }
    GateOp op;
    op.kind_ = GateKind::U8;
    op.qubits_ = {q0, q1, q2};
    op.arity_ = 3;
    op.u8_ = std::make_shared<const Mat8>(u);
    return op;
  }

  GateKind kind() const { return kind_; }
  int arity() const { return arity_; }
  std::span<const int> qubits() const { return {qubits_.data(), std::size_t(arity_)}; }
  int qubit(int i) const { return qubits_[i]; }
  /// (theta, phi, lambda); zero for non-U3 gates.
  const std::array<double, 3>& angles() const { return angles_; }
  /// 2x2 matrix of a single-qubit gate.
  const Mat2& matrix2() const { return m2_; }
  const Mat8& matrix8() const { return *u8_; }

  bool is_single_qubit() const { return arity_ == 1; }

 private:
  static GateOp single(GateKind k, int q, const Mat2& m) {
    if (q < 0) throw InvalidArgument("gate: negative qubit index");
    GateOp op;
    op.kind_ = k;
    op.qubits_ = {q, -1, -1};
    op.arity_ = 1;
    op.m2_ = m;
    return op;
  }

  GateKind kind_ = GateKind::X;
  std::array<int, 3> qubits_{-1, -1, -1};
  int arity_ = 0;
  std::array<double, 3> angles_{0, 0, 0};
  Mat2 m2_ = Mat2::Identity();
  std::shared_ptr<const Mat8> u8_;
};

class Circuit {
 public:
  explicit Circuit(int num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits < 1 || num_qubits > kMaxQubits) {
      throw InvalidArgument("circuit: qubit count out of range");
    }
  }

  int num_qubits() const { return num_qubits_; }
  const std::vector<GateOp>& ops() const { return ops_; }
  std::size_t size() const { return ops_.size(); }

  Circuit& add(GateOp op) {
    for (int q : op.qubits()) {
      if (q < 0 || q >= num_qubits_) {
        throw InvalidArgument("circuit: gate references qubit " +
                              std::to_string(q) + " outside register of " +
                              std::to_string(num_qubits_));
      }
    }
    ops_.push_back(std::move(op));
    return *this;
  }

  /// Appends another circuit with its qubit i mapped to mapping[i].
  Circuit& append_mapped(const Circuit& other, std::span<const int> mapping);

  std::size_t count(GateKind k) const {
    std::size_t n = 0;
    for (const auto& op : ops_) n += op.kind() == k;
    return n;
  }

 private:
  int num_qubits_;
  std::vector<GateOp> ops_;
};

inline Circuit& Circuit::append_mapped(const Circuit& other,
                                       std::span<const int> mapping) {
  if (mapping.size() != static_cast<std::size_t>(other.num_qubits())) {
    throw InvalidArgument("append_mapped: mapping size mismatch");
  }
  for (const auto& op : other.ops()) {
    auto m = [&](int i) { return mapping[op.qubit(i)]; };
    switch (op.kind()) {
      case GateKind::X: add(GateOp::x(m(0))); break;
      case GateKind::H: add(GateOp::h(m(0))); break;
      case GateKind::U3: {
        const auto& a = op.angles();
        add(GateOp::u3(m(0), a[0], a[1], a[2]));
        break;
      }
      case GateKind::CX: add(GateOp::cx(m(0), m(1))); break;
      case GateKind::U8: add(GateOp::u8(m(0), m(1), m(2), op.matrix8())); break;
    }
  }
  return *this;
}

// ---------------------------------------------------------------------------
// Bitstrings

inline std::string to_bitstring(std::uint64_t index, int num_qubits) {
  std::string s(static_cast<std::size_t>(num_qubits), '0');
  for (int q = 0; q < num_qubits; ++q) {
    if ((index >> q) & 1u) s[static_cast<std::size_t>(q)] = '1';
  }
  return s;
}

inline std::uint64_t from_bitstring(std::string_view bits) {
  if (bits.empty() || bits.size() > 63) {
    throw InvalidArgument("bitstring: bad length");
  }
  std::uint64_t index = 0;
  for (std::size_t q = 0; q < bits.size(); ++q) {
    if (bits[q] == '1') {
      index |= std::uint64_t{1} << q;
    } else if (bits[q] != '0') {
      throw InvalidArgument("bitstring: invalid character in '" +
                            std::string(bits) + "'");
    }
  }
  return index;
}

// ---------------------------------------------------------------------------
// State vectors

class StateVector {
 public:
  /// |0...0> (all spins up).
  explicit StateVector(int num_qubits) : StateVector(num_qubits, std::uint64_t{0}) {}

  StateVector(int num_qubits, std::uint64_t basis_index) : num_qubits_(num_qubits) {
    check_width(num_qubits);
    amps_.assign(std::size_t{1} << num_qubits, Complex{});
    if (basis_index >= amps_.size()) {
      throw InvalidArgument("state: basis index out of range");
    }
    amps_[basis_index] = 1.0;
  }

  StateVector(int num_qubits, std::vector<Complex> amps)
      : num_qubits_(num_qubits), amps_(std::move(amps)) {
    check_width(num_qubits);
    if (amps_.size() != (std::size_t{1} << num_qubits)) {
      throw InvalidArgument("state: amplitude count must be 2^num_qubits");
    }
    for (const auto& a : amps_) {
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
        throw InvalidArgument("state: non-finite amplitude");
      }
    }
  }

  static StateVector from_bitstring(std::string_view bits) {
    return {static_cast<int>(bits.size()), vbs::from_bitstring(bits)};
  }

  int num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }
  Complex& operator[](std::size_t i) { return amps_[i]; }

  double norm_squared() const {
    double s = 0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }
  bool normalized(double tol = 1e-10) const {
    return std::abs(norm_squared() - 1.0) <= tol;
  }
  void normalize() {
    const double n = norm_squared();
    if (n <= 0) throw EmptyResult("state: cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(n);
    for (auto& a : amps_) a *= inv;
  }

  /// <this|other>
  Complex inner(const StateVector& other) const {
    if (other.dim() != dim()) throw InvalidArgument("inner: dimension mismatch");
    Complex s{};
    for (std::size_t i = 0; i < amps_.size(); ++i) s += std::conj(amps_[i]) * other.amps_[i];
    return s;
  }

  // In-place gate kernels. Each touches only the strided tuples of the
  // addressed qubits; no 2^n x 2^n matrix is formed.

  void apply_1q(int q, const Mat2& g) {
    check_qubit(q);
    const std::size_t mask = std::size_t{1} << q;
    const Complex g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    for (std::size_t hi = 0; hi < amps_.size(); hi += 2 * mask) {
      for (std::size_t i = hi; i < hi + mask; ++i) {
        const Complex a0 = amps_[i], a1 = amps_[i | mask];
        amps_[i] = g00 * a0 + g01 * a1;
        amps_[i | mask] = g10 * a0 + g11 * a1;
      }
    }
  }

  void apply_x(int q) {
    check_qubit(q);
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t hi = 0; hi < amps_.size(); hi += 2 * mask) {
      for (std::size_t i = hi; i < hi + mask; ++i) std::swap(amps_[i], amps_[i | mask]);
    }
  }

  void apply_y(int q) {
    check_qubit(q);
    const std::size_t mask = std::size_t{1} << q;
    const Complex I{0, 1};
    for (std::size_t hi = 0; hi < amps_.size(); hi += 2 * mask) {
      for (std::size_t i = hi; i < hi + mask; ++i) {
        const Complex a0 = amps_[i], a1 = amps_[i | mask];
        amps_[i] = -I * a1;
        amps_[i | mask] = I * a0;
      }
    }
  }

  void apply_z(int q) {
    check_qubit(q);
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if (i & mask) amps_[i] = -amps_[i];
    }
  }

  void apply_cx(int control, int target) {
    check_qubit(control);
    check_qubit(target);
    if (control == target) throw InvalidArgument("CX: control == target");
    const std::size_t cm = std::size_t{1} << control, tm = std::size_t{1} << target;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if ((i & cm) && !(i & tm)) std::swap(amps_[i], amps_[i | tm]);
    }
  }

  void apply_u8(int q0, int q1, int q2, const Mat8& u) {
    check_qubit(q0);
    check_qubit(q1);
    check_qubit(q2);
    const std::array<std::size_t, 3> m{std::size_t{1} << q0, std::size_t{1} << q1,
                                       std::size_t{1} << q2};
    std::array<std::size_t, 8> offset{};
    for (int k = 0; k < 8; ++k) {
      offset[k] = ((k & 4) ? m[0] : 0) | ((k & 2) ? m[1] : 0) | ((k & 1) ? m[2] : 0);
    }
    const std::size_t all = m[0] | m[1] | m[2];
    std::array<Complex, 8> in{};
    for (std::size_t base = 0; base < amps_.size(); ++base) {
      if (base & all) continue;
      for (int k = 0; k < 8; ++k) in[k] = amps_[base | offset[k]];
      for (int r = 0; r < 8; ++r) {
        Complex acc{};
        for (int c = 0; c < 8; ++c) acc += u(r, c) * in[c];
        amps_[base | offset[r]] = acc;
      }
    }
  }

  void apply(const GateOp& op) {
    switch (op.kind()) {
      case GateKind::X: apply_x(op.qubit(0)); break;
      case GateKind::H:
      case GateKind::U3: apply_1q(op.qubit(0), op.matrix2()); break;
      case GateKind::CX: apply_cx(op.qubit(0), op.qubit(1)); break;
      case GateKind::U8:
        apply_u8(op.qubit(0), op.qubit(1), op.qubit(2), op.matrix8());
        break;
    }
  }

 private:
  static void check_width(int n) {
    if (n < 1 || n > kMaxQubits) throw InvalidArgument("state: qubit count out of range");
  }
  void check_qubit(int q) const {
    if (q < 0 || q >= num_qubits_) {
      throw InvalidArgument("gate: qubit " + std::to_string(q) + " out of range for " +
                            std::to_string(num_qubits_) + "-qubit state");
    }
  }

  int num_qubits_;
  std::vector<Complex> amps_;
};

/// Returns the state after op.
inline StateVector apply_gate(StateVector state, const GateOp& op) {
  state.apply(op);
  return state;
}

inline void apply_circuit_inplace(StateVector& state, const Circuit& c) {
  if (state.num_qubits() != c.num_qubits()) {
    throw InvalidArgument("apply_circuit: circuit width " + std::to_string(c.num_qubits()) +
                          " != state width " + std::to_string(state.num_qubits()));
  }
  for (const auto& op : c.ops()) state.apply(op);
}

inline StateVector apply_circuit(StateVector state, const Circuit& c) {
  apply_circuit_inplace(state, c);
  return state;
}

/// Born-rule probabilities indexed like the amplitudes.
inline std::vector<double> distribution(const StateVector& state) {
  if (!state.normalized()) throw InvalidState("distribution: state is not normalized");
  std::vector<double> p(state.dim());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(state[i]);
  return p;
}

// ---------------------------------------------------------------------------
// Shot histograms

enum class CountsStage { Raw, Ancilla, Conserved };

inline std::string_view to_string(CountsStage s) {
  switch (s) {
    case CountsStage::Raw: return "raw";
    case CountsStage::Ancilla: return "ancilla";
    case CountsStage::Conserved: return "conserved";
  }
  return "?";
}

inline CountsStage parse_counts_stage(std::string_view s) {
  if (s == "raw") return CountsStage::Raw;
  if (s == "ancilla") return CountsStage::Ancilla;
  if (s == "conserved") return CountsStage::Conserved;
  throw InvalidArgument("unknown counts stage '" + std::string(s) + "'");
}

/// Bitstring histogram. Keys follow kBitOrder. After post-selection the
/// total can be below the shots field, which always records executed shots.
struct ShotCounts {
  int num_qubits = 0;
  std::uint64_t shots = 0;
  CountsStage stage = CountsStage::Raw;
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [_, c] : counts) t += c;
    return t;
  }
};

/// Index-keyed histogram to string-keyed counts.
inline ShotCounts make_counts(int num_qubits, std::uint64_t shots, std::uint64_t seed,
                              const std::map<std::uint64_t, std::uint64_t>& by_index) {
  ShotCounts out;
  out.num_qubits = num_qubits;
  out.shots = shots;
  out.seed = seed;
  for (const auto& [idx, c] : by_index) out.counts[to_bitstring(idx, num_qubits)] += c;
  return out;
}

/// Inverse-CDF sampler over a fixed probability table.
class OutcomeSampler {
 public:
  explicit OutcomeSampler(std::span<const double> probs) : cdf_(probs.size()) {
    double acc = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cdf_[i] = acc;
    }
    total_ = acc;
  }

  template <class Gen>
  std::uint64_t draw(Gen& gen) const {
    const double u = uniform01(gen) * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) {
      // u rounded up to the total; take the last entry with nonzero weight.
      it = std::lower_bound(cdf_.begin(), cdf_.end(), total_);
    }
    return static_cast<std::uint64_t>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0;
};

/// Multinomial draw of the requested number of measurements in the computational basis.
/// Deterministic in (state, shots, seed).
inline ShotCounts sample(const StateVector& state, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw InvalidArgument("sample: shots must be >= 1");
  if (!state.normalized()) throw InvalidState("sample: state is not normalized");
  const auto probs = distribution(state);
  const OutcomeSampler sampler(probs);
  Rng gen(seed);
  std::map<std::uint64_t, std::uint64_t> hist;
  for (std::uint64_t s = 0; s < shots; ++s) ++hist[sampler.draw(gen)];
  return make_counts(state.num_qubits(), shots, seed, hist);
}

}  // namespace vbs
