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

// Variational recompilation of a 3-qubit unitary into a nearest-neighbour
// ansatz:
//
//   q0 -U3-----------X--U3-----------------X--U3-- ...
//   q1 -U3-----------*--U3-------*--U3-----*--U3-- ...
//   q2 -U3-----------------------X--U3------------ ...
//        initial      layer 1      layer 2   layer 3
//
// Odd layers entangle the middle qubit with q0, even layers with q2. The
// middle qubit is always the CX control. Angles are stored gate by gate as
// (theta, phi, lambda): 9 for the initial layer, then per layer the middle
// qubit's U3 followed by the outer qubit's U3.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "vbs/error.hpp"
#include "vbs/lbfgsb.hpp"
#include "vbs/parallel.hpp"
#include "vbs/qcore.hpp"
#include "vbs/rng.hpp"

namespace vbs {

/// CX count of the generic isometry synthesis of the embedded unitary; the
/// reference the recompiled block is compared against.
inline constexpr int kIsometryBaselineCx = 24;

inline constexpr double kAngleLower = 0.0;
inline constexpr double kAngleUpper = 4.0 * std::numbers::pi;

struct AnsatzParams {
  int n_layers = 0;
  std::vector<double> angles;

  static std::size_t angle_count(int n_layers) {
    return 9 + 6 * static_cast<std::size_t>(n_layers);
  }

  static AnsatzParams zeros(int n_layers) {
    AnsatzParams p{n_layers, std::vector<double>(angle_count(n_layers), 0.0)};
    p.validate();
    return p;
  }

  /// Angles i.i.d. uniform in [0, 2 pi).
  template <class Gen>
  static AnsatzParams random(int n_layers, Gen& gen) {
    AnsatzParams p{n_layers, std::vector<double>(angle_count(n_layers))};
    for (double& a : p.angles) a = uniform(gen, 0.0, 2.0 * std::numbers::pi);
    p.validate();
    return p;
  }

  void validate() const {
    if (n_layers < 1) throw InvalidArgument("ansatz: n_layers must be >= 1");
    if (angles.size() != angle_count(n_layers)) {
      throw InvalidArgument("ansatz: expected " + std::to_string(angle_count(n_layers)) +
                            " angles for " + std::to_string(n_layers) + " layers, got " +
                            std::to_string(angles.size()));
    }
    for (double a : angles) {
      if (!std::isfinite(a)) throw InvalidArgument("ansatz: non-finite angle");
    }
  }

  bool within_bounds() const {
    return std::all_of(angles.begin(), angles.end(),
                       [](double a) { return a >= kAngleLower && a <= kAngleUpper; });
  }
};

/// Outer qubit entangled with the middle one in layer k (1-based).
inline int layer_partner(int layer) { return layer % 2 == 1 ? 0 : 2; }

inline Circuit ansatz_circuit(const AnsatzParams& params) {
  params.validate();
  Circuit c(3);
  const auto& a = params.angles;
  std::size_t k = 0;
  auto u3 = [&](int q) {
    c.add(GateOp::u3(q, a[k], a[k + 1], a[k + 2]));
    k += 3;
  };
  for (int q = 0; q < 3; ++q) u3(q);
  for (int layer = 1; layer <= params.n_layers; ++layer) {
    const int outer = layer_partner(layer);
    c.add(GateOp::cx(1, outer));
    u3(1);
    u3(outer);
  }
  return c;
}

/// Reverses the three low bits: converts between StateVector indices
/// (qubit 0 least significant) and the 8x8 matrix basis (qubit 0 most
/// significant).
constexpr std::size_t reverse3(std::size_t i) {
  return ((i & 1) << 2) | (i & 2) | ((i >> 2) & 1);
}

/// Matrix of a 3-qubit circuit in the U8 basis, built column by column
/// with the statevector simulator.
inline Mat8 circuit_unitary3(const Circuit& c) {
  if (c.num_qubits() != 3) throw InvalidArgument("circuit_unitary3: need 3 qubits");
  Mat8 m;
  for (std::size_t col = 0; col < 8; ++col) {
    StateVector s(3, reverse3(col));
    apply_circuit_inplace(s, c);
    for (std::size_t row = 0; row < 8; ++row) {
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = s[reverse3(row)];
    }
  }
  return m;
}

inline Mat8 ansatz_unitary(const AnsatzParams& params) {
  return circuit_unitary3(ansatz_circuit(params));
}

/// 1 - Re Tr(target^dagger candidate) / 8. Zero iff candidate == target;
/// equals 2 for candidate == -target.
inline double loss(const Mat8& target, const Mat8& candidate) {
  return 1.0 - (target.conjugate().cwiseProduct(candidate)).sum().real() / 8.0;
}

inline double loss(const Mat8& target, const AnsatzParams& params) {
  return loss(target, ansatz_unitary(params));
}

/// Fast loss and central-difference gradient for one ansatz shape.
///
/// A forward sweep stores every prefix product; a backward sweep carries
/// target^dagger times the suffix. For a U3 gate the trace then collapses to
/// a 2x2 contraction, so each perturbed loss costs O(1) instead of a full
/// circuit rebuild. The difference quotient itself is the plain central
/// difference of the loss.
class AnsatzEvaluator {
 public:
  AnsatzEvaluator(const Mat8& target, int n_layers)
      : target_conj_(target.conjugate()), target_adj_(target.adjoint()), n_layers_(n_layers) {
    if (n_layers < 1) throw InvalidArgument("ansatz: n_layers must be >= 1");
    int offset = 0;
    for (int q = 0; q < 3; ++q, offset += 3) gates_.push_back({false, q, -1, offset});
    for (int layer = 1; layer <= n_layers; ++layer) {
      const int outer = layer_partner(layer);
      gates_.push_back({true, 1, outer, -1});
      gates_.push_back({false, 1, -1, offset});
      offset += 3;
      gates_.push_back({false, outer, -1, offset});
      offset += 3;
    }
    prefix_.resize(gates_.size() + 1);
  }

  int n_layers() const { return n_layers_; }
  std::size_t dimension() const { return AnsatzParams::angle_count(n_layers_); }

  double loss(std::span<const double> angles) const {
    check(angles);
    Mat8 m = Mat8::Identity();
    for (const auto& gate : gates_) apply_left(m, gate, angles);
    return 1.0 - target_conj_.cwiseProduct(m).sum().real() / 8.0;
  }

  double loss_and_gradient(std::span<const double> angles, std::span<double> grad,
                           double step = 1e-6) const {
    check(angles);
    if (grad.size() != dimension()) throw InvalidArgument("gradient: wrong output size");
    prefix_[0] = Mat8::Identity();
    for (std::size_t k = 0; k < gates_.size(); ++k) {
      prefix_[k + 1] = prefix_[k];
      apply_left(prefix_[k + 1], gates_[k], angles);
    }
    const double value = 1.0 - target_conj_.cwiseProduct(prefix_.back()).sum().real() / 8.0;

    Mat8 back = target_adj_;
    for (std::size_t k = gates_.size(); k-- > 0;) {
      const auto& gate = gates_[k];
      if (!gate.is_cx) {
        // m(a,b) = sum_r sum_z prefix[(b,r), z] * back[z, (a,r)]
        const Mat8& pre = prefix_[k];
        const int bit = 2 - gate.qubit;
        const std::size_t mask = std::size_t{1} << bit;
        Complex m[2][2] = {};
        for (std::size_t r = 0; r < 8; ++r) {
          if (r & mask) continue;
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              const auto row = static_cast<Eigen::Index>(b ? (r | mask) : r);
              const auto col = static_cast<Eigen::Index>(a ? (r | mask) : r);
              m[a][b] += (pre.row(row) * back.col(col)).value();
            }
          }
        }
        const auto o = static_cast<std::size_t>(gate.offset);
        std::array<double, 3> ang{angles[o], angles[o + 1], angles[o + 2]};
        for (int j = 0; j < 3; ++j) {
          auto plus = ang, minus = ang;
          plus[static_cast<std::size_t>(j)] += step;
          minus[static_cast<std::size_t>(j)] -= step;
          const double tp = contract(u3_matrix(plus[0], plus[1], plus[2]), m);
          const double tm = contract(u3_matrix(minus[0], minus[1], minus[2]), m);
          grad[o + static_cast<std::size_t>(j)] = -(tp - tm) / (16.0 * step);
        }
      }
      apply_right(back, gate, angles);
    }
    return value;
  }

 private:
  struct Gate {
    bool is_cx;
    int qubit;   // U3 target, or CX control
    int target;  // CX target
    int offset;  // first angle index for U3
  };

  void check(std::span<const double> angles) const {
    if (angles.size() != dimension()) {
      throw InvalidArgument("ansatz: angle count does not match layer count");
    }
  }

  // Re sum_ab g(a,b) m[a][b]
  static double contract(const Mat2& g, const Complex (&m)[2][2]) {
    return (g(0, 0) * m[0][0] + g(0, 1) * m[0][1] + g(1, 0) * m[1][0] + g(1, 1) * m[1][1])
        .real();
  }

  Mat2 gate_matrix(const Gate& gate, std::span<const double> angles) const {
    const auto o = static_cast<std::size_t>(gate.offset);
    return u3_matrix(angles[o], angles[o + 1], angles[o + 2]);
  }

  // m <- G m
  void apply_left(Mat8& m, const Gate& gate, std::span<const double> angles) const {
    if (gate.is_cx) {
      const std::size_t cm = std::size_t{1} << (2 - gate.qubit);
      const std::size_t tm = std::size_t{1} << (2 - gate.target);
      for (std::size_t i = 0; i < 8; ++i) {
        if ((i & cm) && !(i & tm)) {
          m.row(static_cast<Eigen::Index>(i)).swap(m.row(static_cast<Eigen::Index>(i | tm)));
        }
      }
      return;
    }
    const Mat2 g = gate_matrix(gate, angles);
    const std::size_t mask = std::size_t{1} << (2 - gate.qubit);
    for (std::size_t i = 0; i < 8; ++i) {
      if (i & mask) continue;
      const auto i0 = static_cast<Eigen::Index>(i), i1 = static_cast<Eigen::Index>(i | mask);
      for (Eigen::Index c = 0; c < 8; ++c) {
        const Complex a0 = m(i0, c), a1 = m(i1, c);
        m(i0, c) = g(0, 0) * a0 + g(0, 1) * a1;
        m(i1, c) = g(1, 0) * a0 + g(1, 1) * a1;
      }
    }
  }

  // m <- m G
  void apply_right(Mat8& m, const Gate& gate, std::span<const double> angles) const {
    if (gate.is_cx) {
      const std::size_t cm = std::size_t{1} << (2 - gate.qubit);
      const std::size_t tm = std::size_t{1} << (2 - gate.target);
      for (std::size_t j = 0; j < 8; ++j) {
        if ((j & cm) && !(j & tm)) {
          m.col(static_cast<Eigen::Index>(j)).swap(m.col(static_cast<Eigen::Index>(j | tm)));
        }
      }
      return;
    }
    const Mat2 g = gate_matrix(gate, angles);
    const std::size_t mask = std::size_t{1} << (2 - gate.qubit);
    for (std::size_t j = 0; j < 8; ++j) {
      if (j & mask) continue;
      const auto j0 = static_cast<Eigen::Index>(j), j1 = static_cast<Eigen::Index>(j | mask);
      for (Eigen::Index r = 0; r < 8; ++r) {
        const Complex a0 = m(r, j0), a1 = m(r, j1);
        m(r, j0) = a0 * g(0, 0) + a1 * g(1, 0);
        m(r, j1) = a0 * g(0, 1) + a1 * g(1, 1);
      }
    }
  }

  Mat8 target_conj_;
  Mat8 target_adj_;
  int n_layers_;
  std::vector<Gate> gates_;
  mutable std::vector<Mat8> prefix_;
};

/// Central-difference gradient of loss(target, params).
inline std::vector<double> gradient(const Mat8& target, const AnsatzParams& params,
                                    double step = 1e-6) {
  params.validate();
  AnsatzEvaluator eval(target, params.n_layers);
  std::vector<double> g(params.angles.size());
  eval.loss_and_gradient(params.angles, g, step);
  return g;
}

struct RandomStateFidelity {
  double mean = 0;
  double min = 0;
};

/// Average of |<b|V^dagger U|b>| over random normalized states b with
/// i.i.d. complex Gaussian entries.
inline RandomStateFidelity fidelity_random_state(const Mat8& u, const Mat8& v, int trials,
                                                 std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("fidelity_random_state: trials must be >= 1");
  Rng gen(seed);
  RandomStateFidelity out{0.0, std::numeric_limits<double>::infinity()};
  Eigen::Matrix<Complex, 8, 1> beta;
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < 8; ++i) beta(i) = Complex(gaussian(gen), gaussian(gen));
    beta.normalize();
    const double f = std::abs((v * beta).dot(u * beta));
    out.mean += f;
    out.min = std::min(out.min, f);
  }
  out.mean /= trials;
  return out;
}

struct OptimizerConfig {
  int max_iterations = 600;  // per local minimization
  int basin_hops = 20;
  double perturbation_scale = 0.3;  // radians
  int rounds = 20;
  std::uint64_t seed = 0;
  double loss_tolerance = 1e-6;
  int fidelity_trials = 100;
  int lbfgs_memory = 10;

  void validate() const {
    if (max_iterations < 1 || basin_hops < 0 || rounds < 1 || fidelity_trials < 1 ||
        lbfgs_memory < 1 || !(perturbation_scale > 0) || !(loss_tolerance > 0)) {
      throw InvalidArgument("optimizer config: values must be positive");
    }
  }
};

struct RecompileResult {
  AnsatzParams params;
  double final_loss = 0;
  double fidelity_estimate = 0;
  double fidelity_min = 0;
  int iterations_used = 0;
  int hops_used = 0;
  int cx_count = 0;
  std::uint64_t seed = 0;
  /// Best loss after the initial descent and after each hop.
  std::vector<double> best_loss_history;
};

/// Basin hopping around the box-constrained quasi-Newton descent. Each hop
/// perturbs the best point with Gaussian noise and keeps the result only if
/// it improves the loss.
inline RecompileResult minimize(const Mat8& target, const AnsatzParams& start,
                                const OptimizerConfig& cfg) {
  start.validate();
  cfg.validate();
  const std::size_t n = start.angles.size();
  const std::vector<double> lower(n, kAngleLower), upper(n, kAngleUpper);
  AnsatzEvaluator eval(target, start.n_layers);
  auto fg = [&](std::span<const double> x, std::span<double> g) {
    return eval.loss_and_gradient(x, g);
  };
  BoxMinimizerOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.memory = cfg.lbfgs_memory;
  opt.target_value = cfg.loss_tolerance;

  RecompileResult out;
  out.seed = cfg.seed;
  auto best = minimize_box(fg, start.angles, lower, upper, opt);
  out.iterations_used = best.iterations;
  out.best_loss_history.push_back(best.value);

  Rng gen(derive_seed(cfg.seed, 0, 0x686f70));
  for (int hop = 0; hop < cfg.basin_hops && !(best.value < cfg.loss_tolerance); ++hop) {
    std::vector<double> x = best.x;
    for (double& a : x) {
      a = std::clamp(a + cfg.perturbation_scale * gaussian(gen), kAngleLower, kAngleUpper);
    }
    auto local = minimize_box(fg, std::move(x), lower, upper, opt);
    out.iterations_used += local.iterations;
    ++out.hops_used;
    if (local.value < best.value) best = std::move(local);
    out.best_loss_history.push_back(best.value);
  }

  out.params = AnsatzParams{start.n_layers, best.x};
  out.final_loss = eval.loss(best.x);
  const auto fid = fidelity_random_state(target, ansatz_unitary(out.params),
                                         cfg.fidelity_trials, derive_seed(cfg.seed, 0, 0x666964));
  out.fidelity_estimate = fid.mean;
  out.fidelity_min = fid.min;
  out.cx_count = start.n_layers;
  return out;
}

struct RecompileSummary {
  int n_layers = 0;
  RecompileResult best;
  std::vector<RecompileResult> rounds;
  double mean_fidelity = 0;
  double stderr_fidelity = 0;
  double max_fidelity = 0;
};

/// cfg.rounds independent restarts from uniform random angles; the
/// minimum-loss round wins (ties go to the lower round index).
inline RecompileSummary recompile(const Mat8& target, int n_layers, const OptimizerConfig& cfg) {
  cfg.validate();
  RecompileSummary s;
  s.n_layers = n_layers;
  s.rounds.resize(static_cast<std::size_t>(cfg.rounds));
  parallel_for(s.rounds.size(), [&](std::size_t r) {
    Rng start_gen(derive_seed(cfg.seed, r, 0x7374617274));
    const AnsatzParams start = AnsatzParams::random(n_layers, start_gen);
    OptimizerConfig round_cfg = cfg;
    round_cfg.seed = derive_seed(cfg.seed, r);
    s.rounds[r] = minimize(target, start, round_cfg);
  });
  std::size_t best = 0;
  double sum = 0, sum2 = 0;
  for (std::size_t r = 0; r < s.rounds.size(); ++r) {
    if (s.rounds[r].final_loss < s.rounds[best].final_loss) best = r;
    const double f = s.rounds[r].fidelity_estimate;
    sum += f;
    sum2 += f * f;
    s.max_fidelity = std::max(s.max_fidelity, f);
  }
  const double k = static_cast<double>(s.rounds.size());
  s.mean_fidelity = sum / k;
  if (k > 1) {
    const double var = std::max(0.0, (sum2 - k * s.mean_fidelity * s.mean_fidelity) / (k - 1));
    s.stderr_fidelity = std::sqrt(var / k);
  }
  s.best = s.rounds[best];
  s.best.seed = cfg.seed;
  return s;
}

}  // namespace vbs
