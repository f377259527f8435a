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

// Exact AKLT amplitudes from the matrix-product representation. This is the
// reference every simulated distribution is checked against.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vbs/error.hpp"
#include "vbs/qcore.hpp"

namespace vbs {

enum class Spin1 { Plus, Zero, Minus };

enum class Boundary { Open, Periodic };

inline std::string_view to_string(Boundary b) {
  return b == Boundary::Open ? "obc" : "pbc";
}

inline Boundary parse_boundary(std::string_view s) {
  if (s == "obc" || s == "OBC") return Boundary::Open;
  if (s == "pbc" || s == "PBC") return Boundary::Periodic;
  throw InvalidArgument("unknown boundary '" + std::string(s) + "' (expected obc|pbc)");
}

/// Site tensors and boundary vectors of the AKLT chain.
///
/// tau+ and tau- are the raising/lowering matrices [[0,1],[0,0]] and
/// [[0,0],[1,0]]; with this normalization the two-site amplitudes come out
/// as +-sqrt(2)/3 (open) and Tr[A+ A-] = -2/3 (periodic).
struct MpsAklt {
  Eigen::Matrix2d a_plus;
  Eigen::Matrix2d a_zero;
  Eigen::Matrix2d a_minus;
  Eigen::Vector2d b_left{1.0, 0.0};
  Eigen::Vector2d b_right{0.0, 1.0};
  Boundary boundary = Boundary::Open;

  static MpsAklt make(Boundary boundary) {
    MpsAklt m;
    Eigen::Matrix2d tau_plus, tau_minus, tau_z;
    tau_plus << 0, 1, 0, 0;
    tau_minus << 0, 0, 1, 0;
    tau_z << 1, 0, 0, -1;
    m.a_plus = std::sqrt(2.0 / 3.0) * tau_plus;
    m.a_zero = -std::sqrt(1.0 / 3.0) * tau_z;
    m.a_minus = -std::sqrt(2.0 / 3.0) * tau_minus;
    m.boundary = boundary;
    return m;
  }

  const Eigen::Matrix2d& site(Spin1 s) const {
    switch (s) {
      case Spin1::Plus: return a_plus;
      case Spin1::Zero: return a_zero;
      case Spin1::Minus: return a_minus;
    }
    return a_zero;
  }
};

/// Unnormalized coefficient of |sigma_1 ... sigma_L>.
inline double amplitude(const MpsAklt& mps, std::span<const Spin1> sigma) {
  if (sigma.size() < 2) throw InvalidArgument("amplitude: chain length must be >= 2");
  Eigen::Matrix2d prod = mps.site(sigma[0]);
  for (std::size_t i = 1; i < sigma.size(); ++i) prod = prod * mps.site(sigma[i]);
  if (mps.boundary == Boundary::Periodic) return prod.trace();
  return mps.b_left.dot(prod * mps.b_right);
}

/// Normalized real coefficients over the 2L spin-1/2 qubits, indexed with
/// the library bit convention (spin-1 site j lives on qubits 2j, 2j+1).
/// |+> = |00>, |O> = (|01> + |10>)/sqrt(2), |-> = |11>.
inline std::vector<double> qubit_amplitudes(const MpsAklt& mps, int sites) {
  if (sites < 2) throw InvalidArgument("qubit_amplitudes: sites must be >= 2");
  if (sites > 12) throw InvalidArgument("qubit_amplitudes: sites must be <= 12");
  const int n = 2 * sites;
  std::vector<double> coeff(std::size_t{1} << n, 0.0);
  std::vector<Spin1> sigma(static_cast<std::size_t>(sites), Spin1::Plus);
  const double r = 1.0 / std::sqrt(2.0);

  std::uint64_t configs = 1;
  for (int i = 0; i < sites; ++i) configs *= 3;
  for (std::uint64_t c = 0; c < configs; ++c) {
    std::uint64_t rest = c;
    for (int i = 0; i < sites; ++i) {
      sigma[static_cast<std::size_t>(i)] = static_cast<Spin1>(rest % 3);
      rest /= 3;
    }
    const double a = amplitude(mps, sigma);
    if (a == 0.0) continue;
    // Expand the product over sites; each |O> splits into two branches.
    std::vector<std::pair<std::uint64_t, double>> terms{{0, a}};
    for (int i = 0; i < sites; ++i) {
      const std::uint64_t lo = std::uint64_t{1} << (2 * i), hi = lo << 1;
      std::vector<std::pair<std::uint64_t, double>> next;
      next.reserve(terms.size() * 2);
      for (const auto& [idx, w] : terms) {
        switch (sigma[static_cast<std::size_t>(i)]) {
          case Spin1::Plus: next.emplace_back(idx, w); break;
          case Spin1::Minus: next.emplace_back(idx | lo | hi, w); break;
          case Spin1::Zero:
            next.emplace_back(idx | hi, w * r);
            next.emplace_back(idx | lo, w * r);
            break;
        }
      }
      terms.swap(next);
    }
    for (const auto& [idx, w] : terms) coeff[idx] += w;
  }

  double norm2 = 0;
  for (double v : coeff) norm2 += v * v;
  if (norm2 <= 0) throw NumericalError("qubit_amplitudes: zero state");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : coeff) v *= inv;
  return coeff;
}

/// Probability of every 2L-bit string with nonzero weight.
inline std::map<std::string, double> qubit_distribution(const MpsAklt& mps, int sites) {
  const auto coeff = qubit_amplitudes(mps, sites);
  std::map<std::string, double> dist;
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    const double p = coeff[i] * coeff[i];
    if (p > 1e-15) dist[to_bitstring(i, 2 * sites)] = p;
  }
  return dist;
}

/// The oracle state as a StateVector over 2L qubits.
inline StateVector brute_force_statevector(const MpsAklt& mps, int sites) {
  const auto coeff = qubit_amplitudes(mps, sites);
  std::vector<Complex> amps(coeff.begin(), coeff.end());
  return {2 * sites, std::move(amps)};
}

/// Dense oracle probabilities indexed like StateVector amplitudes.
inline std::vector<double> oracle_probabilities(Boundary boundary, int sites) {
  auto coeff = qubit_amplitudes(MpsAklt::make(boundary), sites);
  for (double& v : coeff) v = v * v;
  return coeff;
}

}  // namespace vbs
