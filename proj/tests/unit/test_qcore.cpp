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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vbs/qcore.hpp"

namespace {

using vbs::Circuit;
using vbs::Complex;
using vbs::GateOp;
using vbs::StateVector;
using Dense = Eigen::MatrixXcd;

constexpr double kPi = std::numbers::pi;

// Full 2^n matrix of a gate by brute-force basis enumeration, following the
// documented conventions (qubit q = bit q; first listed qubit is the MSB of
// the local matrix index).
Dense dense_gate(const GateOp& op, int n) {
  const std::size_t dim = std::size_t{1} << n;
  Dense full = Dense::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const auto qs = op.qubits();
  const int k = static_cast<int>(qs.size());
  Dense local;
  switch (op.kind()) {
    case vbs::GateKind::CX: local = vbs::cx_matrix(); break;
    case vbs::GateKind::U8: local = op.matrix8(); break;
    default: local = op.matrix2(); break;
  }
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t in_local = 0;
    for (int t = 0; t < k; ++t) in_local = (in_local << 1) | ((col >> qs[t]) & 1u);
    for (std::size_t out_local = 0; out_local < (std::size_t{1} << k); ++out_local) {
      std::size_t row = col;
      for (int t = 0; t < k; ++t) {
        const std::size_t bit = (out_local >> (k - 1 - t)) & 1u;
        row = (row & ~(std::size_t{1} << qs[t])) | (bit << qs[t]);
      }
      full(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
          local(static_cast<Eigen::Index>(out_local), static_cast<Eigen::Index>(in_local));
    }
  }
  return full;
}

Eigen::VectorXcd as_vector(const StateVector& s) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i) v(static_cast<Eigen::Index>(i)) = s[i];
  return v;
}

StateVector random_state(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  std::vector<Complex> amps(std::size_t{1} << n);
  for (auto& a : amps) a = Complex(g(gen), g(gen));
  StateVector s(n, std::move(amps));
  s.normalize();
  return s;
}

vbs::Mat8 random_unitary8(std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  vbs::Mat8 m;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) m(i, j) = Complex(g(gen), g(gen));
  Eigen::HouseholderQR<vbs::Mat8> qr(m);
  return qr.householderQ();
}

TEST(U3Matrix, ZeroAnglesIsIdentity) {
  EXPECT_LT((vbs::u3_matrix(0, 0, 0) - vbs::Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(U3Matrix, PiZeroPiIsPauliX) {
  EXPECT_LT((vbs::u3_matrix(kPi, 0, kPi) - vbs::pauli_x_matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(U3Matrix, HalfPiZeroPiIsHadamard) {
  // cos(pi/4) = sin(pi/4) = 1/sqrt2; e^{i pi} = -1.
  const double r = 1 / std::sqrt(2.0);
  vbs::Mat2 h;
  h << r, r, r, -r;
  EXPECT_LT((vbs::u3_matrix(kPi / 2, 0, kPi) - h).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(U3Matrix, ClosedForm) {
  const double t = 0.7, p = 1.9, l = -2.3;
  const auto m = vbs::u3_matrix(t, p, l);
  EXPECT_NEAR(std::abs(m(0, 0) - std::cos(t / 2)), 0, 1e-15);
  EXPECT_NEAR(std::abs(m(0, 1) + std::polar(1.0, l) * std::sin(t / 2)), 0, 1e-15);
  EXPECT_NEAR(std::abs(m(1, 0) - std::polar(1.0, p) * std::sin(t / 2)), 0, 1e-15);
  EXPECT_NEAR(std::abs(m(1, 1) - std::polar(1.0, p + l) * std::cos(t / 2)), 0, 1e-15);
}

TEST(U3Matrix, RejectsNonFinite) {
  EXPECT_THROW(vbs::u3_matrix(NAN, 0, 0), vbs::InvalidArgument);
  EXPECT_THROW(vbs::u3_matrix(0, INFINITY, 0), vbs::InvalidArgument);
}

TEST(GateMatrices, Unitary) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> a(-10, 10);
  for (int i = 0; i < 50; ++i) {
    EXPECT_LT(vbs::unitarity_defect(vbs::u3_matrix(a(gen), a(gen), a(gen))), 1e-12);
  }
  EXPECT_LT(vbs::unitarity_defect(vbs::hadamard_matrix()), 1e-12);
  EXPECT_LT(vbs::unitarity_defect(vbs::pauli_x_matrix()), 1e-12);
  EXPECT_LT(vbs::unitarity_defect(vbs::cx_matrix()), 1e-12);
}

TEST(GateOp, Validation) {
  EXPECT_THROW(GateOp::cx(1, 1), vbs::InvalidArgument);
  EXPECT_THROW(GateOp::x(-1), vbs::InvalidArgument);
  vbs::Mat8 bad = vbs::Mat8::Identity();
  bad(0, 0) = 2;
  EXPECT_THROW(GateOp::u8(0, 1, 2, bad), vbs::InvalidArgument);
  EXPECT_THROW(GateOp::u8(0, 1, 1, vbs::Mat8::Identity()), vbs::InvalidArgument);
  Circuit c(2);
  EXPECT_THROW(c.add(GateOp::x(2)), vbs::InvalidArgument);
  EXPECT_THROW(c.add(GateOp::cx(0, 5)), vbs::InvalidArgument);
}

TEST(ApplyGate, XFlipsUp) {
  auto s = vbs::apply_gate(StateVector(1), GateOp::x(0));
  EXPECT_NEAR(std::abs(s[1] - 1.0), 0, 1e-15);
  EXPECT_NEAR(std::abs(s[0]), 0, 1e-15);
}

TEST(ApplyGate, HadamardOnUp) {
  auto s = vbs::apply_gate(StateVector(1), GateOp::h(0));
  EXPECT_NEAR(s[0].real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s[1].real(), 1 / std::sqrt(2.0), 1e-15);
}

TEST(ApplyGate, CxFiresOnDownControl) {
  // |down up> with qubit 0 down: index 1.
  auto s = vbs::apply_gate(StateVector::from_bitstring("10"), GateOp::cx(0, 1));
  EXPECT_NEAR(std::abs(s[vbs::from_bitstring("11")] - 1.0), 0, 1e-15);
  auto t = vbs::apply_gate(StateVector::from_bitstring("01"), GateOp::cx(0, 1));
  EXPECT_NEAR(std::abs(t[vbs::from_bitstring("01")] - 1.0), 0, 1e-15);
}

TEST(ApplyGate, QubitOutOfRange) {
  EXPECT_THROW(vbs::apply_gate(StateVector(2), GateOp::x(2)), vbs::InvalidArgument);
  EXPECT_THROW(vbs::apply_gate(StateVector(2), GateOp::u8(0, 1, 2, vbs::Mat8::Identity())),
               vbs::InvalidArgument);
}

TEST(ApplyGate, MatchesDenseKroneckerOracle) {
  std::mt19937_64 gen(11);
  const int n = 5;
  std::uniform_real_distribution<double> a(0, 2 * kPi);
  std::vector<GateOp> ops = {GateOp::x(3), GateOp::h(0), GateOp::u3(2, a(gen), a(gen), a(gen)),
                             GateOp::cx(4, 1), GateOp::cx(0, 3),
                             GateOp::u8(3, 0, 4, random_unitary8(gen)),
                             GateOp::u8(1, 2, 0, random_unitary8(gen))};
  for (const auto& op : ops) {
    const auto s = random_state(n, gen);
    const auto out = vbs::apply_gate(s, op);
    const Eigen::VectorXcd expect = dense_gate(op, n) * as_vector(s);
    EXPECT_LT((as_vector(out) - expect).cwiseAbs().maxCoeff(), 1e-13) << to_string(op.kind());
    EXPECT_NEAR(out.norm_squared(), 1.0, 1e-12);
  }
}

TEST(ApplyCircuit, EmptyAndInvolution) {
  std::mt19937_64 gen(5);
  const auto s = random_state(3, gen);
  const auto same = vbs::apply_circuit(s, Circuit(3));
  EXPECT_LT((as_vector(same) - as_vector(s)).norm(), 1e-15);
  Circuit xx(3);
  xx.add(GateOp::x(0)).add(GateOp::x(0));
  EXPECT_LT((as_vector(vbs::apply_circuit(s, xx)) - as_vector(s)).norm(), 1e-15);
}

TEST(ApplyCircuit, SingletSequence) {
  Circuit c(2);
  c.add(GateOp::x(0)).add(GateOp::h(0)).add(GateOp::x(0)).add(GateOp::cx(0, 1)).add(GateOp::x(0));
  const auto s = vbs::apply_circuit(StateVector(2), c);
  // (|up down> - |down up>)/sqrt2 up to a global phase.
  const Complex a = s[vbs::from_bitstring("01")], b = s[vbs::from_bitstring("10")];
  EXPECT_NEAR(std::abs(a), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(a + b), 0, 1e-15);
  EXPECT_NEAR(std::abs(s[0]) + std::abs(s[3]), 0, 1e-15);
}

TEST(ApplyCircuit, DimensionMismatch) {
  EXPECT_THROW(vbs::apply_circuit(StateVector(2), Circuit(3)), vbs::InvalidArgument);
}

TEST(Bitstrings, RoundTrip) {
  for (std::uint64_t i = 0; i < 64; ++i) {
    const auto bits = vbs::to_bitstring(i, 6);
    EXPECT_EQ(vbs::from_bitstring(bits), i);
    const auto s = StateVector::from_bitstring(bits);
    EXPECT_NEAR(std::abs(s[i] - 1.0), 0, 0);
  }
  EXPECT_EQ(vbs::to_bitstring(1, 3), "100");  // qubit 0 leftmost
  EXPECT_THROW(vbs::from_bitstring("01x"), vbs::InvalidArgument);
}

TEST(Distribution, Basics) {
  const auto d = vbs::distribution(StateVector::from_bitstring("11"));
  EXPECT_DOUBLE_EQ(d[3], 1.0);
  std::vector<Complex> singlet(4);
  singlet[1] = 1 / std::sqrt(2.0);
  singlet[2] = -1 / std::sqrt(2.0);
  const auto p = vbs::distribution(StateVector(2, singlet));
  EXPECT_NEAR(p[vbs::from_bitstring("01")], 0.5, 1e-15);
  EXPECT_NEAR(p[vbs::from_bitstring("10")], 0.5, 1e-15);
  double total = 0;
  for (double x : p) total += x;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Sample, DeterministicState) {
  const auto c = vbs::sample(StateVector(1), 100, 1);
  ASSERT_EQ(c.counts.size(), 1u);
  EXPECT_EQ(c.counts.at("0"), 100u);
}

TEST(Sample, BinomialBound) {
  const auto s = vbs::apply_gate(StateVector(1), GateOp::h(0));
  const auto c = vbs::sample(s, 32000, 42);
  const double sigma = std::sqrt(32000 * 0.25);
  EXPECT_NEAR(static_cast<double>(c.counts.at("0")), 16000.0, 3 * sigma);
  EXPECT_EQ(c.total(), 32000u);
}

TEST(Sample, SeedReplay) {
  std::mt19937_64 gen(8);
  const auto s = random_state(4, gen);
  EXPECT_EQ(vbs::sample(s, 5000, 9).counts, vbs::sample(s, 5000, 9).counts);
  EXPECT_NE(vbs::sample(s, 5000, 9).counts, vbs::sample(s, 5000, 10).counts);
}

TEST(Sample, RejectsUnnormalized) {
  StateVector s(1, std::vector<Complex>{1.0, 1.0});
  EXPECT_THROW(vbs::sample(s, 10, 0), vbs::InvalidState);
  EXPECT_THROW(vbs::distribution(s), vbs::InvalidState);
}

}  // namespace
