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

#include <random>

#include "vbs/embedding.hpp"

namespace {

using vbs::RealMat4;
using vbs::RealMat8;

// Literal matrices in the (uu, ud, du, dd) basis.
RealMat4 literal_p() {
  RealMat4 p;
  p << 1, 0, 0, 0,
       0, 0.5, 0.5, 0,
       0, 0.5, 0.5, 0,
       0, 0, 0, 1;
  return p;
}

RealMat4 literal_q() {
  RealMat4 q;
  q << 0, 0, 0, 0,
       0, 0.5, -0.5, 0,
       0, -0.5, 0.5, 0,
       0, 0, 0, 0;
  return q;
}

Eigen::Vector4cd random_phi(std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::Vector4cd v;
  for (int i = 0; i < 4; ++i) v(i) = {g(gen), g(gen)};
  return v.normalized();
}

TEST(Projector, MatchesLiteral) {
  EXPECT_EQ(vbs::build_p(), literal_p());
  EXPECT_EQ(vbs::build_q(), literal_q());
}

TEST(Projector, Eigenvectors) {
  const RealMat4 p = vbs::build_p();
  EXPECT_EQ(p * Eigen::Vector4d(1, 0, 0, 0), Eigen::Vector4d(1, 0, 0, 0));
  EXPECT_LT((p * Eigen::Vector4d(0, 1, -1, 0)).norm(), 1e-15);
  EXPECT_LT((p * Eigen::Vector4d(0, 1, 0, 0) - Eigen::Vector4d(0, 0.5, 0.5, 0)).norm(), 1e-15);
}

TEST(Projector, Algebra) {
  const RealMat4 p = vbs::build_p(), q = vbs::build_q(), id = RealMat4::Identity();
  EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((q * q - q).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((p + q - id).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((p * q).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((q * p).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((p * p + q * q - id).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((q * p + p * q).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(p, p.transpose());
}

TEST(EmbeddedUnitary, BlockLayoutAndUnitarity) {
  const RealMat8 u = vbs::build_u_direct();
  EXPECT_EQ(RealMat4(u.topLeftCorner<4, 4>()), literal_p());
  EXPECT_EQ(RealMat4(u.topRightCorner<4, 4>()), literal_q());
  EXPECT_EQ(RealMat4(u.bottomLeftCorner<4, 4>()), literal_q());
  EXPECT_EQ(RealMat4(u.bottomRightCorner<4, 4>()), literal_p());
  EXPECT_LT((u.transpose() * u - RealMat8::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EmbeddedUnitary, BranchesOnUpDown) {
  // Input |up> (x) |ud>: local index 1.
  const auto col = vbs::build_u_direct().col(1);
  Eigen::Matrix<double, 8, 1> expect;
  expect << 0, 0.5, 0.5, 0, 0, 0.5, -0.5, 0;
  EXPECT_LT((col - expect).norm(), 1e-15);
}

TEST(EmbeddedUnitary, AncillaUpProjectsRandomStates) {
  std::mt19937_64 gen(17);
  const auto u = vbs::to_complex(vbs::build_u_direct());
  const Eigen::Matrix4cd p = vbs::build_p().cast<vbs::Complex>();
  const Eigen::Matrix4cd q = vbs::build_q().cast<vbs::Complex>();
  for (int t = 0; t < 50; ++t) {
    const auto phi = random_phi(gen);
    Eigen::Matrix<vbs::Complex, 8, 1> in = Eigen::Matrix<vbs::Complex, 8, 1>::Zero();
    in.head<4>() = phi;
    const Eigen::Matrix<vbs::Complex, 8, 1> out = u * in;
    EXPECT_LT((out.head<4>() - p * phi).norm(), 1e-12);
    EXPECT_NEAR((p * phi).squaredNorm() + (q * phi).squaredNorm(), 1.0, 1e-12);
  }
}

TEST(EmbeddedUnitary, AncillaUpProjectsOnStatevector) {
  // Same identity through the strided U8 kernel: ancilla on qubit 0, pair
  // on qubits 1, 2.
  std::mt19937_64 gen(19);
  const auto op = vbs::GateOp::u8(0, 1, 2, vbs::to_complex(vbs::build_u_direct()));
  const Eigen::Matrix4cd p = vbs::build_p().cast<vbs::Complex>();
  for (int t = 0; t < 20; ++t) {
    const auto phi = random_phi(gen);
    std::vector<vbs::Complex> amps(8);
    for (int local = 0; local < 4; ++local) {
      const int b1 = local >> 1, b2 = local & 1;
      amps[static_cast<std::size_t>((b1 << 1) | (b2 << 2))] = phi(local);
    }
    const auto out = vbs::apply_gate(vbs::StateVector(3, amps), op);
    const Eigen::Vector4cd projected = p * phi;
    for (int local = 0; local < 4; ++local) {
      const int b1 = local >> 1, b2 = local & 1;
      EXPECT_LT(std::abs(out[static_cast<std::size_t>((b1 << 1) | (b2 << 2))] - projected(local)),
                1e-12);
    }
  }
}

TEST(SquareRootOfComplement, Cases) {
  EXPECT_LT((vbs::matrix_square_root_of_complement(literal_p()) - literal_q()).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_LT(vbs::matrix_square_root_of_complement(RealMat4::Identity()).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_LT((vbs::matrix_square_root_of_complement(RealMat4::Zero()) - RealMat4::Identity())
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(SquareRootOfComplement, SquaresBack) {
  RealMat4 a = 0.3 * RealMat4::Identity();
  a(0, 1) = a(1, 0) = 0.1;
  const RealMat4 r = vbs::matrix_square_root_of_complement(a);
  EXPECT_LT((r * r - (RealMat4::Identity() - a.transpose() * a)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r - r.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SquareRootOfComplement, RejectsNonContraction) {
  EXPECT_THROW(vbs::matrix_square_root_of_complement(2 * RealMat4::Identity()),
               vbs::InvalidArgument);
}

TEST(QrCompletion, AgreesWithDirect) {
  const RealMat8 qr = vbs::build_u_qr();
  EXPECT_LT((qr - vbs::build_u_direct()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((qr.transpose() * qr - RealMat8::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((RealMat4(qr.topLeftCorner<4, 4>()) - literal_p()).cwiseAbs().maxCoeff(), 1e-10);
}

}  // namespace
