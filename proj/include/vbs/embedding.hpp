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

// Spin-1 projector P, its complement Q, and the 3-qubit unitary
//   U = [[P, Q], [Q, P]]
// that realizes P on the ancilla-up branch. The ancilla is the most
// significant qubit of U's basis.
#pragma once

#include <Eigen/Dense>

#include "vbs/error.hpp"
#include "vbs/qcore.hpp"

namespace vbs {

using RealMat4 = Eigen::Matrix4d;
using RealMat8 = Eigen::Matrix<double, 8, 8>;

/// Projector onto the symmetric (triplet) subspace of two spin-1/2s, in
/// the basis {uu, ud, du, dd}.
inline RealMat4 build_p() {
  RealMat4 p;
  p << 1, 0, 0, 0,
       0, 0.5, 0.5, 0,
       0, 0.5, 0.5, 0,
       0, 0, 0, 1;
  return p;
}

/// Singlet projector; completes P so that U is unitary.
inline RealMat4 build_q() {
  RealMat4 q;
  q << 0, 0, 0, 0,
       0, 0.5, -0.5, 0,
       0, -0.5, 0.5, 0,
       0, 0, 0, 0;
  return q;
}

inline RealMat8 build_u_direct() {
  const RealMat4 p = build_p(), q = build_q();
  RealMat8 u;
  u << p, q,
       q, p;
  return u;
}

/// Symmetric PSD square root of I - P^T P.
inline RealMat4 matrix_square_root_of_complement(const RealMat4& p) {
  const RealMat4 c = RealMat4::Identity() - p.transpose() * p;
  Eigen::SelfAdjointEigenSolver<RealMat4> eig(0.5 * (c + c.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("matrix_square_root_of_complement: eigensolver failed");
  }
  Eigen::Vector4d vals = eig.eigenvalues();
  for (int i = 0; i < 4; ++i) {
    if (vals(i) < -1e-12) {
      throw InvalidArgument("matrix_square_root_of_complement: I - P^T P is not PSD");
    }
    vals(i) = std::sqrt(std::max(vals(i), 0.0));
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

/// Completion by QR: factor U' = [[P, I], [sqrt(I - P^T P), I]] and keep the
/// orthogonal factor, with column signs chosen so R has a nonnegative
/// diagonal.
inline RealMat8 build_u_qr(const RealMat4& p = build_p()) {
  RealMat8 seed;
  seed << p, RealMat4::Identity(),
          matrix_square_root_of_complement(p), RealMat4::Identity();
  Eigen::HouseholderQR<RealMat8> qr(seed);
  RealMat8 q = qr.householderQ();
  const RealMat8 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 8; ++i) {
    if (std::abs(r(i, i)) < 1e-12) {
      throw NumericalError("build_u_qr: completion seed is rank deficient");
    }
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  return q;
}

inline Mat8 to_complex(const RealMat8& m) { return m.cast<Complex>(); }

}  // namespace vbs
