// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace isac {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

/// (A + A^H) / 2
inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// Re(v^H A v), the real part of a Hermitian quadratic form.
inline double quad_form(const CVector& v, const CMatrix& a) { return (v.adjoint() * a * v)(0, 0).real(); }

/// Re tr(A B) without forming the product.
inline double trace_product(const CMatrix& a, const CMatrix& b) {
    return (a.transpose().array() * b.array()).sum().real();
}

/// Ascending eigenvalues of the Hermitian part of `a`.
inline RVector hermitian_eigenvalues(const CMatrix& a) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double min_eigenvalue(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    return hermitian_eigenvalues(a)(0);
}

inline double max_eigenvalue(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    const RVector ev = hermitian_eigenvalues(a);
    return ev(ev.size() - 1);
}

/// Max |A - A^H| entry.
inline double hermitian_defect(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

/// Quadratic forms of PSD matrices can come out as -1e-20 from rounding; those feed log2.
inline double clamp_nonnegative(double value) { return std::max(value, 0.0); }

} // namespace isac
