// SPDX-License-Identifier: Apache-2.0
//
// cfmimo - uplink analysis of scalable cell-free massive MIMO with
// finite-resolution converters over correlated Rician fading.
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

#ifndef CFMIMO_LINALG_HPP
#define CFMIMO_LINALG_HPP

#include "cfmimo/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <iostream>

namespace cfmimo {

/// Tally of complex multiplications (CM) and complex divisions (CD).
struct OpCounter {
    std::uint64_t cm = 0;
    std::uint64_t cd = 0;
};

inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

inline double min_eigenvalue(const CMat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// True when `a` is Hermitian to `herm_tol` (Frobenius) and its smallest
/// eigenvalue is above -psd_rel_tol * |trace|.
inline bool is_hermitian_psd(const CMat& a, double herm_tol, double psd_rel_tol) {
    if ((a - a.adjoint()).norm() > herm_tol) return false;
    const double tr = std::abs(a.trace().real());
    return min_eigenvalue(a) >= -psd_rel_tol * tr;
}

/// Symmetrizes `a` and clips eigenvalues in [-rel_tol * trace, 0) to zero.
/// Larger negative eigenvalues mean the input is not a covariance.
inline CMat repair_psd(const CMat& a, double rel_tol = 1e-10) {
    CMat h = hermitian_part(a);
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    RVec ev = es.eigenvalues();
    const double tr = std::abs(h.trace().real());
    if (ev.size() > 0 && ev.minCoeff() >= 0.0) return h;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -rel_tol * tr) {
            throw NumericalError("matrix has eigenvalue " + std::to_string(ev(i)) +
                                 " below the PSD repair threshold");
        }
        ev(i) = std::max(ev(i), 0.0);
    }
    CMat out = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    return hermitian_part(out);
}

/// Returns F with F F^H = a for a Hermitian PSD `a`.
inline CMat psd_sqrt_factor(const CMat& a) {
    const Eigen::Index n = a.rows();
    if (n == 0) return CMat(0, 0);
    const CMat h = hermitian_part(a);
    const double scale = h.cwiseAbs().maxCoeff();
    if (scale == 0.0) return CMat::Zero(n, n);
    Eigen::LLT<CMat> llt(h);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    RVec ev = es.eigenvalues();
    const double tr = std::abs(h.trace().real());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ev(i) < -1e-10 * tr) throw NumericalError("cannot factor a non-PSD covariance");
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal();
}

/// Solves a x = b for Hermitian positive definite `a`. Falls back to a
/// pivoted LDL^H and, failing that, to a diagonal load of 1e-12 * trace.
inline CVec hermitian_solve(const CMat& a, const CVec& b) {
    const CMat h = hermitian_part(a);
    Eigen::LLT<CMat> llt(h);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    Eigen::LDLT<CMat> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        CVec x = ldlt.solve(b);
        if (((h * x - b).norm() <= 1e-8 * std::max(b.norm(), 1e-300))) return x;
    }
    const double load = 1e-12 * std::abs(h.trace().real());
    std::cerr << "cfmimo: warning: loading diagonal of a borderline Hermitian system by "
              << load << '\n';
    CMat loaded = h;
    loaded.diagonal().array() += load;
    Eigen::LDLT<CMat> fallback(loaded);
    if (fallback.info() != Eigen::Success) throw NumericalError("singular Hermitian system");
    return fallback.solve(b);
}

/// Solves a x = b through an explicit LDL^H factorization while counting
/// complex multiplications and divisions the way textbook complexity
/// accounting does: (n^3 - n)/3 CMs for the factorization, n^2 CMs for the
/// two triangular sweeps and n CDs for the diagonal.
inline CVec counted_ldl_solve(const CMat& a, const CVec& b, OpCounter& ops) {
    const Eigen::Index n = a.rows();
    CMat lower = CMat::Identity(n, n);
    RVec diag = RVec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double dj = a(j, j).real();
        for (Eigen::Index k = 0; k < j; ++k) dj -= std::norm(lower(j, k)) * diag(k);
        if (dj == 0.0) throw NumericalError("zero pivot in LDL^H factorization");
        diag(j) = dj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            cplx acc = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) acc -= lower(i, k) * std::conj(lower(j, k)) * diag(k);
            lower(i, j) = acc / dj;
        }
    }
    // (n^3 - n)/3: the classical count for the Hermitian LDL^H factorization.
    ops.cm += static_cast<std::uint64_t>((n * n * n - n) / 3);

    CVec y = b;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < i; ++k) y(i) -= lower(i, k) * y(k);
    }
    for (Eigen::Index i = 0; i < n; ++i) y(i) /= diag(i);
    ops.cd += static_cast<std::uint64_t>(n);
    CVec x = y;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        for (Eigen::Index k = i + 1; k < n; ++k) x(i) -= std::conj(lower(k, i)) * x(k);
    }
    // The two triangular sweeps are charged n^2 CMs in total.
    ops.cm += static_cast<std::uint64_t>(n * n);
    return x;
}

/// Block-diagonal assembly of equally sized square blocks.
inline CMat block_diagonal(const std::vector<CMat>& blocks) {
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.rows();
    CMat out = CMat::Zero(total, total);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        out.block(off, off, b.rows(), b.cols()) = b;
        off += b.rows();
    }
    return out;
}

} // namespace cfmimo

#endif // CFMIMO_LINALG_HPP
