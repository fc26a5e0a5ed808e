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

#ifndef CFMIMO_LSFD_HPP
#define CFMIMO_LSFD_HPP

#include "cfmimo/estimation.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/plans.hpp"

#include <vector>

namespace cfmimo {

/// Closed-form moments of the MRC effective channels g_ki over M_k.
/// `b[i]` is filled only for co-pilot UEs; `lambda[i]` and `c[i]` for all.
struct LsfdIngredients {
    std::size_t k = 0;
    IndexSet aps;
    std::vector<CVec> lambda;
    std::vector<CVec> b;
    std::vector<RVec> c;
    RVec d;
    CMat C;
    CMat CP;

    /// E[g_kk] = lambda_k^k + b_k^k.
    CVec mean() const { return lambda[k] + b[k]; }
    std::size_t size() const { return aps.size(); }
};

namespace detail {

/// (1-rho)^2/(1-rho_da) {sum_users p [lambda lambda^H + diag c]
///   + sum_copilots p [b b^H + b lambda^H + lambda b^H]}
///   - (1-rho)^2 p_k mean mean^H + diag d.
inline CMat assemble_c(const LsfdIngredients& g, const EstimationContext& ctx, const IndexSet& users,
                       const IndexSet& copilots) {
    const auto m = static_cast<Eigen::Index>(g.size());
    const double a2 = ctx.adc() * ctx.adc();
    CMat s = CMat::Zero(m, m);
    for (std::size_t i : users) {
        s.noalias() += ctx.p[i] * g.lambda[i] * g.lambda[i].adjoint();
        s.diagonal() += ctx.p[i] * g.c[i].cast<cplx>();
    }
    for (std::size_t i : copilots) {
        s.noalias() += ctx.p[i] * (g.b[i] * g.b[i].adjoint() + g.b[i] * g.lambda[i].adjoint() + g.lambda[i] * g.b[i].adjoint());
    }
    const CVec mu = g.mean();
    CMat out = (a2 / (1.0 - ctx.q.rho_da)) * s - a2 * ctx.p[g.k] * mu * mu.adjoint();
    out.diagonal() += g.d.cast<cplx>();
    return hermitian_part(out);
}

} // namespace detail

/// Assembles lambda, b, c, d, C_k and its partial version C_k^P for UE k.
inline LsfdIngredients build_ingredients(std::size_t k, const EstimationContext& ctx, const ClusterPlan& cl) {
    if (cl.serving[k].empty()) throw ConfigError("cluster: UE " + std::to_string(k) + " has no serving AP");
    LsfdIngredients g;
    g.k = k;
    g.aps = cl.serving[k];
    const auto m = static_cast<Eigen::Index>(g.aps.size());
    const double a = ctx.adc();
    const double rho_ad = ctx.q.rho_ad;
    const double da = 1.0 - ctx.q.rho_da;
    const double tau = static_cast<double>(ctx.tau);
    const IndexSet& copilots = ctx.pilots->copilot[k];

    g.lambda.assign(ctx.K, CVec::Zero(m));
    g.b.assign(ctx.K, CVec());
    g.c.assign(ctx.K, RVec::Zero(m));
    g.d = RVec::Zero(m);
    for (std::size_t i : copilots) g.b[i] = CVec::Zero(m);

    for (Eigen::Index j = 0; j < m; ++j) {
        const std::size_t l = g.aps[static_cast<std::size_t>(j)];
        const auto& lk = ctx.link(k, l);
        const CMat& psi_inv = ctx.psi_inv_of(k, l);
        const CMat rpr = lk.R * psi_inv * lk.R;
        const CMat& chat = ctx.chat[k * ctx.L + l];
        for (std::size_t i = 0; i < ctx.K; ++i) {
            const auto& li = ctx.link(i, l);
            g.lambda[i](j) = lk.h_bar.dot(li.h_bar);
            g.c[i](j) = (a * a * tau * ctx.p[k] * (li.R * rpr).trace()).real() + lk.h_bar.dot(li.R * lk.h_bar).real() +
                        li.h_bar.dot(chat * li.h_bar).real();
        }
        for (std::size_t i : copilots) {
            const auto& li = ctx.link(i, l);
            g.b[i](j) = a * a * tau * std::sqrt(ctx.p[k] * ctx.p[i]) * (li.R * psi_inv * lk.R).trace();
        }

        CMat sum_pr = CMat::Zero(lk.R.rows(), lk.R.cols());
        double sum_los = 0.0;
        for (std::size_t i = 0; i < ctx.K; ++i) {
            sum_pr.noalias() += ctx.p[i] * ctx.link(i, l).R;
            sum_los += ctx.p[i] * ctx.link(i, l).beta_los;
        }
        const CMat diag_pr = sum_pr.diagonal().asDiagonal();
        const double t1 = (rho_ad * a / da) * lk.h_bar.dot(diag_pr * lk.h_bar).real();
        const double t2 = (rho_ad * a * a * a / da) * tau * ctx.p[k] * (diag_pr * rpr).trace().real();
        const double t3 = a * (ctx.sigma2 + rho_ad / da * sum_los) *
                          (lk.h_bar.squaredNorm() + a * a * tau * ctx.p[k] * rpr.trace().real());
        g.d(j) = t1 + t2 + t3;
    }
    g.C = detail::assemble_c(g, ctx, all_ues(ctx.K), copilots);
    const IndexSet& q = cl.overlap[k];
    g.CP = detail::assemble_c(g, ctx, q, set_intersection(copilots, q));
    return g;
}

/// a = B^{-1} E[g_kk].
inline CVec lsfd_optimal(const CVec& mean, const CMat& B) { return hermitian_solve(B, mean); }

/// a = C_k^{-1} (lambda_k^k + b_k^k).
inline CVec lsfd_mr(const LsfdIngredients& g) { return hermitian_solve(g.C, g.mean()); }

/// a = (C_k^P)^{-1} (lambda_k^k + b_k^k).
inline CVec p_lsfd(const LsfdIngredients& g) { return hermitian_solve(g.CP, g.mean()); }

inline CVec l2_lsfd(std::size_t size) {
    if (size < 1) throw ConfigError("l2_lsfd: size must be at least 1");
    return CVec::Ones(static_cast<Eigen::Index>(size));
}

/// Builds the weighting matrix over `users` / `copilots` with explicit loops
/// and solves it by LDL^H, charging CMs and CDs the way the closed-form
/// complexity counts do: Hermitian outer products cost m(m+1)/2, the mixed
/// b lambda^H products m^2 each, and the solve (m^3 - m)/3 + m^2 CMs plus m CDs.
inline CVec counted_lsfd(const LsfdIngredients& g, const EstimationContext& ctx, const IndexSet& users,
                         const IndexSet& copilots, OpCounter& ops) {
    const auto m = static_cast<Eigen::Index>(g.size());
    const double a2 = ctx.adc() * ctx.adc();
    CMat s = CMat::Zero(m, m);
    // UE k's own products are kept apart: their sum is mean mean^H, so the
    // signal term costs nothing extra.
    CMat own = CMat::Zero(m, m);
    auto hermitian_outer = [&](CMat& dst, const CVec& x) {
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index col = r; col < m; ++col) {
                const cplx v = x(r) * std::conj(x(col));
                ++ops.cm;
                dst(r, col) += v;
                if (col != r) dst(col, r) += std::conj(v);
            }
        }
    };
    auto mixed_outer = [&](CMat& dst, const CVec& x, const CVec& y) {
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index col = 0; col < m; ++col) {
                dst(r, col) += x(r) * std::conj(y(col));
                ++ops.cm;
            }
        }
    };
    for (std::size_t i : users) {
        CMat t = CMat::Zero(m, m);
        hermitian_outer(t, g.lambda[i]);
        if (contains(copilots, i)) {
            hermitian_outer(t, g.b[i]);
            mixed_outer(t, g.b[i], g.lambda[i]);
            mixed_outer(t, g.lambda[i], g.b[i]);
        }
        if (i == g.k) own = t;
        s += ctx.p[i] * t;
        s.diagonal() += ctx.p[i] * g.c[i].cast<cplx>();
    }
    for (std::size_t i : copilots) {
        if (!contains(users, i)) throw ConfigError("counted_lsfd: co-pilot set must lie inside the user set");
    }
    if (!contains(users, g.k) || !contains(copilots, g.k)) throw ConfigError("counted_lsfd: UE k must be in both sets");
    const CVec mu = g.mean();
    CMat cmat = (a2 / (1.0 - ctx.q.rho_da)) * s - a2 * ctx.p[g.k] * own;
    cmat.diagonal() += g.d.cast<cplx>();
    return counted_ldl_solve(hermitian_part(cmat), mu, ops);
}

} // namespace cfmimo

#endif // CFMIMO_LSFD_HPP
