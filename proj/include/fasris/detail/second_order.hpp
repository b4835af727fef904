// SPDX-License-Identifier: Apache-2.0
//
// Second-order interference terms and deterministic SINRs, written over the
// algebra policy so the phase gradient can push tangents through them.
#pragma once

#include "fasris/detail/maps.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>
#include <type_traits>

namespace fasris {

// Deliberate corruption of one block of the uncommon Pi matrix. Only used by
// fault-injection checks; the default leaves Pi untouched.
enum class PiBlock { none, user_user, ris_row, user_col, corner };

struct SecondOrderOptions {
    bool printed_delta = false;  // Delta without the (1+mu_l)^2 factor
    PiBlock fault = PiBlock::none;
    double fault_scale = 1.25;
};

namespace detail {

inline constexpr double kMaxCondition = 1e12;
inline constexpr double kPsiNegTol = 1e-8;

template <class A>
struct UncSO {
    using S = typename A::S;
    using RM = typename A::RM;
    using RV = typename A::RV;
    RM chi;     // Gram over {F_1..F_K, R, I}
    RM Xi;      // K x K
    RV Xi_I;    // K
    RM Delta;   // K x K
    RM Pi;      // (K+1) x (K+1)
    RM Fbar;    // Delta^{-1}(I - Delta), rows give F_bar_k in the F basis
    RV a_I, a_R;  // Pi^{-1} chi(I), Pi^{-1} chi(R)
    RM Lambda, Psi;
    S C_bar{0.0};
    RV mu, sinr;
    double cond_Delta = 1, cond_Pi = 1;
};

template <class A>
struct ComSO {
    using S = typename A::S;
    using RM = typename A::RM;
    using RV = typename A::RV;
    // explicit zeros: AutoDiffScalar's default constructor leaves the tangent unset
    S chi_RR{0.0}, chi_RF{0.0}, chi_FF{0.0}, chi_RI{0.0}, chi_FI{0.0};
    S eta_TT{0.0}, eta_TU{0.0}, eta_UU{0.0}, eta_PT{0.0}, eta_PU{0.0};
    S Xi{0.0}, Xi_I{0.0}, Delta{0.0};
    RM Pi;  // 3 x 3
    RV a_R, a_F, a_I;
    RM Psi;
    S C_bar{0.0};
    RV mu, sinr;
    double cond_Pi = 1;
};

template <class S>
double value_of(const S& s)
{
    if constexpr (std::is_same_v<S, double>) return s;
    else return s.value();
}

template <class A, class LU>
double checked_condition(const LU& lu, const char* block)
{
    if constexpr (std::is_same_v<A, PlainAlg>) {
        const double rc = lu.rcond();
        const double cond = rc > 0 ? 1.0 / rc : INFINITY;
        if (!(cond <= kMaxCondition))
            throw NumericalError(std::string("second-order block ") + block + " is singular (condition " +
                                 std::to_string(cond) + ")");
        return cond;
    } else {
        (void)lu;
        (void)block;
        return 1.0;
    }
}

// Clip round-off negatives in Psi; anything clearly negative is an error.
template <class A, class RM>
void clip_psi(RM& Psi)
{
    if constexpr (std::is_same_v<A, PlainAlg>) {
        const double scale = std::max(1.0, Psi.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < Psi.rows(); ++i)
            for (Eigen::Index j = 0; j < Psi.cols(); ++j) {
                if (i == j) continue;
                if (Psi(i, j) < -kPsiNegTol * scale)
                    throw NumericalError("interference term Psi(" + std::to_string(i) + "," + std::to_string(j) +
                                         ") = " + std::to_string(Psi(i, j)) + " is negative");
                if (Psi(i, j) < 0) Psi(i, j) = 0;
            }
    } else {
        (void)Psi;
    }
}

// RZF with uncommon correlation. x = [delta, omega, mu]; PR, PC from the fixed point.
template <class A>
UncSO<A> unc_second_order(const UncIn<A>& in, const typename A::RV& x, const typename A::CM& PR,
                          const typename A::CM& PC, const RVec& p, double sigma2,
                          const SecondOrderOptions& o = {})
{
    using S = typename A::S;
    using CM = typename A::CM;
    using RM = typename A::RM;
    using RV = typename A::RV;
    const int K = in.K();
    const double M = in.M, L = in.L;
    UncSO<A> so;
    const S delta = x(0);
    so.mu = x.segment(1 + K, K);
    RV omega = x.segment(1, K);
    const S id = in.casc ? S(1.0 / delta) : S(0.0);

    // chi Gram matrix over {F_1..F_K, R, I}
    std::vector<CM> W(K + 2);
    for (int k = 0; k < K; ++k) W[k] = PR * in.F[k] * PR;
    W[K] = PR * in.R * PR;
    W[K + 1] = PR * PR;
    so.chi = RM(K + 2, K + 2);
    for (int j = 0; j < K + 2; ++j)
        for (int i = 0; i <= j; ++i) {
            // Tr(B_i PR B_j PR) = Tr(B_i W_j); with B_j = I this is Tr(W_i)
            S v = j == K + 1 ? trace_any(W[i]) : trace_prod_any(i < K ? in.F[i] : in.R, W[j]);
            so.chi(i, j) = so.chi(j, i) = v / M;
        }

    so.Xi = RM::Zero(K, K);
    so.Xi_I = RV::Zero(K);
    if (in.casc) {
        std::vector<CM> V(K);
        for (int k = 0; k < K; ++k) V[k] = in.C[k] * PC;
        for (int k = 0; k < K; ++k) {
            so.Xi_I(k) = trace_prod_any(V[k], PC) / L;
            for (int l = 0; l <= k; ++l) so.Xi(k, l) = so.Xi(l, k) = trace_prod_any(V[k], V[l]) / L;
        }
    }

    RV den(K);
    for (int l = 0; l < K; ++l) den(l) = (1.0 + so.mu(l)) * (1.0 + so.mu(l));

    so.Delta = RM(K, K);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            S d = o.printed_delta ? S(so.Xi(k, l) / L) : S(so.Xi(k, l) / (L * den(l)));
            so.Delta(k, l) = (k == l ? S(1.0) : S(0.0)) - d;
        }

    S Ssum(0.0);
    for (int m = 0; m < K; ++m)
        Ssum += (omega(m) - so.Xi_I(m) * id) * id * id / (M * (1.0 + so.mu(m)));

    const S chiRR = so.chi(K, K);
    so.Pi = RM(K + 1, K + 1);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l)
            so.Pi(k, l) = (k == l ? S(1.0) : S(0.0)) - so.Xi(k, l) / (L * den(l)) -
                          (so.Xi_I(l) * id * id * so.chi(k, K) + so.chi(k, l)) / (M * den(l));
        so.Pi(k, K) = -so.Xi_I(k) * id * id - Ssum * so.chi(k, K);
    }
    for (int l = 0; l < K; ++l)
        so.Pi(K, l) = -(so.Xi_I(l) * id * id * chiRR + so.chi(K, l)) / (M * den(l));
    so.Pi(K, K) = 1.0 - Ssum * chiRR;

    switch (o.fault) {
    case PiBlock::none: break;
    case PiBlock::user_user: so.Pi.topLeftCorner(K, K) *= S(o.fault_scale); break;
    case PiBlock::ris_row: so.Pi.row(K).head(K) *= S(o.fault_scale); break;
    case PiBlock::user_col: so.Pi.col(K).head(K) *= S(o.fault_scale); break;
    case PiBlock::corner: so.Pi(K, K) *= S(o.fault_scale); break;
    }

    auto luD = so.Delta.partialPivLu();
    auto luP = so.Pi.partialPivLu();
    so.cond_Delta = checked_condition<A>(luD, "Delta");
    so.cond_Pi = checked_condition<A>(luP, "Pi");

    RM I_K = RM::Identity(K, K);
    so.Fbar = luD.solve(RM(I_K - so.Delta));
    RM D1 = luD.solve(so.Xi);      // column l: Delta^{-1} xi_l
    RV dI = luD.solve(so.Xi_I);    // Delta^{-1} xi_I

    RM chiF = so.chi.topLeftCorner(K + 1, K);  // columns chi(F_j)
    RM X = luP.solve(chiF);                      // columns Pi^{-1} chi(F_j)
    so.a_R = luP.solve(RV(so.chi.col(K).head(K + 1)));
    so.a_I = luP.solve(RV(so.chi.col(K + 1).head(K + 1)));

    RM XtK = X.topRows(K).transpose();  // (k,l) -> [Pi^{-1} chi(F_k)]_l
    const S cLM = (L / M) * id * id;
    RM outer = dI * so.a_R.head(K).transpose();
    so.Lambda = D1 + cLM * outer + S(L / M) * RM(so.Fbar * XtK);
    so.Psi = so.Lambda + S(L / M) * XtK;
    clip_psi<A>(so.Psi);

    so.C_bar = S(0.0);
    for (int m = 0; m < K; ++m) so.C_bar += p(m) * so.a_I(m) / (M * den(m));
    if constexpr (std::is_same_v<A, PlainAlg>) {
        if (!(so.C_bar > 0)) throw NumericalError("C_bar is not positive (" + std::to_string(so.C_bar) + ")");
    }

    so.sinr = RV(K);
    for (int k = 0; k < K; ++k) {
        S interf(0.0);
        for (int l = 0; l < K; ++l)
            if (l != k) interf += p(l) * so.Psi(k, l) / (L * den(l));
        so.sinr(k) = p(k) * so.mu(k) * so.mu(k) / (interf + sigma2 * den(k) * so.C_bar);
    }
    return so;
}

// RZF with common correlation. x = [delta, kappa, omega, kappa_bar, omega_bar].
template <class A>
ComSO<A> com_second_order(const ComIn<A>& in, const typename A::RV& x, const typename A::CM& PR,
                          const typename A::CM& PC, const typename A::RV& pt, const RVec& p, double sigma2)
{
    using S = typename A::S;
    using CM = typename A::CM;
    using RM = typename A::RM;
    using RV = typename A::RV;
    const int K = in.K();
    const double M = in.M, L = in.L;
    ComSO<A> so;
    const S delta = x(0), kappa = x(1), omega = x(2), omega_bar = x(4);
    const S id = in.casc ? S(1.0 / delta) : S(0.0);

    CM WR = PR * in.R * PR;
    CM WF = PR * in.F * PR;
    so.chi_RR = trace_prod_any(in.R, WR) / M;
    so.chi_RF = trace_prod_any(in.R, WF) / M;
    so.chi_FF = trace_prod_any(in.F, WF) / M;
    so.chi_RI = trace_any(WR) / M;
    so.chi_FI = trace_any(WF) / M;

    for (int k = 0; k < K; ++k) {
        const S w = pt(k) * pt(k) / L;
        so.eta_TT += in.t(k) * in.t(k) * w;
        so.eta_TU += in.t(k) * in.u(k) * w;
        so.eta_UU += in.u(k) * in.u(k) * w;
        so.eta_PT += p(k) * in.t(k) * w;
        so.eta_PU += p(k) * in.u(k) * w;
    }

    if (in.casc) {
        CM V = in.C * PC;
        so.Xi = trace_prod_any(V, V) / L;
        so.Xi_I = trace_prod_any(V, PC) / L;
    }
    so.Delta = 1.0 - so.Xi * so.eta_TT;
    if constexpr (std::is_same_v<A, PlainAlg>) {
        if (!(std::abs(so.Delta) > 1e-12)) throw NumericalError("second-order scalar Delta vanishes");
    }

    auto Ups = [&](const S& cR, const S& cF) {
        return (L / M) * omega * id * cR * so.eta_TU + (L / M) * cF * so.eta_UU;
    };
    auto Lam = [&](const S& cR, const S& cF) {
        return (L / M) * cF * so.eta_TU - (L / M) * id * cR * (omega_bar - omega * so.eta_TT);
    };
    const S g = (L / M) * omega * omega_bar * id * id;
    so.Pi = RM(3, 3);
    so.Pi(0, 0) = 1.0 - g * so.chi_RR;
    so.Pi(0, 1) = -Ups(so.chi_RR, so.chi_RF);
    so.Pi(0, 2) = -Lam(so.chi_RR, so.chi_RF);
    so.Pi(1, 0) = -g * so.chi_RF;
    so.Pi(1, 1) = 1.0 - Ups(so.chi_RF, so.chi_FF);
    so.Pi(1, 2) = -Lam(so.chi_RF, so.chi_FF);
    so.Pi(2, 0) = -so.Xi_I * id * id;
    so.Pi(2, 1) = -so.Xi * so.eta_TU;
    so.Pi(2, 2) = 1.0 - so.Xi * so.eta_TT;

    auto lu = so.Pi.partialPivLu();
    so.cond_Pi = checked_condition<A>(lu, "Pi_com");
    auto vec3 = [](const S& a, const S& b) {
        RV v(3);
        v << a, b, S(0.0);
        return v;
    };
    so.a_R = lu.solve(vec3(so.chi_RR, so.chi_RF));
    so.a_F = lu.solve(vec3(so.chi_RF, so.chi_FF));
    so.a_I = lu.solve(vec3(so.chi_RI, so.chi_FI));

    so.Psi = RM(K, K);
    const S A1 = (so.Xi + (L / M) * so.Xi_I * id * id * so.a_R(2)) / so.Delta;
    const S A2 = (L / M) * so.Xi * so.eta_TU / so.Delta * so.a_F(2);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            so.Psi(k, l) = in.t(l) * in.t(k) * (A1 + A2) +
                           (L / M) * (in.t(l) * in.u(k) + in.t(k) * in.u(l)) * so.a_F(2) +
                           (L / M) * in.u(l) * in.u(k) * so.a_F(1);
    clip_psi<A>(so.Psi);

    so.C_bar = (L / M) * (so.eta_PT * so.a_I(2) + so.eta_PU * so.a_I(1));
    if constexpr (std::is_same_v<A, PlainAlg>) {
        if (!(so.C_bar > 0)) throw NumericalError("C_bar_com is not positive (" + std::to_string(so.C_bar) + ")");
    }

    so.mu = RV(K);
    for (int k = 0; k < K; ++k) so.mu(k) = in.t(k) * omega + in.u(k) * kappa;
    so.sinr = RV(K);
    for (int k = 0; k < K; ++k) {
        S interf(0.0);
        for (int l = 0; l < K; ++l)
            if (l != k) interf += p(l) * so.Psi(k, l) / (L * (1.0 + so.mu(l)) * (1.0 + so.mu(l)));
        const S dk = (1.0 + so.mu(k)) * (1.0 + so.mu(k));
        so.sinr(k) = p(k) * so.mu(k) * so.mu(k) / (interf + sigma2 * dk * so.C_bar);
    }
    return so;
}

// ZF SINRs: gamma_k = p_k / (sigma2 sum_l p_l / (M mu_l)).
template <class RV>
RV zf_sinr(const RV& mu, const RVec& p, double sigma2, int M)
{
    using S = typename RV::Scalar;
    S acc(0.0);
    for (Eigen::Index l = 0; l < mu.size(); ++l) acc += p(l) / (double(M) * mu(l));
    RV out(mu.size());
    for (Eigen::Index k = 0; k < mu.size(); ++k) out(k) = p(k) / (sigma2 * acc);
    return out;
}

template <class RV>
typename RV::Scalar sum_rate(const RV& sinr)
{
    using S = typename RV::Scalar;
    using std::log;
    S r(0.0);
    for (Eigen::Index k = 0; k < sinr.size(); ++k) r += log(S(1.0) + sinr(k)) / std::log(2.0);
    return r;
}

}  // namespace detail
}  // namespace fasris
