// SPDX-License-Identifier: Apache-2.0
//
// Fixed-point maps written once over an algebra policy (see dual.hpp). The
// solver runs them on plain values; the gradient code runs them on duals to get
// Jacobians and input sensitivities.
#pragma once

#include "fasris/channel_model.hpp"
#include "fasris/dual.hpp"

#include <vector>

namespace fasris::detail {

template <class A>
struct UncIn {
    using CM = typename A::CM;
    std::vector<CM> F, C;
    CM R;
    typename A::S z{0.0};
    int M = 0, L = 0;
    bool casc = true;
    bool zf = false;
    int K() const { return int(F.size()); }
};

template <class A>
struct ComIn {
    using CM = typename A::CM;
    CM F, R, C;
    RVec u, t;
    typename A::S z{0.0};
    int M = 0, L = 0;
    bool casc = true, direct = true;
    bool zf = false;
    int K() const { return int(u.size()); }
};

bool cascaded_active(const UncommonStats& st);
bool cascaded_active(const CommonStats& st);
bool direct_active(const CommonStats& st);

template <class A>
UncIn<A> lift(const UncommonStats& st, double z, bool zf)
{
    UncIn<A> in;
    for (const auto& f : st.F) in.F.push_back(A::lift(f));
    for (const auto& c : st.C) in.C.push_back(A::lift(c));
    in.R = A::lift(st.R);
    in.z = A::lift(z);
    in.M = st.M;
    in.L = st.L;
    in.casc = cascaded_active(st);
    in.zf = zf;
    return in;
}

template <class A>
ComIn<A> lift(const CommonStats& st, double z, bool zf)
{
    ComIn<A> in;
    in.F = A::lift(st.F);
    in.R = A::lift(st.R);
    in.C = A::lift(st.C);
    in.u = st.u;
    in.t = st.t;
    in.z = A::lift(z);
    in.M = st.M;
    in.L = st.L;
    in.casc = cascaded_active(st);
    in.direct = direct_active(st);
    in.zf = zf;
    return in;
}

// ---- uncommon: x = [delta, omega_1..K, mu_1..K] -----------------------------

template <class A>
typename A::CM unc_psi_R(const UncIn<A>& in, const typename A::RV& x)
{
    using CM = typename A::CM;
    using S = typename A::S;
    const int K = in.K(), M = in.M;
    CM acc = in.zf ? CM(CM::Identity(in.R.rows(), in.R.rows()))
                   : CM(in.z * CM::Identity(in.R.rows(), in.R.rows()));
    S rcoef(0.0);
    for (int k = 0; k < K; ++k) {
        S den = in.zf ? S(x(1 + K + k)) : S(1.0 + x(1 + K + k));
        acc += S(1.0 / (double(M) * den)) * in.F[k];
        if (in.casc) rcoef += x(1 + k) / (x(0) * double(M) * den);
    }
    if (in.casc) acc += rcoef * in.R;
    return inv_hpd_any(acc);
}

template <class A>
typename A::CM unc_psi_C(const UncIn<A>& in, const typename A::S& delta, const typename A::RV& x)
{
    using CM = typename A::CM;
    using S = typename A::S;
    const int K = in.K(), L = in.L;
    const Eigen::Index n = in.C.empty() ? L : in.C[0].rows();
    CM acc = S(1.0 / delta) * CM::Identity(n, n);
    for (int k = 0; k < K; ++k) {
        S den = in.zf ? S(x(1 + K + k)) : S(1.0 + x(1 + K + k));
        acc += S(1.0 / (double(L) * den)) * in.C[k];
    }
    return inv_hpd_any(acc);
}

// Jacobi sweep: all outputs from the same x. Optionally returns the Psi's.
template <class A>
typename A::RV unc_map(const UncIn<A>& in, const typename A::RV& x, typename A::CM* psiR = nullptr,
                       typename A::CM* psiC = nullptr)
{
    using CM = typename A::CM;
    using S = typename A::S;
    const int K = in.K();
    typename A::RV out(2 * K + 1);
    CM PR = unc_psi_R<A>(in, x);
    out(0) = trace_prod_any(in.R, PR) / S(double(in.M));
    CM PC;
    if (in.casc) {
        PC = unc_psi_C<A>(in, x(0), x);
        for (int k = 0; k < K; ++k) out(1 + k) = trace_prod_any(in.C[k], PC) / S(double(in.L));
    } else {
        for (int k = 0; k < K; ++k) out(1 + k) = S(0.0);
    }
    for (int k = 0; k < K; ++k)
        out(1 + K + k) = trace_prod_any(in.F[k], PR) / S(double(in.M)) + out(1 + k);
    if (psiR) *psiR = PR;
    if (psiC) *psiC = PC;
    return out;
}

// ---- common: x = [delta, kappa, omega, kappa_bar, omega_bar] ----------------

template <class A>
typename A::CM com_psi_R(const ComIn<A>& in, const typename A::RV& x)
{
    using CM = typename A::CM;
    using S = typename A::S;
    const Eigen::Index n = in.R.rows();
    CM acc = in.zf ? CM(CM::Identity(n, n)) : CM(in.z * CM::Identity(n, n));
    if (in.direct) acc += S(double(in.L) / in.M * x(3)) * in.F;
    if (in.casc) acc += S(double(in.L) * x(2) * x(4) / (double(in.M) * x(0))) * in.R;
    return inv_hpd_any(acc);
}

template <class A>
typename A::CM com_psi_C(const ComIn<A>& in, const typename A::S& delta, const typename A::S& omega_bar)
{
    using CM = typename A::CM;
    using S = typename A::S;
    const Eigen::Index n = in.C.rows();
    CM acc = S(1.0 / delta) * CM::Identity(n, n);
    acc += omega_bar * in.C;
    return inv_hpd_any(acc);
}

// Diagonal of Psi_T.
template <class A>
typename A::RV com_psi_T(const ComIn<A>& in, const typename A::S& kappa, const typename A::S& omega)
{
    using S = typename A::S;
    const int K = in.K();
    typename A::RV d(K);
    for (int k = 0; k < K; ++k) {
        S den = omega * in.t(k) + kappa * in.u(k);
        if (!in.zf) den = den + 1.0;
        d(k) = S(1.0) / den;
    }
    return d;
}

template <class A>
typename A::RV com_map(const ComIn<A>& in, const typename A::RV& x, typename A::CM* psiR = nullptr,
                       typename A::CM* psiC = nullptr, typename A::RV* psiT = nullptr)
{
    using CM = typename A::CM;
    using S = typename A::S;
    const int K = in.K();
    typename A::RV out(5);
    CM PR = com_psi_R<A>(in, x);
    out(0) = trace_prod_any(in.R, PR) / S(double(in.M));
    out(1) = in.direct ? S(trace_prod_any(in.F, PR) / S(double(in.M))) : S(0.0);
    CM PC;
    if (in.casc) {
        PC = com_psi_C<A>(in, x(0), x(4));
        out(2) = trace_prod_any(in.C, PC) / S(double(in.L));
    } else {
        out(2) = S(0.0);
    }
    typename A::RV pt = com_psi_T<A>(in, x(1), x(2));
    S kb(0.0), wb(0.0);
    for (int k = 0; k < K; ++k) {
        kb += in.u(k) * pt(k);
        wb += in.t(k) * pt(k);
    }
    out(3) = in.direct ? S(kb / double(in.L)) : S(0.0);
    out(4) = in.casc ? S(wb / double(in.L)) : S(0.0);
    if (psiR) *psiR = PR;
    if (psiC) *psiC = PC;
    if (psiT) *psiT = pt;
    return out;
}

}  // namespace fasris::detail
