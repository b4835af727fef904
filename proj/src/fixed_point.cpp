// SPDX-License-Identifier: Apache-2.0
#include "fasris/fixed_point.hpp"

#include "fasris/detail/maps.hpp"

#include <algorithm>
#include <cmath>

namespace fasris {

namespace detail {

bool cascaded_active(const UncommonStats& st)
{
    if (is_zero(st.R)) return false;
    return std::any_of(st.C.begin(), st.C.end(), [](const CMat& c) { return !is_zero(c); });
}

bool cascaded_active(const CommonStats& st)
{
    return !is_zero(st.R) && !is_zero(st.C) && (st.t.array() > 0).any();
}

bool direct_active(const CommonStats& st) { return !is_zero(st.F) && (st.u.array() > 0).any(); }

}  // namespace detail

namespace {

double rel_change(const RVec& a, const RVec& b)
{
    double r = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        r = std::max(r, std::abs(a(i) - b(i)) / std::max(std::abs(b(i)), 1e-12));
    return r;
}

// Damped Picard driver. `sweep` maps x to its Gauss-Seidel update.
template <class Sweep>
RVec picard(RVec x, const SolverSettings& s, Sweep sweep, SolveInfo& info, const char* name)
{
    s.validate();
    double theta = s.damping;
    double prev = INFINITY;
    int growth = 0;
    for (int it = 1; it <= s.max_iter; ++it) {
        RVec xn = sweep(x);
        if (!xn.allFinite())
            throw NumericalError(std::string(name) + ": non-finite iterate at sweep " + std::to_string(it));
        RVec next = x + theta * (xn - x);
        double r = rel_change(next, x);
        x = std::move(next);
        if (r <= s.tol) {
            info.iterations = it;
            info.residual = r;
            return x;
        }
        growth = r > prev ? growth + 1 : 0;
        if (growth >= 3 && theta > 1.0 / 64) {
            theta *= 0.5;
            growth = 0;
        }
        prev = r;
    }
    throw ConvergenceError(std::string(name) + ": no convergence after " + std::to_string(s.max_iter) +
                               " sweeps (residual " + std::to_string(prev) + ")",
                           prev, s.max_iter);
}

RVec initial(const SolverSettings& s, int n)
{
    if (s.init) {
        if (s.init->size() != n)
            throw ConstraintError("solver warm start has the wrong length");
        return *s.init;
    }
    return RVec::Constant(n, s.init_value);
}

template <bool ZF>
RVec unc_solve(const detail::UncIn<PlainAlg>& in, const SolverSettings& s, SolveInfo& info)
{
    const int K = in.K();
    RVec x = initial(s, 2 * K + 1);
    if (!in.casc) x.segment(1, K).setZero();
    auto sweep = [&](const RVec& x0) {
        RVec xn(2 * K + 1);
        CMat PR = detail::unc_psi_R<PlainAlg>(in, x0);
        xn(0) = trace_prod(in.R, PR) / in.M;
        if (in.casc) {
            CMat PC = detail::unc_psi_C<PlainAlg>(in, xn(0), x0);
            for (int k = 0; k < K; ++k) xn(1 + k) = trace_prod(in.C[k], PC) / in.L;
        } else {
            xn.segment(1, K).setZero();
        }
        for (int k = 0; k < K; ++k) xn(1 + K + k) = trace_prod(in.F[k], PR) / in.M + xn(1 + k);
        return xn;
    };
    return picard(x, s, sweep, info, ZF ? "solve_zf_uncommon" : "solve_rzf_uncommon");
}

RVec com_solve(const detail::ComIn<PlainAlg>& in, const SolverSettings& s, SolveInfo& info, const char* name)
{
    RVec x = initial(s, 5);
    if (!in.casc) x(2) = x(4) = 0.0;
    if (!in.direct) x(1) = x(3) = 0.0;
    auto sweep = [&](const RVec& x0) {
        RVec xn(5);
        CMat PR = detail::com_psi_R<PlainAlg>(in, x0);
        xn(0) = trace_prod(in.R, PR) / in.M;
        xn(1) = in.direct ? trace_prod(in.F, PR) / in.M : 0.0;
        if (in.casc) {
            CMat PC = detail::com_psi_C<PlainAlg>(in, xn(0), x0(4));
            xn(2) = trace_prod(in.C, PC) / in.L;
        } else {
            xn(2) = 0.0;
        }
        RVec pt = detail::com_psi_T<PlainAlg>(in, xn(1), xn(2));
        xn(3) = in.direct ? in.u.dot(pt) / in.L : 0.0;
        xn(4) = in.casc ? in.t.dot(pt) / in.L : 0.0;
        return xn;
    };
    return picard(x, s, sweep, info, name);
}

void check_unc(const UncommonStats& st)
{
    if (st.F.size() != st.C.size() || st.F.empty())
        throw ConstraintError("uncommon statistics need one F_k and one C_k per user");
    if (st.M < 1 || st.L < 1)
        throw ConstraintError("uncommon statistics need M, L >= 1");
}

}  // namespace

void SolverSettings::validate() const
{
    if (!(tol > 0)) throw ConstraintError("solver tolerance must be positive");
    if (!(damping > 0 && damping <= 1)) throw ConstraintError("solver damping must lie in (0,1]");
    if (max_iter < 1) throw ConstraintError("solver max_iter must be >= 1");
}

RVec RzfUncommonSolution::unknowns() const
{
    const int K = int(mu.size());
    RVec x(2 * K + 1);
    x << delta, omega, mu;
    return x;
}

RVec ZfUncommonSolution::unknowns() const
{
    const int K = int(mu_u.size());
    RVec x(2 * K + 1);
    x << delta_u, omega_u, mu_u;
    return x;
}

RVec RzfCommonSolution::unknowns() const
{
    RVec x(5);
    x << delta, kappa, omega, kappa_bar, omega_bar;
    return x;
}

RVec ZfCommonSolution::unknowns() const
{
    RVec x(5);
    x << delta, kappa, omega, kappa_bar, omega_bar;
    return x;
}

RzfUncommonSolution solve_rzf_uncommon(const UncommonStats& st, double z, const SolverSettings& s)
{
    check_unc(st);
    if (!(z > 0)) throw ConstraintError("solve_rzf_uncommon: z must be positive");
    auto in = detail::lift<PlainAlg>(st, z, false);
    RzfUncommonSolution sol;
    RVec x = unc_solve<false>(in, s, sol.info);
    const int K = in.K();
    sol.z = z;
    sol.cascaded = in.casc;
    sol.delta = x(0);
    sol.omega = x.segment(1, K);
    sol.mu = x.segment(1 + K, K);
    sol.Psi_R = detail::unc_psi_R<PlainAlg>(in, x);
    if (in.casc) sol.Psi_C = detail::unc_psi_C<PlainAlg>(in, x(0), x);
    else sol.Psi_C = CMat::Zero(st.L, st.L);
    return sol;
}

ZfUncommonSolution solve_zf_uncommon(const UncommonStats& st, const SolverSettings& s)
{
    check_unc(st);
    if (st.M < st.K())
        throw FeasibilityError("ZF needs M >= K (M = " + std::to_string(st.M) + ", K = " + std::to_string(st.K()) + ")");
    auto in = detail::lift<PlainAlg>(st, 0.0, true);
    ZfUncommonSolution sol;
    RVec x = unc_solve<true>(in, s, sol.info);
    const int K = in.K();
    sol.cascaded = in.casc;
    sol.delta_u = x(0);
    sol.omega_u = x.segment(1, K);
    sol.mu_u = x.segment(1 + K, K);
    if ((sol.mu_u.array() <= 0).any())
        throw FeasibilityError("ZF fixed point has a non-positive mu");
    sol.K_R = detail::unc_psi_R<PlainAlg>(in, x);
    if (in.casc) sol.K_C = detail::unc_psi_C<PlainAlg>(in, x(0), x);
    else sol.K_C = CMat::Zero(st.L, st.L);
    return sol;
}

namespace {
template <class Sol>
void fill_common(Sol& sol, const detail::ComIn<PlainAlg>& in, const RVec& x)
{
    sol.delta = x(0);
    sol.kappa = x(1);
    sol.omega = x(2);
    sol.kappa_bar = x(3);
    sol.omega_bar = x(4);
    sol.cascaded = in.casc;
    sol.direct = in.direct;
    sol.Psi_R = detail::com_psi_R<PlainAlg>(in, x);
    if (in.casc) sol.Psi_C = detail::com_psi_C<PlainAlg>(in, x(0), x(4));
    else sol.Psi_C = CMat::Zero(in.C.rows(), in.C.rows());
    sol.psi_T = detail::com_psi_T<PlainAlg>(in, x(1), x(2));
}
}  // namespace

RzfCommonSolution solve_rzf_common(const CommonStats& st, double z, const SolverSettings& s)
{
    if (!(z > 0)) throw ConstraintError("solve_rzf_common: z must be positive");
    auto in = detail::lift<PlainAlg>(st, z, false);
    RzfCommonSolution sol;
    RVec x = com_solve(in, s, sol.info, "solve_rzf_common");
    sol.z = z;
    fill_common(sol, in, x);
    return sol;
}

ZfCommonSolution solve_zf_common(const CommonStats& st, const SolverSettings& s)
{
    const int K = int(st.u.size());
    if (st.M < K)
        throw FeasibilityError("ZF needs M >= K (M = " + std::to_string(st.M) + ", K = " + std::to_string(K) + ")");
    auto in = detail::lift<PlainAlg>(st, 0.0, true);
    for (int k = 0; k < K; ++k)
        if (!(st.u(k) > 0 && in.direct) && !(st.t(k) > 0 && in.casc))
            throw FeasibilityError("ZF: user " + std::to_string(k) + " has no active link");
    ZfCommonSolution sol;
    RVec x = com_solve(in, s, sol.info, "solve_zf_common");
    fill_common(sol, in, x);
    return sol;
}

IidSolution solve_iid_zf(double u, double t, double c1, double c2)
{
    if (!(c1 < 1.0))
        throw FeasibilityError("i.i.d. ZF needs c1 = K/M < 1");
    if (!(c1 > 0) || c2 < 0 || u < 0 || t < 0)
        throw ConstraintError("i.i.d. ZF needs c1 > 0, c2 >= 0, u, t >= 0");
    IidSolution s;
    s.u = u;
    s.t = t;
    s.c1 = c1;
    s.c2 = c2;
    s.alpha_val = c2 * c2 * t * t - 2 * c2 * t * t + t * t + 2 * t * u * c2 + 2 * t * u + u * u;
    s.beta_val = (u + t - t * c2 + std::sqrt(std::max(s.alpha_val, 0.0))) / 2;
    s.mu_u = (1 - c1) * s.beta_val;
    return s;
}

double residual(const UncommonStats& st, const RzfUncommonSolution& s)
{
    auto in = detail::lift<PlainAlg>(st, s.z, false);
    RVec x = s.unknowns();
    return rel_change(detail::unc_map<PlainAlg>(in, x), x);
}

double residual(const UncommonStats& st, const ZfUncommonSolution& s)
{
    auto in = detail::lift<PlainAlg>(st, 0.0, true);
    RVec x = s.unknowns();
    return rel_change(detail::unc_map<PlainAlg>(in, x), x);
}

double residual(const CommonStats& st, const RzfCommonSolution& s)
{
    auto in = detail::lift<PlainAlg>(st, s.z, false);
    RVec x = s.unknowns();
    return rel_change(detail::com_map<PlainAlg>(in, x), x);
}

double residual(const CommonStats& st, const ZfCommonSolution& s)
{
    auto in = detail::lift<PlainAlg>(st, 0.0, true);
    RVec x = s.unknowns();
    return rel_change(detail::com_map<PlainAlg>(in, x), x);
}

RVec solve_single_hop(const std::vector<CMat>& F, int M, double z, const SolverSettings& s)
{
    const int K = int(F.size());
    const Eigen::Index n = F.at(0).rows();
    RVec mu = RVec::Constant(K, s.init_value);
    SolveInfo info;
    auto sweep = [&](const RVec& m) {
        CMat A = z * CMat::Identity(n, n);
        for (int k = 0; k < K; ++k) A += F[k] / (M * (1 + m(k)));
        CMat P = inv_hpd(A);
        RVec out(K);
        for (int k = 0; k < K; ++k) out(k) = trace_prod(F[k], P) / M;
        return out;
    };
    return picard(mu, s, sweep, info, "solve_single_hop");
}

}  // namespace fasris
