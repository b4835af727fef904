// SPDX-License-Identifier: Apache-2.0
//
// Phase and port gradients of the deterministic ESR.
//
// Phases: the fixed point x = f(x, phi) is differentiated implicitly,
// dx = (I - df/dx)^{-1} df/dphi_l, with both Jacobian pieces obtained by
// forward-mode evaluation of the same map the solver uses. The tangent is then
// pushed through the second-order/SINR code.
//
// Ports (ZF): the ZF ESR depends on s only through the fixed point, so one
// adjoint solve (I - df/dx)^T lambda = dESR/dx gives every dESR/ds_i. With
// A = S A_tot S, d/ds_i Tr(X A) = 2 Re (A_tot S X)_ii for Hermitian X.
#include "fasris/optimizer.hpp"

#include "fasris/detail/second_order.hpp"

#include <cmath>

namespace fasris {

namespace {

using DRV = DualAlg::RV;
using ad::DMat;

DRV seed(const RVec& x, const RVec& dx)
{
    DRV r(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) r(i) = ad::make(x(i), dx(i));
    return r;
}

DRV seed(const RVec& x)
{
    DRV r(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) r(i) = ad::Dual(x(i));
    return r;
}

RVec tangents(const DRV& v)
{
    RVec t(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) t(i) = ad::tan(v(i));
    return t;
}

// (I - df/dx) at x, one forward pass per unknown. The unknowns differ by many
// orders of magnitude (delta ~ 1/z), so the system is factored in relative
// coordinates: D^{-1}(I - J)D with D = diag(|x|).
struct FixedPointLU {
    Eigen::PartialPivLU<RMat> lu, lu_t;
    RVec scale;
    RVec solve(const RVec& b) const { return scale.cwiseProduct(lu.solve(b.cwiseQuotient(scale))); }
    // (I - J)^{-T} g
    RVec solve_transpose(const RVec& g) const { return lu_t.solve(g.cwiseProduct(scale)).cwiseQuotient(scale); }
};

template <class In, class Map>
FixedPointLU fixed_point_jacobian(const In& in, const RVec& x, Map map)
{
    const Eigen::Index n = x.size();
    RMat J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        DRV out = map(in, seed(x, RVec::Unit(n, j)));
        J.col(j) = tangents(out);
    }
    FixedPointLU f;
    f.scale = x.cwiseAbs().cwiseMax(1e-300);
    RMat A = RMat::Identity(n, n) - f.scale.cwiseInverse().asDiagonal() * J * f.scale.asDiagonal();
    f.lu.compute(A);
    f.lu_t.compute(A.transpose());
    if (!(f.lu.rcond() > 1e-14)) throw NumericalError("fixed-point Jacobian is singular");
    return f;
}

// d/dphi of ESR for a dual input whose only tangent is the RIS statistics.
template <class In, class Map, class Rate>
double directional(const In& in, const RVec& x, const FixedPointLU& lu, Map map, Rate rate)
{
    RVec b = tangents(map(in, seed(x)));
    return rate(in, seed(x, lu.solve(b)));
}

void log_sum_rate_grad(const RVec& mu, const RVec& p, double sigma2, int M, RVec& dmu, double& esr)
{
    // gamma_k = p_k / (sigma2 D), D = sum_l p_l/(M mu_l)
    const Eigen::Index K = mu.size();
    double D = 0;
    for (Eigen::Index l = 0; l < K; ++l) D += p(l) / (M * mu(l));
    RVec g(K);
    esr = 0;
    double w = 0;  // sum_k gamma_k/(1+gamma_k) / ln 2
    for (Eigen::Index k = 0; k < K; ++k) {
        g(k) = p(k) / (sigma2 * D);
        esr += std::log2(1 + g(k));
        w += g(k) / (1 + g(k));
    }
    w /= std::log(2.0);
    dmu.resize(K);
    for (Eigen::Index l = 0; l < K; ++l) dmu(l) = w * p(l) / (D * M * mu(l) * mu(l));
}

// diag(A_tot S X) real part, O(n^2) per entry
RVec diag_product(const CMat& A_tot, const RVec& s, const CMat& X)
{
    const Eigen::Index n = A_tot.rows();
    RVec d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cd acc = 0;
        for (Eigen::Index j = 0; j < n; ++j) acc += A_tot(i, j) * s(j) * X(j, i);
        d(i) = acc.real();
    }
    return d;
}

}  // namespace

PhaseGradient esr_gradient_phases(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, Precoder kind,
                                  double z, const GradientOptions& o)
{
    if (sc.corr.mode == CorrelationMode::uncommon) return esr_gradient_phases_uncommon(sc, s, phi, kind, z, o);
    return esr_gradient_phases_common(sc, s, phi, kind, z, o);
}

PhaseGradient esr_gradient_phases_common(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                         Precoder kind, double z, const GradientOptions& o)
{
    if (kind == Precoder::mrt) throw DomainError("phase gradient needs RZF or ZF");
    const bool zf = kind == Precoder::zf;
    CommonStats st = common_stats(sc, s, phi);
    PhaseGradient out;
    RVec x;
    if (zf) {
        auto sol = solve_zf_common(st, o.solver);
        x = sol.unknowns();
        out.esr = sinr_zf_common(st, sol, sc.p, sc.sigma2).esr;
    } else {
        auto sol = solve_rzf_common(st, z, o.solver);
        x = sol.unknowns();
        out.esr = sinr_rzf_common(st, sol, sc.p, sc.sigma2).esr;
    }
    out.x = x;
    const int L = sc.dims.L, M = sc.dims.M;
    out.grad = RVec::Zero(L);

    auto inD = detail::lift<DualAlg>(st, zf ? 0.0 : z, zf);
    auto map = [](const detail::ComIn<DualAlg>& in, const DRV& xv) { return detail::com_map<DualAlg>(in, xv); };
    auto lu = fixed_point_jacobian(inD, x, map);
    auto rate = [&](const detail::ComIn<DualAlg>& in, const DRV& xv) {
        if (zf) {
            DRV mu(in.K());
            for (int k = 0; k < in.K(); ++k) mu(k) = in.u(k) * xv(1) + in.t(k) * xv(2);
            return ad::tan(detail::sum_rate(detail::zf_sinr(mu, sc.p, sc.sigma2, M)));
        }
        DMat pr, pc;
        DRV ptd;
        detail::com_map<DualAlg>(in, xv, &pr, &pc, &ptd);
        auto so = detail::com_second_order<DualAlg>(in, xv, pr, pc, ptd, sc.p, sc.sigma2);
        return ad::tan(detail::sum_rate(so.sinr));
    };

    const CMat CL_half = herm_sqrt(sc.corr.C_L, "C_L");
    const CMat& C_R = sc.corr.C_R_of(0);
    // no cascaded link: phi does not enter the rate
    if (detail::cascaded_active(st)) {
#pragma omp parallel for schedule(static) if (o.parallel)
        for (int l = 0; l < L; ++l) {
            auto in = inD;
            in.C = DMat(st.C, dC_dphi(CL_half, phi.phi, C_R, 1.0, l));
            out.grad(l) = directional(in, x, lu, map, rate);
        }
    }

    return out;
}

PhaseGradient esr_gradient_phases_uncommon(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                           Precoder kind, double z, const GradientOptions& o)
{
    if (kind == Precoder::mrt) throw DomainError("phase gradient needs RZF or ZF");
    const bool zf = kind == Precoder::zf;
    UncommonStats st = uncommon_stats(sc, s, phi);
    const int K = st.K(), L = sc.dims.L, M = sc.dims.M;
    PhaseGradient out;
    RVec x;
    if (zf) {
        auto sol = solve_zf_uncommon(st, o.solver);
        x = sol.unknowns();
        out.esr = sinr_zf_uncommon(st, sol, sc.p, sc.sigma2).esr;
    } else {
        auto sol = solve_rzf_uncommon(st, z, o.solver);
        x = sol.unknowns();
        out.esr = sinr_rzf_uncommon(st, sol, sc.p, sc.sigma2).esr;
    }
    out.x = x;
    out.grad = RVec::Zero(L);

    auto inD = detail::lift<DualAlg>(st, zf ? 0.0 : z, zf);
    auto map = [](const detail::UncIn<DualAlg>& in, const DRV& xv) { return detail::unc_map<DualAlg>(in, xv); };
    auto lu = fixed_point_jacobian(inD, x, map);
    auto rate = [&](const detail::UncIn<DualAlg>& in, const DRV& xv) {
        if (zf) {
            DRV mu = xv.segment(1 + K, K);
            return ad::tan(detail::sum_rate(detail::zf_sinr(mu, sc.p, sc.sigma2, M)));
        }
        DMat pr, pc;
        detail::unc_map<DualAlg>(in, xv, &pr, &pc);
        auto so = detail::unc_second_order<DualAlg>(in, xv, pr, pc, sc.p, sc.sigma2);
        return ad::tan(detail::sum_rate(so.sinr));
    };

    const CMat CL_half = herm_sqrt(sc.corr.C_L, "C_L");
    if (detail::cascaded_active(st)) {
#pragma omp parallel for schedule(static) if (o.parallel)
        for (int l = 0; l < L; ++l) {
            auto in = inD;
            for (int k = 0; k < K; ++k)
                in.C[k] = DMat(st.C[k], dC_dphi(CL_half, phi.phi, sc.corr.C_R_of(k), sc.t(k), l));
            out.grad(l) = directional(in, x, lu, map, rate);
        }
    }

    return out;
}

double esr_zf_relaxed(const Scenario& sc, const RVec& s, const PhaseShifts& phi, const SolverSettings& st,
                      RVec* x_out)
{
    RateReport r;
    if (sc.corr.mode == CorrelationMode::uncommon) {
        auto stats = uncommon_stats_relaxed(sc, s, phi);
        auto sol = solve_zf_uncommon(stats, st);
        if (x_out) *x_out = sol.unknowns();
        r = sinr_zf_uncommon(stats, sol, sc.p, sc.sigma2);
    } else {
        auto stats = common_stats_relaxed(sc, s, phi);
        auto sol = solve_zf_common(stats, st);
        if (x_out) *x_out = sol.unknowns();
        r = sinr_zf_common(stats, sol, sc.p, sc.sigma2);
    }
    return r.esr;
}

PortGradient esr_gradient_ports_zf(const Scenario& sc, const RVec& s, const PhaseShifts& phi,
                                   const PortGradientOptions& o)
{
    const int Mt = sc.dims.M_tot, M = sc.dims.M, K = sc.dims.K, L = sc.dims.L;
    if (s.size() != Mt) throw ConstraintError("port gradient: selection length must be M_tot");
    if ((s.array() < 0).any() || (s.array() > 1).any())
        throw ConstraintError("port gradient: selection outside [0,1]");
    PortGradient out;
    out.esr = esr_zf_relaxed(sc, s, phi, o.solver, &out.x);
    out.grad = RVec::Zero(Mt);

    if (o.method == PortGradientMethod::finite_difference) {
        SolverSettings ws = o.solver;
        ws.init = out.x;
#pragma omp parallel for schedule(static) if (o.parallel)
        for (int i = 0; i < Mt; ++i) {
            RVec sp = s, sm = s;
            sp(i) += o.fd_step;
            sm(i) -= o.fd_step;
            out.grad(i) = (esr_zf_relaxed(sc, sp, phi, ws) - esr_zf_relaxed(sc, sm, phi, ws)) / (2 * o.fd_step);
        }
        return out;
    }

    const RVec& x = out.x;
    if (sc.corr.mode == CorrelationMode::uncommon) {
        auto st = uncommon_stats_relaxed(sc, s, phi);
        auto inD = detail::lift<DualAlg>(st, 0.0, true);
        auto map = [](const detail::UncIn<DualAlg>& in, const DRV& xv) { return detail::unc_map<DualAlg>(in, xv); };
        auto lu = fixed_point_jacobian(inD, x, map);
        RVec dmu;
        double esr;
        log_sum_rate_grad(x.segment(1 + K, K), sc.p, sc.sigma2, M, dmu, esr);
        RVec g = RVec::Zero(x.size());
        g.segment(1 + K, K) = dmu;
        RVec lam = lu.solve_transpose(g);

        auto inP = detail::lift<PlainAlg>(st, 0.0, true);
        CMat PR = detail::unc_psi_R<PlainAlg>(inP, x);
        const double delta = x(0);
        const RVec omega = x.segment(1, K), mu = x.segment(1 + K, K);
        double cR = 0;
        if (inP.casc)
            for (int k = 0; k < K; ++k) cR += omega(k) / (delta * M * mu(k));
        CMat B = lam(0) * st.R;
        for (int k = 0; k < K; ++k) B += lam(1 + K + k) * st.F[k];
        CMat Z = PR * B * PR;
        CMat XR = lam(0) * PR - cR * Z;
        out.grad = 2.0 * diag_product(sc.corr.R_tot, s, XR) / M;
        const bool shared = sc.corr.F_tot.size() == 1;
        CMat XF = CMat::Zero(Mt, Mt);
        for (int k = 0; k < K; ++k) {
            CMat Xk = sc.u(k) * (lam(1 + K + k) * PR - Z / (M * mu(k)));
            if (shared) XF += Xk;
            else out.grad += 2.0 * diag_product(sc.corr.F_tot[k], s, Xk) / M;
        }
        if (shared) out.grad += 2.0 * diag_product(sc.corr.F_tot[0], s, XF) / M;
        (void)L;
        return out;
    }

    auto st = common_stats_relaxed(sc, s, phi);
    auto inD = detail::lift<DualAlg>(st, 0.0, true);
    auto map = [](const detail::ComIn<DualAlg>& in, const DRV& xv) { return detail::com_map<DualAlg>(in, xv); };
    auto lu = fixed_point_jacobian(inD, x, map);
    RVec mu = st.u * x(1) + st.t * x(2);
    RVec dmu;
    double esr;
    log_sum_rate_grad(mu, sc.p, sc.sigma2, M, dmu, esr);
    RVec g = RVec::Zero(5);
    g(1) = dmu.dot(st.u);
    g(2) = dmu.dot(st.t);
    RVec lam = lu.solve_transpose(g);

    auto inP = detail::lift<PlainAlg>(st, 0.0, true);
    CMat PR = detail::com_psi_R<PlainAlg>(inP, x);
    const double a = inP.direct ? double(L) / M * x(3) : 0.0;
    const double b = inP.casc ? double(L) * x(2) * x(4) / (double(M) * x(0)) : 0.0;
    CMat Z = PR * (lam(0) * st.R + lam(1) * st.F) * PR;
    CMat XR = lam(0) * PR - b * Z;
    CMat XF = (inP.direct ? lam(1) : 0.0) * PR - a * Z;
    out.grad = 2.0 * (diag_product(sc.corr.R_tot, s, XR) + diag_product(sc.corr.F_tot[0], s, XF)) / M;
    return out;
}

}  // namespace fasris
