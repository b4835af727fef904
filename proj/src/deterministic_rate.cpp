// SPDX-License-Identifier: Apache-2.0
#include "fasris/deterministic_rate.hpp"

#include <boost/functional/hash.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace fasris {

const char* to_string(Precoder p)
{
    switch (p) {
    case Precoder::rzf: return "rzf";
    case Precoder::zf: return "zf";
    case Precoder::mrt: return "mrt";
    }
    return "?";
}

Precoder precoder_from_string(const std::string& s)
{
    if (s == "rzf") return Precoder::rzf;
    if (s == "zf") return Precoder::zf;
    if (s == "mrt") return Precoder::mrt;
    throw ConstraintError("unknown precoder '" + s + "' (expected rzf, zf or mrt)");
}

std::string RateReport::csv_header() { return "regime,K,esr,z,digest,saturated,sinr"; }

std::string RateReport::csv_row() const
{
    std::ostringstream os;
    os.precision(17);
    os << regime << ',' << sinr.size() << ',' << esr << ',' << z << ',' << digest << ',' << (saturated ? 1 : 0)
       << ',';
    for (Eigen::Index k = 0; k < sinr.size(); ++k) os << (k ? ";" : "") << sinr(k);
    return os.str();
}

nlohmann::json RateReport::to_json() const
{
    nlohmann::json j;
    j["regime"] = regime;
    j["esr"] = esr;
    j["z"] = z;
    j["digest"] = digest;
    j["saturated"] = saturated;
    j["sinr"] = std::vector<double>(sinr.data(), sinr.data() + sinr.size());
    j["rate"] = std::vector<double>(rate.data(), rate.data() + rate.size());
    return j;
}

RateReport make_report(std::string regime, const RVec& sinr, double z, std::string digest)
{
    RateReport r;
    r.regime = std::move(regime);
    r.sinr = sinr;
    r.rate = RVec(sinr.size());
    for (Eigen::Index k = 0; k < sinr.size(); ++k) {
        if (!(sinr(k) >= 0) || !std::isfinite(sinr(k)))
            throw NumericalError(r.regime + ": invalid SINR for user " + std::to_string(k));
        r.rate(k) = std::log2(1.0 + sinr(k));
    }
    // summed in user order so esr == rate.sum() bit for bit
    r.esr = 0.0;
    for (Eigen::Index k = 0; k < r.rate.size(); ++k) r.esr += r.rate(k);
    r.z = z;
    r.digest = std::move(digest);
    return r;
}

std::string inputs_digest(double z, const PortSelection& s, const PhaseShifts& phi)
{
    std::size_t h = 0;
    boost::hash_combine(h, z);
    boost::hash_range(h, s.s.data(), s.s.data() + s.s.size());
    boost::hash_range(h, phi.phi.data(), phi.phi.data() + phi.phi.size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016zx", h);
    return buf;
}

namespace {

void check_powers(const RVec& p, int K, const char* who)
{
    if (p.size() != K) throw ConstraintError(std::string(who) + ": power vector must have K entries");
    if ((p.array() <= 0).any()) throw ConstraintError(std::string(who) + ": powers must be positive");
}

void check_sigma(double sigma2, const char* who)
{
    if (!(sigma2 > 0)) throw ConstraintError(std::string(who) + ": sigma2 must be positive");
}

}  // namespace

SecondOrderTermsUncommon second_order_uncommon(const UncommonStats& st, const RzfUncommonSolution& sol,
                                               const RVec& p, const SecondOrderOptions& o)
{
    check_powers(p, st.K(), "second_order_uncommon");
    auto in = detail::lift<PlainAlg>(st, sol.z, false);
    auto so = detail::unc_second_order<PlainAlg>(in, sol.unknowns(), sol.Psi_R, sol.Psi_C, p, 1.0, o);
    SecondOrderTermsUncommon t;
    t.chi = so.chi;
    t.Xi = so.Xi;
    t.Xi_I = so.Xi_I;
    t.Delta = so.Delta;
    t.Pi = so.Pi;
    t.Fbar = so.Fbar;
    t.pi_inv_chi_I = so.a_I;
    t.pi_inv_chi_R = so.a_R;
    t.Lambda = so.Lambda;
    t.Psi = so.Psi;
    t.C_bar = so.C_bar;
    t.cond_Delta = so.cond_Delta;
    t.cond_Pi = so.cond_Pi;
    return t;
}

SecondOrderTermsCommon second_order_common(const CommonStats& st, const RzfCommonSolution& sol, const RVec& p)
{
    check_powers(p, int(st.u.size()), "second_order_common");
    auto in = detail::lift<PlainAlg>(st, sol.z, false);
    auto so = detail::com_second_order<PlainAlg>(in, sol.unknowns(), sol.Psi_R, sol.Psi_C, sol.psi_T, p, 1.0);
    SecondOrderTermsCommon t;
    t.chi_RR = so.chi_RR;
    t.chi_RF = so.chi_RF;
    t.chi_FF = so.chi_FF;
    t.chi_RI = so.chi_RI;
    t.chi_FI = so.chi_FI;
    t.eta_TT = so.eta_TT;
    t.eta_TU = so.eta_TU;
    t.eta_UU = so.eta_UU;
    t.eta_PT = so.eta_PT;
    t.eta_PU = so.eta_PU;
    t.Xi = so.Xi;
    t.Xi_I = so.Xi_I;
    t.Delta = so.Delta;
    t.Pi = so.Pi;
    t.pi_inv_chi_R = so.a_R;
    t.pi_inv_chi_F = so.a_F;
    t.pi_inv_chi_I = so.a_I;
    t.Psi = so.Psi;
    t.C_bar = so.C_bar;
    t.cond_Pi = so.cond_Pi;
    return t;
}

RateReport sinr_rzf_uncommon(const UncommonStats& st, const RzfUncommonSolution& sol, const RVec& p, double sigma2,
                             const SecondOrderOptions& o)
{
    check_powers(p, st.K(), "sinr_rzf_uncommon");
    check_sigma(sigma2, "sinr_rzf_uncommon");
    auto in = detail::lift<PlainAlg>(st, sol.z, false);
    auto so = detail::unc_second_order<PlainAlg>(in, sol.unknowns(), sol.Psi_R, sol.Psi_C, p, sigma2, o);
    return make_report("rzf/uncommon", so.sinr, sol.z);
}

RateReport sinr_zf_uncommon(const UncommonStats& st, const ZfUncommonSolution& sol, const RVec& p, double sigma2)
{
    check_powers(p, st.K(), "sinr_zf_uncommon");
    check_sigma(sigma2, "sinr_zf_uncommon");
    if (st.M < st.K()) throw FeasibilityError("ZF needs M >= K");
    return make_report("zf/uncommon", detail::zf_sinr(sol.mu_u, p, sigma2, st.M));
}

RateReport sinr_rzf_common(const CommonStats& st, const RzfCommonSolution& sol, const RVec& p, double sigma2)
{
    check_powers(p, int(st.u.size()), "sinr_rzf_common");
    check_sigma(sigma2, "sinr_rzf_common");
    auto in = detail::lift<PlainAlg>(st, sol.z, false);
    auto so = detail::com_second_order<PlainAlg>(in, sol.unknowns(), sol.Psi_R, sol.Psi_C, sol.psi_T, p, sigma2);
    return make_report("rzf/common", so.sinr, sol.z);
}

RateReport sinr_zf_common(const CommonStats& st, const ZfCommonSolution& sol, const RVec& p, double sigma2)
{
    const int K = int(st.u.size());
    check_powers(p, K, "sinr_zf_common");
    check_sigma(sigma2, "sinr_zf_common");
    if (st.M < K) throw FeasibilityError("ZF needs M >= K");
    RVec mu = st.u * sol.kappa + st.t * sol.omega;
    if ((mu.array() <= 0).any()) throw FeasibilityError("ZF: a user has zero effective gain");
    return make_report("zf/common", detail::zf_sinr(mu, p, sigma2, st.M));
}

RateReport esr_iid_zf(double u, double t, double c1, double c2, double sigma2, int K)
{
    check_sigma(sigma2, "esr_iid_zf");
    if (K < 1) throw ConstraintError("esr_iid_zf: K must be >= 1");
    IidSolution s = solve_iid_zf(u, t, c1, c2);
    const double g = s.mu_u / (c1 * sigma2);
    return make_report("zf/iid", RVec::Constant(K, g));
}

RateReport esr_iid_mrt(double u, double t, int M, int K, int L, double sigma2)
{
    check_sigma(sigma2, "esr_iid_mrt");
    if (M < 1 || K < 1 || L < 1) throw ConstraintError("esr_iid_mrt: M, K, L must be >= 1");
    if (u < 0 || t < 0 || u + t <= 0) throw ConstraintError("esr_iid_mrt: need u, t >= 0 and u + t > 0");
    const double Md = M, Ld = L, Km1 = K - 1;
    const double interf = Km1 * t * (u + t) / Md + Km1 * t * (t * Ld / (Md * Md) + u * Ld / Md) / Ld;
    const double noise = K * sigma2 * (t + u) / Md;
    const double g = (t + u) * (t + u) / (interf + noise);
    RateReport r = make_report("mrt/iid", RVec::Constant(K, g));
    // interference-limited: a further SNR increase barely moves the rate
    r.saturated = interf > 0 && noise < 1e-2 * interf;
    return r;
}

int min_ports(double R_target, int K, double u, double t, double c2, double sigma2)
{
    if (!(R_target >= 0)) throw ConstraintError("min_ports: target rate must be >= 0");
    check_sigma(sigma2, "min_ports");
    IidSolution s = solve_iid_zf(u, t, 0.5, c2);  // beta does not depend on c1
    const double m = K * (sigma2 * (std::exp2(R_target / K) - 1.0) / s.beta_val + 1.0);
    return int(std::ceil(m));
}

double default_regularizer(const Scenario& sc) { return sc.dims.K * sc.sigma2 / sc.dims.M; }

RateReport deterministic_esr(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, Precoder kind,
                             double z, const EvalOptions& o)
{
    const std::string digest = inputs_digest(kind == Precoder::rzf ? z : 0.0, s, phi);
    const bool unc = sc.corr.mode == CorrelationMode::uncommon;
    RateReport r;
    switch (kind) {
    case Precoder::rzf: {
        if (!s.binary) throw ConstraintError("RZF evaluation needs a binary port selection");
        if (unc) {
            auto st = uncommon_stats(sc, s, phi);
            auto sol = solve_rzf_uncommon(st, z, o.solver);
            r = sinr_rzf_uncommon(st, sol, sc.p, sc.sigma2, o.second_order);
        } else {
            auto st = common_stats(sc, s, phi);
            auto sol = solve_rzf_common(st, z, o.solver);
            r = sinr_rzf_common(st, sol, sc.p, sc.sigma2);
        }
        break;
    }
    case Precoder::zf: {
        if (unc) {
            auto st = s.binary ? uncommon_stats(sc, s, phi) : uncommon_stats_relaxed(sc, s.s, phi);
            auto sol = solve_zf_uncommon(st, o.solver);
            r = sinr_zf_uncommon(st, sol, sc.p, sc.sigma2);
        } else {
            auto st = s.binary ? common_stats(sc, s, phi) : common_stats_relaxed(sc, s.s, phi);
            auto sol = solve_zf_common(st, o.solver);
            r = sinr_zf_common(st, sol, sc.p, sc.sigma2);
        }
        break;
    }
    case Precoder::mrt: {
        if (sc.corr.mode != CorrelationMode::iid || !sc.homogeneous())
            throw DomainError("MRT has a deterministic form only for homogeneous iid scenarios; use Monte Carlo");
        r = esr_iid_mrt(sc.u(0), sc.t(0), sc.dims.M, sc.dims.K, sc.dims.L, sc.sigma2);
        break;
    }
    }
    if (kind != Precoder::mrt) {
        const char* mode = to_string(sc.corr.mode);
        r.regime = std::string(to_string(kind)) + "/" + mode;
    }
    r.digest = digest;
    return r;
}

}  // namespace fasris
