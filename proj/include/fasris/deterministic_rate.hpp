// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fasris/channel_model.hpp"
#include "fasris/detail/second_order.hpp"
#include "fasris/fixed_point.hpp"

#include <json.hpp>

#include <string>

namespace fasris {

enum class Precoder { rzf, zf, mrt };

const char* to_string(Precoder p);
Precoder precoder_from_string(const std::string& s);

// Rates are in bits/s/Hz.
struct RateReport {
    std::string regime;  // "<precoder>/<correlation>", e.g. "rzf/uncommon"
    RVec sinr;
    RVec rate;
    double esr = 0.0;
    double z = 0.0;  // 0 when the precoder has no regularizer
    std::string digest;
    bool saturated = false;  // MRT only: noise no longer limits the rate

    static std::string csv_header();
    std::string csv_row() const;
    nlohmann::json to_json() const;
};

RateReport make_report(std::string regime, const RVec& sinr, double z = 0.0, std::string digest = {});

// Stable hash of the optimisation variables (z, s, phi) in hex.
std::string inputs_digest(double z, const PortSelection& s, const PhaseShifts& phi);

struct SecondOrderTermsUncommon {
    RMat chi;  // (K+2) x (K+2) Gram over {F_1..F_K, R, I}
    RMat Xi;
    RVec Xi_I;
    RMat Delta, Pi;
    RMat Fbar;        // Delta^{-1}(I - Delta)
    RVec pi_inv_chi_I;  // [Upsilon_1(I)..Upsilon_K(I), Gamma(R, I)]
    RVec pi_inv_chi_R;
    RMat Lambda, Psi;
    double C_bar = 0;
    double cond_Delta = 1, cond_Pi = 1;
};

struct SecondOrderTermsCommon {
    double chi_RR = 0, chi_RF = 0, chi_FF = 0, chi_RI = 0, chi_FI = 0;
    double eta_TT = 0, eta_TU = 0, eta_UU = 0, eta_PT = 0, eta_PU = 0;
    double Xi = 0, Xi_I = 0, Delta = 0;
    RMat Pi;
    RVec pi_inv_chi_R, pi_inv_chi_F, pi_inv_chi_I;
    RMat Psi;
    double C_bar = 0;
    double cond_Pi = 1;
};

SecondOrderTermsUncommon second_order_uncommon(const UncommonStats& st, const RzfUncommonSolution& sol,
                                               const RVec& p, const SecondOrderOptions& o = {});
SecondOrderTermsCommon second_order_common(const CommonStats& st, const RzfCommonSolution& sol, const RVec& p);

RateReport sinr_rzf_uncommon(const UncommonStats& st, const RzfUncommonSolution& sol, const RVec& p, double sigma2,
                             const SecondOrderOptions& o = {});
RateReport sinr_zf_uncommon(const UncommonStats& st, const ZfUncommonSolution& sol, const RVec& p, double sigma2);
RateReport sinr_rzf_common(const CommonStats& st, const RzfCommonSolution& sol, const RVec& p, double sigma2);
RateReport sinr_zf_common(const CommonStats& st, const ZfCommonSolution& sol, const RVec& p, double sigma2);

RateReport esr_iid_zf(double u, double t, double c1, double c2, double sigma2, int K);
RateReport esr_iid_mrt(double u, double t, int M, int K, int L, double sigma2);
int min_ports(double R_target, int K, double u, double t, double c2, double sigma2);

// End-to-end evaluation of a scenario at (s, phi, z). Uncommon scenarios use
// the uncommon system, common and iid ones the common system. MRT only has a
// deterministic form for iid scenarios. A relaxed s is accepted for ZF only.
struct EvalOptions {
    SolverSettings solver;
    SecondOrderOptions second_order;
};

RateReport deterministic_esr(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, Precoder kind,
                             double z, const EvalOptions& o = {});

// z = K sigma^2 / M. Near-optimal for homogeneous users; the exact large-system
// argmax carries an extra K/(K-1).
double default_regularizer(const Scenario& sc);

}  // namespace fasris
