// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fasris/channel_model.hpp"
#include "fasris/deterministic_rate.hpp"

#include <cstdint>

namespace fasris {

struct PrecoderKind {
    Precoder type = Precoder::rzf;
    double z = 1.0;  // RZF only

    static PrecoderKind rzf(double z) { return {Precoder::rzf, z}; }
    static PrecoderKind zf() { return {Precoder::zf, 0.0}; }
    static PrecoderKind mrt() { return {Precoder::mrt, 0.0}; }
    void validate() const;
};

// Tr(G P G^H) = budget per realisation. The deterministic equivalents describe
// budget = M (unit power per selected port); budget = 1 is the same system at
// M times the noise power.
enum class PowerConvention { unit_trace, per_antenna };

inline double power_budget(PowerConvention c, int M) { return c == PowerConvention::unit_trace ? 1.0 : double(M); }

CMat build_precoder(const CMat& H, const PrecoderKind& kind, const RVec& p, double budget = 1.0);
RVec instantaneous_sinr(const CMat& H, const CMat& G, const RVec& p, double sigma2);

struct EsrEstimate {
    double mean = 0;
    double stderr_ = 0;
    double ci95 = 0;  // half-width
    int trials = 0;
    std::uint64_t seed = 0;
    RVec user_rate;  // per-user mean rate
};

struct McOptions {
    int trials = 2000;
    std::uint64_t seed = 1;
    PowerConvention power = PowerConvention::per_antenna;
    bool parallel = true;  // false runs the serial reference loop
};

EsrEstimate empirical_esr(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                          const PrecoderKind& kind, const McOptions& o = {});

// Sample averages of the resolvent functionals, Q = (zI + HH^H)^{-1}.
struct ResolventProbe {
    double delta = 0;   // Tr(RQ)/M
    RVec omega;         // Tr(Z_k Z_k^H Q)/L
    RVec mu;            // Tr(F_k Q)/M + omega_k
    RVec upsilon_I;     // Tr(Z_k Z_k^H Q Q)/L + Tr(F_k Q Q)/M, then Tr(R Q Q)/M
    RVec upsilon_R;     // same with K = R
    RMat Lambda;        // Tr(Z_k Z_k^H Q Z_l Z_l^H Q)/L + Tr(Z_k Z_k^H Q F_l Q)/M
    int trials = 0;
};

ResolventProbe resolvent_probe(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, double z,
                               int trials, std::uint64_t seed, bool parallel = true);

}  // namespace fasris
