// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fasris/linalg.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fasris {

struct Dimensions {
    int M = 1;      // selected ports / RF chains
    int K = 1;      // users
    int L = 1;      // RIS elements
    int M_tot = 1;  // candidate ports

    double c1() const { return double(K) / M; }
    double c2() const { return double(K) / L; }
    void validate() const;
};

struct PlanarFasGeometry {
    double W_x = 1.0;  // aperture, wavelengths
    double W_y = 1.0;
    int N_x = 1;
    int N_y = 1;
};

struct RisAngularProfile {
    double d_c = 0.5;    // element spacing, wavelengths
    double alpha = 0.0;  // mean angle, degrees
    double beta = 1.0;   // rms angular spread, degrees
    int L = 1;
};

struct PathLossParams {
    double C = 0.01;  // gain at 1 m, linear
    double exponent = 2.0;
    double d = 1.0;   // meters
};

enum class CorrelationMode { uncommon, common, iid };

const char* to_string(CorrelationMode m);

// BS-side matrices live on the full port grid (M_tot x M_tot). In common and
// iid mode F_tot and C_R hold a single shared matrix.
struct CorrelationSet {
    CMat R_tot;
    std::vector<CMat> F_tot;
    CMat C_L;
    std::vector<CMat> C_R;
    CorrelationMode mode = CorrelationMode::common;

    const CMat& F_of(int k) const { return F_tot.size() == 1 ? F_tot[0] : F_tot[k]; }
    const CMat& C_R_of(int k) const { return C_R.size() == 1 ? C_R[0] : C_R[k]; }
};

struct Scenario {
    std::string id = "scenario";
    Dimensions dims;
    CorrelationSet corr;
    RVec u;  // direct-link gains
    RVec t;  // cascaded-link gains
    RVec p;  // transmit powers
    double sigma2 = 1.0;

    bool homogeneous() const;
    void validate() const;  // throws ConstraintError / DomainError
};

struct PortSelection {
    RVec s;
    bool binary = true;

    static PortSelection from_indices(int M_tot, const std::vector<int>& idx);
    // "1 + (m-1) floor(M_tot/(M-1))" uniform pick, clamped to the grid.
    static PortSelection uniform(int M_tot, int M);
    static PortSelection first(int M_tot, int M);
    static PortSelection relaxed(RVec s);

    std::vector<int> indices() const;  // binary mode only
    int count() const;
    void validate(int M_tot, int M) const;
};

struct PhaseShifts {
    RVec phi;  // radians, wrapped to [0, 2pi)

    static PhaseShifts zeros(int L) { return PhaseShifts{RVec::Zero(L)}; }
    static PhaseShifts from_angles(const RVec& a);
    CVec diag() const;
    void wrap();
};

// --- generators -------------------------------------------------------------

CMat fas_correlation_matrix(const PlanarFasGeometry& g);
CMat ris_correlation_matrix(const RisAngularProfile& p);
double path_loss(const PathLossParams& p);
// Distance BS-user from the BS-RIS and RIS-user legs and the angle between them.
double cosine_rule_distance(double d1, double d2, double angle_deg);

CMat select_submatrix(const CMat& A_tot, const PortSelection& s);
// diag(s) A diag(s): covariance of diag(s) x when x has covariance A.
CMat embed_relaxed(const CMat& A_tot, const RVec& s);

struct EffectiveRis {
    CMat half;  // sqrt(t) C_L^{1/2} Phi C_R^{1/2}
    CMat C;     // half * half^H
};
EffectiveRis effective_ris_correlation(const CMat& C_L, const PhaseShifts& phi, const CMat& C_R, double t);
// dC/dphi_l for C = t C_L^{1/2} Phi C_R Phi^H C_L^{1/2}.
CMat gradient_G_l(const RVec& phi, int l);
CMat dC_dphi(const CMat& C_L_half, const RVec& phi, const CMat& C_R, double t, int l);

// --- statistics fed to the deterministic equivalents ------------------------

// Common-correlation statistics: shared F, R, C with per-user scalar gains.
struct CommonStats {
    int M = 0;  // normalisation dimension (selected ports)
    int L = 0;
    CMat F, R, C;
    RVec u, t;
};

// Uncommon statistics with gains folded in: F_k = u_k F_sel,k,
// C_k = t_k C_L^{1/2} Phi C_R,k Phi^H C_L^{1/2}.
struct UncommonStats {
    int M = 0;
    int L = 0;
    std::vector<CMat> F;
    CMat R;
    std::vector<CMat> C;
    int K() const { return int(F.size()); }
};

UncommonStats to_uncommon(const CommonStats& c);

// Requires common or iid mode.
CommonStats common_stats(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi);
UncommonStats uncommon_stats(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi);
// Relaxed selection: BS matrices embedded at full size, normalisation stays M.
CommonStats common_stats_relaxed(const Scenario& sc, const RVec& s, const PhaseShifts& phi);
UncommonStats uncommon_stats_relaxed(const Scenario& sc, const RVec& s, const PhaseShifts& phi);

// --- sampling -----------------------------------------------------------------

// Independent per-trial generator derived from one 64-bit seed.
struct RngStream {
    std::mt19937_64 gen;
    std::normal_distribution<double> nd{0.0, 1.0};

    RngStream(std::uint64_t seed, std::uint64_t index);
    // CN(0, var)
    cd cn(double var);
};

// Square-root factors reused across trials.
struct ChannelFactors {
    int M = 0, K = 0, L = 0;
    CMat R, R_half;
    std::vector<CMat> F;        // u_k F_k
    std::vector<CMat> F_half;   // sqrt(u_k) F_k^{1/2}
    std::vector<CMat> C_half;   // C_k^{+/2} = sqrt(t_k) C_L^{1/2} Phi C_R,k^{1/2}
    std::vector<CMat> C;        // C_k
    bool common = false;
};

ChannelFactors channel_factors(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi);

struct ChannelSample {
    CMat H;  // M x K
    CMat X;  // M x L, CN(0, 1/M)
    CMat W;  // M x K, columns w_k ~ CN(0, I/M)
    CMat Y;  // L x K, columns y_k ~ CN(0, I/L)
    // Z_k = R^{1/2} X C_k^{+/2}
    CMat Z(const ChannelFactors& f, int k) const { return f.R_half * X * f.C_half[k]; }
};

ChannelSample sample_channel(const ChannelFactors& f, RngStream& rng);
ChannelSample sample_channel(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, RngStream& rng);

}  // namespace fasris
