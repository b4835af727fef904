// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fasris/channel_model.hpp"
#include "fasris/linalg.hpp"

#include <optional>

namespace fasris {

struct SolverSettings {
    double tol = 1e-10;  // max relative change between sweeps
    int max_iter = 2000;
    double damping = 1.0;  // halved while the residual keeps growing
    double init_value = 1.0;
    std::optional<RVec> init;  // warm start in the solver's unknown ordering

    void validate() const;
};

struct SolveInfo {
    int iterations = 0;
    double residual = 0.0;
};

// Unknown ordering for the uncommon systems: [delta, omega_1..K, mu_1..K].
struct RzfUncommonSolution {
    double z = 0;
    double delta = 0;
    RVec mu, omega;
    CMat Psi_R, Psi_C;
    bool cascaded = true;  // false when every cascaded link vanishes
    SolveInfo info;
    RVec unknowns() const;
};

struct ZfUncommonSolution {
    double delta_u = 0;
    RVec mu_u, omega_u;
    CMat K_R, K_C;
    bool cascaded = true;
    SolveInfo info;
    RVec unknowns() const;
};

// Unknown ordering for the common systems: [delta, kappa, omega, kappa_bar, omega_bar].
struct RzfCommonSolution {
    double z = 0;
    double delta = 0, kappa = 0, omega = 0, kappa_bar = 0, omega_bar = 0;
    CMat Psi_R, Psi_C;
    RVec psi_T;  // Psi_T is diagonal
    bool cascaded = true, direct = true;
    SolveInfo info;
    RMat Psi_T() const { return psi_T.asDiagonal(); }
    RVec unknowns() const;
};

struct ZfCommonSolution {
    double delta = 0, kappa = 0, omega = 0, kappa_bar = 0, omega_bar = 0;
    CMat Psi_R, Psi_C;
    RVec psi_T;
    bool cascaded = true, direct = true;
    SolveInfo info;
    RMat Psi_T() const { return psi_T.asDiagonal(); }
    RVec unknowns() const;
};

struct IidSolution {
    double u = 0, t = 0, c1 = 0, c2 = 0;
    double alpha_val = 0, beta_val = 0;
    double mu_u = 0;
};

RzfUncommonSolution solve_rzf_uncommon(const UncommonStats& st, double z, const SolverSettings& s = {});
ZfUncommonSolution solve_zf_uncommon(const UncommonStats& st, const SolverSettings& s = {});
RzfCommonSolution solve_rzf_common(const CommonStats& st, double z, const SolverSettings& s = {});
ZfCommonSolution solve_zf_common(const CommonStats& st, const SolverSettings& s = {});
IidSolution solve_iid_zf(double u, double t, double c1, double c2);

// Max relative mismatch when the solution is plugged back into its system.
double residual(const UncommonStats& st, const RzfUncommonSolution& s);
double residual(const UncommonStats& st, const ZfUncommonSolution& s);
double residual(const CommonStats& st, const RzfCommonSolution& s);
double residual(const CommonStats& st, const ZfCommonSolution& s);

// Single-hop RZF system (no RIS) used as an independent cross-check:
// mu_k = (1/M) Tr(F_k (zI + sum_l F_l/(M(1+mu_l)))^{-1}).
RVec solve_single_hop(const std::vector<CMat>& F, int M, double z, const SolverSettings& s = {});

}  // namespace fasris
