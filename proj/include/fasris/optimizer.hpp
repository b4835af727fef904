// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fasris/deterministic_rate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fasris {

// --- phase gradients -----------------------------------------------------------

struct PhaseGradient {
    RVec grad;  // dESR/dphi_l in bits/s/Hz per radian
    double esr = 0;
    RVec x;     // fixed point used, solver ordering (warm start for callers)
};

struct GradientOptions {
    SolverSettings solver;
    bool parallel = true;
};

// dESR/dphi for RZF (kind = rzf, needs z) or ZF. Chooses the uncommon or
// common system from the scenario's correlation mode.
PhaseGradient esr_gradient_phases(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, Precoder kind,
                                  double z, const GradientOptions& o = {});
PhaseGradient esr_gradient_phases_common(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                         Precoder kind, double z, const GradientOptions& o = {});
PhaseGradient esr_gradient_phases_uncommon(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                           Precoder kind, double z, const GradientOptions& o = {});

// --- port gradient (ZF objective on the relaxed selection) ------------------------

enum class PortGradientMethod { adjoint, finite_difference };

struct PortGradient {
    RVec grad;  // dESR_ZF/ds_i
    double esr = 0;
    RVec x;
};

struct PortGradientOptions {
    SolverSettings solver;
    PortGradientMethod method = PortGradientMethod::adjoint;
    double fd_step = 1e-5;
    bool parallel = true;
};

PortGradient esr_gradient_ports_zf(const Scenario& sc, const RVec& s, const PhaseShifts& phi,
                                   const PortGradientOptions& o = {});

// ZF ESR on the relaxed selection (diag(s) embedding).
double esr_zf_relaxed(const Scenario& sc, const RVec& s, const PhaseShifts& phi, const SolverSettings& st = {},
                      RVec* x_out = nullptr);

// --- trace ----------------------------------------------------------------------

struct TraceRecord {
    std::string stage;  // "fw", "phase", "zsearch", "ao", "joint"
    int outer = 0;
    int iter = 0;
    double objective = 0;
    double step = 0;
    double residual = 0;  // gradient norm or relative change, stage dependent
    double wall_ms = 0;
};

struct OptimizationTrace {
    std::vector<TraceRecord> records;
    void add(TraceRecord r) { records.push_back(std::move(r)); }
    static std::string csv_header();
    // Wall time is left out unless asked for, so traces are reproducible.
    std::string to_csv(bool with_time = false) const;
};

// --- Frank-Wolfe port selection ----------------------------------------------------

// Ones at the M largest gradient entries, ties to the lowest index.
PortSelection fw_linear_oracle(const RVec& gradient, int M);

struct FwSettings {
    double eps = 1e-5;
    int max_iter = 500;
    PortGradientOptions grad;
};

struct FwResult {
    PortSelection s;
    RVec relaxed;
    int iterations = 0;
    double objective = 0;  // relaxed ZF ESR at the last iterate
};

FwResult fw_port_selection(const Scenario& sc, const PhaseShifts& phi, const FwSettings& st = {},
                           OptimizationTrace* trace = nullptr, int outer = 0);

// --- phases ---------------------------------------------------------------------

struct AscentSettings {
    double alpha0 = 1.0;
    double c = 0.5;      // step scaling
    double beta = 1e-4;  // Armijo control
    int max_halvings = 40;
    double eps = 1e-8;   // relative ESR change
    double grad_tol = 1e-6;
    int max_iter = 200;
    GradientOptions grad;
    void validate() const;
};

struct AscentResult {
    PhaseShifts phi;
    double esr = 0;
    double grad_norm = 0;
    int iterations = 0;
    bool stalled = false;  // line search exhausted
};

AscentResult gradient_ascent_phases(const Scenario& sc, const PortSelection& s, Precoder kind, double z,
                                    const PhaseShifts& phi0, const AscentSettings& st = {},
                                    OptimizationTrace* trace = nullptr, int outer = 0);

// --- regulariser ------------------------------------------------------------------

struct ZSearchSettings {
    int grid_points = 41;
    double lo_factor = 1e-4;  // times K sigma^2 / M
    double hi_factor = 1e4;
    double rel_width = 1e-4;
    bool homogeneous_shortcut = true;
    SolverSettings solver;
};

struct ZSearchResult {
    double z = 0;
    double esr = 0;
    bool shortcut = false;
    int evaluations = 0;
    RVec grid_z, grid_esr;
};

ZSearchResult search_regularization(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                    const ZSearchSettings& st = {}, OptimizationTrace* trace = nullptr,
                                    int outer = 0);

// --- alternating and joint ---------------------------------------------------------

struct AoSettings {
    Precoder kind = Precoder::rzf;
    double eps = 1e-5;
    int max_outer = 20;
    AscentSettings ascent;
    ZSearchSettings zsearch;
};

struct AoResult {
    PhaseShifts phi;
    double z = 0;
    double esr = 0;
    int outer = 0;
};

AoResult alternating_optimization(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi0, double z0,
                                  const AoSettings& st = {}, OptimizationTrace* trace = nullptr);

struct JointSettings {
    int T_iter = 2;
    FwSettings fw;
    AoSettings ao;
};

struct JointResult {
    PortSelection s;
    PhaseShifts phi;
    double z = 0;
    RateReport report;
    std::vector<double> history;  // ESR per outer iteration
    OptimizationTrace trace;
};

JointResult joint_optimize(const Scenario& sc, const JointSettings& st = {},
                           std::optional<PhaseShifts> phi0 = std::nullopt, std::optional<double> z0 = std::nullopt);

}  // namespace fasris
