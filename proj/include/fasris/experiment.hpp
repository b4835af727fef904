// SPDX-License-Identifier: Apache-2.0
//
// Experiment plumbing behind the command-line tool: JSON scenario configs,
// matrix files, sweeps, CSV tables and SVG plots.
#pragma once

#include "fasris/monte_carlo.hpp"
#include "fasris/optimizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fasris {

// --- matrix files ------------------------------------------------------------------
//
// CSV: first line "shape,<rows>,<cols>[,real|complex]", then one line per row.
// Complex rows hold re,im pairs (2*cols values), real rows hold cols values.
// Binary: 8-byte magic "FASRISM1", int64 rows, int64 cols, then rows*cols
// complex<double> in row-major order (host byte order).

CMat read_matrix(const std::string& path);
void write_matrix_csv(const std::string& path, const CMat& A);
void write_matrix_bin(const std::string& path, const CMat& A);

// --- scenarios ---------------------------------------------------------------------

// Builds a scenario from its JSON description. Relative file paths resolve
// against base_dir. `axis`/`value` override one parameter (sweeps).
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir = ".",
                            const std::string& axis = "", double value = 0.0);

// Whether the sweep axis can be applied to this scenario description.
bool axis_supported(const nlohmann::json& scenario, const std::string& axis);

PortSelection selection_from_json(const nlohmann::json& j, const Scenario& sc);
PhaseShifts phases_from_json(const nlohmann::json& j, const Scenario& sc);

// --- experiment config --------------------------------------------------------------

struct ExperimentConfig {
    nlohmann::json scenario;
    std::string base_dir = ".";
    nlohmann::json selection = "first";
    nlohmann::json phases = "zeros";
    std::optional<double> z;  // RZF regulariser, default K sigma^2 / M
    std::string axis_name = "snr_db";
    std::vector<double> axis_values;
    std::vector<Precoder> precoders{Precoder::rzf};
    bool de = true, mc = true;
    int trials = 2000;
    std::uint64_t seed = 1;
    SolverSettings solver;
    std::string csv_path = "results.csv";
    std::string svg_path;  // empty: no plot
    bool timing = false;   // write runtime_ms instead of 0

    static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
    void validate() const;  // ConstraintError on empty or unsorted sweeps etc.
};

ExperimentConfig load_config(const std::string& path);

struct ExperimentRow {
    std::string scenario_id;
    std::string axis_name;
    double axis_value = 0;
    std::string precoder;
    std::string method;  // DE, MC, or an optimiser label
    double esr = 0;
    double stderr_ = 0;
    double runtime_ms = 0;
};

inline constexpr const char* kExperimentHeader =
    "scenario_id,axis_name,axis_value,precoder,method,esr,stderr,runtime_ms";

struct PointOptions {
    bool de = true, mc = true;
    int trials = 2000;
    std::uint64_t seed = 1;
    SolverSettings solver;
};

// DE and/or MC rows for one scenario point, one pair per precoder. MRT gets a
// DE row only where a deterministic form exists (homogeneous iid).
std::vector<ExperimentRow> evaluate_point(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                          const std::vector<Precoder>& precoders, double z,
                                          const std::string& axis_name, double axis_value,
                                          const PointOptions& o);

// Rows ordered by axis value, then precoder, then method. Sweep points run in
// parallel; the output does not depend on the thread count.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);

std::string format_number(double v);  // shortest round-trip representation
std::string experiment_csv(const std::vector<ExperimentRow>& rows, bool timing = false);

// --- SVG ---------------------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
    bool markers_only = false;  // Monte-Carlo points are drawn as markers
};

struct PlotSpec {
    std::string title, x_label, y_label;
    bool log_x = false;
    std::vector<PlotSeries> series;
    std::vector<double> vlines;  // vertical reference lines (x values)
};

std::string render_svg(const PlotSpec& plot);
// One series per (precoder, method) pair.
PlotSpec plot_from_rows(const std::vector<ExperimentRow>& rows, const std::string& title);

// --- figures -----------------------------------------------------------------------

struct FigureOptions {
    int trials = 2000;
    std::uint64_t seed = 1;
    bool quick = false;  // smaller grids for smoke runs
    bool timing = false;
};

struct FigureResult {
    std::vector<ExperimentRow> rows;
    PlotSpec plot;
};

std::vector<std::string> figure_names();
FigureResult run_figure(const std::string& name, const FigureOptions& o);

// --- validation --------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double measured = 0;   // error measure, check dependent
    double tolerance = 0;
    std::string detail;
};

struct ValidateOptions {
    int trials = 2000;
    std::uint64_t seed = 1;
    PiBlock fault = PiBlock::none;  // corrupt one Pi block before the probe
    bool quick = false;
};

// Which Pi block explains the mismatch between the deterministic Pi and the
// Monte-Carlo resolvent functionals. Fits one scale per candidate block so
// that Pi * upsilon_MC = chi and keeps the block whose refit removes the most
// residual. Pi * upsilon amplifies Monte-Carlo noise, so the verdict rests on
// the fitted scale: a block is flagged when it needs more than
// kPiScaleTolerance of correction and the refit at least halves the residual.
inline constexpr double kPiScaleTolerance = 0.05;

struct FaultLocation {
    PiBlock block = PiBlock::none;      // flagged block, none when consistent
    PiBlock candidate = PiBlock::none;  // best-fitting block either way
    double residual = 0;                // relative residual of Pi * upsilon_MC - chi
    double best_residual = 0;           // after refitting the candidate
    double fitted_scale = 1;            // candidate correction factor
};

FaultLocation locate_pi_fault(const SecondOrderTermsUncommon& terms, const ResolventProbe& probe);

const char* to_string(PiBlock b);
PiBlock pi_block_from_string(const std::string& s);

std::vector<CheckResult> run_validation(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                        const ValidateOptions& o);
std::string validation_csv(const std::vector<CheckResult>& checks);

}  // namespace fasris
