// SPDX-License-Identifier: Apache-2.0
//
// fasris: command-line front end for evaluation, Monte Carlo, optimisation,
// sweeps, validation and figure recipes.
#include "fasris/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace fasris;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out_dir = ".";
    bool timing = false;
};

// Exit codes: 1 unexpected, 2 bad input, 3 numerical trouble.
int fail(const std::string& kind, const std::string& msg, int code)
{
    json d{{"error", kind}, {"message", msg}};
    std::cerr << d.dump() << '\n';
    return code;
}

void apply_threads(const Globals& g)
{
    int n = 0;
    if (g.threads) {
        n = *g.threads;
    } else if (const char* env = std::getenv("FASRIS_THREADS")) {
        try {
            n = std::stoi(env);
        } catch (const std::exception&) {
            throw ConstraintError(std::string("FASRIS_THREADS must be an integer, got '") + env + "'");
        }
    }
    if (n < 0) throw ConstraintError("thread count must be >= 1");
    if (n > 0) omp_set_num_threads(n);
}

std::string out_path(const Globals& g, const std::string& p)
{
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(g.out_dir) / p).string();
}

void write_file(const std::string& path, const std::string& text)
{
    const fs::path dir = fs::path(path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConstraintError("cannot write " + path);
    out << text;
}

ExperimentConfig config_of(const Globals& g)
{
    if (g.config.empty()) throw ConstraintError("--config is required");
    ExperimentConfig c = load_config(g.config);
    if (g.seed) c.seed = *g.seed;
    c.timing = g.timing;
    return c;
}

struct Point {
    Scenario sc;
    PortSelection s;
    PhaseShifts phi;
    double z;
};

Point point_of(const ExperimentConfig& c)
{
    Point p{scenario_from_json(c.scenario, c.base_dir), {}, {}, 0};
    p.s = selection_from_json(c.selection, p.sc);
    p.phi = phases_from_json(c.phases, p.sc);
    p.z = c.z.value_or(default_regularizer(p.sc));
    return p;
}

PrecoderKind kind_of(Precoder p, double z)
{
    return p == Precoder::rzf ? PrecoderKind::rzf(z) : p == Precoder::zf ? PrecoderKind::zf() : PrecoderKind::mrt();
}

// s, phi and z from an optimize solution file
void apply_solution(Point& p, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConstraintError("cannot open solution " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConstraintError(path + ": " + e.what());
    }
    p.s = PortSelection::from_indices(p.sc.dims.M_tot, j.at("s").get<std::vector<int>>());
    const auto phi = j.at("phi").get<std::vector<double>>();
    p.phi = PhaseShifts::from_angles(Eigen::Map<const RVec>(phi.data(), Eigen::Index(phi.size())));
    if (j.contains("z") && j["z"].get<double>() > 0) p.z = j["z"].get<double>();
}

// --- subcommands ---------------------------------------------------------------

int cmd_evaluate(const Globals& g, const std::string& precoder, const std::string& solution,
                 const std::string& out, const std::string& csv)
{
    const ExperimentConfig c = config_of(g);
    Point p = point_of(c);
    if (!solution.empty()) apply_solution(p, solution);
    const Precoder kind = precoder_from_string(precoder);
    EvalOptions eo;
    eo.solver = c.solver;
    const RateReport r = deterministic_esr(p.sc, p.s, p.phi, kind, kind == Precoder::rzf ? p.z : 0.0, eo);
    json j = r.to_json();
    j["scenario_id"] = p.sc.id;
    write_file(out_path(g, out), j.dump(2) + "\n");
    write_file(out_path(g, csv), RateReport::csv_header() + "\n" + r.csv_row() + "\n");
    std::cout << p.sc.id << ' ' << r.regime << " ESR " << format_number(r.esr) << " bits/s/Hz\n";
    return 0;
}

int cmd_montecarlo(const Globals& g, std::optional<int> trials, const std::string& precoder, const std::string& out)
{
    ExperimentConfig c = config_of(g);
    if (trials) c.trials = *trials;
    if (c.trials < 1) throw ConstraintError("--trials must be >= 1");
    if (c.axis_name != "snr_db") throw ConstraintError("montecarlo sweeps snr_db only");
    c.validate();
    const Precoder kind = precoder_from_string(precoder);
    std::ostringstream os;
    os << "scenario_id,snr_db,precoder,trials,esr_mean,esr_stderr\n";
    for (double snr : c.axis_values) {
        const Scenario sc = scenario_from_json(c.scenario, c.base_dir, "snr_db", snr);
        const PortSelection s = selection_from_json(c.selection, sc);
        const PhaseShifts phi = phases_from_json(c.phases, sc);
        McOptions mo;
        mo.trials = c.trials;
        mo.seed = c.seed;
        const EsrEstimate e = empirical_esr(sc, s, phi, kind_of(kind, c.z.value_or(default_regularizer(sc))), mo);
        os << sc.id << ',' << format_number(snr) << ',' << to_string(kind) << ',' << c.trials << ','
           << format_number(e.mean) << ',' << format_number(e.stderr_) << '\n';
    }
    write_file(out_path(g, out), os.str());
    return 0;
}

int cmd_optimize(const Globals& g, const std::string& mode, const std::string& precoder, const std::string& trace_path,
                 const std::string& out, std::optional<int> mc_trials)
{
    const ExperimentConfig c = config_of(g);
    Point p = point_of(c);
    const Precoder kind = precoder_from_string(precoder);
    if (kind == Precoder::mrt) throw ConstraintError("optimize supports --precoder rzf or zf");
    OptimizationTrace trace;
    double z = kind == Precoder::rzf ? p.z : 0.0;

    if (mode == "joint") {
        JointSettings st;
        st.ao.kind = kind;
        JointResult r = joint_optimize(p.sc, st, p.phi, p.z);
        p.s = r.s;
        p.phi = r.phi;
        z = r.z;
        trace = std::move(r.trace);
    } else if (mode == "phases") {
        AscentSettings st;
        st.grad.solver = c.solver;
        p.phi = gradient_ascent_phases(p.sc, p.s, kind, z, p.phi, st, &trace).phi;
    } else if (mode == "ports") {
        p.s = fw_port_selection(p.sc, p.phi, {}, &trace).s;
    } else if (mode == "zsearch") {
        if (kind != Precoder::rzf) throw ConstraintError("--mode zsearch needs --precoder rzf");
        ZSearchSettings st;
        st.solver = c.solver;
        z = search_regularization(p.sc, p.s, p.phi, st, &trace).z;
    } else {
        throw ConstraintError("unknown mode '" + mode + "' (joint|phases|ports|zsearch)");
    }

    EvalOptions eo;
    eo.solver = c.solver;
    const RateReport r = deterministic_esr(p.sc, p.s, p.phi, kind, z, eo);
    McOptions mo;
    mo.trials = mc_trials.value_or(c.trials);
    mo.seed = c.seed;
    const EsrEstimate e = empirical_esr(p.sc, p.s, p.phi, kind_of(kind, z), mo);

    json j;
    j["scenario_id"] = p.sc.id;
    j["mode"] = mode;
    j["precoder"] = to_string(kind);
    j["s"] = p.s.indices();  // 0-based port indices
    j["phi"] = std::vector<double>(p.phi.phi.data(), p.phi.phi.data() + p.phi.phi.size());
    j["z"] = z;
    j["esr_de"] = r.esr;
    j["mc"] = {{"trials", e.trials}, {"seed", e.seed}, {"esr_mean", e.mean}, {"esr_stderr", e.stderr_}};
    j["report"] = r.to_json();
    write_file(out_path(g, out), j.dump(2) + "\n");
    if (!trace_path.empty()) write_file(out_path(g, trace_path), trace.to_csv(g.timing));
    std::cout << p.sc.id << ' ' << mode << ' ' << to_string(kind) << " ESR " << format_number(r.esr) << " (MC "
              << format_number(e.mean) << " +- " << format_number(e.stderr_) << ")\n";
    return 0;
}

int cmd_sweep(const Globals& g, const std::string& csv, const std::string& svg)
{
    ExperimentConfig c = config_of(g);
    if (!csv.empty()) c.csv_path = csv;
    if (!svg.empty()) c.svg_path = svg;
    const auto rows = run_experiment(c);  // validates before anything is written
    write_file(out_path(g, c.csv_path), experiment_csv(rows, c.timing));
    if (!c.svg_path.empty()) write_file(out_path(g, c.svg_path), render_svg(plot_from_rows(rows, c.csv_path)));
    std::cout << rows.size() << " rows -> " << out_path(g, c.csv_path) << '\n';
    return 0;
}

int cmd_validate(const Globals& g, const std::string& fault, bool quick, std::optional<int> trials,
                 const std::string& out, bool strict)
{
    const ExperimentConfig c = config_of(g);
    const Point p = point_of(c);
    ValidateOptions o;
    o.trials = trials.value_or(c.trials);
    o.seed = c.seed;
    o.fault = pi_block_from_string(fault);
    o.quick = quick;
    const auto checks = run_validation(p.sc, p.s, p.phi, o);
    write_file(out_path(g, out), validation_csv(checks));
    int failed = 0;
    for (const auto& ch : checks) {
        const char* status = ch.skipped ? "SKIP" : ch.passed ? "PASS" : "FAIL";
        std::cout << status << "  " << ch.name;
        if (!ch.skipped) std::cout << "  " << format_number(ch.measured) << " (tol " << format_number(ch.tolerance) << ")";
        std::cout << "  " << ch.detail << '\n';
        failed += !ch.passed;
    }
    std::cout << failed << " of " << checks.size() << " checks failed\n";
    return strict && failed ? 1 : 0;
}

int cmd_figure(const Globals& g, const std::string& name, bool quick, std::optional<int> trials)
{
    FigureOptions o;
    if (trials) o.trials = *trials;
    if (g.seed) o.seed = *g.seed;
    o.quick = quick;
    o.timing = g.timing;
    const std::vector<std::string> names = name == "all" ? figure_names() : std::vector<std::string>{name};
    for (const auto& n : names) {
        const FigureResult r = run_figure(n, o);
        write_file(out_path(g, n + ".csv"), experiment_csv(r.rows, g.timing));
        write_file(out_path(g, n + ".svg"), render_svg(r.plot));
        std::cout << n << ": " << r.rows.size() << " rows\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Deterministic-equivalent analysis and optimisation of FAS-RIS downlinks"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "experiment/scenario JSON file");
    app.add_option("--seed", g.seed, "override the configured seed");
    app.add_option("--threads", g.threads, "OpenMP threads (default: FASRIS_THREADS, then OpenMP default)")
        ->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "directory for output files");
    app.add_flag("--timing", g.timing, "record wall-clock times (outputs stop being reproducible)");

    // one variable per subcommand option: default_val writes through immediately
    std::string ev_precoder = "rzf", ev_out, ev_csv, solution;
    std::string mc_precoder = "rzf", mc_out;
    std::string op_precoder = "rzf", op_out, mode = "joint", trace;
    std::string sw_csv, sw_svg;
    std::string va_out, fault = "none", fig;
    std::optional<int> trials, mc_trials;
    bool quick = false, strict = false;

    auto* ev = app.add_subcommand("evaluate", "deterministic ESR at the configured point");
    ev->add_option("--precoder", ev_precoder)->check(CLI::IsMember({"rzf", "zf", "mrt"}));
    ev->add_option("--solution", solution, "take s, phi, z from an optimize output");
    ev->add_option("--out", ev_out, "JSON report")->default_val("report.json");
    ev->add_option("--csv", ev_csv, "CSV report")->default_val("report.csv");

    auto* mc = app.add_subcommand("montecarlo", "Monte-Carlo ESR over the configured SNR points");
    mc->add_option("--trials", trials);
    mc->add_option("--precoder", mc_precoder)->check(CLI::IsMember({"rzf", "zf", "mrt"}));
    mc->add_option("--out", mc_out)->default_val("results.csv");

    auto* op = app.add_subcommand("optimize", "optimise ports, phases and regulariser");
    op->add_option("--mode", mode)->check(CLI::IsMember({"joint", "phases", "ports", "zsearch"}));
    op->add_option("--precoder", op_precoder)->check(CLI::IsMember({"rzf", "zf"}));
    op->add_option("--trace", trace, "optimisation trace CSV");
    op->add_option("--out", op_out)->default_val("solution.json");
    op->add_option("--mc-trials", mc_trials, "trials for the Monte-Carlo confirmation");

    auto* sw = app.add_subcommand("sweep", "DE and MC over the configured sweep");
    sw->add_option("--csv", sw_csv, "override output.csv");
    sw->add_option("--svg", sw_svg, "override output.svg");

    auto* va = app.add_subcommand("validate", "invariant checks on the configured point");
    va->add_option("--fault", fault, "corrupt one Pi block: user_user|ris_row|user_col|corner");
    va->add_flag("--quick", quick);
    va->add_option("--trials", trials);
    va->add_option("--out", va_out)->default_val("validation.csv");
    va->add_flag("--strict", strict, "exit 1 when a check fails");

    auto* fg = app.add_subcommand("figure", "run a figure recipe (fig1..fig8 or all)");
    fg->add_option("name", fig)->required();
    fg->add_flag("--quick", quick, "reduced grids");
    fg->add_option("--trials", trials);

    CLI11_PARSE(app, argc, argv);

    try {
        apply_threads(g);
        if (*ev) return cmd_evaluate(g, ev_precoder, solution, ev_out, ev_csv);
        if (*mc) return cmd_montecarlo(g, trials, mc_precoder, mc_out);
        if (*op) return cmd_optimize(g, mode, op_precoder, trace, op_out, mc_trials);
        if (*sw) return cmd_sweep(g, sw_csv, sw_svg);
        if (*va) return cmd_validate(g, fault, quick, trials, va_out, strict);
        if (*fg) return cmd_figure(g, fig, quick, trials);
    } catch (const ConstraintError& e) {
        return fail("constraint", e.what(), 2);
    } catch (const DomainError& e) {
        return fail("domain", e.what(), 2);
    } catch (const FeasibilityError& e) {
        return fail("feasibility", e.what(), 2);
    } catch (const ConvergenceError& e) {
        return fail("convergence", e.what(), 3);
    } catch (const NumericalError& e) {
        return fail("numerical", e.what(), 3);
    } catch (const PrecisionError& e) {
        return fail("precision", e.what(), 3);
    } catch (const json::exception& e) {
        return fail("constraint", std::string("config: ") + e.what(), 2);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
