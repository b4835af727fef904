// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "fasris/experiment.hpp"

#include <doctest.h>
#include <omp.h>

#include <filesystem>
#include <fstream>

using namespace fasris;
using namespace fasris::test;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("fasris_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

json small_config()
{
    return json::parse(R"({
        "scenario": {"preset": "uncommon_linear", "M": 8, "K": 4, "L": 8},
        "sweep": {"axis": "snr_db", "values": [60, 70, 80]},
        "precoders": ["rzf", "zf"], "trials": 100, "seed": 5})");
}

const CheckResult& find_check(const std::vector<CheckResult>& v, const std::string& name)
{
    for (const auto& c : v)
        if (c.name == name) return c;
    throw std::runtime_error("no check " + name);
}

}  // namespace

TEST_SUITE("experiment")
{
    TEST_CASE("config validation")
    {
        json j = small_config();
        CHECK_NOTHROW(ExperimentConfig::from_json(j).validate());

        json empty = j;
        empty["sweep"]["values"] = json::array();
        CHECK_THROWS_AS(ExperimentConfig::from_json(empty).validate(), ConstraintError);

        json unsorted = j;
        unsorted["sweep"]["values"] = {80, 60};
        CHECK_THROWS_AS(ExperimentConfig::from_json(unsorted).validate(), ConstraintError);

        json axis = j;
        axis["sweep"]["axis"] = "W";
        CHECK_THROWS_AS(ExperimentConfig::from_json(axis).validate(), ConstraintError);

        json zsweep = j;
        zsweep["sweep"] = {{"axis", "z"}, {"values", {0.1, 1.0}}};
        CHECK_THROWS_AS(ExperimentConfig::from_json(zsweep).validate(), ConstraintError);

        json method = j;
        method["methods"] = {"DE", "exact"};
        CHECK_THROWS_AS(ExperimentConfig::from_json(method), ConstraintError);

        CHECK_THROWS_AS(ExperimentConfig::from_json(json::object()), ConstraintError);
        CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConstraintError);
    }

    TEST_CASE("matrix files round trip")
    {
        TempDir d;
        std::mt19937_64 g(1);
        const CMat A = random_correlation(5, g);
        write_matrix_csv(d.file("a.csv"), A);
        write_matrix_bin(d.file("a.bin"), A);
        CHECK((read_matrix(d.file("a.csv")) - A).norm() == 0.0);
        CHECK((read_matrix(d.file("a.bin")) - A).norm() == 0.0);

        std::ofstream(d.file("real.csv")) << "shape,2,2,real\n1,0.5\n0.5,1\n";
        const CMat R = read_matrix(d.file("real.csv"));
        CHECK(R(0, 1) == cd(0.5, 0));
        std::ofstream(d.file("short.csv")) << "shape,2,2,real\n1,0.5\n";
        CHECK_THROWS_AS(read_matrix(d.file("short.csv")), ConstraintError);
    }

    TEST_CASE("scenario from JSON with matrix files")
    {
        TempDir d;
        std::mt19937_64 g(2);
        const Scenario ref = random_scenario(g, CorrelationMode::common, {6, 3, 4, 6});
        write_matrix_csv(d.file("R.csv"), ref.corr.R_tot);
        write_matrix_bin(d.file("C_L.bin"), ref.corr.C_L);
        write_matrix_csv(d.file("C_R.csv"), ref.corr.C_R[0]);
        auto file = [](const char* path) { return json{{"type", "file"}, {"path", path}}; };
        json j = {{"id", "files"}, {"mode", "common"}, {"M", 6}, {"K", 3}, {"L", 4}, {"sigma2", ref.sigma2}};
        j["R_tot"] = file("R.csv");
        j["F_tot"] = json::array({file("R.csv")});
        j["C_L"] = file("C_L.bin");
        j["C_R"] = json::array({file("C_R.csv")});
        j["u"] = {ref.u(0), ref.u(1), ref.u(2)};
        j["t"] = {ref.t(0), ref.t(1), ref.t(2)};
        j["p"] = {ref.p(0), ref.p(1), ref.p(2)};
        const Scenario sc = scenario_from_json(j, d.path.string());
        CHECK(sc.id == "files");
        CHECK((sc.corr.C_L - ref.corr.C_L).norm() == 0.0);
        CHECK((sc.corr.R_tot - ref.corr.R_tot).norm() == 0.0);
        const PortSelection s = PortSelection::first(6, 6);
        const PhaseShifts phi = PhaseShifts::zeros(4);
        Scenario expect = ref;
        expect.corr.F_tot = {ref.corr.R_tot};
        CHECK(rel(deterministic_esr(sc, s, phi, Precoder::zf, 0).esr,
                  deterministic_esr(expect, s, phi, Precoder::zf, 0).esr) < 1e-12);
    }

    TEST_CASE("experiment table")
    {
        const ExperimentConfig cfg = ExperimentConfig::from_json(small_config());
        const auto rows = run_experiment(cfg);
        CHECK(rows.size() == 3 * 2 * 2);
        const std::string csv = experiment_csv(rows);
        const std::string header = "scenario_id,axis_name,axis_value,precoder,method,esr,stderr,runtime_ms";
        CHECK(csv.substr(0, csv.find('\n')) == header);
        CHECK(std::string(kExperimentHeader) == header);
        for (const auto& r : rows) {
            CHECK(r.runtime_ms >= 0);
            if (r.method == "DE") CHECK(r.stderr_ == 0);
        }
        // timing column is zero unless asked for
        size_t pos = 0;
        int lines = 0;
        while ((pos = csv.find('\n', pos)) != std::string::npos) {
            ++pos;
            const size_t end = csv.find('\n', pos);
            if (end == std::string::npos) break;
            const std::string line = csv.substr(pos, end - pos);
            CHECK(line.substr(line.rfind(',') + 1) == "0");
            ++lines;
        }
        CHECK(lines == 12);
        CHECK(format_number(0.1) == "0.1");
        CHECK(format_number(1.0 / 3) == "0.3333333333333333");
    }

    TEST_CASE("tables do not depend on the thread count")
    {
        const ExperimentConfig cfg = ExperimentConfig::from_json(small_config());
        const int saved = omp_get_max_threads();
        omp_set_num_threads(1);
        const std::string a = experiment_csv(run_experiment(cfg));
        omp_set_num_threads(4);
        const std::string b = experiment_csv(run_experiment(cfg));
        omp_set_num_threads(saved);
        CHECK(a == b);
    }

    TEST_CASE("validation without a cascaded link")
    {
        Scenario sc = presets::uncommon_linear(12, 4, 8, 60);
        sc.t.setZero();
        ValidateOptions o;
        o.quick = true;
        o.trials = 300;
        const auto checks = run_validation(sc, PortSelection::first(12, 12), PhaseShifts::zeros(8), o);
        CHECK(find_check(checks, "gradient_phases").skipped);
        CHECK(find_check(checks, "probe_second_order").skipped);
        CHECK(find_check(checks, "fixed_point_residual").passed);
        CHECK(find_check(checks, "degeneration_single_hop").passed);
        const std::string csv = validation_csv(checks);
        CHECK(csv.rfind("check,status,measured,tolerance,detail\n", 0) == 0);
        CHECK(csv.find("gradient_phases,SKIP") != std::string::npos);
    }

    TEST_CASE("validation flags a corrupted Pi block")
    {
        const Scenario sc = presets::uncommon_linear(20, 12, 32, 80);
        const PortSelection s = PortSelection::first(20, 20);
        const PhaseShifts phi = PhaseShifts::zeros(32);
        ValidateOptions o;
        o.quick = true;
        o.fault = PiBlock::user_col;
        const auto checks = run_validation(sc, s, phi, o);
        const CheckResult& c = find_check(checks, "pi_block_consistency");
        CHECK_FALSE(c.passed);
        CHECK(c.detail.find("flagged Pi block: user_col") != std::string::npos);
        CHECK(pi_block_from_string("corner") == PiBlock::corner);
        CHECK_THROWS_AS(pi_block_from_string("diagonal"), ConstraintError);
    }

    TEST_CASE("SVG rendering")
    {
        PlotSpec p;
        p.title = "ESR & friends";
        p.x_label = "x";
        p.y_label = "y";
        p.series.push_back({"rzf DE", {1, 2, 3}, {1, 4, 9}, false});
        p.series.push_back({"rzf MC", {1, 2, 3}, {1.1, 3.9, 9.2}, true});
        p.vlines = {2.5};
        const std::string svg = render_svg(p);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("</svg>") != std::string::npos);
        CHECK(svg.find("ESR &amp; friends") != std::string::npos);
        CHECK(svg.find("<polyline") != std::string::npos);
        CHECK(svg.find("<circle") != std::string::npos);
        CHECK(svg == render_svg(p));
    }

    TEST_CASE("quick figure run")
    {
        FigureOptions o;
        o.quick = true;
        o.trials = 100;
        const FigureResult r = run_figure("fig1", o);
        CHECK(r.rows.size() == 3 * 2 * 2);
        for (const auto& row : r.rows) CHECK(row.runtime_ms == 0);
        CHECK(r.plot.series.size() == 4);
        CHECK_THROWS_AS(run_figure("fig9", o), ConstraintError);
        CHECK(figure_names().size() == 8);
    }
}
