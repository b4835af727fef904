// SPDX-License-Identifier: Apache-2.0
#include "fasris/experiment.hpp"
#include "fasris/presets.hpp"

#include <chrono>

namespace fasris {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> snr_grid(bool quick)
{
    return quick ? std::vector<double>{60, 80, 100} : std::vector<double>{60, 70, 80, 90, 100};
}

PointOptions point_options(const FigureOptions& o)
{
    PointOptions po;
    po.trials = o.quick ? std::min(o.trials, 200) : o.trials;
    po.seed = o.seed;
    return po;
}

void append(std::vector<ExperimentRow>& rows, std::vector<ExperimentRow> more)
{
    rows.insert(rows.end(), more.begin(), more.end());
}

JointSettings joint_settings(bool quick)
{
    JointSettings st;
    if (quick) {
        st.T_iter = 1;
        st.fw.max_iter = 20;
        st.ao.max_outer = 2;
        st.ao.ascent.max_iter = 10;
        st.ao.zsearch.grid_points = 11;
    }
    return st;
}

// joint optimisation, uniform selection with AO, and the plain uniform start
void optimizer_rows(std::vector<ExperimentRow>& rows, const Scenario& sc, const std::string& axis, double value,
                    bool quick)
{
    const JointSettings st = joint_settings(quick);
    const PortSelection uni = PortSelection::uniform(sc.dims.M_tot, sc.dims.M);
    const PhaseShifts phi0 = PhaseShifts::zeros(sc.dims.L);
    const double z0 = default_regularizer(sc);
    const std::string pre = to_string(st.ao.kind);

    auto t0 = Clock::now();
    const double base = deterministic_esr(sc, uni, phi0, st.ao.kind, z0).esr;
    rows.push_back({sc.id, axis, value, pre, "uniform", base, 0, ms_since(t0)});

    t0 = Clock::now();
    const AoResult ao = alternating_optimization(sc, uni, phi0, z0, st.ao);
    rows.push_back({sc.id, axis, value, pre, "uniform_ao", ao.esr, 0, ms_since(t0)});

    t0 = Clock::now();
    const JointResult j = joint_optimize(sc, st);
    rows.push_back({sc.id, axis, value, pre, "joint", j.report.esr, 0, ms_since(t0)});
}

FigureResult fig1(const FigureOptions& o)
{
    FigureResult r;
    const PointOptions po = point_options(o);
    const std::vector<int> Ms = o.quick ? std::vector<int>{16} : std::vector<int>{16, 20, 24};
    for (int M : Ms)
        for (double snr : snr_grid(o.quick)) {
            const Scenario sc = presets::uncommon_linear(M, 12, 32, snr);
            append(r.rows, evaluate_point(sc, PortSelection::first(M, M), PhaseShifts::zeros(32),
                                          {Precoder::rzf, Precoder::zf}, default_regularizer(sc), "snr_db", snr, po));
        }
    r.plot = plot_from_rows(r.rows, "ESR vs SNR, uncommon correlation (K = 12, L = 32)");
    r.plot.x_label = "1/sigma^2 (dB)";
    return r;
}

FigureResult fig2(const FigureOptions& o)
{
    FigureResult r;
    const PointOptions po = point_options(o);
    const int max_scale = o.quick ? 2 : 4;
    const int bases[2][3] = {{8, 6, 16}, {12, 6, 16}};
    for (int c = 0; c < 2; ++c)
        for (int m = 1; m <= max_scale; ++m) {
            const int M = bases[c][0] * m, K = bases[c][1] * m, L = bases[c][2] * m;
            Scenario sc = presets::uncommon_linear(M, K, L, 80.0);
            sc.id = "case" + std::to_string(c + 1);
            append(r.rows, evaluate_point(sc, PortSelection::first(M, M), PhaseShifts::zeros(L),
                                          {Precoder::rzf, Precoder::zf}, default_regularizer(sc), "scale", m, po));
        }
    r.plot = plot_from_rows(r.rows, "ESR vs system size, (M, K, L) = m x base, 80 dB");
    r.plot.x_label = "size multiple m";
    return r;
}

FigureResult fig3(const FigureOptions& o)
{
    FigureResult r;
    for (double snr : o.quick ? std::vector<double>{80} : snr_grid(false))
        optimizer_rows(r.rows, presets::common_planar(20, 8, snr), "snr_db", snr, o.quick);
    r.plot = plot_from_rows(r.rows, "Joint optimisation vs uniform selection (M = 20, K = 8)");
    r.plot.x_label = "1/sigma^2 (dB)";
    return r;
}

FigureResult fig4(const FigureOptions& o)
{
    FigureResult r;
    const PointOptions po = point_options(o);
    for (double snr : snr_grid(o.quick)) {
        const Scenario sc = presets::common_planar(20, 8, snr);
        append(r.rows, evaluate_point(sc, PortSelection::uniform(sc.dims.M_tot, 20), PhaseShifts::zeros(sc.dims.L),
                                      {Precoder::rzf, Precoder::zf, Precoder::mrt}, default_regularizer(sc), "snr_db",
                                      snr, po));
    }
    r.plot = plot_from_rows(r.rows, "RZF, ZF and MRT (M = 20, K = 8, uniform selection)");
    r.plot.x_label = "1/sigma^2 (dB)";
    return r;
}

FigureResult fig5(const FigureOptions& o)
{
    FigureResult r;
    const PointOptions po = point_options(o);
    const std::vector<double> Ws =
        o.quick ? std::vector<double>{1, 2, 4} : std::vector<double>{0.5, 1, 1.5, 2, 3, 4, 5};
    for (double W : Ws) {
        Scenario sc = presets::common_planar(20, 8, 80.0, W);
        append(r.rows, evaluate_point(sc, PortSelection::uniform(sc.dims.M_tot, 20), PhaseShifts::zeros(sc.dims.L),
                                      {Precoder::rzf, Precoder::zf}, default_regularizer(sc), "W", W, po));
    }
    r.plot = plot_from_rows(r.rows, "ESR vs FAS aperture (M = 20, K = 8, 80 dB)");
    r.plot.x_label = "aperture W (wavelengths)";
    return r;
}

FigureResult fig6(const FigureOptions& o)
{
    FigureResult r;
    for (int K : o.quick ? std::vector<int>{4, 16} : std::vector<int>{4, 8, 12, 16})
        optimizer_rows(r.rows, presets::common_planar_homogeneous(20, K, 80.0), "K", K, o.quick);
    r.plot = plot_from_rows(r.rows, "Optimisation gain vs number of users (M = 20, 80 dB)");
    r.plot.x_label = "users K";
    return r;
}

FigureResult fig7(const FigureOptions& o)
{
    FigureResult r;
    for (int M : o.quick ? std::vector<int>{12, 20} : std::vector<int>{8, 12, 16, 20, 24})
        optimizer_rows(r.rows, presets::common_planar(M, 8, 90.0), "M", M, o.quick);
    r.plot = plot_from_rows(r.rows, "Optimisation gain vs selected ports (K = 8, 90 dB)");
    r.plot.x_label = "selected ports M";
    return r;
}

FigureResult fig8(const FigureOptions& o)
{
    FigureResult r;
    const Scenario sc = presets::common_planar_homogeneous(20, 24, 80.0);
    const PortSelection s = PortSelection::uniform(sc.dims.M_tot, 20);
    const PhaseShifts phi = PhaseShifts::zeros(sc.dims.L);
    ZSearchSettings st;
    st.homogeneous_shortcut = false;
    st.lo_factor = 1e-2;
    st.hi_factor = 1e2;
    st.grid_points = o.quick ? 11 : 41;
    const auto t0 = Clock::now();
    const ZSearchResult zr = search_regularization(sc, s, phi, st);
    const double per_point = ms_since(t0) / zr.evaluations;
    for (Eigen::Index i = 0; i < zr.grid_z.size(); ++i)
        r.rows.push_back({sc.id, "z", zr.grid_z(i), "rzf", "DE", zr.grid_esr(i), 0, per_point});
    PointOptions po = point_options(o);
    po.de = false;
    for (Eigen::Index i = 0; i < zr.grid_z.size(); i += o.quick ? 5 : 10)
        append(r.rows, evaluate_point(sc, s, phi, {Precoder::rzf}, zr.grid_z(i), "z", zr.grid_z(i), po));
    r.rows.push_back({sc.id, "z", zr.z, "rzf", "zsearch", zr.esr, 0, 0});
    r.plot = plot_from_rows(r.rows, "ESR vs regulariser (M = 20, K = 24, 80 dB)");
    r.plot.x_label = "z (dashed: K sigma^2 / M and the searched optimum)";
    r.plot.vlines = {default_regularizer(sc), zr.z};
    return r;
}

}  // namespace

std::vector<std::string> figure_names() { return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"}; }

FigureResult run_figure(const std::string& name, const FigureOptions& o)
{
    FigureResult r;
    if (name == "fig1") r = fig1(o);
    else if (name == "fig2") r = fig2(o);
    else if (name == "fig3") r = fig3(o);
    else if (name == "fig4") r = fig4(o);
    else if (name == "fig5") r = fig5(o);
    else if (name == "fig6") r = fig6(o);
    else if (name == "fig7") r = fig7(o);
    else if (name == "fig8") r = fig8(o);
    else throw ConstraintError("unknown figure '" + name + "' (fig1..fig8)");
    if (!o.timing)
        for (auto& row : r.rows) row.runtime_ms = 0;
    return r;
}

}  // namespace fasris
