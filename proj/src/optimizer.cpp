// SPDX-License-Identifier: Apache-2.0
#include "fasris/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fasris {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

// --- trace ------------------------------------------------------------------------

std::string OptimizationTrace::csv_header() { return "stage,outer,iter,objective,step,residual,wall_ms"; }

std::string OptimizationTrace::to_csv(bool with_time) const
{
    std::ostringstream os;
    os.precision(12);
    os << csv_header() << '\n';
    for (const auto& r : records)
        os << r.stage << ',' << r.outer << ',' << r.iter << ',' << r.objective << ',' << r.step << ','
           << r.residual << ',' << (with_time ? r.wall_ms : 0.0) << '\n';
    return os.str();
}

// --- Frank-Wolfe -------------------------------------------------------------------

PortSelection fw_linear_oracle(const RVec& gradient, int M)
{
    const int n = int(gradient.size());
    if (M < 0 || M > n) throw ConstraintError("fw_linear_oracle: need 0 <= M <= M_tot");
    if (!gradient.allFinite()) throw NumericalError("fw_linear_oracle: gradient has non-finite entries");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return gradient(a) > gradient(b); });
    idx.resize(M);
    std::sort(idx.begin(), idx.end());
    return PortSelection::from_indices(n, idx);
}

FwResult fw_port_selection(const Scenario& sc, const PhaseShifts& phi, const FwSettings& st, OptimizationTrace* trace,
                           int outer)
{
    const int Mt = sc.dims.M_tot, M = sc.dims.M;
    if (M > Mt) throw ConstraintError("fw_port_selection: M exceeds M_tot");
    FwResult res;
    RVec s = RVec::Constant(Mt, double(M) / Mt);
    PortGradientOptions go = st.grad;
    double prev = NAN;
    const auto t0 = Clock::now();
    for (int t = 0; t < st.max_iter; ++t) {
        PortGradient g = esr_gradient_ports_zf(sc, s, phi, go);
        go.solver.init = g.x;  // warm start the next fixed point
        if (trace) trace->add({"fw", outer, t, g.esr, 2.0 / (t + 2), g.grad.norm(), ms_since(t0)});
        res.iterations = t + 1;
        res.objective = g.esr;
        if (t > 0 && rel_diff(g.esr, prev) < st.eps) break;
        prev = g.esr;
        PortSelection vertex = fw_linear_oracle(g.grad, M);
        if (vertex.s == s) break;  // already at the vertex, e.g. M = M_tot
        s += (2.0 / (t + 2)) * (vertex.s - s);
    }
    res.relaxed = s;
    // final rounding: M largest entries, lowest index on ties
    res.s = fw_linear_oracle(s, M);
    return res;
}

// --- phase ascent ------------------------------------------------------------------

void AscentSettings::validate() const
{
    if (!(alpha0 > 0)) throw ConstraintError("ascent: alpha0 must be positive");
    if (!(c > 0 && c < 1)) throw ConstraintError("ascent: c must lie in (0,1)");
    if (!(beta > 0 && beta < 1)) throw ConstraintError("ascent: beta must lie in (0,1)");
    if (max_halvings < 0 || max_iter < 0) throw ConstraintError("ascent: iteration limits must be >= 0");
}

AscentResult gradient_ascent_phases(const Scenario& sc, const PortSelection& s, Precoder kind, double z,
                                    const PhaseShifts& phi0, const AscentSettings& st, OptimizationTrace* trace,
                                    int outer)
{
    st.validate();
    AscentResult res;
    res.phi = phi0;
    res.phi.wrap();
    GradientOptions go = st.grad;
    EvalOptions eo;
    eo.solver = st.grad.solver;
    const auto t0 = Clock::now();
    PhaseGradient g = esr_gradient_phases(sc, s, res.phi, kind, z, go);
    res.esr = g.esr;
    for (int it = 0; it < st.max_iter; ++it) {
        const double gn = g.grad.norm();
        res.grad_norm = gn;
        if (gn <= st.grad_tol) break;
        const RVec dir = g.grad / gn;
        double alpha = st.alpha0;
        bool accepted = false;
        PhaseShifts trial;
        double r_trial = 0;
        eo.solver.init = g.x;
        for (int h = 0; h <= st.max_halvings; ++h) {
            trial = PhaseShifts::from_angles(res.phi.phi + alpha * dir);
            try {
                r_trial = deterministic_esr(sc, s, trial, kind, z, eo).esr;
            } catch (const ConvergenceError&) {
                r_trial = -INFINITY;
            }
            if (r_trial - res.esr >= alpha * st.beta * gn) {
                accepted = true;
                break;
            }
            alpha *= st.c;
        }
        if (!accepted) {
            res.stalled = true;
            break;
        }
        const double change = rel_diff(r_trial, res.esr);
        res.phi = trial;
        res.iterations = it + 1;
        g = esr_gradient_phases(sc, s, res.phi, kind, z, go);
        // keep the line-search value: the re-solve can differ by solver tolerance
        res.esr = r_trial;
        res.grad_norm = g.grad.norm();
        if (trace) trace->add({"phase", outer, it, res.esr, alpha, res.grad_norm, ms_since(t0)});
        if (change < st.eps) break;
    }
    return res;
}

// --- regulariser search -------------------------------------------------------------

ZSearchResult search_regularization(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                                    const ZSearchSettings& st, OptimizationTrace* trace, int outer)
{
    if (st.grid_points < 3) throw ConstraintError("z search needs at least 3 grid points");
    ZSearchResult res;
    const double z0 = default_regularizer(sc);
    EvalOptions eo;
    eo.solver = st.solver;
    auto esr_at = [&](double z) {
        ++res.evaluations;
        return deterministic_esr(sc, s, phi, Precoder::rzf, z, eo).esr;
    };
    if (st.homogeneous_shortcut && sc.homogeneous()) {
        res.z = z0;
        res.esr = esr_at(z0);
        res.shortcut = true;
        if (trace) trace->add({"zsearch", outer, 0, res.esr, res.z, 0.0, 0.0});
        return res;
    }
    const int n = st.grid_points;
    const double a = std::log(st.lo_factor * z0), b = std::log(st.hi_factor * z0);
    res.grid_z.resize(n);
    res.grid_esr.resize(n);
    int best = 0;
    for (int i = 0; i < n; ++i) {
        res.grid_z(i) = std::exp(a + (b - a) * i / (n - 1));
        // the far ends of the grid can be numerically out of reach (tiny z with K > M)
        try {
            res.grid_esr(i) = esr_at(res.grid_z(i));
        } catch (const NumericalError&) {
            res.grid_esr(i) = NAN;
        } catch (const ConvergenceError&) {
            res.grid_esr(i) = NAN;
        }
        if (std::isnan(res.grid_esr(best)) || res.grid_esr(i) > res.grid_esr(best)) best = i;
    }
    if (std::isnan(res.grid_esr(best))) throw NumericalError("z search: no grid point could be evaluated");
    // golden section on log z inside the neighbouring grid cells
    double lo = std::log(res.grid_z(std::max(best - 1, 0)));
    double hi = std::log(res.grid_z(std::min(best + 1, n - 1)));
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = esr_at(std::exp(c)), fd = esr_at(std::exp(d));
    int it = 0;
    while (hi - lo > std::log1p(st.rel_width)) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = esr_at(std::exp(c));
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = esr_at(std::exp(d));
        }
        ++it;
    }
    const double zm = std::exp(0.5 * (lo + hi));
    const double fm = esr_at(zm);
    // keep whichever candidate is best, including the grid point itself
    res.z = res.grid_z(best);
    res.esr = res.grid_esr(best);
    for (auto [zc, fcand] : {std::pair{zm, fm}, std::pair{std::exp(c), fc}, std::pair{std::exp(d), fd}})
        if (fcand > res.esr) {
            res.z = zc;
            res.esr = fcand;
        }
    if (trace) trace->add({"zsearch", outer, it, res.esr, res.z, hi - lo, 0.0});
    return res;
}

// --- alternating optimisation ---------------------------------------------------------

AoResult alternating_optimization(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi0, double z0,
                                  const AoSettings& st, OptimizationTrace* trace)
{
    if (st.kind == Precoder::mrt) throw DomainError("alternating optimisation supports RZF and ZF");
    AoResult res;
    res.phi = phi0;
    res.z = st.kind == Precoder::rzf ? z0 : 0.0;
    EvalOptions eo;
    eo.solver = st.ascent.grad.solver;
    res.esr = deterministic_esr(sc, s, res.phi, st.kind, res.z, eo).esr;
    for (int t = 0; t < st.max_outer; ++t) {
        const double before = res.esr;
        if (st.kind == Precoder::rzf) {
            ZSearchResult zr = search_regularization(sc, s, res.phi, st.zsearch, trace, t);
            if (zr.esr >= res.esr) {
                res.z = zr.z;
                res.esr = zr.esr;
            }
        }
        AscentResult ar = gradient_ascent_phases(sc, s, st.kind, res.z, res.phi, st.ascent, trace, t);
        if (ar.esr >= res.esr) {
            res.phi = ar.phi;
            res.esr = ar.esr;
        }
        res.outer = t + 1;
        if (trace) trace->add({"ao", t, 0, res.esr, 0.0, rel_diff(res.esr, before), 0.0});
        if (rel_diff(res.esr, before) < st.eps) break;
    }
    return res;
}

JointResult joint_optimize(const Scenario& sc, const JointSettings& st, std::optional<PhaseShifts> phi0,
                           std::optional<double> z0)
{
    if (st.T_iter < 1) throw ConstraintError("joint_optimize: T_iter must be >= 1");
    sc.validate();
    JointResult best;
    PhaseShifts phi = phi0 ? *phi0 : PhaseShifts::zeros(sc.dims.L);
    double z = z0 ? *z0 : default_regularizer(sc);
    double best_esr = -INFINITY;
    for (int t = 0; t < st.T_iter; ++t) {
        FwResult fw = fw_port_selection(sc, phi, st.fw, &best.trace, t);
        AoResult ao = alternating_optimization(sc, fw.s, phi, z, st.ao, &best.trace);
        best.history.push_back(ao.esr);
        best.trace.add({"joint", t, 0, ao.esr, 0.0, 0.0, 0.0});
        if (ao.esr > best_esr) {
            best_esr = ao.esr;
            best.s = fw.s;
            best.phi = ao.phi;
            best.z = ao.z;
        }
        phi = ao.phi;
        z = ao.z;
    }
    EvalOptions eo;
    eo.solver = st.ao.ascent.grad.solver;
    best.report = deterministic_esr(sc, best.s, best.phi, st.ao.kind, best.z, eo);
    return best;
}

}  // namespace fasris
