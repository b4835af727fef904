// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "fasris/deterministic_rate.hpp"
#include "fasris/fixed_point.hpp"

#include <doctest.h>

using namespace fasris;
using namespace fasris::test;

namespace {

// Single-hop system iterated directly:
// mu_k = (1/M) Tr(F_k (zI + (1/M) sum_l F_l/(1+mu_l))^{-1}).
RVec single_hop_oracle(const std::vector<CMat>& F, int M, double z)
{
    const int K = int(F.size());
    RVec mu = RVec::Ones(K);
    for (int it = 0; it < 5000; ++it) {
        CMat T = z * CMat::Identity(M, M);
        for (int l = 0; l < K; ++l) T += F[l] / (M * (1 + mu(l)));
        const CMat Ti = T.inverse();
        RVec next(K);
        for (int k = 0; k < K; ++k) next(k) = (F[k] * Ti).trace().real() / M;
        if ((next - mu).cwiseAbs().maxCoeff() <= 1e-15 * next.cwiseAbs().maxCoeff()) return next;
        mu = 0.5 * (mu + next);
    }
    return mu;
}

// i.i.d. ZF system (delta, omega, mu) iterated directly; returns mu.
double iid_zf_oracle(double u, double t, double c1, double c2)
{
    double d = 1, w = 1, mu = 1;
    for (int it = 0; it < 200000; ++it) {
        const double d1 = 1.0 / (1 + c1 * t * w / (mu * d) + c1 * u / mu);
        const double w1 = 1.0 / (1 / d1 + c2 * t / mu);
        const double mu1 = t * w1 + u * d1;
        const bool done = std::abs(mu1 - mu) < 1e-15 * mu1;
        d = 0.5 * (d + d1);
        w = 0.5 * (w + w1);
        mu = 0.5 * (mu + mu1);
        if (done) break;
    }
    return mu;
}

UncommonStats random_uncommon(std::mt19937_64& g, int M, int K, int L)
{
    RandomShape d{M, K, L, M};
    const Scenario sc = random_scenario(g, CorrelationMode::uncommon, d);
    return uncommon_stats(sc, PortSelection::first(M, M), random_phases(L, g));
}

CommonStats identity_common(int M, int K, int L, double u, double t)
{
    CommonStats c;
    c.M = M;
    c.L = L;
    c.F = CMat::Identity(M, M);
    c.R = CMat::Identity(M, M);
    c.C = CMat::Identity(L, L);
    c.u = RVec::Constant(K, u);
    c.t = RVec::Constant(K, t);
    return c;
}

}  // namespace

TEST_SUITE("fixed_point")
{
    TEST_CASE("RZF uncommon: residual and independence of the start")
    {
        std::mt19937_64 g(1);
        for (int rep = 0; rep < 4; ++rep) {
            const UncommonStats st = random_uncommon(g, 10, 4, 8);
            SolverSettings a, b;
            a.init_value = 1;
            b.init_value = 10;
            const auto s1 = solve_rzf_uncommon(st, 0.05, a);
            const auto s2 = solve_rzf_uncommon(st, 0.05, b);
            CHECK(residual(st, s1) <= 10 * a.tol);
            CHECK(max_rel(s1.unknowns(), s2.unknowns()) < 1e-8);
        }
    }

    TEST_CASE("RZF uncommon: mu decreasing in z")
    {
        std::mt19937_64 g(2);
        const UncommonStats st = random_uncommon(g, 8, 3, 6);
        RVec prev;
        for (double z : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
            const RVec mu = solve_rzf_uncommon(st, z).mu;
            if (prev.size()) CHECK((mu.array() < prev.array()).all());
            prev = mu;
        }
    }

    TEST_CASE("RZF uncommon: t = 0 is the single-hop system")
    {
        std::mt19937_64 g(3);
        UncommonStats st = random_uncommon(g, 9, 4, 6);
        for (auto& C : st.C) C.setZero();
        const auto sol = solve_rzf_uncommon(st, 0.1);
        CHECK(sol.omega.cwiseAbs().maxCoeff() == 0.0);
        CHECK(max_rel(sol.mu, single_hop_oracle(st.F, st.M, 0.1)) < 1e-9);
        CHECK(max_rel(solve_single_hop(st.F, st.M, 0.1), single_hop_oracle(st.F, st.M, 0.1)) < 1e-9);
    }

    TEST_CASE("RZF uncommon: u = 0 gives mu = omega")
    {
        std::mt19937_64 g(4);
        UncommonStats st = random_uncommon(g, 9, 4, 6);
        for (auto& F : st.F) F.setZero();
        const auto sol = solve_rzf_uncommon(st, 0.1);
        CHECK(max_rel(sol.mu, sol.omega) < 1e-12);
    }

    TEST_CASE("ZF uncommon is the small-z limit of RZF")
    {
        std::mt19937_64 g(5);
        for (int rep = 0; rep < 3; ++rep) {
            const UncommonStats st = random_uncommon(g, 10, 4, 8);
            const double z = 1e-8;
            const auto r = solve_rzf_uncommon(st, z);
            const auto zf = solve_zf_uncommon(st);
            CHECK(residual(st, zf) <= 1e-9);
            CHECK(max_rel(z * r.mu, zf.mu_u) < 1e-4);
        }
    }

    TEST_CASE("ZF uncommon: identity correlations give equal mu")
    {
        const UncommonStats st = to_uncommon(identity_common(12, 5, 10, 1.0, 0.5));
        const auto zf = solve_zf_uncommon(st);
        CHECK(zf.mu_u.maxCoeff() - zf.mu_u.minCoeff() < 1e-12 * zf.mu_u.maxCoeff());
    }

    TEST_CASE("ZF below RZF on the uncommon preset at 60 dB")
    {
        const Scenario sc = presets::uncommon_linear(24, 12, 32, 60);
        const PortSelection s = PortSelection::first(24, 24);
        const PhaseShifts phi = PhaseShifts::zeros(32);
        const double rzf = deterministic_esr(sc, s, phi, Precoder::rzf, default_regularizer(sc)).esr;
        const double zf = deterministic_esr(sc, s, phi, Precoder::zf, 0).esr;
        CHECK(zf < rzf);
    }

    TEST_CASE("common solver agrees with the uncommon solver")
    {
        std::mt19937_64 g(6);
        const RandomShape d{10, 4, 8, 10};
        const Scenario sc = random_scenario(g, CorrelationMode::common, d);
        const PortSelection s = PortSelection::first(10, 10);
        const PhaseShifts phi = random_phases(8, g);
        const CommonStats cs = common_stats(sc, s, phi);
        const UncommonStats us = to_uncommon(cs);
        const double z = 0.07;
        const auto c = solve_rzf_common(cs, z);
        const auto u = solve_rzf_uncommon(us, z);
        CHECK(rel(u.delta, c.delta) < 1e-8);
        for (int k = 0; k < 4; ++k) {
            CHECK(rel(u.mu(k), cs.t(k) * c.omega + cs.u(k) * c.kappa) < 1e-8);
            CHECK(rel(u.omega(k), cs.t(k) * c.omega) < 1e-8);
        }
        CHECK(residual(cs, c) <= 1e-9);

        const auto zc = solve_zf_common(cs);
        const auto zu = solve_zf_uncommon(us);
        for (int k = 0; k < 4; ++k) CHECK(rel(zu.mu_u(k), cs.t(k) * zc.omega + cs.u(k) * zc.kappa) < 1e-8);
    }

    TEST_CASE("common solver: T = 0 is the single-hop common system")
    {
        std::mt19937_64 g(7);
        const RandomShape d{9, 3, 6, 9};
        const Scenario sc = random_scenario(g, CorrelationMode::common, d);
        CommonStats cs = common_stats(sc, PortSelection::first(9, 9), PhaseShifts::zeros(6));
        cs.t.setZero();
        const auto sol = solve_rzf_common(cs, 0.2);
        CHECK(sol.omega_bar == 0.0);
        std::vector<CMat> F;
        for (int k = 0; k < 3; ++k) F.push_back(cs.u(k) * cs.F);
        const RVec ref = single_hop_oracle(F, cs.M, 0.2);
        for (int k = 0; k < 3; ++k) CHECK(rel(cs.u(k) * sol.kappa, ref(k)) < 1e-9);
    }

    TEST_CASE("identity correlations: closed forms")
    {
        for (auto [u, t] : {std::pair{1.0, 0.5}, std::pair{0.3, 1.2}, std::pair{2.0, 0.0}}) {
            const int M = 20, K = 8, L = 16;
            const CommonStats cs = identity_common(M, K, L, u, t);
            const auto zf = solve_zf_common(cs);
            const IidSolution iid = solve_iid_zf(u, t, double(K) / M, double(K) / L);
            CHECK(rel(u * zf.kappa + t * zf.omega, iid.mu_u) < 1e-8);
            CHECK(rel(iid.mu_u, (1 - double(K) / M) * iid.beta_val) < 1e-14);
            if (t == 0) CHECK(rel(u * zf.kappa, (1 - double(K) / M) * u) < 1e-9);
            // RZF at small z approaches the same value
            const double z = 1e-9;
            const auto r = solve_rzf_common(cs, z);
            CHECK(rel(z * (u * r.kappa + t * r.omega), iid.mu_u) < 1e-4);
        }
    }

    TEST_CASE("iid closed form")
    {
        CHECK(solve_iid_zf(0.7, 0.0, 0.5, 0.3).beta_val == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(solve_iid_zf(0.0, 1.0, 0.5, 0.5).beta_val == doctest::Approx(0.5).epsilon(1e-14));
        const double beta = solve_iid_zf(1.0, 0.5, 0.5, 0.6).beta_val;
        const double oracle = iid_zf_oracle(1.0, 0.5, 0.5, 0.6) / (1 - 0.5);
        CHECK(rel(beta, oracle) < 1e-10);
        CHECK(beta == doctest::Approx(1.4124).epsilon(1e-4));
        for (auto [u, t, c2] : {std::tuple{0.2, 1.3, 0.9}, std::tuple{1.5, 0.1, 0.2}, std::tuple{0.8, 0.8, 1.7}})
            CHECK(rel(solve_iid_zf(u, t, 0.3, c2).mu_u, iid_zf_oracle(u, t, 0.3, c2)) < 1e-10);
        CHECK_THROWS_AS(solve_iid_zf(1, 1, 1.0, 0.5), FeasibilityError);
        CHECK_THROWS_AS(solve_iid_zf(-1, 1, 0.5, 0.5), ConstraintError);
    }

    TEST_CASE("solver settings are validated")
    {
        SolverSettings s;
        s.tol = 0;
        CHECK_THROWS_AS(s.validate(), ConstraintError);
        SolverSettings m;
        m.max_iter = 0;
        CHECK_THROWS_AS(m.validate(), ConstraintError);
        std::mt19937_64 g(8);
        const UncommonStats st = random_uncommon(g, 6, 3, 4);
        CHECK_THROWS_AS(solve_rzf_uncommon(st, -1.0), ConstraintError);
        SolverSettings few;
        few.max_iter = 2;
        few.tol = 1e-15;
        CHECK_THROWS_AS(solve_rzf_uncommon(st, 1e-4, few), ConvergenceError);
    }
}
