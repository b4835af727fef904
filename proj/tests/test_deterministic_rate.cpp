// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "fasris/deterministic_rate.hpp"
#include "fasris/monte_carlo.hpp"

#include <doctest.h>

#include <numeric>

using namespace fasris;
using namespace fasris::test;

namespace {

double log2p(double x) { return std::log2(1 + x); }

Scenario random_uncommon_scenario(std::uint64_t seed, int M, int K, int L)
{
    std::mt19937_64 g(seed);
    return random_scenario(g, CorrelationMode::uncommon, {M, K, L, M});
}

}  // namespace

TEST_SUITE("deterministic_rate")
{
    TEST_CASE("single user RZF has no interference term")
    {
        const Scenario sc = random_uncommon_scenario(11, 6, 1, 8);
        std::mt19937_64 g(1);
        const UncommonStats st = uncommon_stats(sc, PortSelection::first(6, 6), random_phases(8, g));
        const auto sol = solve_rzf_uncommon(st, 0.1);
        const auto so = second_order_uncommon(st, sol, sc.p);
        const double mu = sol.mu(0);
        const double expect = sc.p(0) * mu * mu / (sc.sigma2 * (1 + mu) * (1 + mu) * so.C_bar);
        const RateReport r = sinr_rzf_uncommon(st, sol, sc.p, sc.sigma2);
        CHECK(rel(r.sinr(0), expect) < 1e-12);
        CHECK(r.esr == doctest::Approx(log2p(expect)).epsilon(1e-14));

        Scenario c = presets::common_planar(6, 1, 30);
        const CommonStats cs = common_stats(c, PortSelection::uniform(c.dims.M_tot, 6), PhaseShifts::zeros(c.dims.L));
        const auto csol = solve_rzf_common(cs, 0.1);
        const auto cso = second_order_common(cs, csol, c.p);
        const double m = cs.t(0) * csol.omega + cs.u(0) * csol.kappa;
        const double ce = c.p(0) * m * m / (c.sigma2 * (1 + m) * (1 + m) * cso.C_bar);
        CHECK(rel(sinr_rzf_common(cs, csol, c.p, c.sigma2).sinr(0), ce) < 1e-12);
    }

    TEST_CASE("ZF equals RZF at vanishing z")
    {
        for (std::uint64_t seed : {21, 22, 23}) {
            const Scenario sc = random_uncommon_scenario(seed, 10, 4, 8);
            std::mt19937_64 g(seed);
            const PhaseShifts phi = random_phases(8, g);
            const PortSelection s = PortSelection::first(10, 10);
            const double zf = deterministic_esr(sc, s, phi, Precoder::zf, 0).esr;
            const double rzf = deterministic_esr(sc, s, phi, Precoder::rzf, 1e-8).esr;
            CHECK(rel(rzf, zf) < 1e-3);
        }
    }

    TEST_CASE("ZF with identity correlations matches the closed form")
    {
        const int M = 20, K = 8, L = 16;
        const double u = 1.0, t = 0.5;
        const Scenario sc = presets::iid(M, K, L, u, t, 20);
        const RateReport zf = deterministic_esr(sc, PortSelection::first(M, M), PhaseShifts::zeros(L), Precoder::zf, 0);
        const double c1 = double(K) / M, c2 = double(K) / L;
        const double beta = solve_iid_zf(u, t, c1, c2).beta_val;
        const double gamma = (1 - c1) * beta / (c1 * sc.sigma2);
        for (int k = 0; k < K; ++k) CHECK(rel(zf.sinr(k), gamma) < 1e-8);
        CHECK(rel(zf.esr, esr_iid_zf(u, t, c1, c2, sc.sigma2, K).esr) < 1e-8);

        // equal powers, homogeneous mu: gamma = M mu / (K sigma2)
        const UncommonStats us = uncommon_stats(sc, PortSelection::first(M, M), PhaseShifts::zeros(L));
        const auto sol = solve_zf_uncommon(us);
        const RateReport r = sinr_zf_uncommon(us, sol, sc.p, sc.sigma2);
        for (int k = 0; k < K; ++k) CHECK(rel(r.sinr(k), M * sol.mu_u(k) / (K * sc.sigma2)) < 1e-12);
    }

    TEST_CASE("common and uncommon evaluations agree")
    {
        std::mt19937_64 g(31);
        const Scenario sc = random_scenario(g, CorrelationMode::common, {12, 5, 10, 12});
        const PortSelection s = PortSelection::first(12, 12);
        const PhaseShifts phi = random_phases(10, g);
        const CommonStats cs = common_stats(sc, s, phi);
        const UncommonStats us = to_uncommon(cs);
        for (double z : {0.01, 0.3}) {
            const RVec a = sinr_rzf_common(cs, solve_rzf_common(cs, z), sc.p, sc.sigma2).sinr;
            const RVec b = sinr_rzf_uncommon(us, solve_rzf_uncommon(us, z), sc.p, sc.sigma2).sinr;
            CHECK(max_rel(b, a) < 1e-6);
        }
        const RVec a = sinr_zf_common(cs, solve_zf_common(cs), sc.p, sc.sigma2).sinr;
        const RVec b = sinr_zf_uncommon(us, solve_zf_uncommon(us), sc.p, sc.sigma2).sinr;
        CHECK(max_rel(b, a) < 1e-6);
    }

    TEST_CASE("ZF common: homogeneous users and the single-hop case")
    {
        const Scenario sc = presets::common_planar_homogeneous(12, 6, 40);
        const RateReport r = deterministic_esr(sc, PortSelection::uniform(sc.dims.M_tot, 12),
                                               PhaseShifts::zeros(sc.dims.L), Precoder::zf, 0);
        CHECK(r.sinr.maxCoeff() - r.sinr.minCoeff() < 1e-12 * r.sinr.maxCoeff());

        CommonStats cs;
        cs.M = 16;
        cs.L = 8;
        cs.F = cs.R = CMat::Identity(16, 16);
        cs.C = CMat::Identity(8, 8);
        cs.u = RVec::Constant(4, 0.8);
        cs.t = RVec::Zero(4);
        const double sigma2 = 0.05, c1 = 4.0 / 16;
        const RateReport z = sinr_zf_common(cs, solve_zf_common(cs), RVec::Ones(4), sigma2);
        CHECK(rel(z.esr, 4 * log2p((1 - c1) * 0.8 / (c1 * sigma2))) < 1e-9);
    }

    TEST_CASE("iid ZF closed form")
    {
        CHECK(esr_iid_zf(1, 0.5, 1 - 1e-9, 0.6, 0.1, 8).esr < 1e-6);
        CHECK(rel(esr_iid_zf(0.9, 0.0, 0.25, 0.5, 0.1, 4).esr, 4 * log2p(0.75 * 0.9 / (0.25 * 0.1))) < 1e-13);
        const double beta = solve_iid_zf(1, 0.5, 0.5, 0.6).beta_val;
        CHECK(rel(esr_iid_zf(1, 0.5, 0.5, 0.6, 0.1, 8).esr, 8 * log2p(0.5 * beta / 0.05)) < 1e-13);
        // c2 = 0: beta = u + t
        CHECK(rel(esr_iid_zf(1, 0.5, 0.5, 0.0, 0.1, 8).esr, 8 * log2p(0.5 * 1.5 / 0.05)) < 1e-13);
        CHECK_THROWS_AS(esr_iid_zf(1, 0.5, 1.0, 0.6, 0.1, 8), FeasibilityError);
    }

    TEST_CASE("iid MRT closed form")
    {
        // single user: rate keeps growing with SNR
        double prev = 0;
        for (double s2 : {1e-1, 1e-3, 1e-5}) {
            const RateReport r = esr_iid_mrt(1, 0.5, 16, 1, 32, s2);
            CHECK(r.esr > prev);
            CHECK_FALSE(r.saturated);
            prev = r.esr;
        }
        // sigma2 -> 0 limit
        const double u = 1, t = 0.5;
        const int M = 16, K = 6, L = 32;
        const double lim = (t + u) * (t + u) * M /
                           ((K - 1) * t * (u + t) + (K - 1) * t * (t * L / double(M * M) + u * L / double(M)) * M / L);
        const RateReport r = esr_iid_mrt(u, t, M, K, L, 1e-12);
        CHECK(rel(r.esr, K * log2p(lim)) < 1e-9);
        CHECK(r.saturated);

        // Against simulation. The large-system MRT SINR for this channel model,
        // (u+t)^2 / ((K-1)((u+t)^2/M + t^2/L) + K sigma2 (u+t)/M), tracks the
        // samples; the closed form above leaves out the direct-link leakage and
        // lands well above them.
        const Scenario sc = presets::iid(M, K, L, u, t, 10);
        McOptions mo;
        mo.trials = 2000;
        const double mc =
            empirical_esr(sc, PortSelection::first(M, M), PhaseShifts::zeros(L), PrecoderKind::mrt(), mo).mean;
        const double lsys = (u + t) * (u + t) /
                            ((K - 1) * ((u + t) * (u + t) / M + t * t / L) + K * sc.sigma2 * (u + t) / M);
        CHECK(rel(K * log2p(lsys), mc) < 0.06);
        const double closed = esr_iid_mrt(u, t, M, K, L, sc.sigma2).esr;
        MESSAGE("MRT closed form " << closed << ", simulated " << mc);
        CHECK(closed > mc);
    }

    TEST_CASE("MRT below ZF on the planar scenario at 80 dB")
    {
        const Scenario sc = presets::common_planar(20, 8, 80);
        const PortSelection s = PortSelection::uniform(sc.dims.M_tot, 20);
        const PhaseShifts phi = PhaseShifts::zeros(sc.dims.L);
        McOptions mo;
        mo.trials = 200;
        const double mrt = empirical_esr(sc, s, phi, PrecoderKind::mrt(), mo).mean;
        CHECK(mrt < deterministic_esr(sc, s, phi, Precoder::zf, 0).esr);
        CHECK_THROWS_AS(deterministic_esr(sc, s, phi, Precoder::mrt, 0), DomainError);
    }

    TEST_CASE("minimum number of ports")
    {
        CHECK(min_ports(0, 8, 1, 0.5, 0.5, 0.1) == 8);
        for (double R : {5.0, 20.0, 40.0}) {
            const int K = 8;
            const double u = 1, t = 0.5, c2 = 0.5, s2 = 0.1;
            const int m = min_ports(R, K, u, t, c2, s2);
            CHECK(esr_iid_zf(u, t, double(K) / m, c2, s2, K).esr >= R - 1e-9);
            if (m - 1 > K) CHECK(esr_iid_zf(u, t, double(K) / (m - 1), c2, s2, K).esr < R);
            CHECK(m <= min_ports(R, K, u, 0.0, c2, s2));
        }
    }

    TEST_CASE("SINR is invariant under user permutation")
    {
        const Scenario sc = random_uncommon_scenario(41, 10, 4, 8);
        std::mt19937_64 g(41);
        const PhaseShifts phi = random_phases(8, g);
        const PortSelection s = PortSelection::first(10, 10);
        const std::vector<int> perm{2, 0, 3, 1};
        Scenario q = sc;
        for (int k = 0; k < 4; ++k) {
            q.corr.F_tot[k] = sc.corr.F_tot[perm[k]];
            q.corr.C_R[k] = sc.corr.C_R[perm[k]];
            q.u(k) = sc.u(perm[k]);
            q.t(k) = sc.t(perm[k]);
            q.p(k) = sc.p(perm[k]);
        }
        for (Precoder kind : {Precoder::rzf, Precoder::zf}) {
            const RVec a = deterministic_esr(sc, s, phi, kind, 0.05).sinr;
            const RVec b = deterministic_esr(q, s, phi, kind, 0.05).sinr;
            for (int k = 0; k < 4; ++k) CHECK(rel(b(k), a(perm[k])) < 1e-9);
        }
    }

    TEST_CASE("RZF at the default regulariser is at least ZF")
    {
        for (std::uint64_t seed = 50; seed < 56; ++seed) {
            std::mt19937_64 g(seed);
            const auto mode = seed % 2 ? CorrelationMode::uncommon : CorrelationMode::common;
            const int K = uniform_int(g, 2, 5);
            const int M = K + uniform_int(g, 1, 6);
            const Scenario sc = random_scenario(g, mode, {M, K, 8, M});
            const PhaseShifts phi = random_phases(8, g);
            const PortSelection s = PortSelection::first(M, M);
            const double zf = deterministic_esr(sc, s, phi, Precoder::zf, 0).esr;
            const double rzf = deterministic_esr(sc, s, phi, Precoder::rzf, default_regularizer(sc)).esr;
            CHECK(zf >= 0);
            CHECK(rzf >= zf * (1 - 1e-9));
        }
    }

    TEST_CASE("DE error shrinks when the system grows")
    {
        McOptions mo;
        mo.trials = 1000;
        double err[2];
        for (int m = 1; m <= 2; ++m) {
            const Scenario sc = presets::uncommon_linear(8 * m, 6 * m, 16 * m, 80);
            const PortSelection s = PortSelection::first(8 * m, 8 * m);
            const PhaseShifts phi = PhaseShifts::zeros(16 * m);
            const double z = default_regularizer(sc);
            const double de = deterministic_esr(sc, s, phi, Precoder::rzf, z).esr;
            err[m - 1] = rel(de, empirical_esr(sc, s, phi, PrecoderKind::rzf(z), mo).mean);
        }
        CHECK(err[1] < err[0]);
    }

    TEST_CASE("report serialisation")
    {
        const RateReport r = make_report("zf/iid", (RVec(3) << 1.0, 3.0, 7.0).finished(), 0.0, "abc");
        CHECK(r.esr == doctest::Approx(1 + 2 + 3).epsilon(1e-15));
        CHECK(r.esr == std::accumulate(r.rate.begin(), r.rate.end(), 0.0));
        CHECK(RateReport::csv_header() == "regime,K,esr,z,digest,saturated,sinr");
        CHECK(r.csv_row() == "zf/iid,3,6,0,abc,0,1;3;7");
        const auto j = r.to_json();
        CHECK(j.at("regime") == "zf/iid");
        CHECK(j.at("rate").size() == 3);
        CHECK(j.at("esr").get<double>() == r.esr);

        const PortSelection s = PortSelection::first(8, 4);
        const PhaseShifts phi = PhaseShifts::zeros(4);
        CHECK(inputs_digest(0.1, s, phi) == inputs_digest(0.1, s, phi));
        CHECK(inputs_digest(0.1, s, phi) != inputs_digest(0.2, s, phi));
        CHECK_THROWS_AS(precoder_from_string("mmse"), ConstraintError);
        CHECK(precoder_from_string(to_string(Precoder::zf)) == Precoder::zf);
    }

    TEST_CASE("the uncorrected Delta is caught")
    {
        // without the (1+mu_l)^2 factor the second-order terms drift from simulation
        std::mt19937_64 g(5);
        Scenario sc = random_scenario(g, CorrelationMode::uncommon, {16, 8, 16, 16});
        sc.sigma2 = 0.1;
        const PortSelection s = PortSelection::first(16, 16);
        const PhaseShifts phi = PhaseShifts::zeros(16);
        EvalOptions bad;
        bad.second_order.printed_delta = true;
        const double good = deterministic_esr(sc, s, phi, Precoder::rzf, 1.0).esr;
        const double wrong = deterministic_esr(sc, s, phi, Precoder::rzf, 1.0, bad).esr;
        McOptions mo;
        mo.trials = 2000;
        const double mc = empirical_esr(sc, s, phi, PrecoderKind::rzf(1.0), mo).mean;
        CHECK(rel(good, mc) < 0.03);
        CHECK(rel(wrong, mc) > 0.06);
        // at smaller z it turns an interference term negative
        CHECK_NOTHROW(deterministic_esr(sc, s, phi, Precoder::rzf, 0.1));
        CHECK_THROWS_AS(deterministic_esr(sc, s, phi, Precoder::rzf, 0.1, bad), NumericalError);
    }
}
