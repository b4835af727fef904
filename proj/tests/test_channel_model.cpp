// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace fasris;
using namespace fasris::test;

namespace {

// J0 from its power series; fine for the small arguments used here.
double bessel_j0_series(double x)
{
    double term = 1, sum = 1;
    for (int k = 1; k < 60; ++k) {
        term *= -(x * x / 4) / (double(k) * k);
        sum += term;
    }
    return sum;
}

// Composite Simpson on [-180, 180] degrees, independent of the library's adaptive rule.
cd ris_entry_simpson(double d_c, double alpha, double beta, int lag, int n = 200000)
{
    const double a = -180, b = 180, h = (b - a) / n;
    const double norm = 1.0 / std::sqrt(2 * M_PI * beta * beta);
    cd sum = 0;
    for (int i = 0; i <= n; ++i) {
        const double x = a + i * h;
        const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        const double gx = (x - alpha) / beta;
        sum += w * norm * std::exp(-0.5 * gx * gx) * std::exp(cd(0, 2 * M_PI * d_c * lag * std::sin(M_PI * x / 180)));
    }
    return sum * h / 3.0;
}

CMat sqrt_oracle(const CMat& A)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(A);
    RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_SUITE("channel_model")
{
    TEST_CASE("FAS correlation: unit diagonal and Bessel entries")
    {
        const CMat R = fas_correlation_matrix({2.0, 2.0, 10, 10});
        CHECK(R.rows() == 100);
        for (int i = 0; i < 100; ++i) CHECK(R(i, i).real() == doctest::Approx(1.0));
        // neighbouring ports along one axis are 2/9 wavelengths apart
        const double ref = bessel_j0_series(2 * M_PI * 2.0 / 9.0);
        CHECK(std::abs(R(0, 1) - cd(ref, 0)) < 1e-12);
        CHECK(std::abs(R(0, 10) - cd(ref, 0)) < 1e-12);
        // diagonal neighbour
        const double refd = bessel_j0_series(2 * M_PI * std::hypot(2.0 / 9, 2.0 / 9));
        CHECK(std::abs(R(0, 11) - cd(refd, 0)) < 1e-12);
        CHECK(min_eigenvalue(R) >= -1e-10);
    }

    TEST_CASE("FAS correlation is translation invariant")
    {
        // shifting the grid by whole ports maps the same sub-block onto itself
        const CMat R = fas_correlation_matrix({3.0, 1.5, 7, 4});
        const int Ny = 4;
        for (int i = 0; i < 4 * Ny; ++i)
            for (int j = 0; j < 4 * Ny; ++j) CHECK(std::abs(R(i, j) - R(i + 2 * Ny, j + 2 * Ny)) < 1e-14);
    }

    TEST_CASE("FAS geometry errors")
    {
        CHECK_THROWS_AS(fas_correlation_matrix({1.0, 1.0, 0, 3}), ConstraintError);
        CHECK_THROWS_AS(fas_correlation_matrix({1.0, 1.0, 1, 3}), ConstraintError);
        CHECK_THROWS_AS(fas_correlation_matrix({-1.0, 1.0, 3, 3}), ConstraintError);
    }

    TEST_CASE("RIS correlation against Simpson quadrature")
    {
        const CMat C = ris_correlation_matrix({0.5, 10, 5, 6});
        for (int lag : {0, 1, 3, 5}) {
            const cd ref = ris_entry_simpson(0.5, 10, 5, lag);
            CHECK(std::abs(C(lag, 0) - ref) < 1e-9);
        }
        CHECK(std::abs(C(0, 0).real() - 1.0) < 1e-6);
        CHECK(std::abs(C(0, 0).imag()) < 1e-14);
        for (int m = 0; m < 6; ++m)
            for (int n = 0; n < 6; ++n) CHECK(std::abs(C(m, n) - std::conj(C(n, m))) < 1e-14);
        CHECK(min_eigenvalue(C) >= -1e-10);
    }

    TEST_CASE("RIS correlation: wide spread near 180 degrees")
    {
        const CMat C = ris_correlation_matrix({0.5, 170, 30, 8});
        const cd ref = ris_entry_simpson(0.5, 170, 30, 2);
        CHECK(std::abs(C(2, 0) - ref) < 1e-9);
        // truncated, not renormalised
        CHECK(C(0, 0).real() < 1.0);
    }

    TEST_CASE("path loss")
    {
        CHECK(path_loss({0.01, 2.1, 1.0}) == doctest::Approx(0.01));
        CHECK(path_loss({0.01, 2.1, 10.0}) == doctest::Approx(7.943282347242815e-05).epsilon(1e-12));
        CHECK_THROWS_AS(path_loss({0.01, 2.1, 0.0}), ConstraintError);
        // the cascaded leg is weaker than the direct link in the uncommon preset
        const Scenario sc = presets::uncommon_linear(16, 12, 32, 80);
        for (int k = 0; k < 12; ++k) CHECK(sc.t(k) < sc.u(k));
        const double d = cosine_rule_distance(5, 20, 150);
        CHECK(d == doctest::Approx(std::sqrt(25 + 400 + 2 * std::cos(M_PI / 6) * 100)));
    }

    TEST_CASE("submatrix selection")
    {
        CMat A = CMat::Zero(3, 3);
        A.diagonal() << 1, 2, 3;
        const CMat B = select_submatrix(A, PortSelection::from_indices(3, {0, 2}));
        CHECK(B.rows() == 2);
        CHECK(B(0, 0).real() == 1);
        CHECK(B(1, 1).real() == 3);
        CHECK(B(0, 1) == cd(0));

        std::mt19937_64 g(11);
        const CMat R = random_correlation(7, g);
        CHECK((select_submatrix(R, PortSelection::first(7, 7)) - R).norm() == 0.0);
        // embedded surrogate with zero rows removed equals the submatrix
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<int> idx;
            for (int i = 0; i < 7; ++i)
                if (uniform(g, 0, 1) < 0.5) idx.push_back(i);
            if (idx.empty()) idx.push_back(3);
            const PortSelection s = PortSelection::from_indices(7, idx);
            const CMat E = embed_relaxed(R, s.s);
            const CMat S = select_submatrix(R, s);
            for (std::size_t a = 0; a < idx.size(); ++a)
                for (std::size_t b = 0; b < idx.size(); ++b) CHECK(std::abs(E(idx[a], idx[b]) - S(a, b)) < 1e-15);
            CHECK(std::abs(E.trace() - S.trace()) < 1e-12);
        }
    }

    TEST_CASE("port selection helpers")
    {
        const PortSelection u = PortSelection::uniform(100, 20);
        CHECK(u.count() == 20);
        CHECK(u.indices().front() == 0);
        CHECK(u.indices()[1] == 5);  // 1 + floor(100/19) in 1-based terms
        // the printed step overruns M_tot = 10, M = 3; reduced step keeps the last port on the grid
        const auto t = PortSelection::uniform(10, 3).indices();
        CHECK(t == std::vector<int>{0, 4, 8});
        CHECK_THROWS_AS(PortSelection::from_indices(5, {0, 5}), ConstraintError);
        CHECK_THROWS_AS(PortSelection::from_indices(5, {1, 1}), ConstraintError);
        CHECK_THROWS_AS(PortSelection::first(5, 3).validate(5, 2), ConstraintError);
    }

    TEST_CASE("effective RIS correlation")
    {
        const int L = 6;
        const CMat I = CMat::Identity(L, L);
        const EffectiveRis e0 = effective_ris_correlation(I, PhaseShifts::zeros(L), I, 1.0);
        CHECK((e0.C - I).norm() < 1e-14);

        std::mt19937_64 g(5);
        const CMat C_R = random_correlation(L, g), C_L = random_correlation(L, g);
        const PhaseShifts phi = random_phases(L, g);
        // C_L = I: eigenvalues do not depend on phi
        const RVec ev0 = Eigen::SelfAdjointEigenSolver<CMat>(C_R).eigenvalues();
        const RVec ev1 =
            Eigen::SelfAdjointEigenSolver<CMat>(effective_ris_correlation(I, phi, C_R, 1.0).C).eigenvalues();
        CHECK((ev0 - ev1).norm() < 1e-12);
        // dense oracle
        const CMat Lh = sqrt_oracle(C_L);
        const CMat P = phi.diag().asDiagonal();
        const CMat ref = 0.7 * Lh * P * C_R * P.adjoint() * Lh;
        const EffectiveRis e = effective_ris_correlation(C_L, phi, C_R, 0.7);
        CHECK((e.C - ref).norm() / ref.norm() < 1e-12);
        CHECK((e.half * e.half.adjoint() - e.C).norm() / ref.norm() < 1e-12);
    }

    TEST_CASE("G_l and dC/dphi against finite differences")
    {
        const int L = 5;
        std::mt19937_64 g(9);
        const RVec phi = random_phases(L, g).phi;
        for (int l = 0; l < L; ++l) {
            const CMat G = gradient_G_l(phi, l);
            CHECK((G - G.adjoint()).norm() < 1e-15);
            CHECK(G(l, l) == cd(0));
        }
        const CMat Ge = gradient_G_l(RVec::Constant(L, 0.3), 2);
        for (int q = 0; q < L; ++q)
            if (q != 2) {
                CHECK(std::abs(std::abs(Ge(2, q)) - 1.0) < 1e-15);
                CHECK(std::abs(Ge(2, q).real()) < 1e-15);
            }

        const CMat C_R = random_correlation(L, g), C_L = random_correlation(L, g);
        const CMat Lh = herm_sqrt(C_L);
        const double h = 1e-5;
        for (int l = 0; l < L; ++l) {
            RVec a = phi, b = phi;
            a(l) += h;
            b(l) -= h;
            const CMat fd = (effective_ris_correlation(C_L, PhaseShifts{a}, C_R, 0.8).C -
                             effective_ris_correlation(C_L, PhaseShifts{b}, C_R, 0.8).C) /
                            (2 * h);
            const CMat an = dC_dphi(Lh, phi, C_R, 0.8, l);
            CHECK((an - fd).norm() <= 1e-7 * std::max(1.0, fd.norm()));
        }
    }

    TEST_CASE("channel sampling moments and determinism")
    {
        const Scenario sc = presets::uncommon_linear(8, 3, 8, 80);
        const PortSelection s = PortSelection::first(8, 8);
        std::mt19937_64 g(3);
        const PhaseShifts phi = random_phases(8, g);
        const ChannelFactors f = channel_factors(sc, s, phi);
        const int n = 10000;
        std::vector<RVec> norms(3, RVec(n));
        for (int i = 0; i < n; ++i) {
            RngStream rng(42, i);
            const ChannelSample cs = sample_channel(f, rng);
            for (int k = 0; k < 3; ++k) norms[k](i) = cs.H.col(k).squaredNorm();
        }
        for (int k = 0; k < 3; ++k) {
            const double expect =
                trace_re(f.F[k]) / f.M + trace_re(f.R) * trace_re(f.C[k]) / (double(f.M) * f.L);
            const double mean = norms[k].mean();
            const double sd = std::sqrt((norms[k].array() - mean).square().sum() / (n - 1));
            CHECK(std::abs(mean - expect) <= 3 * sd / std::sqrt(double(n)));
        }
        RngStream r1(7, 3), r2(7, 3);
        CHECK((sample_channel(f, r1).H - sample_channel(f, r2).H).norm() == 0.0);

        Scenario z = sc;
        z.u.setZero();
        z.t.setZero();
        RngStream r3(1, 0);
        CHECK(sample_channel(z, s, phi, r3).H.norm() == 0.0);
    }

    TEST_CASE("scenario validation")
    {
        Scenario sc = presets::iid(4, 2, 4, 1.0, 0.5, 10);
        sc.p(0) = -1;
        CHECK_THROWS(sc.validate());
        Scenario sc2 = presets::iid(4, 2, 4, 1.0, 0.5, 10);
        sc2.sigma2 = 0;
        CHECK_THROWS(sc2.validate());
        CHECK(presets::common_planar_homogeneous(20, 8, 80).homogeneous());
        CHECK_FALSE(presets::common_planar(20, 8, 80).homogeneous());
    }

    TEST_CASE("non-PSD input fails loudly")
    {
        CMat A = CMat::Identity(3, 3);
        A(0, 0) = -0.1;
        CHECK_THROWS_AS(require_psd(A, "A"), DomainError);
        CHECK_THROWS_AS(herm_sqrt(A), DomainError);
        A(0, 0) = -1e-12;  // round-off is clipped
        CHECK(herm_sqrt(A)(0, 0) == cd(0));
    }
}
