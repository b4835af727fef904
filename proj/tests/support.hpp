// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit and acceptance tests.
#pragma once

#include "fasris/channel_model.hpp"
#include "fasris/presets.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fasris::test {

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double max_rel(const RVec& a, const RVec& b)
{
    double m = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, rel(a(i), b(i)));
    return m;
}

// Random correlation matrix with unit diagonal: normalised Gram of n x 2n Gaussians.
inline CMat random_correlation(int n, std::mt19937_64& g)
{
    std::normal_distribution<double> nd;
    CMat X(n, 2 * n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = cd(nd(g), nd(g));
    CMat A = X * X.adjoint();
    RVec d = A.diagonal().real().cwiseSqrt().cwiseInverse();
    A = d.asDiagonal() * A * d.asDiagonal();
    return 0.5 * (A + A.adjoint());
}

inline double uniform(std::mt19937_64& g, double a, double b)
{
    return std::uniform_real_distribution<double>(a, b)(g);
}

inline int uniform_int(std::mt19937_64& g, int a, int b) { return std::uniform_int_distribution<int>(a, b)(g); }

// Gains of order one, so z = 1e-8 is deep in the ZF regime.
struct RandomShape {
    int M = 8, K = 4, L = 8, M_tot = 8;
};

inline Scenario random_scenario(std::mt19937_64& g, CorrelationMode mode, const RandomShape& d)
{
    Scenario sc;
    sc.id = "random";
    sc.dims = {d.M, d.K, d.L, d.M_tot};
    sc.corr.mode = mode;
    sc.corr.R_tot = random_correlation(d.M_tot, g);
    sc.corr.C_L = random_correlation(d.L, g);
    const int nk = mode == CorrelationMode::uncommon ? d.K : 1;
    for (int k = 0; k < nk; ++k) {
        sc.corr.F_tot.push_back(random_correlation(d.M_tot, g));
        sc.corr.C_R.push_back(random_correlation(d.L, g));
    }
    sc.u.resize(d.K);
    sc.t.resize(d.K);
    sc.p.resize(d.K);
    for (int k = 0; k < d.K; ++k) {
        sc.u(k) = uniform(g, 0.3, 1.5);
        sc.t(k) = uniform(g, 0.3, 1.5);
        sc.p(k) = uniform(g, 0.5, 2.0);
    }
    sc.sigma2 = uniform(g, 0.02, 0.5);
    sc.validate();
    return sc;
}

inline PhaseShifts random_phases(int L, std::mt19937_64& g)
{
    RVec a(L);
    for (int l = 0; l < L; ++l) a(l) = uniform(g, 0, 2 * M_PI);
    return PhaseShifts::from_angles(a);
}

// Toy FAS for exhaustive search: 2 x 5 ports, K = 2, M = 3.
inline Scenario toy_fas(double snr_db)
{
    Scenario sc = presets::common_planar(3, 2, snr_db);
    sc.id = "toy_fas";
    sc.dims.M_tot = 10;
    sc.corr.R_tot = fas_correlation_matrix({2.0, 1.0, 5, 2});
    sc.corr.F_tot = {sc.corr.R_tot};
    sc.validate();
    return sc;
}

}  // namespace fasris::test
