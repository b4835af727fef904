// SPDX-License-Identifier: Apache-2.0
#include "fasris/presets.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace fasris::presets {

namespace {

// The angular-profile matrices are reused a lot across sweeps; memoise them.
CMat ris_cached(double alpha, double beta, int n)
{
    static std::mutex mu;
    static std::map<std::tuple<double, double, int>, CMat> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_tuple(alpha, beta, n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    CMat C = ris_correlation_matrix({0.5, alpha, beta, n});
    cache.emplace(key, C);
    return C;
}

double ris_gain(double d) { return path_loss({kRefGain, kAlphaRis, d}); }
double direct_gain(double d) { return path_loss({kRefGain, kAlphaDirect, d}); }

}  // namespace

double sigma2_from_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

Scenario uncommon_linear(int M, int K, int L, double snr_db)
{
    Scenario sc;
    sc.id = "uncommon_M" + std::to_string(M) + "_K" + std::to_string(K) + "_L" + std::to_string(L);
    sc.dims = {M, K, L, M};
    sc.corr.mode = CorrelationMode::uncommon;
    sc.corr.R_tot = ris_cached(10, 5, M);
    sc.corr.C_L = ris_cached(5, 30, L);
    sc.u.resize(K);
    sc.t.resize(K);
    sc.p = RVec::Ones(K);
    for (int i = 0; i < K; ++i) {
        sc.corr.F_tot.push_back(ris_cached(10 + 2 * i, 30, M));
        sc.corr.C_R.push_back(ris_cached(5 + 10 * i, 30, L));
        const double d_ris = 20 + i / 2;
        sc.t(i) = ris_gain(kBsRis) * ris_gain(d_ris);  // both hops
        sc.u(i) = direct_gain(cosine_rule_distance(kBsRis, d_ris, kLinkAngle));
    }
    sc.sigma2 = sigma2_from_db(snr_db);
    sc.validate();
    return sc;
}

namespace {
CMat planar_cached(double W)
{
    static std::mutex mu;
    static std::map<double, CMat> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(W);
    if (it != cache.end()) return it->second;
    CMat R = fas_correlation_matrix({W, W, 10, 10});
    cache.emplace(W, R);
    return R;
}

Scenario planar_base(int M, int K, double snr_db, double W)
{
    Scenario sc;
    sc.dims = {M, K, 32, 100};
    sc.corr.mode = CorrelationMode::common;
    sc.corr.R_tot = planar_cached(W);
    sc.corr.F_tot = {sc.corr.R_tot};
    sc.corr.C_L = ris_cached(60, 5, 32);
    sc.corr.C_R = {ris_cached(30, 5, 32)};
    sc.sigma2 = sigma2_from_db(snr_db);
    return sc;
}
}  // namespace

Scenario common_planar(int M, int K, double snr_db, double W)
{
    Scenario sc = planar_base(M, K, snr_db, W);
    sc.id = "planar_M" + std::to_string(M) + "_K" + std::to_string(K);
    sc.u.resize(K);
    sc.t.resize(K);
    sc.p.resize(K);
    for (int k = 0; k < K; ++k) {
        const double d_ris = 20 + k / 4;
        sc.t(k) = ris_gain(d_ris);
        sc.u(k) = direct_gain(cosine_rule_distance(kBsRis, d_ris, kLinkAngle));
        sc.p(k) = k / 2 + 1;
    }
    sc.validate();
    return sc;
}

Scenario common_planar_homogeneous(int M, int K, double snr_db, double W)
{
    Scenario sc = planar_base(M, K, snr_db, W);
    sc.id = "planar_hom_M" + std::to_string(M) + "_K" + std::to_string(K);
    sc.t = RVec::Constant(K, ris_gain(20.0));
    sc.u = RVec::Constant(K, direct_gain(22.9));
    sc.p = RVec::Ones(K);
    sc.validate();
    return sc;
}

Scenario iid(int M, int K, int L, double u, double t, double snr_db)
{
    Scenario sc;
    sc.id = "iid_M" + std::to_string(M) + "_K" + std::to_string(K) + "_L" + std::to_string(L);
    sc.dims = {M, K, L, M};
    sc.corr.mode = CorrelationMode::iid;
    sc.corr.R_tot = CMat::Identity(M, M);
    sc.corr.F_tot = {CMat::Identity(M, M)};
    sc.corr.C_L = CMat::Identity(L, L);
    sc.corr.C_R = {CMat::Identity(L, L)};
    sc.u = RVec::Constant(K, u);
    sc.t = RVec::Constant(K, t);
    sc.p = RVec::Ones(K);
    sc.sigma2 = sigma2_from_db(snr_db);
    sc.validate();
    return sc;
}

}  // namespace fasris::presets
