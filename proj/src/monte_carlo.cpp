// SPDX-License-Identifier: Apache-2.0
#include "fasris/monte_carlo.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

namespace fasris {

void PrecoderKind::validate() const
{
    if (type == Precoder::rzf && !(z > 0)) throw ConstraintError("RZF precoder needs z > 0");
}

CMat build_precoder(const CMat& H, const PrecoderKind& kind, const RVec& p, double budget)
{
    kind.validate();
    const Eigen::Index M = H.rows(), K = H.cols();
    if (p.size() != K) throw ConstraintError("build_precoder: power vector must have K entries");
    if (!H.allFinite()) throw NumericalError("build_precoder: channel has non-finite entries");
    if (!(budget > 0)) throw ConstraintError("build_precoder: power budget must be positive");
    CMat G;
    switch (kind.type) {
    case Precoder::rzf: {
        CMat A = H * H.adjoint();
        A.diagonal().array() += kind.z;
        G = A.llt().solve(H);
        break;
    }
    case Precoder::zf: {
        if (M < K) throw FeasibilityError("ZF needs M >= K");
        Eigen::JacobiSVD<CMat> svd(H);
        const auto& sv = svd.singularValues();
        if (!(sv(K - 1) > 1e-10 * sv(0)))
            throw FeasibilityError("ZF: channel matrix is rank deficient");
        CMat Gram = H.adjoint() * H;
        G = H * Gram.llt().solve(CMat::Identity(K, K));
        break;
    }
    case Precoder::mrt: G = H; break;
    }
    // Tr(G P G^H) = sum_k p_k ||g_k||^2
    double tr = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) tr += p(k) * G.col(k).squaredNorm();
    if (tr > 0) G *= std::sqrt(budget / tr);
    return G;
}

RVec instantaneous_sinr(const CMat& H, const CMat& G, const RVec& p, double sigma2)
{
    const Eigen::Index K = H.cols();
    CMat T = H.adjoint() * G;  // T(k,i) = h_k^H g_i
    RVec out(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        double interf = 0.0;
        for (Eigen::Index i = 0; i < K; ++i)
            if (i != k) interf += p(i) * std::norm(T(k, i));
        out(k) = p(k) * std::norm(T(k, k)) / (interf + sigma2);
    }
    return out;
}

namespace {

// Runs body(i) for i in [0, n), serially or with OpenMP. The first failure by
// trial index is rethrown with that index attached.
template <class Body>
void for_trials(int n, bool parallel, Body body)
{
    int bad = std::numeric_limits<int>::max();
    std::exception_ptr err;
    std::mutex mu;
    auto run = [&](int i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            if (i < bad) {
                bad = i;
                err = std::current_exception();
            }
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) run(i);
    } else {
        for (int i = 0; i < n; ++i) run(i);
    }
    if (!err) return;
    try {
        std::rethrow_exception(err);
    } catch (const FeasibilityError& e) {
        throw FeasibilityError("trial " + std::to_string(bad) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("trial " + std::to_string(bad) + ": " + e.what());
    }
}

}  // namespace

EsrEstimate empirical_esr(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi,
                          const PrecoderKind& kind, const McOptions& o)
{
    sc.validate();
    kind.validate();
    if (o.trials < 2) throw ConstraintError("empirical_esr: need at least 2 trials");
    if (!s.binary) throw ConstraintError("empirical_esr: port selection must be binary");
    const ChannelFactors f = channel_factors(sc, s, phi);
    const double budget = power_budget(o.power, sc.dims.M);
    const int K = sc.dims.K;
    RMat rates(K, o.trials);
    for_trials(o.trials, o.parallel, [&](int i) {
        RngStream rng(o.seed, std::uint64_t(i));
        ChannelSample cs = sample_channel(f, rng);
        CMat G = build_precoder(cs.H, kind, sc.p, budget);
        RVec g = instantaneous_sinr(cs.H, G, sc.p, sc.sigma2);
        for (int k = 0; k < K; ++k) rates(k, i) = std::log2(1.0 + g(k));
    });
    // reduce in trial order so the result does not depend on the schedule
    EsrEstimate e;
    e.trials = o.trials;
    e.seed = o.seed;
    e.user_rate = RVec::Zero(K);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < o.trials; ++i) {
        double r = 0.0;
        for (int k = 0; k < K; ++k) {
            r += rates(k, i);
            e.user_rate(k) += rates(k, i);
        }
        sum += r;
        sum2 += r * r;
    }
    const double n = o.trials;
    e.mean = sum / n;
    e.user_rate /= n;
    const double var = std::max(0.0, (sum2 - n * e.mean * e.mean) / (n - 1));
    e.stderr_ = std::sqrt(var / n);
    e.ci95 = 1.959963984540054 * e.stderr_;
    return e;
}

ResolventProbe resolvent_probe(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, double z,
                               int trials, std::uint64_t seed, bool parallel)
{
    sc.validate();
    if (!(z > 0)) throw ConstraintError("resolvent_probe: z must be positive");
    if (trials < 1) throw ConstraintError("resolvent_probe: need at least one trial");
    const ChannelFactors f = channel_factors(sc, s, phi);
    const int K = f.K;
    const double M = f.M, L = f.L;
    // per-trial record: delta, omega(K), mu(K), ups_I(K+1), ups_R(K+1), Lambda(K*K)
    const int width = 1 + 2 * K + 2 * (K + 1) + K * K;
    RMat rec(width, trials);
    for_trials(trials, parallel, [&](int i) {
        RngStream rng(seed, std::uint64_t(i));
        ChannelSample cs = sample_channel(f, rng);
        CMat A = cs.H * cs.H.adjoint();
        A.diagonal().array() += z;
        CMat Q = inv_hpd(A);
        CMat RQ = f.R * Q;
        std::vector<CMat> ZQ(K), FQ(K);
        for (int k = 0; k < K; ++k) {
            CMat Zk = cs.Z(f, k);
            ZQ[k] = Zk * (Zk.adjoint() * Q);
            FQ[k] = f.F[k] * Q;
        }
        auto col = rec.col(i);
        int j = 0;
        col(j++) = trace_re(RQ) / M;
        RVec om(K);
        for (int k = 0; k < K; ++k) col(j++) = om(k) = trace_re(ZQ[k]) / L;
        for (int k = 0; k < K; ++k) col(j++) = trace_re(FQ[k]) / M + om(k);
        for (const CMat* Kq : {&Q, &RQ}) {
            for (int k = 0; k < K; ++k) col(j++) = trace_prod(ZQ[k], *Kq) / L + trace_prod(FQ[k], *Kq) / M;
            col(j++) = trace_prod(RQ, *Kq) / M;
        }
        for (int l = 0; l < K; ++l)
            for (int k = 0; k < K; ++k) col(j++) = trace_prod(ZQ[k], ZQ[l]) / L + trace_prod(ZQ[k], FQ[l]) / M;
    });
    RVec mean = RVec::Zero(width);
    for (int i = 0; i < trials; ++i) mean += rec.col(i);
    mean /= double(trials);

    ResolventProbe pr;
    pr.trials = trials;
    int j = 0;
    pr.delta = mean(j++);
    pr.omega = mean.segment(j, K);
    j += K;
    pr.mu = mean.segment(j, K);
    j += K;
    pr.upsilon_I = mean.segment(j, K + 1);
    j += K + 1;
    pr.upsilon_R = mean.segment(j, K + 1);
    j += K + 1;
    pr.Lambda = Eigen::Map<const RMat>(mean.data() + j, K, K);
    return pr;
}

}  // namespace fasris
