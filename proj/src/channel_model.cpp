// SPDX-License-Identifier: Apache-2.0
#include "fasris/channel_model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fasris {

namespace {
constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

const char* to_string(CorrelationMode m)
{
    switch (m) {
    case CorrelationMode::uncommon: return "uncommon";
    case CorrelationMode::common: return "common";
    case CorrelationMode::iid: return "iid";
    }
    return "?";
}

void Dimensions::validate() const
{
    if (M < 1 || K < 1 || L < 1)
        throw ConstraintError("dimensions: M, K, L must be >= 1");
    if (M > M_tot)
        throw ConstraintError("dimensions: M exceeds M_tot");
}

bool Scenario::homogeneous() const
{
    const int K = dims.K;
    for (int k = 1; k < K; ++k) {
        if (u(k) != u(0) || t(k) != t(0) || p(k) != p(0))
            return false;
    }
    if (corr.mode == CorrelationMode::uncommon) {
        for (int k = 1; k < K; ++k) {
            if (corr.F_of(k) != corr.F_of(0))
                return false;
            if (corr.C_R_of(k) != corr.C_R_of(0))
                return false;
        }
    }
    return true;
}

void Scenario::validate() const
{
    dims.validate();
    const int K = dims.K;
    if (u.size() != K || t.size() != K || p.size() != K)
        throw ConstraintError("scenario: gain/power vectors must have K entries");
    if ((u.array() < 0).any() || (t.array() < 0).any())
        throw ConstraintError("scenario: gains must be non-negative");
    if ((p.array() <= 0).any())
        throw ConstraintError("scenario: powers must be positive");
    if (!(sigma2 > 0))
        throw ConstraintError("scenario: sigma2 must be positive");
    auto check = [](const CMat& A, int n, const std::string& name) {
        if (A.rows() != n || A.cols() != n)
            throw ConstraintError(name + ": expected " + std::to_string(n) + "x" + std::to_string(n));
        require_psd(A, name);
    };
    check(corr.R_tot, dims.M_tot, "R_tot");
    check(corr.C_L, dims.L, "C_L");
    const bool per_user = corr.mode == CorrelationMode::uncommon;
    if (corr.F_tot.size() != (per_user ? size_t(K) : size_t(1)) && corr.F_tot.size() != 1)
        throw ConstraintError("F_tot: need one matrix per user or a shared one");
    if (corr.C_R.size() != (per_user ? size_t(K) : size_t(1)) && corr.C_R.size() != 1)
        throw ConstraintError("C_R: need one matrix per user or a shared one");
    for (size_t k = 0; k < corr.F_tot.size(); ++k)
        check(corr.F_tot[k], dims.M_tot, "F_tot[" + std::to_string(k) + "]");
    for (size_t k = 0; k < corr.C_R.size(); ++k)
        check(corr.C_R[k], dims.L, "C_R[" + std::to_string(k) + "]");
}

// --- decision variables --------------------------------------------------------

PortSelection PortSelection::from_indices(int M_tot, const std::vector<int>& idx)
{
    PortSelection ps;
    ps.s = RVec::Zero(M_tot);
    for (int i : idx) {
        if (i < 0 || i >= M_tot)
            throw ConstraintError("port index out of range");
        if (ps.s(i) != 0.0)
            throw ConstraintError("duplicate port index");
        ps.s(i) = 1.0;
    }
    return ps;
}

PortSelection PortSelection::uniform(int M_tot, int M)
{
    std::vector<int> idx;
    if (M == 1) {
        idx.push_back(0);
    } else {
        int step = M_tot / (M - 1);
        if ((M - 1) * step > M_tot - 1)
            step = (M_tot - 1) / (M - 1);
        for (int m = 0; m < M; ++m)
            idx.push_back(m * step);
    }
    return from_indices(M_tot, idx);
}

PortSelection PortSelection::first(int M_tot, int M)
{
    std::vector<int> idx(M);
    for (int m = 0; m < M; ++m) idx[m] = m;
    return from_indices(M_tot, idx);
}

PortSelection PortSelection::relaxed(RVec s)
{
    PortSelection ps;
    ps.s = std::move(s);
    ps.binary = false;
    return ps;
}

std::vector<int> PortSelection::indices() const
{
    std::vector<int> idx;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) == 1.0) idx.push_back(int(i));
    return idx;
}

int PortSelection::count() const { return int(indices().size()); }

void PortSelection::validate(int M_tot, int M) const
{
    if (s.size() != M_tot)
        throw ConstraintError("selection vector length differs from M_tot");
    if (binary) {
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) != 0.0 && s(i) != 1.0)
                throw ConstraintError("binary selection has a non-binary entry");
        if (count() != M)
            throw ConstraintError("selection must have exactly M = " + std::to_string(M) + " ones, has " +
                                  std::to_string(count()));
    } else {
        if ((s.array() < 0).any() || (s.array() > 1).any())
            throw ConstraintError("relaxed selection outside [0,1]");
        if (s.sum() > M + 1e-9)
            throw ConstraintError("relaxed selection sums above M");
    }
}

PhaseShifts PhaseShifts::from_angles(const RVec& a)
{
    PhaseShifts p{a};
    p.wrap();
    return p;
}

CVec PhaseShifts::diag() const
{
    CVec d(phi.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i)
        d(i) = std::polar(1.0, phi(i));
    return d;
}

void PhaseShifts::wrap()
{
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        double a = std::fmod(phi(i), 2 * kPi);
        if (a < 0) a += 2 * kPi;
        if (a >= 2 * kPi) a = 0.0;
        phi(i) = a;
    }
}

// --- generators ---------------------------------------------------------------

CMat fas_correlation_matrix(const PlanarFasGeometry& g)
{
    if (g.N_x < 1 || g.N_y < 1)
        throw ConstraintError("FAS grid needs N_x, N_y >= 1");
    if ((g.N_x == 1 && g.W_x != 0.0) || (g.N_y == 1 && g.W_y != 0.0))
        throw ConstraintError("degenerate FAS grid: a single row/column with nonzero aperture on that axis");
    if (g.W_x < 0 || g.W_y < 0)
        throw ConstraintError("FAS aperture must be non-negative");
    const int n = g.N_x * g.N_y;
    const double sx = g.N_x > 1 ? g.W_x / (g.N_x - 1) : 0.0;
    const double sy = g.N_y > 1 ? g.W_y / (g.N_y - 1) : 0.0;
    // port i sits at column i / N_y, row i % N_y (top to bottom, then left to right)
    CMat R(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double dx = std::abs(i / g.N_y - j / g.N_y) * sx;
            double dy = std::abs(i % g.N_y - j % g.N_y) * sy;
            R(i, j) = std::cyl_bessel_j(0.0, 2 * kPi * std::hypot(dx, dy));
        }
    }
    require_psd(R, "FAS correlation");
    return R;
}

CMat ris_correlation_matrix(const RisAngularProfile& p)
{
    if (!(p.d_c > 0) || !(p.beta > 0) || p.L < 1)
        throw ConstraintError("RIS profile needs d_c > 0, beta > 0, L >= 1");
    using boost::math::quadrature::gauss_kronrod;
    const double norm = 1.0 / std::sqrt(2 * kPi * p.beta * p.beta);
    // breakpoints around the Gaussian bulk keep the adaptive rule cheap
    std::vector<double> cuts{-180.0};
    for (double c : {p.alpha - 10 * p.beta, p.alpha + 10 * p.beta})
        if (c > -180.0 && c < 180.0) cuts.push_back(c);
    cuts.push_back(180.0);

    std::vector<cd> lag(2 * p.L - 1);
    for (int d = -(p.L - 1); d <= p.L - 1; ++d) {
        const double w = 2 * kPi * p.d_c * d;
        double re = 0, im = 0, err_total = 0;
        for (size_t c = 0; c + 1 < cuts.size(); ++c) {
            double err = 0;
            re += gauss_kronrod<double, 31>::integrate(
                [&](double x) {
                    double g = (x - p.alpha) / p.beta;
                    return norm * std::cos(w * std::sin(kPi * x / 180)) * std::exp(-0.5 * g * g);
                },
                cuts[c], cuts[c + 1], 20, 1e-13, &err);
            err_total += err;
            im += gauss_kronrod<double, 31>::integrate(
                [&](double x) {
                    double g = (x - p.alpha) / p.beta;
                    return norm * std::sin(w * std::sin(kPi * x / 180)) * std::exp(-0.5 * g * g);
                },
                cuts[c], cuts[c + 1], 20, 1e-13, &err);
            err_total += err;
        }
        if (err_total > 1e-10)
            throw PrecisionError("RIS correlation quadrature error estimate " + std::to_string(err_total));
        lag[d + p.L - 1] = cd(re, im);
    }
    CMat C(p.L, p.L);
    for (int m = 0; m < p.L; ++m)
        for (int n = 0; n < p.L; ++n)
            C(m, n) = lag[m - n + p.L - 1];
    require_psd(C, "RIS correlation");
    return C;
}

double path_loss(const PathLossParams& p)
{
    if (!(p.d > 0) || !(p.exponent > 0) || !(p.C > 0))
        throw ConstraintError("path loss needs d, exponent, C > 0");
    return p.C / std::pow(p.d, p.exponent);
}

double cosine_rule_distance(double d1, double d2, double angle_deg)
{
    return std::sqrt(d1 * d1 + d2 * d2 - 2 * std::cos(angle_deg * kPi / 180) * d1 * d2);
}

CMat select_submatrix(const CMat& A_tot, const PortSelection& s)
{
    if (!s.binary)
        return embed_relaxed(A_tot, s.s);
    if (s.s.size() != A_tot.rows())
        throw ConstraintError("selection length differs from matrix size");
    std::vector<int> idx = s.indices();
    const int M = int(idx.size());
    CMat out(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            out(i, j) = A_tot(idx[i], idx[j]);
    return out;
}

CMat embed_relaxed(const CMat& A_tot, const RVec& s)
{
    if (s.size() != A_tot.rows())
        throw ConstraintError("selection length differs from matrix size");
    return s.asDiagonal() * A_tot * s.asDiagonal();
}

EffectiveRis effective_ris_correlation(const CMat& C_L, const PhaseShifts& phi, const CMat& C_R, double t)
{
    if (phi.phi.size() != C_L.rows() || C_R.rows() != C_L.rows())
        throw ConstraintError("RIS matrices and phase vector disagree in size");
    CMat half = std::sqrt(t) * herm_sqrt(C_L, "C_L") * phi.diag().asDiagonal() * herm_sqrt(C_R, "C_R");
    CMat C = half * half.adjoint();
    return {half, 0.5 * (C + C.adjoint())};
}

CMat gradient_G_l(const RVec& phi, int l)
{
    const int L = int(phi.size());
    CMat G = CMat::Zero(L, L);
    const cd j(0.0, 1.0);
    for (int q = 0; q < L; ++q) {
        if (q == l) continue;
        G(l, q) = j * std::polar(1.0, phi(l) - phi(q));
        G(q, l) = -j * std::polar(1.0, phi(q) - phi(l));
    }
    return G;
}

CMat dC_dphi(const CMat& C_L_half, const RVec& phi, const CMat& C_R, double t, int l)
{
    CMat GC = gradient_G_l(phi, l).cwiseProduct(C_R);
    return t * C_L_half * GC * C_L_half;
}

// --- statistics ---------------------------------------------------------------

UncommonStats to_uncommon(const CommonStats& c)
{
    UncommonStats u;
    u.M = c.M;
    u.L = c.L;
    u.R = c.R;
    const int K = int(c.u.size());
    for (int k = 0; k < K; ++k) {
        u.F.push_back(c.u(k) * c.F);
        u.C.push_back(c.t(k) * c.C);
    }
    return u;
}

namespace {

CMat ris_C(const Scenario& sc, const PhaseShifts& phi, int k)
{
    return effective_ris_correlation(sc.corr.C_L, phi, sc.corr.C_R_of(k), 1.0).C;
}

template <class Pick>
CommonStats common_impl(const Scenario& sc, const PhaseShifts& phi, Pick pick)
{
    if (sc.corr.mode == CorrelationMode::uncommon)
        throw ConstraintError("common statistics requested for an uncommon scenario");
    CommonStats c;
    c.M = sc.dims.M;
    c.L = sc.dims.L;
    c.R = pick(sc.corr.R_tot);
    c.F = pick(sc.corr.F_of(0));
    c.C = ris_C(sc, phi, 0);
    c.u = sc.u;
    c.t = sc.t;
    return c;
}

template <class Pick>
UncommonStats uncommon_impl(const Scenario& sc, const PhaseShifts& phi, Pick pick)
{
    UncommonStats s;
    s.M = sc.dims.M;
    s.L = sc.dims.L;
    s.R = pick(sc.corr.R_tot);
    const bool shared_F = sc.corr.F_tot.size() == 1;
    const bool shared_C = sc.corr.C_R.size() == 1;
    CMat F0 = shared_F ? pick(sc.corr.F_tot[0]) : CMat();
    CMat C0 = shared_C ? ris_C(sc, phi, 0) : CMat();
    for (int k = 0; k < sc.dims.K; ++k) {
        s.F.push_back(sc.u(k) * (shared_F ? F0 : pick(sc.corr.F_tot[k])));
        s.C.push_back(sc.t(k) * (shared_C ? C0 : ris_C(sc, phi, k)));
    }
    return s;
}

}  // namespace

CommonStats common_stats(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi)
{
    s.validate(sc.dims.M_tot, sc.dims.M);
    return common_impl(sc, phi, [&](const CMat& A) { return select_submatrix(A, s); });
}

UncommonStats uncommon_stats(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi)
{
    s.validate(sc.dims.M_tot, sc.dims.M);
    return uncommon_impl(sc, phi, [&](const CMat& A) { return select_submatrix(A, s); });
}

CommonStats common_stats_relaxed(const Scenario& sc, const RVec& s, const PhaseShifts& phi)
{
    return common_impl(sc, phi, [&](const CMat& A) { return embed_relaxed(A, s); });
}

UncommonStats uncommon_stats_relaxed(const Scenario& sc, const RVec& s, const PhaseShifts& phi)
{
    return uncommon_impl(sc, phi, [&](const CMat& A) { return embed_relaxed(A, s); });
}

// --- sampling -----------------------------------------------------------------

RngStream::RngStream(std::uint64_t seed, std::uint64_t index)
    : gen(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)))
{
}

cd RngStream::cn(double var)
{
    const double s = std::sqrt(0.5 * var);
    double a = nd(gen);
    double b = nd(gen);
    return cd(s * a, s * b);
}

ChannelFactors channel_factors(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi)
{
    s.validate(sc.dims.M_tot, sc.dims.M);
    ChannelFactors f;
    f.M = sc.dims.M;
    f.K = sc.dims.K;
    f.L = sc.dims.L;
    f.common = sc.corr.mode != CorrelationMode::uncommon;
    f.R = select_submatrix(sc.corr.R_tot, s);
    f.R_half = herm_sqrt(f.R, "R");
    CMat CL_half = herm_sqrt(sc.corr.C_L, "C_L");
    CVec ph = phi.diag();
    for (int k = 0; k < f.K; ++k) {
        CMat Fk = select_submatrix(sc.corr.F_of(k), s);
        f.F_half.push_back(std::sqrt(sc.u(k)) * herm_sqrt(Fk, "F"));
        f.F.push_back(sc.u(k) * Fk);
        CMat half = std::sqrt(sc.t(k)) * CL_half * ph.asDiagonal() * herm_sqrt(sc.corr.C_R_of(k), "C_R");
        f.C.push_back(half * half.adjoint());
        f.C_half.push_back(std::move(half));
    }
    return f;
}

ChannelSample sample_channel(const ChannelFactors& f, RngStream& rng)
{
    ChannelSample cs;
    cs.X.resize(f.M, f.L);
    cs.W.resize(f.M, f.K);
    cs.Y.resize(f.L, f.K);
    // fixed draw order: X column-major, then w_k, then y_k per user
    for (int j = 0; j < f.L; ++j)
        for (int i = 0; i < f.M; ++i)
            cs.X(i, j) = rng.cn(1.0 / f.M);
    for (int k = 0; k < f.K; ++k) {
        for (int i = 0; i < f.M; ++i) cs.W(i, k) = rng.cn(1.0 / f.M);
        for (int i = 0; i < f.L; ++i) cs.Y(i, k) = rng.cn(1.0 / f.L);
    }
    cs.H.resize(f.M, f.K);
    CMat RX = f.R_half * cs.X;
    for (int k = 0; k < f.K; ++k)
        cs.H.col(k) = f.F_half[k] * cs.W.col(k) + RX * (f.C_half[k] * cs.Y.col(k));
    return cs;
}

ChannelSample sample_channel(const Scenario& sc, const PortSelection& s, const PhaseShifts& phi, RngStream& rng)
{
    return sample_channel(channel_factors(sc, s, phi), rng);
}

}  // namespace fasris
