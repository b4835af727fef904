// SPDX-License-Identifier: Apache-2.0
//
// Forward-mode (one tangent direction) algebra used to differentiate the
// fixed-point maps and the second-order SINR code without duplicating it.
// Code templated on an algebra policy runs either on plain values or on
// (value, tangent) pairs.
#pragma once

#include "fasris/linalg.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>

namespace fasris::ad {

using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 1, 1>>;

inline Dual make(double v, double d) { return Dual(v, Eigen::Matrix<double, 1, 1>(d)); }
inline double val(double x) { return x; }
inline double val(const Dual& x) { return x.value(); }
inline double tan(double) { return 0.0; }
inline double tan(const Dual& x) { return x.derivatives()(0); }

// Complex matrix with a tangent. `active == false` means the tangent is
// identically zero; products skip the dead half.
struct DMat {
    CMat v;
    CMat d;
    bool active = false;

    DMat() = default;
    explicit DMat(CMat value) : v(std::move(value)) {}
    DMat(CMat value, CMat tangent) : v(std::move(value)), d(std::move(tangent)), active(true) {}

    Eigen::Index rows() const { return v.rows(); }
    Eigen::Index cols() const { return v.cols(); }
    CMat tangent() const { return active ? d : CMat::Zero(v.rows(), v.cols()); }

    static DMat Identity(Eigen::Index n, Eigen::Index) { return DMat(CMat::Identity(n, n)); }
    static DMat Zero(Eigen::Index r, Eigen::Index c) { return DMat(CMat::Zero(r, c)); }
};

inline DMat operator+(const DMat& a, const DMat& b)
{
    if (!a.active && !b.active) return DMat(a.v + b.v);
    return DMat(a.v + b.v, a.tangent() + b.tangent());
}
inline DMat operator-(const DMat& a, const DMat& b)
{
    if (!a.active && !b.active) return DMat(a.v - b.v);
    return DMat(a.v - b.v, a.tangent() - b.tangent());
}
inline DMat operator*(const DMat& a, const DMat& b)
{
    if (!a.active && !b.active) return DMat(a.v * b.v);
    CMat t;
    if (a.active && b.active) t = a.d * b.v + a.v * b.d;
    else if (a.active) t = a.d * b.v;
    else t = a.v * b.d;
    return DMat(a.v * b.v, std::move(t));
}
inline DMat operator*(double s, const DMat& a)
{
    return a.active ? DMat(s * a.v, s * a.d) : DMat(s * a.v);
}
inline DMat operator*(const Dual& s, const DMat& a)
{
    const double sv = s.value(), sd = s.derivatives()(0);
    if (!a.active && sd == 0.0) return DMat(sv * a.v);
    CMat t = sd * a.v;
    if (a.active) t += sv * a.d;
    return DMat(sv * a.v, std::move(t));
}
inline DMat& operator+=(DMat& a, const DMat& b) { return a = a + b; }

inline DMat inv_hpd(const DMat& a)
{
    CMat X = fasris::inv_hpd(a.v);
    if (!a.active) return DMat(std::move(X));
    CMat t = -(X * a.d * X);
    return DMat(std::move(X), std::move(t));
}

inline Dual trace_re(const DMat& a)
{
    return make(a.v.trace().real(), a.active ? a.d.trace().real() : 0.0);
}

inline Dual trace_prod(const DMat& a, const DMat& b)
{
    double v = fasris::trace_prod(a.v, b.v);
    double d = 0.0;
    if (a.active) d += fasris::trace_prod(a.d, b.v);
    if (b.active) d += fasris::trace_prod(a.v, b.d);
    return make(v, d);
}

}  // namespace fasris::ad

namespace fasris {

// Algebra policies. Templated code uses S for real scalars, CM for complex
// matrices and RM/RV for small real systems.
struct PlainAlg {
    using S = double;
    using CM = CMat;
    using RM = RMat;
    using RV = RVec;
    static CM lift(const CMat& a) { return a; }
    static S lift(double a) { return a; }
};

struct DualAlg {
    using S = ad::Dual;
    using CM = ad::DMat;
    using RM = Eigen::Matrix<ad::Dual, Eigen::Dynamic, Eigen::Dynamic>;
    using RV = Eigen::Matrix<ad::Dual, Eigen::Dynamic, 1>;
    static CM lift(const CMat& a) { return CM(a); }
    static S lift(double a) { return S(a); }
};

inline CMat inv_hpd_any(const CMat& a) { return inv_hpd(a); }
inline ad::DMat inv_hpd_any(const ad::DMat& a) { return ad::inv_hpd(a); }
inline double trace_prod_any(const CMat& a, const CMat& b) { return trace_prod(a, b); }
inline ad::Dual trace_prod_any(const ad::DMat& a, const ad::DMat& b) { return ad::trace_prod(a, b); }
inline double trace_any(const CMat& a) { return trace_re(a); }
inline ad::Dual trace_any(const ad::DMat& a) { return ad::trace_re(a); }

}  // namespace fasris
