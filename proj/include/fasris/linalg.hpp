// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fasris {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Error taxonomy. Every failure surfaced by the library derives from Error so
// the CLI can turn it into a structured diagnostic.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConstraintError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct PrecisionError : Error { using Error::Error; };
struct FeasibilityError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };

struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, double res, int iters)
        : Error(what), residual(res), iterations(iters) {}
    double residual;
    int iterations;
};

inline constexpr double kPsdTol = 1e-10;

// Smallest eigenvalue of the Hermitian part.
double min_eigenvalue(const CMat& A);

// Throws DomainError unless A is Hermitian (to tol relative to its norm) and
// its smallest eigenvalue is >= -kPsdTol.
void require_psd(const CMat& A, const std::string& name);

// Principal square root through the Hermitian eigendecomposition. Eigenvalues
// in [-kPsdTol, 0) are clipped to zero, anything lower is a DomainError.
CMat herm_sqrt(const CMat& A, const std::string& name = "matrix");

// Inverse of a Hermitian positive definite matrix (Cholesky, LU fallback).
CMat inv_hpd(const CMat& A);

// Re Tr(A B) in O(n^2).
inline double trace_prod(const CMat& A, const CMat& B)
{
    return (A.array() * B.transpose().array()).sum().real();
}

inline double trace_re(const CMat& A) { return A.trace().real(); }

inline bool is_zero(const CMat& A) { return A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0; }

}  // namespace fasris
