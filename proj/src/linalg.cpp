// SPDX-License-Identifier: Apache-2.0
#include "fasris/linalg.hpp"

#include <cmath>

namespace fasris {

double min_eigenvalue(const CMat& A)
{
    CMat H = 0.5 * (A + A.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void require_psd(const CMat& A, const std::string& name)
{
    if (A.rows() != A.cols())
        throw DomainError(name + ": not square");
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw DomainError(name + ": not Hermitian");
    double lo = min_eigenvalue(A);
    if (lo < -kPsdTol)
        throw DomainError(name + ": min eigenvalue " + std::to_string(lo) + " below -1e-10");
}

CMat herm_sqrt(const CMat& A, const std::string& name)
{
    CMat H = 0.5 * (A + A.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    RVec w = es.eigenvalues();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < -kPsdTol)
            throw DomainError(name + ": square root of a matrix with eigenvalue " + std::to_string(w(i)));
        w(i) = std::sqrt(std::max(w(i), 0.0));
    }
    const CMat& V = es.eigenvectors();
    return V * w.asDiagonal() * V.adjoint();
}

CMat inv_hpd(const CMat& A)
{
    const Eigen::Index n = A.rows();
    Eigen::LLT<CMat> llt(A);
    CMat X;
    if (llt.info() == Eigen::Success) {
        X = llt.solve(CMat::Identity(n, n));
    } else {
        X = A.partialPivLu().solve(CMat::Identity(n, n));
    }
    if (!X.allFinite())
        throw NumericalError("singular matrix in resolvent inverse");
    return X;
}

}  // namespace fasris
