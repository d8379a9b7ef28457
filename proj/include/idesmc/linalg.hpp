#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace idesmc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Weighted Euclidean norm ||y||_P = sqrt(y' P y), P symmetric positive definite.
inline double weighted_norm(const VectorXd& y, const MatrixXd& P) {
    if (P.rows() != y.size() || P.cols() != y.size())
        throw std::invalid_argument("weighted_norm: dimension mismatch");
    return std::sqrt(y.dot(P * y));
}

/// Symmetric square root of an SPD matrix (eigendecomposition, small sizes).
inline MatrixXd spd_sqrt(const MatrixXd& P) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("spd_sqrt: matrix is not positive definite");
    return es.operatorSqrt();
}

/// Matrix norm induced by ||.||_P: the largest singular value of P^{1/2} Q P^{-1/2}.
inline double induced_norm(const MatrixXd& Q, const MatrixXd& P) {
    if (Q.rows() != P.rows() || Q.cols() != P.cols())
        throw std::invalid_argument("induced_norm: Q must match P");
    const MatrixXd S = spd_sqrt(P);
    const MatrixXd T = S * Q * S.inverse();
    Eigen::JacobiSVD<MatrixXd> svd(T);
    return svd.singularValues()(0);
}

/// P-weighted norm of a (possibly rectangular) map y -> Qy from R^p into the
/// P-weighted output space: sup ||Qv||_P / ||v||  (Euclidean on the input side).
inline double mixed_induced_norm(const MatrixXd& Q, const MatrixXd& P) {
    const MatrixXd S = spd_sqrt(P);
    Eigen::JacobiSVD<MatrixXd> svd(S * Q);
    return svd.singularValues()(0);
}

/// Solve A'P + PA = -Q for symmetric P via the vectorized linear system.
/// Intended for the m <= 2 designs; works for any small m with unique solution.
inline MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
    const int m = static_cast<int>(A.rows());
    if (A.cols() != m || Q.rows() != m || Q.cols() != m)
        throw std::invalid_argument("solve_lyapunov: square matrices required");
    const MatrixXd I = MatrixXd::Identity(m, m);
    MatrixXd K(m * m, m * m);
    // vec(A'P + PA) = (I (x) A' + A' (x) I) vec(P)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            K.block(i * m, j * m, m, m) =
                (i == j ? A.transpose() : MatrixXd::Zero(m, m)) + A(j, i) * I;
    Eigen::VectorXd q(m * m);
    for (int j = 0; j < m; ++j) q.segment(j * m, m) = -Q.col(j);
    Eigen::FullPivLU<MatrixXd> lu(K);
    if (!lu.isInvertible())
        throw std::runtime_error("solve_lyapunov: singular Lyapunov operator");
    const VectorXd p = lu.solve(q);
    MatrixXd P(m, m);
    for (int j = 0; j < m; ++j) P.col(j) = p.segment(j * m, m);
    return 0.5 * (P + P.transpose());
}

inline double max_sym_eig(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
    return es.eigenvalues().maxCoeff();
}

inline double min_sym_eig(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
    return es.eigenvalues().minCoeff();
}

}  // namespace idesmc
