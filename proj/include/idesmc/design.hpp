#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "idesmc/field.hpp"
#include "idesmc/kernel.hpp"
#include "idesmc/linalg.hpp"
#include "idesmc/signal.hpp"

namespace idesmc {

/// Linear distributed-input-delay plant
///   x' = A x + B (u + gamma) + p(t) + int Phi(t,tau) Bt (u(tau) + gamma(tau)) dtau,
///   y = C x, det(CB) != 0.
struct LinearIdePlant {
    MatrixXd A, B, Btilde, C;
    Kernel kernel = Kernel::zero(0);
    Signal p = Signal::zero();
    double gamma_bar = 0.0;  // matched-perturbation bound
    double p_bar = 0.0;      // mismatched bound

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }

    MatrixXd CB() const { return C * B; }

    void validate() const {
        if (A.rows() != A.cols()) throw std::invalid_argument("plant: A must be square");
        if (B.rows() != A.rows() || Btilde.rows() != A.rows() || C.cols() != A.rows() ||
            B.cols() != Btilde.cols() || C.rows() != B.cols())
            throw std::invalid_argument("plant: inconsistent dimensions");
        const MatrixXd cb = CB();
        const double scale = std::max(1.0, cb.cwiseAbs().maxCoeff());
        if (std::abs(cb.determinant()) <= 1e-12 * scale)
            throw std::invalid_argument("plant: CB is singular");
        if (gamma_bar < 0.0 || p_bar < 0.0)
            throw std::invalid_argument("plant: perturbation bounds must be >= 0");
    }
};

struct DesignResult {
    MatrixXd Lambda;
    MatrixXd P;
    double M = 0.0;
    double rho = 0.0;
    double delta = 0.0;
    double T_max = 0.0;
    bool feasible = false;
    bool rho_overridden = false;
    std::string diagnostics;
};

/// Lambda with CA = Lambda C (least squares via the pseudoinverse); fails when
/// the residual exceeds 1e-10 ||CA||.
inline std::optional<MatrixXd> extract_lambda(const MatrixXd& A, const MatrixXd& C) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(C);
    if (cod.rank() < C.rows())
        throw std::invalid_argument("extract_lambda: C is row rank deficient");
    const MatrixXd CA = C * A;
    const MatrixXd Lambda = CA * cod.pseudoInverse();
    const double resid = (CA - Lambda * C).norm();
    if (resid > 1e-10 * std::max(1e-300, CA.norm())) return std::nullopt;
    return Lambda;
}

/// P > 0 with Lambda'P + P Lambda <= 0. Returns I when Lambda + Lambda' <= 0;
/// otherwise solves the Lyapunov equation with Q = I for Hurwitz Lambda;
/// otherwise verifies a user-supplied candidate. Verification thresholds:
/// min eig(P) > 0 and max eig(Lambda'P + P Lambda) <= 1e-10.
inline std::optional<MatrixXd> solve_lmi(const MatrixXd& Lambda,
                                         std::optional<MatrixXd> user_P = std::nullopt) {
    auto verify = [&](const MatrixXd& P) {
        return min_sym_eig(P) > 0.0 &&
               max_sym_eig(Lambda.transpose() * P + P * Lambda) <= 1e-10;
    };
    if (user_P) return verify(*user_P) ? user_P : std::nullopt;
    const int m = static_cast<int>(Lambda.rows());
    const MatrixXd I = MatrixXd::Identity(m, m);
    if (max_sym_eig(Lambda + Lambda.transpose()) <= 1e-10) return I;
    if (Eigen::EigenSolver<MatrixXd>(Lambda).eigenvalues().real().maxCoeff() < 0.0) {
        try {
            const MatrixXd P = solve_lyapunov(Lambda, I);
            if (verify(P)) return P;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

/// Closed-form worst-case gain
///   rho = (sqrt(||P||)(||CB|| gamma_bar + ||C|| p_bar + M ||CB|| gamma_bar) + delta)/(1 - M).
/// Requires M < 1; the M >= 1 case must be resolved by an explicit override.
inline double design_gain(const LinearIdePlant& plant, const MatrixXd& P, double M,
                          double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("design_gain: delta must be > 0");
    if (M >= 1.0)
        throw std::runtime_error(
            "design_gain: memory bound M >= 1, gain formula infeasible (override rho)");
    const double normP = P.operatorNorm();
    const double nCB = plant.CB().operatorNorm();
    const double nC = plant.C.operatorNorm();
    return (std::sqrt(normP) *
                (nCB * plant.gamma_bar + nC * plant.p_bar + M * nCB * plant.gamma_bar) +
            delta) /
           (1.0 - M);
}

/// Reaching-time bound T_max = ||C x0||_P / delta.
inline double reaching_time_bound(const VectorXd& x0, const MatrixXd& C, const MatrixXd& P,
                                  double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("reaching_time_bound: delta must be > 0");
    return weighted_norm(C * x0, P) / delta;
}

/// Projector on Cx = 0: Pi = I - B (CB)^{-1} C, with Pi^2 = Pi, Pi B = 0, C Pi = 0.
inline MatrixXd projector(const MatrixXd& B, const MatrixXd& C) {
    const MatrixXd CB = C * B;
    if (std::abs(CB.determinant()) < 1e-12)
        throw std::invalid_argument("projector: CB is singular");
    const int n = static_cast<int>(B.rows());
    return MatrixXd::Identity(n, n) - B * CB.inverse() * C;
}

/// Unit-vector SMC feedback u(t,y) = -rho (CB)^{-1} y/||y||_P, u(0) = 0.
inline UnitVectorLaw smc_feedback(double rho, const MatrixXd& CB, const MatrixXd& P) {
    if (!(rho > 0.0)) throw std::invalid_argument("smc_feedback: rho must be > 0");
    if (std::abs(CB.determinant()) < 1e-12)
        throw std::invalid_argument("smc_feedback: CB is singular");
    if (min_sym_eig(P) <= 0.0) throw std::invalid_argument("smc_feedback: P must be SPD");
    return UnitVectorLaw{rho, CB, P};
}

/// Full design pipeline: Lambda extraction, LMI, memory bound on the grid,
/// gain (or explicit override when M >= 1), reaching-time bound.
inline DesignResult run_design(const LinearIdePlant& plant, const VectorXd& x0, double delta,
                               double t0, double horizon, double h,
                               std::optional<double> rho_override = std::nullopt) {
    plant.validate();
    DesignResult r;
    r.delta = delta;
    std::ostringstream diag;

    const auto lambda = extract_lambda(plant.A, plant.C);
    if (!lambda) {
        r.feasible = false;
        r.diagnostics = "no Lambda with CA = Lambda C";
        return r;
    }
    r.Lambda = *lambda;

    const auto P = solve_lmi(r.Lambda);
    if (!P) {
        r.feasible = false;
        r.diagnostics = "LMI infeasible for extracted Lambda";
        return r;
    }
    r.P = *P;

    const MatrixXd R = plant.Btilde * plant.CB().inverse();
    r.M = plant.kernel.is_zero()
              ? 0.0
              : memory_bound(plant.kernel, plant.C, R, r.P, t0, horizon, h);

    if (r.M >= 1.0) {
        if (rho_override) {
            r.rho = *rho_override;
            r.rho_overridden = true;
            r.feasible = false;
            diag << "memory bound M = " << r.M
                 << " >= 1: gain formula infeasible, rho supplied by override";
        } else {
            r.feasible = false;
            r.diagnostics = "memory bound M >= 1 and no rho override supplied";
            return r;
        }
    } else {
        r.rho = rho_override ? *rho_override : design_gain(plant, r.P, r.M, delta);
        r.rho_overridden = rho_override.has_value();
        r.feasible = true;
    }
    r.T_max = reaching_time_bound(x0, plant.C, r.P, delta);
    r.diagnostics = diag.str();
    return r;
}

}  // namespace idesmc
