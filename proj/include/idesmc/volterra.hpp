#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "idesmc/closed_loop.hpp"
#include "idesmc/design.hpp"
#include "idesmc/kernel.hpp"
#include "idesmc/trajectory.hpp"

namespace idesmc {

/// Second-kind Volterra problem u(t) = g(t) + int_{t*}^{t} K(t,tau) u(tau) dtau
/// on t* <= tau <= t <= t1.
struct VolterraProblem {
    std::function<MatrixXd(double, double)> K;  // (s, tau) -> m x m
    std::function<VectorXd(double)> g;
    double t_star = 0.0;
    double t1 = 1.0;
    double M_K = 0.0;  // kernel magnitude bound, >= sampled sup ||K||
    int m = 1;
    bool stationary = false;                // K(s,tau) = K(s - tau)
    std::function<MatrixXd(double)> K_lag;  // set when stationary
};

namespace detail {
/// Cache of kernel values on the solver grid. Stationary problems store one
/// matrix per lag; dense problems evaluate on demand.
class KernelGrid {
public:
    KernelGrid(const VolterraProblem& p, const std::vector<double>& ts) : p_(p), ts_(ts) {
        if (p.stationary) {
            lags_.reserve(ts.size());
            for (size_t j = 0; j < ts.size(); ++j) lags_.push_back(p.K_lag(ts[j] - ts[0]));
        }
    }
    MatrixXd operator()(size_t j, size_t i) const {
        return p_.stationary ? lags_[j - i] : p_.K(ts_[j], ts_[i]);
    }

private:
    const VolterraProblem& p_;
    const std::vector<double>& ts_;
    std::vector<MatrixXd> lags_;
};

inline std::vector<double> grid(double t_star, double t1, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("volterra: h must be > 0");
    const long n = static_cast<long>(std::llround((t1 - t_star) / h));
    std::vector<double> ts(static_cast<size_t>(n) + 1);
    for (long k = 0; k <= n; ++k) ts[static_cast<size_t>(k)] = t_star + k * h;
    return ts;
}
}  // namespace detail

/// Forward-substitution solver on the composite trapezoid discretization:
///   (I - h/2 K_jj) u_j = g_j + h (K_j0 u_0 / 2 + sum_{0<i<j} K_ji u_i), u_0 = g_0.
/// Independent of the Neumann path.
struct GridFunction {
    std::vector<double> times;
    std::vector<VectorXd> values;
};

inline GridFunction direct_volterra_solve(const VolterraProblem& prob, double h) {
    const auto ts = detail::grid(prob.t_star, prob.t1, h);
    const detail::KernelGrid K(prob, ts);
    const MatrixXd I = MatrixXd::Identity(prob.m, prob.m);
    GridFunction out;
    out.times = ts;
    out.values.resize(ts.size());
    out.values[0] = prob.g(ts[0]);
    for (size_t j = 1; j < ts.size(); ++j) {
        VectorXd rhs = prob.g(ts[j]);
        VectorXd acc = 0.5 * (K(j, 0) * out.values[0]);
        for (size_t i = 1; i < j; ++i) acc.noalias() += K(j, i) * out.values[i];
        rhs += h * acc;
        const MatrixXd lhs = I - 0.5 * h * K(j, j);
        out.values[j] = prob.m == 1 ? VectorXd(rhs / lhs(0, 0)) : VectorXd(lhs.lu().solve(rhs));
    }
    return out;
}

struct NeumannResult {
    std::vector<double> times;
    std::vector<VectorXd> u;              // sum_{i=0}^{n_terms} K^i g on the grid
    std::vector<double> term_sup;         // sup-norm of each computed series term
    double sup_g = 0.0;
    double next_term_bound = 0.0;         // M^{n+1} L^{n+1}/(n+1)! * sup||g||
    double tail_bound = 0.0;              // sum_{i>n} (M L)^i / i! * sup||g||
};

/// Truncated Neumann series sum_{i=0}^{n_terms} K^i g, with K applied by the
/// trapezoid rule. Reports the factorial truncation bounds from
/// ||K^n|| <= M^n (t1-t*)^n / n!.
inline NeumannResult neumann_solve(const VolterraProblem& prob, int n_terms, double h) {
    if (n_terms < 1) throw std::invalid_argument("neumann_solve: n_terms must be >= 1");
    const auto ts = detail::grid(prob.t_star, prob.t1, h);
    const detail::KernelGrid K(prob, ts);
    NeumannResult res;
    res.times = ts;
    std::vector<VectorXd> term(ts.size());
    for (size_t j = 0; j < ts.size(); ++j) term[j] = prob.g(ts[j]);
    res.u = term;
    auto sup_of = [](const std::vector<VectorXd>& v) {
        double s = 0.0;
        for (const auto& x : v) s = std::max(s, x.norm());
        return s;
    };
    res.sup_g = sup_of(term);
    res.term_sup.push_back(res.sup_g);
    for (int it = 1; it <= n_terms; ++it) {
        std::vector<VectorXd> next(ts.size());
        next[0] = VectorXd::Zero(prob.m);
        for (size_t j = 1; j < ts.size(); ++j) {
            VectorXd acc = 0.5 * (K(j, 0) * term[0] + K(j, j) * term[j]);
            for (size_t i = 1; i < j; ++i) acc.noalias() += K(j, i) * term[i];
            next[j] = h * acc;
        }
        term = std::move(next);
        for (size_t j = 0; j < ts.size(); ++j) res.u[j] += term[j];
        res.term_sup.push_back(sup_of(term));
    }
    const double L = prob.t1 - prob.t_star;
    auto pow_fact = [](double a, int i) {
        double v = 1.0;
        for (int k = 1; k <= i; ++k) v *= a / k;
        return v;
    };
    res.next_term_bound = pow_fact(prob.M_K * L, n_terms + 1) * res.sup_g;
    double partial = 0.0;
    for (int i = 0; i <= n_terms; ++i) partial += pow_fact(prob.M_K * L, i);
    res.tail_bound = std::max(0.0, std::exp(prob.M_K * L) - partial) * res.sup_g;
    return res;
}

/// Smallest n whose factorial tail bound drops below tol * sup||g||.
inline int default_n_terms(double M_K, double length, double tol = 1e-10, int cap = 80) {
    const double a = M_K * length;
    double partial = 1.0, pf = 1.0;
    for (int n = 1; n <= cap; ++n) {
        pf *= a / n;
        partial += pf;
        if (std::exp(a) - partial <= tol) return n;
    }
    return cap;
}

/// Sliding-phase Volterra problem for a linear IDE plant, assembled from a
/// simulated trajectory: K(s,tau) = -(CB)^{-1} C Phi(s,tau) Bt and
/// g(t) = -(CB)^{-1}(C p(t) + g~(t)), with g~ the reaching-phase history
/// integral accumulated by the rectangle rule from the recorded inputs.
struct SlidingVolterra {
    VolterraProblem problem;
    double T = 0.0;       // reaching time used for the split
    size_t k_T = 0;       // grid index of T on the trajectory grid
};

inline SlidingVolterra build_sliding_volterra(const LinearIdePlant& plant,
                                              const Trajectory& traj, const Signal& gamma,
                                              double T) {
    plant.validate();
    if (traj.inputs.empty() || traj.outputs.empty())
        throw std::invalid_argument("build_sliding_volterra: trajectory must record u and y");
    const double h = traj.h;
    const size_t kT = static_cast<size_t>(std::llround((T - traj.t0) / h));
    if (kT >= traj.size())
        throw std::invalid_argument("build_sliding_volterra: T outside the trajectory");

    // sliding-phase sanity: y must stay within the chattering band after T
    double state_scale = 0.0;
    for (const auto& x : traj.states) state_scale = std::max(state_scale, x.norm());
    const double band = 10.0 * h * plant.C.operatorNorm() * state_scale;
    for (size_t k = kT; k < traj.size(); ++k)
        if (traj.outputs[k].norm() > band)
            throw std::runtime_error("build_sliding_volterra: trajectory not in sliding after T");

    const MatrixXd CBinv = plant.CB().inverse();
    const Kernel kernel = plant.kernel;
    const MatrixXd C = plant.C, Bt = plant.Btilde;

    // recorded reaching-phase samples w_i = u_i + gamma_i, i < k_T
    std::vector<VectorXd> w(kT);
    for (size_t i = 0; i < kT; ++i)
        w[i] = VectorXd(traj.inputs[i].array() + gamma(traj.times[i]));

    // g on the sliding grid, rectangle rule over [t0, T)
    const size_t mgrid = traj.size() - kT;
    std::vector<VectorXd> gvals(mgrid);
    const bool stationary = kernel.is_stationary();
    std::vector<MatrixXd> lagCPB;  // C Phi(lag h) Bt
    if (stationary && !kernel.is_zero()) {
        lagCPB.resize(traj.size());
        for (size_t lag = 0; lag < traj.size(); ++lag)
            lagCPB[lag] = C * kernel.eval(traj.t0 + lag * h, traj.t0) * Bt;
    }
    const Signal p = plant.p;
    for (size_t j = 0; j < mgrid; ++j) {
        const size_t k = kT + j;
        VectorXd acc = VectorXd::Zero(plant.m());
        if (!kernel.is_zero()) {
            for (size_t i = 0; i < kT; ++i) {
                if (stationary)
                    acc.noalias() += lagCPB[k - i] * w[i];
                else
                    acc.noalias() += C * kernel.eval(traj.times[k], traj.times[i]) * Bt * w[i];
            }
            acc *= h;
        }
        gvals[j] = -CBinv * (VectorXd::Constant(plant.m(), p(traj.times[k])) + acc);
    }

    SlidingVolterra sv;
    sv.T = traj.times[kT];
    sv.k_T = kT;
    sv.problem.m = plant.m();
    sv.problem.t_star = traj.times[kT];
    sv.problem.t1 = traj.times.back();
    const double t_star = sv.problem.t_star;
    sv.problem.g = [gvals, t_star, h](double t) {
        const size_t j = static_cast<size_t>(std::llround((t - t_star) / h));
        return gvals.at(j);
    };
    if (!kernel.is_zero()) {
        sv.problem.K = [CBinv, C, Bt, kernel](double s, double tau) {
            return MatrixXd(-CBinv * C * kernel.eval(s, tau) * Bt);
        };
        if (stationary) {
            sv.problem.stationary = true;
            const double t0 = traj.t0;
            sv.problem.K_lag = [CBinv, C, Bt, kernel, t0](double lag) {
                return MatrixXd(-CBinv * C * kernel.eval(t0 + lag, t0) * Bt);
            };
        }
        double MK = 0.0;
        const size_t nlag = static_cast<size_t>((sv.problem.t1 - t_star) / h) + 1;
        for (size_t lag = 0; lag < nlag; ++lag) {
            const MatrixXd Kv = stationary
                                    ? MatrixXd(-CBinv * lagCPB[lag])
                                    : sv.problem.K(sv.problem.t1, sv.problem.t1 - lag * h);
            MK = std::max(MK, Kv.operatorNorm());
        }
        sv.problem.M_K = MK;
    } else {
        sv.problem.K = [m = plant.m()](double, double) { return MatrixXd(MatrixXd::Zero(m, m)); };
        sv.problem.M_K = 0.0;
    }
    return sv;
}

/// Residual of the sliding algebraic identity, evaluated on the grid with the
/// integrator's rectangle rule:
///   r_k = CB u~_k + C p(t_k) + h sum_{i<=k} C Phi(t_k,t_i) Bt w_i,
/// where w_i is the recorded (u_i + gamma_i) before T and the supplied u~
/// afterwards. Should be O(h) through the sliding phase.
inline std::vector<double> sliding_residual(const Trajectory& traj, const LinearIdePlant& plant,
                                            const GridFunction& u_eq, const Signal& gamma,
                                            size_t k_T) {
    const double h = traj.h;
    const MatrixXd C = plant.C, Bt = plant.Btilde, CB = plant.CB();
    const Kernel& kernel = plant.kernel;
    std::vector<VectorXd> w(traj.size());
    for (size_t i = 0; i < traj.size(); ++i) {
        if (i < k_T)
            w[i] = VectorXd(traj.inputs[i].array() + gamma(traj.times[i]));
        else
            w[i] = u_eq.values.at(i - k_T);
    }
    const bool stationary = kernel.is_stationary();
    std::vector<MatrixXd> lagCPB;
    if (!kernel.is_zero() && stationary) {
        lagCPB.resize(traj.size());
        for (size_t lag = 0; lag < traj.size(); ++lag)
            lagCPB[lag] = C * kernel.eval(traj.t0 + lag * h, traj.t0) * Bt;
    }
    std::vector<double> res(traj.size() - k_T);
    const Signal p = plant.p;
    for (size_t k = k_T; k < traj.size(); ++k) {
        VectorXd acc = VectorXd::Zero(plant.m());
        if (!kernel.is_zero()) {
            for (size_t i = 0; i <= k; ++i) {
                if (stationary)
                    acc.noalias() += lagCPB[k - i] * w[i];
                else
                    acc.noalias() += C * kernel.eval(traj.times[k], traj.times[i]) * Bt * w[i];
            }
            acc *= h;
        }
        const VectorXd r =
            CB * w[k] + VectorXd::Constant(plant.m(), p(traj.times[k])) + acc;
        res[k - k_T] = r.norm();
    }
    return res;
}

}  // namespace idesmc
