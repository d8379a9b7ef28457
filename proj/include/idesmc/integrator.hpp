#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "idesmc/kernel.hpp"
#include "idesmc/signal.hpp"
#include "idesmc/trajectory.hpp"

namespace idesmc {

using StateFn = std::function<VectorXd(double, const VectorXd&)>;

enum class HistoryMode { kFullHistory, kExponentialRecurrence };

/// How a value of a set-valued feedback is selected on the discontinuity set.
/// The pointwise policy (sign(0) = 0) is realized inside the feedback laws;
/// explicit selections for non-uniqueness studies are wired directly into the
/// f / f_tilde closures by the scenario code.
enum class SelectionPolicy { kPointwiseSignZero };

struct SimConfig {
    double t0 = 0.0;
    double horizon = 1.0;
    double h = 1e-3;
    VectorXd x0;
    SelectionPolicy selection_policy = SelectionPolicy::kPointwiseSignZero;
    HistoryMode history_mode = HistoryMode::kFullHistory;

    long steps() const {
        if (!(h > 0.0)) throw std::invalid_argument("SimConfig: h must be > 0");
        if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon must be > 0");
        return static_cast<long>(std::floor(horizon / h + 1e-12));
    }
};

struct NonfiniteStateError : std::runtime_error {
    long step;
    explicit NonfiniteStateError(long k)
        : std::runtime_error("state left the finite range at step " + std::to_string(k)),
          step(k) {}
};

/// Right-hand side and observers for one IDE simulation. `input` and `output`
/// are optional recorders; `input` must return the value the closed-loop f
/// actually applies at (t, x).
struct IdeProblem {
    StateFn f;
    Kernel kernel = Kernel::zero(0);
    StateFn f_tilde;
    StateFn input;
    std::function<VectorXd(const VectorXd&)> output;
};

/// Explicit Euler step for the IDE with the rectangle-rule memory sum
///     x_{k+1} = x_k + h f(t_k, x_k) + h I_k,
///     I_k = h sum_{i=0}^{k} Phi(t_k, t_i) f~(t_i, x_i).
/// Full-history mode evaluates the sum as written (lag-cached for stationary
/// kernels); exponential-recurrence mode maintains per-term states
/// z_{k+1} = e^{-mu h}(z_k + h c f~_k) and reproduces the same sum.
inline Trajectory euler_ide(const IdeProblem& prob, const SimConfig& cfg) {
    const long n = cfg.steps();
    const int nx = static_cast<int>(cfg.x0.size());
    const bool has_kernel = !prob.kernel.is_zero();
    if (has_kernel && !prob.f_tilde)
        throw std::invalid_argument("euler_ide: f_tilde required with a nonzero kernel");
    if (cfg.history_mode == HistoryMode::kExponentialRecurrence && has_kernel &&
        !prob.kernel.is_exponential_series())
        throw std::invalid_argument(
            "euler_ide: exponential-recurrence history needs an exponential_series kernel");

    Trajectory tr;
    tr.t0 = cfg.t0;
    tr.h = cfg.h;
    tr.times.reserve(static_cast<size_t>(n) + 1);
    tr.states.reserve(static_cast<size_t>(n) + 1);

    std::vector<VectorXd> ft_hist;  // cached f~(t_i, x_i)
    if (has_kernel) ft_hist.reserve(static_cast<size_t>(n) + 1);

    // lag cache for stationary kernels on the uniform grid
    const bool stationary = has_kernel && prob.kernel.is_stationary() &&
                            cfg.history_mode == HistoryMode::kFullHistory;
    std::vector<MatrixXd> lag;
    if (stationary) lag.reserve(static_cast<size_t>(n) + 1);

    // exponential-recurrence states, one per series term
    std::vector<VectorXd> zrec;
    std::vector<double> decay;
    if (cfg.history_mode == HistoryMode::kExponentialRecurrence && has_kernel) {
        const auto& terms = prob.kernel.series_terms();
        zrec.assign(terms.size(), VectorXd::Zero(nx));
        decay.resize(terms.size());
        for (size_t j = 0; j < terms.size(); ++j) decay[j] = std::exp(-terms[j].mu * cfg.h);
    }

    VectorXd x = cfg.x0;
    const double h = cfg.h;
    for (long k = 0; k <= n; ++k) {
        const double t = cfg.t0 + k * h;
        if (!x.allFinite()) throw NonfiniteStateError(k);
        tr.times.push_back(t);
        tr.states.push_back(x);
        if (prob.input) tr.inputs.push_back(prob.input(t, x));
        if (prob.output) tr.outputs.push_back(prob.output(x));
        if (k == n) break;

        VectorXd memory = VectorXd::Zero(nx);
        if (has_kernel) {
            const VectorXd ftk = prob.f_tilde(t, x);
            ft_hist.push_back(ftk);
            if (cfg.history_mode == HistoryMode::kFullHistory) {
                if (stationary) {
                    lag.push_back(prob.kernel.eval(t, cfg.t0));  // phi(k h)
                    for (long i = 0; i <= k; ++i)
                        memory.noalias() += lag[static_cast<size_t>(k - i)] *
                                            ft_hist[static_cast<size_t>(i)];
                } else {
                    for (long i = 0; i <= k; ++i)
                        memory.noalias() += prob.kernel.eval(t, cfg.t0 + i * h) *
                                            ft_hist[static_cast<size_t>(i)];
                }
                memory *= h;
            } else {
                const auto& terms = prob.kernel.series_terms();
                for (size_t j = 0; j < terms.size(); ++j)
                    memory += zrec[j] + h * (terms[j].coef * ftk);
                for (size_t j = 0; j < terms.size(); ++j)
                    zrec[j] = decay[j] * (zrec[j] + h * (terms[j].coef * ftk));
            }
        }
        x = x + h * prob.f(t, x) + h * memory;
    }
    return tr;
}

/// Independent oracle for exponential-series kernels: the IDE is equivalent to
/// the augmented ODE  z_i' = -mu_i z_i + c_i f~(t, x),  x' = f + sum_i z_i,
/// integrated here with the same plain Euler step. Returns the x-projection.
inline Trajectory augment_exponential(const IdeProblem& prob, const SimConfig& cfg) {
    if (!prob.kernel.is_zero() && !prob.kernel.is_exponential_series())
        throw std::invalid_argument("augment_exponential: kernel must be exponential_series");
    const long n = cfg.steps();
    const int nx = static_cast<int>(cfg.x0.size());
    const auto terms = prob.kernel.is_zero() ? std::vector<ExpTerm>{} : prob.kernel.series_terms();

    Trajectory tr;
    tr.t0 = cfg.t0;
    tr.h = cfg.h;
    VectorXd x = cfg.x0;
    std::vector<VectorXd> z(terms.size(), VectorXd::Zero(nx));
    for (long k = 0; k <= n; ++k) {
        const double t = cfg.t0 + k * cfg.h;
        if (!x.allFinite()) throw NonfiniteStateError(k);
        tr.times.push_back(t);
        tr.states.push_back(x);
        if (prob.input) tr.inputs.push_back(prob.input(t, x));
        if (prob.output) tr.outputs.push_back(prob.output(x));
        if (k == n) break;
        VectorXd zsum = VectorXd::Zero(nx);
        for (const auto& zi : z) zsum += zi;
        const VectorXd ftk = prob.f_tilde ? prob.f_tilde(t, x) : VectorXd::Zero(nx);
        VectorXd xn = x + cfg.h * (prob.f(t, x) + zsum);
        for (size_t j = 0; j < terms.size(); ++j)
            z[j] = z[j] + cfg.h * (-terms[j].mu * z[j] + terms[j].coef * ftk);
        x = xn;
    }
    return tr;
}

/// First-order low-pass filter  u_eps' = (u - u_eps)/eps  discretized as
/// u_{eps,k+1} = u_{eps,k} + (h/eps)(u_k - u_{eps,k}), u_{eps,0} = 0.
/// The explicit update is stable only for h/eps <= 1 (enforced).
inline std::vector<double> low_pass_filter(const std::vector<double>& u, double eps, double h) {
    if (!(eps > 0.0)) throw std::invalid_argument("low_pass_filter: eps must be > 0");
    if (h / eps > 1.0)
        throw std::invalid_argument("low_pass_filter: unstable update, h/eps > 1");
    std::vector<double> out(u.size(), 0.0);
    for (size_t k = 0; k + 1 < u.size(); ++k)
        out[k + 1] = out[k] + (h / eps) * (u[k] - out[k]);
    return out;
}

/// Practical sliding-mode indicator for single-input plants:
///   delta_k = CB (u_eps_k + gamma_k) + h sum_{i<=k} C Phi(t_k,t_i) Bt (u_i + gamma_i),
/// with the same rectangle quadrature as euler_ide. u_eps is the filtered
/// scalar input channel; u_i the recorded applied input.
inline std::vector<double> sliding_indicator(const Trajectory& traj, const Kernel& kernel,
                                             const MatrixXd& CB, const MatrixXd& Btilde,
                                             const MatrixXd& C, const Signal& gamma,
                                             const std::vector<double>& u_eps) {
    if (traj.inputs.empty())
        throw std::invalid_argument("sliding_indicator: trajectory has no applied-input channel");
    if (u_eps.size() != traj.size())
        throw std::invalid_argument("sliding_indicator: u_eps length mismatch");
    if (traj.inputs[0].size() != 1 || CB.rows() != 1 || CB.cols() != 1)
        throw std::invalid_argument("sliding_indicator: scalar-input plant required");
    const size_t n = traj.size();
    const double h = traj.h;

    std::vector<double> w(n);  // u_i + gamma_i
    for (size_t i = 0; i < n; ++i) w[i] = traj.inputs[i](0) + gamma(traj.times[i]);

    std::vector<double> lagCB;  // C Phi(lag h) Bt, scalar
    const bool stationary = kernel.is_stationary();
    if (!kernel.is_zero() && stationary) {
        lagCB.resize(n);
        for (size_t lag = 0; lag < n; ++lag)
            lagCB[lag] = (C * kernel.eval(traj.t0 + lag * h, traj.t0) * Btilde)(0, 0);
    }
    std::vector<double> delta(n);
    for (size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        if (!kernel.is_zero()) {
            if (stationary) {
                for (size_t i = 0; i <= k; ++i) acc += lagCB[k - i] * w[i];
            } else {
                for (size_t i = 0; i <= k; ++i)
                    acc += (C * kernel.eval(traj.times[k], traj.times[i]) * Btilde)(0, 0) * w[i];
            }
            acc *= h;
        }
        delta[k] = CB(0, 0) * (u_eps[k] + gamma(traj.times[k])) + acc;
    }
    return delta;
}

}  // namespace idesmc
