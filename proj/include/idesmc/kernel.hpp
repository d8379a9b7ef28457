#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "idesmc/linalg.hpp"

namespace idesmc {

/// One term of an exponential-series kernel: c * exp(-mu * s), mu > 0.
struct ExpTerm {
    double mu;
    MatrixXd coef;
};

/// Memory kernel Phi(t, tau) on the triangle t >= tau, n x n matrix valued.
///
/// Four representations: a dense evaluation map, a convolution map
/// Phi(t,tau) = phi(t - tau), an exponential series
/// phi(s) = sum_i c_i exp(-mu_i s), and a truncation wrapper that forces the
/// zero matrix for t - tau >= d. Immutable after construction; shareable
/// across concurrent simulations.
class Kernel {
public:
    enum class Kind { kZero, kDense, kConvolution, kExponentialSeries, kTruncated };

    static Kernel zero(int n) {
        Kernel k;
        k.kind_ = Kind::kZero;
        k.n_ = n;
        return k;
    }

    static Kernel dense(int n, std::function<MatrixXd(double, double)> fn) {
        Kernel k;
        k.kind_ = Kind::kDense;
        k.n_ = n;
        k.dense_ = std::move(fn);
        return k;
    }

    static Kernel convolution(int n, std::function<MatrixXd(double)> fn) {
        Kernel k;
        k.kind_ = Kind::kConvolution;
        k.n_ = n;
        k.conv_ = std::move(fn);
        return k;
    }

    static Kernel exponential_series(int n, std::vector<ExpTerm> terms) {
        for (const auto& t : terms) {
            if (!(t.mu > 0.0))
                throw std::invalid_argument("Kernel: exponential decay rates must be > 0");
            if (t.coef.rows() != n || t.coef.cols() != n)
                throw std::invalid_argument("Kernel: series coefficient must be n x n");
        }
        Kernel k;
        k.kind_ = Kind::kExponentialSeries;
        k.n_ = n;
        k.terms_ = std::move(terms);
        return k;
    }

    static Kernel truncated(Kernel inner, double d) {
        if (!(d > 0.0)) throw std::invalid_argument("Kernel: delay bound d must be > 0");
        Kernel k;
        k.kind_ = Kind::kTruncated;
        k.n_ = inner.n_;
        k.delay_ = d;
        k.inner_ = std::make_shared<Kernel>(std::move(inner));
        return k;
    }

    /// Scale an arbitrary kernel by a constant factor.
    static Kernel scaled(Kernel inner, double factor) {
        const int n = inner.n_;
        auto base = std::make_shared<Kernel>(std::move(inner));
        return dense(n, [base, factor](double t, double tau) {
            return MatrixXd(factor * base->eval(t, tau));
        });
    }

    Kind kind() const { return kind_; }
    int dim() const { return n_; }
    bool is_zero() const { return kind_ == Kind::kZero; }
    bool is_exponential_series() const { return kind_ == Kind::kExponentialSeries; }
    const std::vector<ExpTerm>& series_terms() const {
        if (kind_ != Kind::kExponentialSeries)
            throw std::logic_error("Kernel: not an exponential series");
        return terms_;
    }
    double delay_bound() const {
        if (kind_ != Kind::kTruncated) throw std::logic_error("Kernel: not truncated");
        return delay_;
    }

    /// Phi(t, tau). Throws std::domain_error off the triangle t >= tau.
    /// Truncated kernels return the exact zero matrix for t - tau >= d.
    MatrixXd eval(double t, double tau) const {
        if (t < tau) throw std::domain_error("Kernel::eval: t < tau");
        switch (kind_) {
            case Kind::kZero: return MatrixXd::Zero(n_, n_);
            case Kind::kDense: return dense_(t, tau);
            case Kind::kConvolution: return conv_(t - tau);
            case Kind::kExponentialSeries: {
                MatrixXd out = MatrixXd::Zero(n_, n_);
                const double s = t - tau;
                for (const auto& term : terms_) out += std::exp(-term.mu * s) * term.coef;
                return out;
            }
            case Kind::kTruncated:
                if (t - tau >= delay_) return MatrixXd::Zero(n_, n_);
                return inner_->eval(t, tau);
        }
        return MatrixXd::Zero(n_, n_);
    }

    /// True when Phi(t,tau) depends on t - tau only (enables lag caching on
    /// uniform grids).
    bool is_stationary() const {
        switch (kind_) {
            case Kind::kZero:
            case Kind::kConvolution:
            case Kind::kExponentialSeries:
                return true;
            case Kind::kTruncated:
                return inner_->is_stationary();
            case Kind::kDense:
                return false;
        }
        return false;
    }

private:
    Kind kind_ = Kind::kZero;
    int n_ = 0;
    double delay_ = 0.0;
    std::function<MatrixXd(double, double)> dense_;
    std::function<MatrixXd(double)> conv_;
    std::vector<ExpTerm> terms_;
    std::shared_ptr<const Kernel> inner_;
};

/// Rectangle-rule bound M = sup_t h * sum_{t0 <= tau_i <= t} ||C Phi(t,tau_i) R||_P
/// over the uniform grid, the quantity the design theorem compares against 1.
/// C Phi R must be square (k = m); ||Q||_P is the P-induced matrix norm.
/// The boundary node tau = t enters with full weight, matching the simulation
/// quadrature. Monotone nondecreasing in the horizon.
inline double memory_bound(const Kernel& kernel, const MatrixXd& C, const MatrixXd& R,
                           const MatrixXd& P, double t0, double horizon, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("memory_bound: h must be > 0");
    const long n = static_cast<long>(std::floor(horizon / h));
    const bool stationary = kernel.is_stationary();
    double M = 0.0;
    if (stationary) {
        double acc = 0.0;
        for (long lag = 0; lag <= n; ++lag) {
            acc += induced_norm(C * kernel.eval(t0 + lag * h, t0) * R, P);
            M = std::max(M, h * acc);
        }
    } else {
        for (long k = 0; k <= n; ++k) {
            const double t = t0 + k * h;
            double acc = 0.0;
            for (long i = 0; i <= k; ++i)
                acc += induced_norm(C * kernel.eval(t, t0 + i * h) * R, P);
            M = std::max(M, h * acc);
        }
    }
    return M;
}

}  // namespace idesmc
