#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace idesmc {

/// Closed-form scalar signal descriptor: constant, a*cos(w t + phase),
/// a linearly interpolated table, or an arbitrary callable.
class Signal {
public:
    static Signal zero() { return constant(0.0); }

    static Signal constant(double c) {
        Signal s;
        s.kind_ = Kind::kConstant;
        s.a_ = c;
        return s;
    }

    static Signal cosine(double amplitude, double omega, double phase = 0.0) {
        Signal s;
        s.kind_ = Kind::kCosine;
        s.a_ = amplitude;
        s.w_ = omega;
        s.phase_ = phase;
        return s;
    }

    static Signal table(std::vector<double> times, std::vector<double> values) {
        if (times.size() != values.size() || times.size() < 2)
            throw std::invalid_argument("Signal::table: need >= 2 matching samples");
        if (!std::is_sorted(times.begin(), times.end()))
            throw std::invalid_argument("Signal::table: times must be sorted");
        Signal s;
        s.kind_ = Kind::kTable;
        s.times_ = std::move(times);
        s.values_ = std::move(values);
        return s;
    }

    static Signal callable(std::function<double(double)> fn) {
        Signal s;
        s.kind_ = Kind::kCallable;
        s.fn_ = std::move(fn);
        return s;
    }

    double operator()(double t) const {
        switch (kind_) {
            case Kind::kConstant: return a_;
            case Kind::kCosine: return a_ * std::cos(w_ * t + phase_);
            case Kind::kTable: {
                if (t <= times_.front()) return values_.front();
                if (t >= times_.back()) return values_.back();
                auto it = std::upper_bound(times_.begin(), times_.end(), t);
                const size_t j = static_cast<size_t>(it - times_.begin());
                const double w = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
                return (1.0 - w) * values_[j - 1] + w * values_[j];
            }
            case Kind::kCallable: return fn_(t);
        }
        return 0.0;
    }

    /// Worst-case magnitude bound. Exact for constant/cosine/table; callables
    /// are sampled on the given grid.
    double sup_bound(double t0, double horizon, double h) const {
        switch (kind_) {
            case Kind::kConstant: return std::abs(a_);
            case Kind::kCosine: return std::abs(a_);
            case Kind::kTable: {
                double m = 0.0;
                for (double v : values_) m = std::max(m, std::abs(v));
                return m;
            }
            case Kind::kCallable: {
                double m = 0.0;
                const long n = static_cast<long>(std::floor(horizon / h));
                for (long k = 0; k <= n; ++k) m = std::max(m, std::abs(fn_(t0 + k * h)));
                return m;
            }
        }
        return 0.0;
    }

private:
    enum class Kind { kConstant, kCosine, kTable, kCallable };
    Kind kind_ = Kind::kConstant;
    double a_ = 0.0, w_ = 0.0, phase_ = 0.0;
    std::vector<double> times_, values_;
    std::function<double(double)> fn_;
};

}  // namespace idesmc
