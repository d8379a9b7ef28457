#include <catch2/catch_amalgamated.hpp>

#include "idesmc/kernel.hpp"

using namespace idesmc;
using Catch::Approx;

namespace {
Kernel window_kernel(double scale = 1.0) {
    // Phi(t,tau) = xi(t-tau) I3 with xi = 1 on [0,1), 0 afterwards
    auto fn = [scale](double s) {
        return MatrixXd(scale * (s < 1.0 ? 1.0 : 0.0) * MatrixXd::Identity(3, 3));
    };
    return Kernel::truncated(Kernel::convolution(3, fn), 1.0);
}
}  // namespace

TEST_CASE("kernel evaluation", "[kernels]") {
    SECTION("zero kernel") {
        const Kernel k = Kernel::zero(2);
        REQUIRE(k.eval(1.0, 0.3).isZero(0.0));
        REQUIRE(k.eval(0.0, 0.0).isZero(0.0));
    }
    SECTION("window kernel inside and beyond the delay") {
        const Kernel k = window_kernel();
        REQUIRE(k.eval(0.5, 0.0).isApprox(MatrixXd::Identity(3, 3)));
        // bit-exact zero at and beyond the delay bound
        REQUIRE(k.eval(1.0, 0.0).isZero(0.0));
        REQUIRE(k.eval(7.0, 1.0).isZero(0.0));
    }
    SECTION("exponential series at zero lag") {
        const Kernel k =
            Kernel::exponential_series(2, {{1.0, MatrixXd::Identity(2, 2)}});
        REQUIRE(k.eval(3.0, 3.0).isApprox(MatrixXd::Identity(2, 2)));
        REQUIRE(k.eval(3.0, 2.0)(0, 0) == Approx(std::exp(-1.0)));
    }
    SECTION("domain error off the triangle") {
        REQUIRE_THROWS_AS(window_kernel().eval(0.0, 0.5), std::domain_error);
    }
    SECTION("positive decay rates enforced") {
        REQUIRE_THROWS_AS(
            Kernel::exponential_series(1, {{0.0, MatrixXd::Identity(1, 1)}}),
            std::invalid_argument);
    }
}

TEST_CASE("memory bound", "[kernels]") {
    const MatrixXd P = MatrixXd::Identity(1, 1);
    MatrixXd C(1, 3);
    C << 1, 0, -2;
    MatrixXd B(3, 1);
    B << 0, 0, 1;
    const MatrixXd R = B * (C * B).inverse();  // (0,0,-1/2)^T

    SECTION("zero kernel gives zero") {
        REQUIRE(memory_bound(Kernel::zero(3), C, R, P, 0.0, 2.0, 1e-3) == 0.0);
    }
    SECTION("window kernel saturates at 1") {
        const double h = 1e-3;
        const double M = memory_bound(window_kernel(), C, R, P, 0.0, 2.0, h);
        REQUIRE(M == Approx(1.0).margin(2 * h));
        // scaled variant used by the feasible design
        const double M05 = memory_bound(window_kernel(0.5), C, R, P, 0.0, 2.0, h);
        REQUIRE(M05 == Approx(0.5).margin(h));
    }
    SECTION("truncated kernels stabilize once the horizon covers the delay") {
        const double h = 1e-3;
        const double M1 = memory_bound(window_kernel(), C, R, P, 0.0, 1.0 + h, h);
        const double M2 = memory_bound(window_kernel(), C, R, P, 0.0, 1.7, h);
        const double M3 = memory_bound(window_kernel(), C, R, P, 0.0, 2.9, h);
        REQUIRE(M1 == M2);
        REQUIRE(M2 == M3);
    }
    SECTION("monotone in the horizon") {
        const double h = 1e-2;
        double prev = 0.0;
        for (double horizon : {0.25, 0.5, 0.75, 1.0, 1.5}) {
            const double M = memory_bound(window_kernel(), C, R, P, 0.0, horizon, h);
            REQUIRE(M >= prev);
            prev = M;
        }
    }
    SECTION("exponential kernel converges to the analytic integral at O(h)") {
        // scalar kernel exp(-s): integral over [0,inf) is 1; rectangle sums
        // give h/(1 - e^{-h}) = 1 + h/2 + O(h^2)
        const Kernel k = Kernel::exponential_series(1, {{1.0, MatrixXd::Identity(1, 1)}});
        const MatrixXd one = MatrixXd::Identity(1, 1);
        for (double h : {1e-1, 5e-2, 2.5e-2}) {
            const double M = memory_bound(k, one, one, one, 0.0, 40.0, h);
            REQUIRE(std::abs(M - 1.0) <= 0.6 * h);
            REQUIRE(std::abs(M - 1.0) >= 0.4 * h);
        }
    }
    SECTION("nonnegative, zero only for the zero kernel") {
        const double M = memory_bound(window_kernel(), C, R, P, 0.0, 0.4, 1e-2);
        REQUIRE(M > 0.0);
    }
}
