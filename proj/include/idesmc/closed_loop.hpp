#pragma once

#include <functional>
#include <stdexcept>
#include <utility>

#include "idesmc/design.hpp"
#include "idesmc/field.hpp"
#include "idesmc/integrator.hpp"

namespace idesmc {

/// Wire a plant and an output feedback u(t, y) into an IDE problem for
/// euler_ide: f = Ax + B(u+gamma) + p(t) p_dir,  f~ = Bt (u+gamma). The
/// applied input is recorded per node. Everything is captured by value, so
/// the problem outlives the plant object.
inline IdeProblem make_closed_loop(const LinearIdePlant& plant,
                                   std::function<VectorXd(double, const VectorXd&)> control,
                                   Signal gamma, VectorXd p_dir = VectorXd()) {
    plant.validate();
    const MatrixXd A = plant.A, B = plant.B, Bt = plant.Btilde, C = plant.C;
    const Signal p = plant.p;
    if (p_dir.size() == 0) p_dir = VectorXd::Zero(plant.n());

    IdeProblem prob;
    auto input = [C, control](double t, const VectorXd& x) {
        return control(t, VectorXd(C * x));
    };
    prob.input = input;
    prob.f = [A, B, p, p_dir, input, gamma](double t, const VectorXd& x) {
        const VectorXd w = input(t, x).array() + gamma(t);
        return VectorXd(A * x + B * w + p(t) * p_dir);
    };
    prob.f_tilde = [Bt, input, gamma](double t, const VectorXd& x) {
        const VectorXd w = input(t, x).array() + gamma(t);
        return VectorXd(Bt * w);
    };
    prob.kernel = plant.kernel;
    prob.output = [C](const VectorXd& x) { return VectorXd(C * x); };
    return prob;
}

/// Reaching-time detector: the first grid time after which ||y||_P stays
/// below 5 h ||C|| max_k||x_k|| for 100 consecutive steps.
inline double detect_reaching_time(const Trajectory& traj, const MatrixXd& P,
                                   double normC) {
    if (traj.outputs.empty())
        throw std::invalid_argument("detect_reaching_time: trajectory has no outputs");
    double state_scale = 0.0;
    for (const auto& x : traj.states) state_scale = std::max(state_scale, x.norm());
    const double thr = 5.0 * traj.h * normC * state_scale;
    size_t run = 0;
    for (size_t k = 0; k < traj.size(); ++k) {
        if (weighted_norm(traj.outputs[k], P) < thr) {
            if (++run == 100) return traj.times[k - 99];
        } else {
            run = 0;
        }
    }
    throw std::runtime_error("detect_reaching_time: no sustained sliding phase found");
}

}  // namespace idesmc
