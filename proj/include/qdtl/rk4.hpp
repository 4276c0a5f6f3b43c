#pragma once

#include <Eigen/Dense>

namespace qdtl::sim {

/// One classical Runge-Kutta step of an autonomous system y' = f(y).
template <class Field>
Eigen::VectorXd rk4_step(const Field& f, const Eigen::VectorXd& y, double h) {
    const Eigen::VectorXd k1 = f(y);
    const Eigen::VectorXd k2 = f(y + (h / 2) * k1);
    const Eigen::VectorXd k3 = f(y + (h / 2) * k2);
    const Eigen::VectorXd k4 = f(y + h * k3);
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Fixed-step integration to time `duration`, ending with a shorter step when
/// the duration is not a multiple of h.
template <class Field>
Eigen::VectorXd rk4_integrate(const Field& f, Eigen::VectorXd y, double duration, double h) {
    double t = 0;
    while (duration - t > h * 1e-9) {
        const double step = std::min(h, duration - t);
        y = rk4_step(f, y, step);
        t += step;
    }
    return y;
}

}  // namespace qdtl::sim
