#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>

#include "sparsedae/errors.hpp"

namespace sparsedae {

/// Runge-Kutta-Fehlberg 4(5) step with embedded error estimate, adaptive
/// step size, and exact landing on requested sample times.
class AdaptiveRk45 {
  public:
    using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

    explicit AdaptiveRk45(Rhs rhs, double tol = 1e-9) : rhs_(std::move(rhs)), tol_(tol) {}

    /// Advance y from t0 to t1 in place.
    void integrate_to(Eigen::VectorXd& y, double t0, double t1) const {
        if (t1 <= t0) return;
        double t = t0;
        double h = std::min(initial_step(t0, y), t1 - t0);
        int rejects_in_a_row = 0;
        while (t < t1) {
            h = std::min(h, t1 - t);
            if (h < 1e-14 * std::max(1.0, std::abs(t1)))
                throw Error("benchgen", "integrate", "StepUnderflow",
                            "step size underflow at t=" + std::to_string(t));

            Eigen::VectorXd y5;
            const double err = step(t, y, h, y5);
            const double tolerance = tol_ * (1.0 + y.cwiseAbs().maxCoeff());
            if (err <= tolerance) {
                t += h;
                y = y5;
                rejects_in_a_row = 0;
            } else if (++rejects_in_a_row > 200) {
                throw Error("benchgen", "integrate", "StepUnderflow", "too many rejected steps");
            }
            const double ratio = err > 0.0 ? std::pow(tolerance / err, 0.2) : 5.0;
            h *= std::clamp(0.9 * ratio, 0.2, 5.0);
        }
    }

  private:
    double initial_step(double t0, const Eigen::VectorXd& y) const {
        const double scale = 1.0 + y.cwiseAbs().maxCoeff();
        const double rate = rhs_(t0, y).cwiseAbs().maxCoeff();
        return rate > 0.0 ? std::min(0.1, 0.01 * scale / rate) : 0.1;
    }

    // One RKF45 trial step; returns the max-norm error estimate and writes
    // the 5th-order solution.
    double step(double t, const Eigen::VectorXd& y, double h, Eigen::VectorXd& y5) const {
        const Eigen::VectorXd k1 = rhs_(t, y);
        const Eigen::VectorXd k2 = rhs_(t + h / 4.0, y + h * (k1 / 4.0));
        const Eigen::VectorXd k3 =
            rhs_(t + 3.0 * h / 8.0, y + h * (3.0 / 32.0 * k1 + 9.0 / 32.0 * k2));
        const Eigen::VectorXd k4 =
            rhs_(t + 12.0 * h / 13.0,
                 y + h * (1932.0 / 2197.0 * k1 - 7200.0 / 2197.0 * k2 + 7296.0 / 2197.0 * k3));
        const Eigen::VectorXd k5 =
            rhs_(t + h, y + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 -
                                 845.0 / 4104.0 * k4));
        const Eigen::VectorXd k6 =
            rhs_(t + h / 2.0, y + h * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 +
                                       1859.0 / 4104.0 * k4 - 11.0 / 40.0 * k5));

        const Eigen::VectorXd y4 =
            y + h * (25.0 / 216.0 * k1 + 1408.0 / 2565.0 * k3 + 2197.0 / 4104.0 * k4 - k5 / 5.0);
        y5 = y + h * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4 -
                      9.0 / 50.0 * k5 + 2.0 / 55.0 * k6);
        return (y5 - y4).cwiseAbs().maxCoeff();
    }

    Rhs rhs_;
    double tol_;
};

}  // namespace sparsedae
