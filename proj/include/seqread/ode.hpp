#pragma once

// Adaptive Dormand-Prince 5(4) integrator over Eigen dense states (vectors or
// matrices, real or complex).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqread/errors.hpp"

namespace seqread {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0 picks one from the span
    long max_steps = 10'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
};

/// Stateful stepper: keeps the last accepted step size across successive
/// advance() calls so that dense output grids do not restart step control.
template <class State>
class DormandPrince {
public:
    explicit DormandPrince(OdeOptions opts = {}) : opts_(opts) {}

    const OdeStats& stats() const { return stats_; }

    /// Integrates dy/dt = f(t, y) from t to t_end in place.
    template <class Rhs>
    void advance(Rhs&& f, double& t, State& y, double t_end) {
        if (t_end == t) return;
        if (t_end < t) fail(ErrorCode::InvalidTime, "integrator cannot run backwards");
        const double span = t_end - t;
        if (h_ <= 0.0) h_ = opts_.initial_step > 0.0 ? opts_.initial_step : span / 100.0;

        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

        State k1 = f(t, y);
        long steps = 0;
        while (t < t_end) {
            if (++steps > opts_.max_steps) fail(ErrorCode::NumericDivergence, "step budget exhausted");
            bool last = false;
            double h = h_;
            if (t + h >= t_end) {
                h = t_end - t;
                last = true;
            }
            const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
            const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
            const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
            const State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
            const State k6 =
                f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
            State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const State k7 = f(t + h, y_new);
            const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const auto scale =
                (opts_.atol + opts_.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).eval();
            const double err_norm = (err.cwiseAbs().array() / scale).maxCoeff();
            if (!std::isfinite(err_norm)) fail(ErrorCode::NumericDivergence, "non-finite integrator state");

            if (err_norm <= 1.0) {
                t = last ? t_end : t + h;
                y = std::move(y_new);
                k1 = k7;
                ++stats_.accepted;
                const double grow = err_norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err_norm, -0.2));
                // A truncated final step says nothing about the natural step size.
                if (!last) h_ = h * grow;
            } else {
                ++stats_.rejected;
                h_ = h * std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
                if (h_ < std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)) * 4)
                    fail(ErrorCode::NumericDivergence, "step size underflow at t = " + std::to_string(t));
            }
        }
    }

private:
    OdeOptions opts_;
    OdeStats stats_;
    double h_ = 0.0;
};

template <class State, class Rhs>
State integrate(Rhs&& f, double t0, double t1, State y0, OdeOptions opts = {}) {
    DormandPrince<State> stepper(opts);
    double t = t0;
    stepper.advance(f, t, y0, t1);
    return y0;
}

}  // namespace seqread
