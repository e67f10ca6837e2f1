#include "seqread/release.hpp"

#include <cmath>
#include <string>

#include "seqread/errors.hpp"
#include "seqread/fit.hpp"
#include "seqread/ode.hpp"

namespace seqread {

namespace {

// y = (r, b, integral kappa_r |r|^2, integral kappa_b |b|^2); the last two are real.
using ReleaseState = Eigen::Vector4cd;

const double kSechScale = std::sqrt(std::numbers::pi / 2.0);

}  // namespace

PumpPulse PumpPulse::centered(double g_max, double sigma) {
    PumpPulse p;
    p.g_max = g_max;
    p.sigma = sigma;
    p.window = 8.0 * sigma;
    p.t0 = 4.0 * sigma;
    return p;
}

void PumpPulse::validate() const {
    if (!(g_max >= 0.0) || !std::isfinite(g_max)) fail(ErrorCode::InvalidArgument, "g_max must be >= 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::InvalidArgument, "sigma must be > 0");
    if (!(window >= 4.0 * sigma) || !std::isfinite(window))
        fail(ErrorCode::InvalidArgument, "window must be at least 4 sigma");
    if (!std::isfinite(t0)) fail(ErrorCode::InvalidArgument, "pulse center must be finite");
}

double pump_envelope(double t, const PumpPulse& pulse) {
    if (std::abs(t - pulse.t0) > 0.5 * pulse.window) return 0.0;
    return pulse.g_max / std::cosh(kSechScale * (t - pulse.t0) / pulse.sigma);
}

ModeTrajectory classical_release(Complex r0, const PumpPulse& pulse, const DeviceParams& params,
                                 ReleaseBudget* budget) {
    pulse.validate();
    if (!std::isfinite(r0.real()) || !std::isfinite(r0.imag()))
        fail(ErrorCode::InvalidArgument, "initial amplitude must be finite");

    const double kr = params.kappa_r, kb = params.kappa_b;
    // Unclipped sech: the integration span is the window itself.
    auto rhs = [&](double t, const ReleaseState& y) {
        const double g = pulse.g_max / std::cosh(kSechScale * (t - pulse.t0) / pulse.sigma);
        const Complex i(0.0, 1.0);
        ReleaseState d;
        d[0] = -i * g * y[1] - 0.5 * kr * y[0];
        d[1] = -i * g * y[0] - 0.5 * kb * y[1];
        d[2] = kr * std::norm(y[0]);
        d[3] = kb * std::norm(y[1]);
        return d;
    };

    OdeOptions opts;
    opts.rtol = 1e-10;
    opts.atol = 1e-14 * std::max(1.0, std::norm(r0));
    DormandPrince<ReleaseState> stepper(opts);

    ModeTrajectory traj;
    const double dt = 1.0 / params.sample_rate;
    const double t_begin = pulse.start(), t_end = pulse.stop();
    const auto n_steps = static_cast<long>(std::floor((t_end - t_begin) / dt + 1e-9));

    ReleaseState y(r0, 0.0, 0.0, 0.0);
    double t = t_begin;
    auto record = [&] {
        traj.times.push_back(t);
        traj.r_amp.push_back(y[0]);
        traj.b_amp.push_back(y[1]);
    };
    record();
    for (long k = 1; k <= n_steps; ++k) {
        stepper.advance(rhs, t, y, t_begin + k * dt);
        record();
    }
    if (t < t_end && t_end - t > 1e-6 * dt) {
        stepper.advance(rhs, t, y, t_end);
        record();
    }

    if (budget) {
        const double e0 = std::norm(r0);
        if (e0 == 0.0) {
            *budget = ReleaseBudget{1.0, 0.0, 0.0, 0.0};
        } else {
            budget->remaining = std::norm(y[0]) / e0;
            budget->buffer = std::norm(y[1]) / e0;
            budget->internal_loss = y[2].real() / e0;
            budget->emitted = y[3].real() / e0;
        }
    }
    return traj;
}

ReleaseBudget release_budget(const PumpPulse& pulse, const DeviceParams& params) {
    ReleaseBudget b;
    classical_release(Complex(1.0, 0.0), pulse, params, &b);
    return b;
}

double remaining_fraction(const PumpPulse& pulse, const DeviceParams& params) {
    return std::clamp(release_budget(pulse, params).remaining, 0.0, 1.0);
}

double release_efficiency(const PumpPulse& pulse, const DeviceParams& params) {
    const ReleaseBudget b = release_budget(pulse, params);
    return std::clamp(1.0 - b.remaining - b.internal_loss, 0.0, 1.0);
}

double conversion_rate(double g, double kappa_b) {
    if (!(g >= 0.0)) fail(ErrorCode::InvalidArgument, "coupling must be >= 0");
    if (!(kappa_b > 0.0)) fail(ErrorCode::InvalidArgument, "kappa_b must be > 0");
    const double x = 4.0 * g / kappa_b;
    const Complex root = std::sqrt(Complex(1.0 - x * x, 0.0));
    return 0.5 * kappa_b * (1.0 - root).real();
}

bool release_validated(const PumpPulse& pulse, const DeviceParams& params) {
    return 4.0 * pulse.g_max / params.kappa_b <= 1.6;
}

std::vector<Complex> buffer_output_envelope(const ModeTrajectory& traj, const DeviceParams& params) {
    const double s = std::sqrt(params.kappa_b);
    std::vector<Complex> out;
    out.reserve(traj.b_amp.size());
    for (const Complex& b : traj.b_amp) out.push_back(s * b);
    return out;
}

ReadoutState release_state_map(const ReadoutState& state, double release_efficiency) {
    return apply_loss_channel(state, release_efficiency);
}

EffectiveReleaseFit fit_effective_release(const std::vector<double>& sigmas, const std::vector<double>& fractions,
                                          const DeviceParams& params, double g_max_guess) {
    if (sigmas.size() != fractions.size()) fail(ErrorCode::LengthMismatch, "sigma and fraction lists differ");
    if (sigmas.size() < 2) fail(ErrorCode::RankDeficient, "need at least two sigma points");
    // Fit in units of the nominal values so both parameters are O(1).
    const double kb0 = params.kappa_b, g0 = std::max(g_max_guess, 1.0);
    auto residuals = [&](const Eigen::VectorXd& p) {
        DeviceParams dp = params;
        dp.kappa_b = std::abs(p[0]) * kb0;
        Eigen::VectorXd r(sigmas.size());
        for (std::size_t k = 0; k < sigmas.size(); ++k) {
            const PumpPulse pulse = PumpPulse::centered(std::abs(p[1]) * g0, sigmas[k]);
            r[static_cast<Eigen::Index>(k)] = remaining_fraction(pulse, dp) - fractions[k];
        }
        return r;
    };
    LmOptions opts;
    opts.rtol = 1e-8;
    opts.fd_relative_step = 1e-6;
    const LmResult res = levenberg_marquardt(residuals, Eigen::Vector2d(1.0, 1.0), opts);
    return {std::abs(res.params[0]) * kb0, std::abs(res.params[1]) * g0, res.chi2};
}

}  // namespace seqread
