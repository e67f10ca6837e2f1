#pragma once

// Pump-activated release of the readout mode into the buffer and output line.

#include <vector>

#include "seqread/dynamics.hpp"
#include "seqread/hilbert.hpp"

namespace seqread {

/// sech-shaped coupling envelope truncated to a square window.
struct PumpPulse {
    double g_max = kTwoPi * 7.2e6;  // rad/s
    double sigma = 28e-9;           // s
    double window = 8 * 28e-9;      // total support, s
    double t0 = 4 * 28e-9;          // center, s

    /// Pulse whose window is 8 sigma and starts at t = 0.
    static PumpPulse centered(double g_max, double sigma);

    void validate() const;
    double start() const { return t0 - 0.5 * window; }
    double stop() const { return t0 + 0.5 * window; }
};

struct ModeTrajectory {
    std::vector<double> times;
    std::vector<Complex> r_amp;
    std::vector<Complex> b_amp;
};

/// Where the initial readout energy ends up after the pulse, as fractions of |r0|^2.
struct ReleaseBudget {
    double remaining = 0.0;      // |r|^2 left in the readout mode
    double buffer = 0.0;         // |b|^2 left in the buffer
    double emitted = 0.0;        // integral of kappa_b |b|^2 (into the line)
    double internal_loss = 0.0;  // integral of kappa_r |r|^2
    double residual() const { return remaining + buffer + emitted + internal_loss - 1.0; }
};

double pump_envelope(double t, const PumpPulse& pulse);

/// Integrates r' = -i g b - kappa_r/2 r, b' = -i g r - kappa_b/2 b over the
/// window from (r0, 0), sampling at params.sample_rate (plus the window end).
ModeTrajectory classical_release(Complex r0, const PumpPulse& pulse, const DeviceParams& params,
                                 ReleaseBudget* budget = nullptr);

ReleaseBudget release_budget(const PumpPulse& pulse, const DeviceParams& params);

double remaining_fraction(const PumpPulse& pulse, const DeviceParams& params);

/// Transmissivity of the readout-to-line map: everything that left the
/// readout mode other than through internal loss.
double release_efficiency(const PumpPulse& pulse, const DeviceParams& params);

/// gamma_r = (kappa_b / 2) Re[1 - sqrt(1 - 16 g^2 / kappa_b^2)].
double conversion_rate(double g, double kappa_b);

/// False in the over-critical regime 4 g_max / kappa_b > 1.6 where the model
/// is known to disagree with data.
bool release_validated(const PumpPulse& pulse, const DeviceParams& params);

/// sqrt(kappa_b) b(t).
std::vector<Complex> buffer_output_envelope(const ModeTrajectory& traj, const DeviceParams& params);

ReadoutState release_state_map(const ReadoutState& state, double release_efficiency);

struct EffectiveReleaseFit {
    double kappa_b_eff = 0.0;
    double g_max_eff = 0.0;
    double chi2 = 0.0;
};

/// Least-squares refit of (kappa_b, g_max) to a measured remaining-fraction
/// curve over sigma at one nominal pump amplitude.
EffectiveReleaseFit fit_effective_release(const std::vector<double>& sigmas, const std::vector<double>& fractions,
                                          const DeviceParams& params, double g_max_guess);

}  // namespace seqread
