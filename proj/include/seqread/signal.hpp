#pragma once

// Heterodyne record synthesis, weight-function construction and demodulation
// of single records into a complex amplitude beta.

#include <vector>

#include "seqread/dynamics.hpp"
#include "seqread/hilbert.hpp"
#include "seqread/random.hpp"
#include "seqread/release.hpp"

namespace seqread {

struct VoltageTrace {
    double sample_rate = 1e9;
    double t_start = 0.0;
    std::vector<double> samples;

    void validate() const;
    std::size_t size() const { return samples.size(); }
    double dt() const { return 1.0 / sample_rate; }
    double time(std::size_t k) const { return t_start + static_cast<double>(k) / sample_rate; }
};

struct WeightFunction {
    double sample_rate = 1e9;
    double t_start = 0.0;
    std::vector<double> re;
    std::vector<double> im;
    Complex lambda_scale = 1.0;  // multiplies the raw matched-filter sum
    bool degenerate = false;     // averaged traces were indistinguishable
};

/// Carrier offset of each branch: +chi/2 for g, -chi/2 for e.
double branch_detuning(Branch branch, const DeviceParams& params);

/// V(t) = Re[envelope(t) exp(-i (2 pi f_IF + detuning) t)] + N(0, noise_std).
VoltageTrace synthesize_trace(const std::vector<Complex>& envelope, double envelope_rate, double t_start,
                              const DeviceParams& params, double branch_detuning, double noise_std, Rng& rng);

/// Quarter-carrier-period delay of a real record, computed spectrally
/// (each positive-frequency component multiplied by -i).
std::vector<double> quadrature_shift(const std::vector<double>& x);

/// Analytic signal x + i H[x].
std::vector<Complex> analytic_signal(const std::vector<double>& x);

/// re = (avg_e - avg_g) / 2, im = quadrature_shift(re), lambda_scale = 1.
WeightFunction build_weight_function(const VoltageTrace& avg_trace_g, const VoltageTrace& avg_trace_e);

/// Raw matched-filter sum  sum_k V[k] (re[k] + i im[k]) dt, without lambda.
Complex demodulate_raw(const VoltageTrace& trace, const WeightFunction& w);

/// beta = lambda_scale * demodulate_raw(trace, w).
Complex demodulate(const VoltageTrace& trace, const WeightFunction& w);

/// Sets lambda_scale so that the mean beta over the references equals alpha0.
WeightFunction normalize_lambda(WeightFunction w, const std::vector<VoltageTrace>& reference_traces, Complex alpha0);

/// Per-quadrature variance of beta produced by white noise of unit std on the trace.
double unit_noise_beta_variance(const WeightFunction& w);

/// Q(alpha) = <alpha|rho|alpha> / pi.
double husimi_q(const ReadoutState& state, Complex alpha);

/// Inverse-CDF sampler of the Husimi distribution on a 401 x 401 grid
/// spanning +-(|<r>| + 6 sigma_Q) around the origin.
class HusimiSampler {
public:
    static constexpr int kGridPoints = 401;

    explicit HusimiSampler(const ReadoutState& state, int grid_points = kGridPoints);

    Complex sample(Rng& rng) const;
    double half_width() const { return half_width_; }
    double captured_mass() const { return captured_mass_; }

private:
    int n_;
    double half_width_;
    double step_;
    double captured_mass_;
    std::vector<double> cdf_;
};

/// Outcome of heterodyne detection with efficiency eta, rescaled so coherent
/// inputs average to their amplitude: a Husimi draw of the pre-loss state plus
/// Gaussian noise of per-quadrature variance (1 - eta) / (2 eta). This has the
/// same law as Husimi sampling of the lossy state divided by sqrt(eta).
Complex sample_measured_amplitude(const HusimiSampler& pre_loss, double eta, Rng& rng);

/// Convenience overload; `upstream_efficiency` is the transmissivity already
/// applied to `released_state` (e.g. the release map).
Complex sample_measured_amplitude(const ReadoutState& released_state, double detection_efficiency, Rng& rng,
                                  double upstream_efficiency = 1.0);

/// Full heterodyne record model: the unit-amplitude release envelope is
/// scaled by the intracavity amplitude of each run, carried at the branch
/// detuning and buried in calibrated white noise.
class TraceModel {
public:
    TraceModel(const PumpPulse& pulse, const DeviceParams& params);

    const std::vector<Complex>& unit_envelope() const { return unit_envelope_; }
    double t_start() const { return t_start_; }
    const DeviceParams& params() const { return params_; }

    VoltageTrace trace(Complex r0, Branch branch, double noise_std, Rng& rng) const;
    /// Noise std that brings the coherent-state beta variance to 1 / (2 eta)
    /// given that r0 already carries the vacuum contribution 1/2.
    double calibrated_noise_std(const WeightFunction& w) const;

private:
    DeviceParams params_;
    PumpPulse pulse_;
    std::vector<Complex> unit_envelope_;
    double t_start_;
};

/// Weight function from noiseless averaged traces (linear in <r>), with
/// lambda fixed on `n_reference` noisy t_int = 0 records of the g branch.
WeightFunction calibrate_demodulation(const TraceModel& model, Complex mean_g, Complex mean_e, Complex alpha0,
                                      int n_reference, std::uint64_t seed);

}  // namespace seqread
