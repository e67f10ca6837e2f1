#include "seqread/signal.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "seqread/errors.hpp"

namespace seqread {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffers {
    explicit FftwBuffers(int n) : n(n) {
        real = fftw_alloc_real(static_cast<std::size_t>(n));
        spec = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        std::lock_guard<std::mutex> lock(fftw_mutex());
        forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
    }
    ~FftwBuffers() {
        {
            std::lock_guard<std::mutex> lock(fftw_mutex());
            fftw_destroy_plan(forward);
            fftw_destroy_plan(backward);
        }
        fftw_free(real);
        fftw_free(spec);
    }
    FftwBuffers(const FftwBuffers&) = delete;
    FftwBuffers& operator=(const FftwBuffers&) = delete;

    int n;
    double* real;
    fftw_complex* spec;
    fftw_plan forward;
    fftw_plan backward;
};

void require_same_grid(const VoltageTrace& a, const VoltageTrace& b) {
    if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "traces have different lengths");
    if (a.sample_rate != b.sample_rate) fail(ErrorCode::SampleRateMismatch, "traces have different sample rates");
}

}  // namespace

void VoltageTrace::validate() const {
    if (!(sample_rate > 0.0)) fail(ErrorCode::InvalidArgument, "sample rate must be positive");
    if (samples.size() < 16) fail(ErrorCode::InvalidArgument, "a voltage trace needs at least 16 samples");
}

double branch_detuning(Branch branch, const DeviceParams& params) {
    return branch == Branch::g ? 0.5 * params.chi : -0.5 * params.chi;
}

VoltageTrace synthesize_trace(const std::vector<Complex>& envelope, double envelope_rate, double t_start,
                              const DeviceParams& params, double detuning, double noise_std, Rng& rng) {
    if (envelope_rate != params.sample_rate)
        fail(ErrorCode::SampleRateMismatch, "envelope is not sampled at the digitizer rate");
    if (!(noise_std >= 0.0)) fail(ErrorCode::InvalidArgument, "noise std must be non-negative");
    VoltageTrace v;
    v.sample_rate = params.sample_rate;
    v.t_start = t_start;
    v.samples.resize(envelope.size());
    const double w = kTwoPi * params.if_freq + detuning;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t k = 0; k < envelope.size(); ++k) {
        const double t = v.time(k);
        double s = (envelope[k] * std::polar(1.0, -w * t)).real();
        if (noise_std > 0.0) s += noise_std * noise(rng);
        v.samples[k] = s;
    }
    return v;
}

std::vector<double> quadrature_shift(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n < 2) fail(ErrorCode::InvalidArgument, "record too short for a spectral shift");
    FftwBuffers f(n);
    std::copy(x.begin(), x.end(), f.real);
    fftw_execute(f.forward);
    // Multiply by -i: (a + ib)(-i) = b - ia.
    for (int k = 0; k <= n / 2; ++k) {
        const double a = f.spec[k][0], b = f.spec[k][1];
        f.spec[k][0] = b;
        f.spec[k][1] = -a;
    }
    f.spec[0][0] = f.spec[0][1] = 0.0;
    if (n % 2 == 0) f.spec[n / 2][0] = f.spec[n / 2][1] = 0.0;
    fftw_execute(f.backward);
    std::vector<double> out(f.real, f.real + n);
    for (double& v : out) v /= n;
    return out;
}

std::vector<Complex> analytic_signal(const std::vector<double>& x) {
    // The Hilbert transform is the quarter-period delay (cos -> sin).
    const std::vector<double> h = quadrature_shift(x);
    std::vector<Complex> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = Complex(x[k], h[k]);
    return out;
}

WeightFunction build_weight_function(const VoltageTrace& avg_g, const VoltageTrace& avg_e) {
    require_same_grid(avg_g, avg_e);
    WeightFunction w;
    w.sample_rate = avg_g.sample_rate;
    w.t_start = avg_g.t_start;
    w.re.resize(avg_g.size());
    double energy = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < avg_g.size(); ++k) {
        w.re[k] = 0.5 * (avg_e.samples[k] - avg_g.samples[k]);
        energy += w.re[k] * w.re[k];
        scale += avg_e.samples[k] * avg_e.samples[k] + avg_g.samples[k] * avg_g.samples[k];
    }
    w.degenerate = energy <= 1e-24 * std::max(scale, 1e-300) || energy == 0.0;
    w.im = quadrature_shift(w.re);
    return w;
}

Complex demodulate_raw(const VoltageTrace& trace, const WeightFunction& w) {
    if (trace.size() != w.re.size() || w.re.size() != w.im.size())
        fail(ErrorCode::LengthMismatch, "trace and weight function lengths differ");
    if (trace.sample_rate != w.sample_rate) fail(ErrorCode::SampleRateMismatch, "trace and weight sample rates differ");
    double sr = 0.0, si = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        sr += trace.samples[k] * w.re[k];
        si += trace.samples[k] * w.im[k];
    }
    return Complex(sr, si) * trace.dt();
}

Complex demodulate(const VoltageTrace& trace, const WeightFunction& w) {
    return w.lambda_scale * demodulate_raw(trace, w);
}

WeightFunction normalize_lambda(WeightFunction w, const std::vector<VoltageTrace>& refs, Complex alpha0) {
    if (refs.empty()) fail(ErrorCode::EmptySamples, "no reference traces");
    Complex mean = 0.0;
    for (const VoltageTrace& v : refs) mean += demodulate_raw(v, w);
    mean /= static_cast<double>(refs.size());
    if (std::abs(mean) == 0.0 || !std::isfinite(std::abs(mean)))
        fail(ErrorCode::DegenerateNormalization, "reference traces demodulate to zero");
    w.lambda_scale = alpha0 / mean;
    return w;
}

double unit_noise_beta_variance(const WeightFunction& w) {
    // Var(Re beta) and Var(Im beta) for i.i.d. unit noise; averaged over the two quadratures.
    const double dt = 1.0 / w.sample_rate;
    double sum = 0.0;
    for (std::size_t k = 0; k < w.re.size(); ++k) sum += std::norm(w.lambda_scale * Complex(w.re[k], w.im[k]));
    return 0.5 * sum * dt * dt;
}

double husimi_q(const ReadoutState& state, Complex alpha) {
    const int dim = state.dim();
    // <alpha|n> = e^{-|alpha|^2/2} conj(alpha)^n / sqrt(n!)
    CVector bra(dim);
    bra[0] = std::exp(-0.5 * std::norm(alpha));
    const Complex ac = std::conj(alpha);
    for (int n = 1; n < dim; ++n) bra[n] = bra[n - 1] * ac / std::sqrt(static_cast<double>(n));
    if (state.is_pure()) return std::norm(bra.cwiseProduct(state.vector()).sum()) / std::numbers::pi;
    const Complex v = (bra.transpose() * state.density() * bra.conjugate()).value();
    return v.real() / std::numbers::pi;
}

namespace {

// Pure components sqrt(w_j) psi_j of a state, dropping negligible weight.
std::vector<CVector> pure_components(const ReadoutState& state) {
    if (state.is_pure()) return {state.vector()};
    Eigen::SelfAdjointEigenSolver<CMatrix> es(state.density());
    const Eigen::VectorXd& w = es.eigenvalues();
    std::vector<CVector> out;
    double dropped = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        // Ascending order: discard the smallest until 1e-12 total is dropped.
        if (w[j] <= 0.0 || dropped + w[j] < 1e-12) {
            dropped += std::max(w[j], 0.0);
            continue;
        }
        out.push_back(std::sqrt(w[j]) * es.eigenvectors().col(j));
    }
    return out;
}

}  // namespace

HusimiSampler::HusimiSampler(const ReadoutState& state, int grid_points) : n_(grid_points) {
    if (n_ < 3) fail(ErrorCode::InvalidArgument, "Husimi grid needs at least 3 points per axis");
    const int dim = state.dim();
    const double nbar = state.mean_photon_number();
    const Complex mean = mean_field(state);
    const double spread = std::sqrt(std::max(nbar + 1.0 - std::norm(mean), 0.5));
    half_width_ = std::abs(mean) + 6.0 * spread;
    step_ = 2.0 * half_width_ / (n_ - 1);

    // Horner coefficients c_n = psi_n / sqrt(n!) of each pure component.
    std::vector<CVector> coeffs = pure_components(state);
    for (CVector& c : coeffs) {
        double s = 1.0;
        for (int n = 1; n < dim; ++n) {
            s /= std::sqrt(static_cast<double>(n));
            c[n] *= s;
        }
    }

    const double cell = step_ * step_;
    cdf_.resize(static_cast<std::size_t>(n_) * n_);
    double total = 0.0;
    for (int iy = 0; iy < n_; ++iy) {
        const double y = -half_width_ + iy * step_;
        for (int ix = 0; ix < n_; ++ix) {
            const double x = -half_width_ + ix * step_;
            const Complex z(x, -y);  // conj(alpha)
            double q = 0.0;
            for (const CVector& c : coeffs) {
                Complex acc = c[dim - 1];
                for (int n = dim - 2; n >= 0; --n) acc = acc * z + c[n];
                q += std::norm(acc);
            }
            q *= std::exp(-(x * x + y * y)) / std::numbers::pi;
            total += q * cell;
            cdf_[static_cast<std::size_t>(iy) * n_ + ix] = total;
        }
    }
    captured_mass_ = total;
    if (!(std::abs(1.0 - total) <= 1e-4))
        fail(ErrorCode::TruncationOverflow,
             "Husimi grid captures mass " + std::to_string(total) + "; state exceeds the sampling window");
    for (double& c : cdf_) c /= total;
}

Complex HusimiSampler::sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double target = u(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    if (it == cdf_.end()) --it;
    const auto idx = static_cast<int>(it - cdf_.begin());
    const int iy = idx / n_, ix = idx % n_;
    // Cell-centered jitter.
    const double x = -half_width_ + (ix + u(rng) - 0.5) * step_;
    const double y = -half_width_ + (iy + u(rng) - 0.5) * step_;
    return {x, y};
}

Complex sample_measured_amplitude(const HusimiSampler& pre_loss, double eta, Rng& rng) {
    if (!(eta > 0.0 && eta <= 1.0)) fail(ErrorCode::InvalidEfficiency, "efficiency must lie in (0, 1]");
    const Complex alpha = pre_loss.sample(rng);
    if (eta == 1.0) return alpha;
    std::normal_distribution<double> n(0.0, std::sqrt((1.0 - eta) / (2.0 * eta)));
    const double nx = n(rng);
    const double ny = n(rng);
    return alpha + Complex(nx, ny);
}

Complex sample_measured_amplitude(const ReadoutState& released_state, double detection_efficiency, Rng& rng,
                                  double upstream_efficiency) {
    if (!(detection_efficiency > 0.0 && detection_efficiency <= 1.0))
        fail(ErrorCode::InvalidEfficiency, "detection efficiency must lie in (0, 1]");
    if (!(upstream_efficiency > 0.0 && upstream_efficiency <= 1.0))
        fail(ErrorCode::InvalidEfficiency, "upstream efficiency must lie in (0, 1]");
    const HusimiSampler sampler(released_state);
    const Complex beta = sample_measured_amplitude(sampler, detection_efficiency, rng);
    return beta / std::sqrt(upstream_efficiency);
}

TraceModel::TraceModel(const PumpPulse& pulse, const DeviceParams& params) : params_(params), pulse_(pulse) {
    const ModeTrajectory traj = classical_release(Complex(1.0, 0.0), pulse, params);
    std::vector<Complex> env = buffer_output_envelope(traj, params);
    // Keep only the uniformly sampled part of the trajectory.
    const double dt = 1.0 / params.sample_rate;
    std::size_t n = 0;
    while (n < traj.times.size() && std::abs(traj.times[n] - (traj.times[0] + n * dt)) < 1e-6 * dt) ++n;
    env.resize(n);
    unit_envelope_ = std::move(env);
    t_start_ = traj.times.front();
}

VoltageTrace TraceModel::trace(Complex r0, Branch branch, double noise_std, Rng& rng) const {
    std::vector<Complex> env(unit_envelope_.size());
    for (std::size_t k = 0; k < env.size(); ++k) env[k] = r0 * unit_envelope_[k];
    return synthesize_trace(env, params_.sample_rate, t_start_, params_, branch_detuning(branch, params_), noise_std,
                            rng);
}

double TraceModel::calibrated_noise_std(const WeightFunction& w) const {
    const double target = 0.5 / params_.eta - 0.5;
    if (target <= 0.0) return 0.0;
    return std::sqrt(target / unit_noise_beta_variance(w));
}

WeightFunction calibrate_demodulation(const TraceModel& model, Complex mean_g, Complex mean_e, Complex alpha0,
                                      int n_reference, std::uint64_t seed) {
    Rng quiet(seed);
    const VoltageTrace avg_g = model.trace(mean_g, Branch::g, 0.0, quiet);
    const VoltageTrace avg_e = model.trace(mean_e, Branch::e, 0.0, quiet);
    WeightFunction w = build_weight_function(avg_g, avg_e);
    if (w.degenerate) fail(ErrorCode::DegenerateNormalization, "g and e averaged traces coincide");
    // Exact gain from a noiseless reference, then the statistical normalization
    // on noisy records as done on hardware.
    w = normalize_lambda(std::move(w), {model.trace(alpha0, Branch::g, 0.0, quiet)}, alpha0);
    if (n_reference <= 0) return w;
    const double noise = model.calibrated_noise_std(w);
    const HusimiSampler ref_state(coherent_state(alpha0, std::max(kDefaultTruncation, static_cast<int>(
                                                                                  3.0 * std::norm(alpha0)) + 1)));
    std::vector<VoltageTrace> refs;
    refs.reserve(static_cast<std::size_t>(n_reference));
    for (int k = 0; k < n_reference; ++k) {
        Rng rng = make_rng(seed, 0x7265666572656e63ULL, static_cast<std::uint64_t>(k));
        refs.push_back(model.trace(ref_state.sample(rng), Branch::g, noise, rng));
    }
    return normalize_lambda(std::move(w), refs, alpha0);
}

}  // namespace seqread
