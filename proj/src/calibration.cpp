#include "seqread/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqread/errors.hpp"
#include "seqread/fit.hpp"

namespace seqread {

namespace {

constexpr double kHbar = 1.054571817e-34;
constexpr double kBoltzmann = 1.380649e-23;

int level_index(char c) {
    switch (c) {
        case 'g': return 0;
        case 'e': return 1;
        case 'f': return 2;
    }
    fail(ErrorCode::InvalidArgument, std::string("unknown transmon level '") + c + "'");
}

// Slope and intercept of an ordinary least-squares line, with slope stderr.
struct Line {
    double slope, intercept, slope_stderr;
};

Line fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        a(k, 0) = x[static_cast<std::size_t>(k)];
        a(k, 1) = 1.0;
        b[k] = y[static_cast<std::size_t>(k)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 2) fail(ErrorCode::RankDeficient, "linear fit needs at least two distinct abscissae");
    const Eigen::Vector2d c = qr.solve(b);
    const double rss = (a * c - b).squaredNorm();
    const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
    const Eigen::Matrix2d cov = s2 * (a.transpose() * a).inverse();
    return {c[0], c[1], std::sqrt(std::max(cov(0, 0), 0.0))};
}

}  // namespace

void DecayCurve::validate() const {
    if (times.size() != p0.size() || times.size() != p1.size())
        fail(ErrorCode::LengthMismatch, "decay curve arrays differ in length");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) fail(ErrorCode::InvalidArgument, "decay curve times must increase");
}

std::pair<double, double> fock_decay_model(double nbar, double kappa_r, double t, double p1_scale) {
    if (!(nbar >= 0.0)) fail(ErrorCode::InvalidArgument, "nbar must be >= 0");
    if (!(kappa_r > 0.0)) fail(ErrorCode::InvalidArgument, "kappa_r must be > 0");
    const double n = nbar * std::exp(-kappa_r * t);
    const double p0 = std::exp(-n);
    return {p0, p1_scale * n * p0};
}

DecayCurve simulate_decay_curve(double nbar, double kappa_r, const std::vector<double>& times, double noise_std,
                                Rng* rng, double p1_scale) {
    DecayCurve c;
    c.times = times;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double t : times) {
        auto [p0, p1] = fock_decay_model(nbar, kappa_r, t, p1_scale);
        if (noise_std > 0.0 && rng) {
            p0 += noise_std * noise(*rng);
            p1 += noise_std * noise(*rng);
        }
        c.p0.push_back(p0);
        c.p1.push_back(p1);
    }
    return c;
}

PhotonCalibration fit_photon_calibration(const DecayCurve& curve, double p1_scale) {
    curve.validate();
    if (curve.times.size() < 5) fail(ErrorCode::InvalidArgument, "photon calibration needs at least 5 time points");

    // Start point: where p0 and p1 both carry information, ln(p1 / (s p0)) = ln nbar - kappa t.
    std::vector<double> tx, ly;
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        if (curve.p0[k] > 1e-3 && curve.p1[k] > 1e-3) {
            tx.push_back(curve.times[k]);
            ly.push_back(std::log(curve.p1[k] / (p1_scale * curve.p0[k])));
        }
    }
    double nbar0 = 1.0, kappa0 = 1.0 / std::max(curve.times.back() - curve.times.front(), 1e-12);
    if (tx.size() >= 2) {
        const Line l = fit_line(tx, ly);
        if (l.slope < 0.0) {
            kappa0 = -l.slope;
            nbar0 = std::exp(l.intercept);
        }
    }

    const auto m = static_cast<Eigen::Index>(curve.times.size());
    auto residuals = [&](const Eigen::VectorXd& p) {
        const double nbar = std::abs(p[0]) * nbar0, kappa = std::abs(p[1]) * kappa0;
        Eigen::VectorXd r(2 * m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto i = static_cast<std::size_t>(k);
            const auto [p0, p1] = fock_decay_model(nbar, kappa, curve.times[i], p1_scale);
            r[k] = p0 - curve.p0[i];
            r[m + k] = p1 - curve.p1[i];
        }
        return r;
    };
    const LmResult res = levenberg_marquardt(residuals, Eigen::Vector2d(1.0, 1.0));
    PhotonCalibration out;
    out.nbar = std::abs(res.params[0]) * nbar0;
    out.kappa_r = std::abs(res.params[1]) * kappa0;
    const Eigen::Vector2d s(nbar0, kappa0);
    out.covariance = s.asDiagonal() * res.covariance * s.asDiagonal();
    return out;
}

void DetuningSeries::validate() const {
    if (nbar.size() != detuning_g.size() || nbar.size() != detuning_e.size())
        fail(ErrorCode::LengthMismatch, "detuning series arrays differ in length");
    for (std::size_t k = 0; k < nbar.size(); ++k) {
        if (!(nbar[k] >= 0.0)) fail(ErrorCode::InvalidArgument, "nbar must be >= 0");
        if (k > 0 && !(nbar[k] > nbar[k - 1])) fail(ErrorCode::InvalidArgument, "nbar must increase");
    }
}

double simulated_detuning(double nbar, Branch branch, const DeviceParams& params, double t_max, int n_times,
                          int dim) {
    if (n_times < 3) fail(ErrorCode::InvalidArgument, "need at least 3 time points");
    const ReadoutState probe = coherent_state(std::sqrt(nbar), dim);
    std::vector<double> t(static_cast<std::size_t>(n_times)), phase(static_cast<std::size_t>(n_times));
    double previous = 0.0;
    for (int k = 0; k < n_times; ++k) {
        const double tk = t_max * k / (n_times - 1);
        const Complex m = mean_field(evolve_interaction(probe, branch, tk, params, false));
        double ph = std::arg(m);
        // Unwrap against the previous sample.
        while (k > 0 && ph - previous > std::numbers::pi) ph -= kTwoPi;
        while (k > 0 && ph - previous < -std::numbers::pi) ph += kTwoPi;
        previous = ph;
        t[static_cast<std::size_t>(k)] = tk;
        phase[static_cast<std::size_t>(k)] = ph;
    }
    return -fit_line(t, phase).slope;
}

DetuningSeries simulate_detuning_series(const std::vector<double>& nbar, const DeviceParams& params, double t_max,
                                        int dim) {
    DetuningSeries s;
    s.nbar = nbar;
    for (double n : nbar) {
        // A vacuum probe has no phase; use a vanishing amplitude instead.
        const double probe = std::max(n, 1e-6);
        s.detuning_g.push_back(simulated_detuning(probe, Branch::g, params, t_max, 21, dim));
        s.detuning_e.push_back(simulated_detuning(probe, Branch::e, params, t_max, 21, dim));
    }
    s.validate();
    return s;
}

DispersiveFit fit_dispersive_and_kerr(const DetuningSeries& series, double max_nbar) {
    series.validate();
    std::vector<double> x, yg, ye;
    for (std::size_t k = 0; k < series.nbar.size(); ++k) {
        if (series.nbar[k] > max_nbar) continue;
        x.push_back(series.nbar[k]);
        yg.push_back(series.detuning_g[k]);
        ye.push_back(series.detuning_e[k]);
    }
    if (x.size() < 3) fail(ErrorCode::RankDeficient, "need at least 3 photon numbers per branch");
    const Line lg = fit_line(x, yg), le = fit_line(x, ye);
    DispersiveFit f;
    f.chi = lg.intercept - le.intercept;
    f.kerr_g = -0.5 * lg.slope;
    f.kerr_e = -0.5 * le.slope;
    f.kerr_g_stderr = 0.5 * lg.slope_stderr;
    f.kerr_e_stderr = 0.5 * le.slope_stderr;
    return f;
}

double pulse_fidelity_decay(int n_pulses, double dt, double t1, double t2) {
    if (n_pulses <= 0 || n_pulses % 2 == 0)
        fail(ErrorCode::InvalidProtocol, "the decay protocol needs a positive odd number of pi pulses");
    if (!(dt >= 0.0)) fail(ErrorCode::InvalidTime, "pulse duration must be >= 0");
    if (!(t1 > 0.0 && t2 > 0.0)) fail(ErrorCode::InvalidArgument, "t1 and t2 must be > 0");
    return std::exp(-n_pulses * dt * (1.0 / t1 + 1.0 / t2) / 2.0);
}

std::array<Complex, 6> thermal_responses(const std::array<double, 3>& p, const std::array<Complex, 3>& apexes) {
    std::array<Complex, 6> out{};
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < 3; ++i)
            out[k] += apexes[i] * p[static_cast<std::size_t>(level_index(kThermalPermutations[k][i]))];
    return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

double boltzmann_temperature(double p_g, double p_e, double omega_q) {
    if (!(p_g > 0.0)) fail(ErrorCode::InvalidArgument, "ground population must be positive");
    if (p_e <= 0.0) return 0.0;
    if (p_e >= p_g) fail(ErrorCode::InvalidArgument, "population inversion has no positive temperature");
    return kHbar * omega_q / (kBoltzmann * std::log(p_g / p_e));
}

ThermalSolution solve_thermal_populations(const std::array<Complex, 6>& responses, const std::array<Complex, 3>& apexes,
                                          double omega_q) {
    const Complex u = apexes[1] - apexes[0], v = apexes[2] - apexes[0];
    const double area = std::abs((std::conj(u) * v).imag());
    const double scale = std::max({std::norm(u), std::norm(v), std::norm(apexes[2] - apexes[1])});
    if (!(scale > 0.0) || area <= 1e-9 * scale) fail(ErrorCode::DegenerateGeometry, "reference apexes are collinear");

    // Real system: 12 rows (Re, Im of each response), 3 unknown populations.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(12, 3);
    Eigen::VectorXd b(12);
    for (std::size_t k = 0; k < 6; ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            const int col = level_index(kThermalPermutations[k][i]);
            a(static_cast<Eigen::Index>(2 * k), col) += apexes[i].real();
            a(static_cast<Eigen::Index>(2 * k + 1), col) += apexes[i].imag();
        }
        b[static_cast<Eigen::Index>(2 * k)] = responses[k].real();
        b[static_cast<Eigen::Index>(2 * k + 1)] = responses[k].imag();
    }
    const Eigen::VectorXd raw = a.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd p = project_to_simplex(raw);

    ThermalSolution s;
    s.p_g = p[0];
    s.p_e = p[1];
    s.p_f = p[2];
    s.residual = std::sqrt((a * p - b).squaredNorm() / 6.0);
    s.temperature = boltzmann_temperature(s.p_g, s.p_e, omega_q);
    return s;
}

}  // namespace seqread
