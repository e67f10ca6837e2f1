#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "seqread/calibration.hpp"
#include "seqread/errors.hpp"
#include "seqread/fit.hpp"

using namespace seqread;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * k / (n - 1));
    return v;
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

// A coherent probe under -chi n - K n(n-1) keeps <a> = alpha e^{i chi t} exp(nbar (e^{2iKt} - 1)),
// so its phase is chi t + nbar sin(2 K t).
double analytic_detuning(double nbar, double chi, double kerr, double t_max, int n) {
    const std::vector<double> t = linspace(0.0, t_max, n);
    std::vector<double> ph;
    for (double tk : t) ph.push_back(chi * tk + nbar * std::sin(2.0 * kerr * tk));
    return -ls_slope(t, ph);
}

}  // namespace

TEST(FockDecay, EndpointsAndRatio) {
    const auto [p0, p1] = fock_decay_model(31.8, kTwoPi * 250e3, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(p0, std::exp(-31.8));
    EXPECT_DOUBLE_EQ(p1, 31.8 * std::exp(-31.8));
    const auto [q0, q1] = fock_decay_model(0.0, 1e6, 1e-7);
    EXPECT_EQ(q0, 1.0);
    EXPECT_EQ(q1, 0.0);
    for (double t : linspace(0.0, 5e-6, 11)) {
        const auto [a, b] = fock_decay_model(12.0, 2e6, t, 1.0);
        EXPECT_NEAR(b / a, 12.0 * std::exp(-2e6 * t), 1e-12 * 12.0);
    }
}

TEST(FockDecay, CrossingTime) {
    const double nbar = 31.8, kappa = kTwoPi * 250e3;
    const double t_cross = std::log(nbar) / kappa;
    const auto [p0, p1] = fock_decay_model(nbar, kappa, t_cross, 1.0);
    EXPECT_NEAR(p0, p1, 1e-14);
    EXPECT_NEAR(p0, std::exp(-1.0), 1e-12);
}

TEST(FockDecay, RejectsBadInput) {
    EXPECT_THROW(fock_decay_model(-1.0, 1e6, 0.0), Error);
    EXPECT_THROW(fock_decay_model(1.0, 0.0, 0.0), Error);
    DecayCurve c{{0.0, 1.0, 1.0}, {1, 1, 1}, {0, 0, 0}};
    EXPECT_THROW(c.validate(), Error);
}

TEST(PhotonFit, NoiselessRecovery) {
    const double nbar = 31.8, kappa = kTwoPi * 250e3;
    const DecayCurve c = simulate_decay_curve(nbar, kappa, linspace(0.0, 4e-6, 40), 0.0, nullptr);
    const PhotonCalibration f = fit_photon_calibration(c);
    EXPECT_NEAR(f.nbar / nbar, 1.0, 1e-6);
    EXPECT_NEAR(f.kappa_r / kappa, 1.0, 1e-6);
}

TEST(PhotonFit, RandomDrawsRoundTrip) {
    Rng rng(2024);
    std::uniform_real_distribution<double> un(2.0, 40.0), uk(kTwoPi * 100e3, kTwoPi * 1e6);
    for (int trial = 0; trial < 25; ++trial) {
        const double nbar = un(rng), kappa = uk(rng);
        const double t_max = (std::log(nbar) + 4.0) / kappa;
        const DecayCurve c = simulate_decay_curve(nbar, kappa, linspace(0.0, t_max, 60), 0.0, nullptr);
        const PhotonCalibration f = fit_photon_calibration(c);
        EXPECT_NEAR(f.nbar / nbar, 1.0, 1e-6) << nbar << " " << kappa;
        EXPECT_NEAR(f.kappa_r / kappa, 1.0, 1e-6) << nbar << " " << kappa;
    }
}

TEST(PhotonFit, OnePercentNoiseMonteCarlo) {
    // 100 points over 4 us, as in the default calibration configuration.
    const double nbar = 31.8, kappa = kTwoPi * 250e3;
    const std::vector<double> t = linspace(0.0, 4e-6, 100);
    double sn = 0.0, sk = 0.0, cov_n = 0.0;
    const int draws = 200;
    for (int s = 0; s < draws; ++s) {
        Rng rng = make_rng(99, 1, static_cast<std::uint64_t>(s));
        const PhotonCalibration f = fit_photon_calibration(simulate_decay_curve(nbar, kappa, t, 0.01, &rng));
        sn += std::pow(f.nbar / nbar - 1.0, 2);
        sk += std::pow(f.kappa_r / kappa - 1.0, 2);
        cov_n += f.nbar_stderr() / nbar;
    }
    const double rms_n = std::sqrt(sn / draws), rms_k = std::sqrt(sk / draws);
    EXPECT_LT(rms_n, 0.02);
    EXPECT_LT(rms_k, 0.02);
    // Reported standard errors match the observed scatter.
    EXPECT_NEAR(cov_n / draws, rms_n, 0.3 * rms_n);
}

TEST(PhotonFit, NeedsFivePoints) {
    const DecayCurve c = simulate_decay_curve(5.0, 1e6, linspace(0.0, 1e-6, 4), 0.0, nullptr);
    try {
        fit_photon_calibration(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(Detuning, MatchesClosedFormMeanField) {
    const DeviceParams d;
    for (double nbar : {1.0, 6.0, 15.0}) {
        EXPECT_NEAR(simulated_detuning(nbar, Branch::e, d), analytic_detuning(nbar, d.chi, d.kerr_e, 100e-9, 21),
                    1e-6 * d.chi);
        EXPECT_NEAR(simulated_detuning(nbar, Branch::g, d), analytic_detuning(nbar, 0.0, d.kerr_g, 100e-9, 21),
                    1e-6 * d.chi);
    }
}

TEST(DispersiveFit, DefaultRoundTrip) {
    const DeviceParams d;
    const DetuningSeries s = simulate_detuning_series({1, 2, 4, 6, 8, 10, 12, 15}, d);
    const DispersiveFit f = fit_dispersive_and_kerr(s);
    EXPECT_NEAR(f.chi / (kTwoPi * 2.05e6), 1.0, 0.01);
    EXPECT_NEAR(f.kerr_g / (kTwoPi * 8.4e3), 1.0, 0.01);
    EXPECT_NEAR(f.kerr_e / (kTwoPi * 37e3), 1.0, 0.01);
}

TEST(DispersiveFit, ResimulationReproducesSeries) {
    const DeviceParams d;
    const std::vector<double> nbar = {1, 3, 5, 8, 12};
    const DetuningSeries s = simulate_detuning_series(nbar, d);
    const DispersiveFit f = fit_dispersive_and_kerr(s);
    DeviceParams refit = d;
    refit.chi = f.chi;
    refit.kerr_g = f.kerr_g;
    refit.kerr_e = f.kerr_e;
    const DetuningSeries again = simulate_detuning_series(nbar, refit);
    for (std::size_t k = 0; k < nbar.size(); ++k) {
        EXPECT_NEAR(again.detuning_g[k], s.detuning_g[k], 1e-3 * d.chi);
        EXPECT_NEAR(again.detuning_e[k], s.detuning_e[k], 1e-3 * d.chi);
    }
}

TEST(DispersiveFit, ZeroKerrHasFlatSlopes) {
    DeviceParams d;
    d.kerr_g = d.kerr_e = 0.0;
    const DispersiveFit f = fit_dispersive_and_kerr(simulate_detuning_series({1, 4, 8, 12}, d));
    EXPECT_NEAR(f.kerr_g, 0.0, 1e-6 * d.chi + 3.0 * f.kerr_g_stderr);
    EXPECT_NEAR(f.kerr_e, 0.0, 1e-6 * d.chi + 3.0 * f.kerr_e_stderr);
    EXPECT_NEAR(f.chi / d.chi, 1.0, 1e-9);
}

TEST(DispersiveFit, QuadraticContaminationRestrictedFit) {
    const double chi = kTwoPi * 2.05e6, kg = kTwoPi * 8.4e3, ke = kTwoPi * 37e3;
    const double c2 = kTwoPi * 40.0;  // rad/s per photon^2
    DetuningSeries s;
    for (double n = 1; n <= 40; n += 1) {
        s.nbar.push_back(n);
        s.detuning_g.push_back(-2.0 * kg * n - c2 * n * n);
        s.detuning_e.push_back(-chi - 2.0 * ke * n - c2 * n * n);
    }
    const DispersiveFit full = fit_dispersive_and_kerr(s);
    EXPECT_GT(std::abs(full.kerr_g / kg - 1.0), 0.05);
    // On n = 1..N the least-squares slope of n^2 is N + 1.
    const DispersiveFit f = fit_dispersive_and_kerr(s, 15.0);
    EXPECT_NEAR(f.kerr_g, kg + 0.5 * c2 * 16.0, 1e-9 * kg);
    EXPECT_NEAR(f.chi / chi, 1.0, 0.05);
    EXPECT_NEAR(f.kerr_g / kg, 1.0, 0.05);
    EXPECT_NEAR(f.kerr_e / ke, 1.0, 0.05);
}

TEST(DispersiveFit, TooFewPoints) {
    DetuningSeries s{{1, 2}, {0, 0}, {1, 1}};
    try {
        fit_dispersive_and_kerr(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
    }
}

TEST(PulseDecay, SinglePulse) {
    EXPECT_NEAR(pulse_fidelity_decay(1, 35e-9, 6.1e-6, 9.2e-6), 0.99524, 0.0005);
    EXPECT_NEAR(pulse_fidelity_decay(1, 35e-9, 6.1e-6, 9.2e-6), 0.995, 0.001);
    EXPECT_EQ(pulse_fidelity_decay(5, 0.0, 6.1e-6, 9.2e-6), 1.0);
}

TEST(PulseDecay, ExponentLinearity) {
    const double one = pulse_fidelity_decay(1, 35e-9, 6.1e-6, 9.2e-6);
    EXPECT_NEAR(pulse_fidelity_decay(3, 35e-9, 6.1e-6, 9.2e-6), one * one * one, 1e-15);
}

TEST(PulseDecay, EvenCountRejected) {
    for (int n : {0, 2, -1}) {
        try {
            pulse_fidelity_decay(n, 35e-9, 6.1e-6, 9.2e-6);
            FAIL() << n;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidProtocol);
        }
    }
}

namespace {
// Readout responses of g, e, f in mV.
const std::array<Complex, 3> kApexes = {Complex(-2.0, 0.0), Complex(2.0, 0.0), Complex(0.0, 3.0)};
constexpr double kOmegaQ = kTwoPi * 4.45e9;
}  // namespace

TEST(Thermal, ApexPermutationsExact) {
    const ThermalSolution s = solve_thermal_populations(thermal_responses({1.0, 0.0, 0.0}, kApexes), kApexes, kOmegaQ);
    EXPECT_NEAR(s.p_g, 1.0, 1e-12);
    EXPECT_NEAR(s.p_e, 0.0, 1e-12);
    EXPECT_NEAR(s.p_f, 0.0, 1e-12);
    EXPECT_LT(s.temperature, 0.01);
}

TEST(Thermal, FortyFourMillikelvin) {
    const ThermalSolution s =
        solve_thermal_populations(thermal_responses({0.992, 0.008, 0.0}, kApexes), kApexes, kOmegaQ);
    EXPECT_NEAR(s.p_e, 0.008, 1e-12);
    // h f / (k_B ln(p_g / p_e)) with SI constants written out.
    const double expected = 6.62607015e-34 * 4.45e9 / (1.380649e-23 * std::log(0.992 / 0.008));
    EXPECT_NEAR(s.temperature, expected, 1e-9);
    EXPECT_NEAR(s.temperature, 0.044, 0.002);
}

TEST(Thermal, NoisyResponsesMonteCarlo) {
    // Unconstrained least-squares spread sigma^2 (A^T A)^{-1}, built independently of the solver.
    const double sigma = 0.01;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(12, 3);
    const char* perms[6] = {"gef", "gfe", "egf", "efg", "fge", "feg"};
    for (int k = 0; k < 6; ++k)
        for (int i = 0; i < 3; ++i) {
            const int col = perms[k][i] == 'g' ? 0 : perms[k][i] == 'e' ? 1 : 2;
            a(2 * k, col) += kApexes[i].real();
            a(2 * k + 1, col) += kApexes[i].imag();
        }
    const Eigen::Matrix3d cov = sigma * sigma * (a.transpose() * a).inverse();
    const double sd_e = std::sqrt(cov(1, 1));
    EXPECT_LT(2.0 * sd_e, 0.005);

    Rng rng(17);
    std::normal_distribution<double> noise(0.0, sigma);
    const int trials = 2000;
    int inside = 0;
    double err2 = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        auto r = thermal_responses({0.992, 0.008, 0.0}, kApexes);
        for (Complex& c : r) c += Complex(noise(rng), noise(rng));
        const ThermalSolution s = solve_thermal_populations(r, kApexes, kOmegaQ);
        inside += std::abs(s.p_g - 0.992) <= 0.005 && std::abs(s.p_e - 0.008) <= 0.005 && s.p_f <= 0.005;
        err2 += std::pow(s.p_g - 0.992, 2) + std::pow(s.p_e - 0.008, 2) + std::pow(s.p_f, 2);
    }
    EXPECT_GE(inside, static_cast<int>(0.95 * trials));
    // Projecting onto the simplex, which holds the truth, cannot enlarge the error.
    EXPECT_LE(std::sqrt(err2 / trials), 1.05 * std::sqrt(cov.trace()));
}

TEST(Thermal, OutputOnSimplex) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        std::array<Complex, 6> r;
        for (Complex& c : r) c = Complex(u(rng), u(rng));
        ThermalSolution s;
        try {
            s = solve_thermal_populations(r, kApexes, kOmegaQ);
        } catch (const Error& e) {
            // Inverted populations carry no temperature.
            EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
            continue;
        }
        EXPECT_GE(s.p_g, 0.0);
        EXPECT_GE(s.p_e, 0.0);
        EXPECT_GE(s.p_f, 0.0);
        EXPECT_NEAR(s.p_g + s.p_e + s.p_f, 1.0, 1e-12);
    }
}

TEST(Thermal, CollinearApexes) {
    const std::array<Complex, 3> line = {Complex(0, 0), Complex(1, 1), Complex(2, 2)};
    try {
        solve_thermal_populations(thermal_responses({1, 0, 0}, line), line, kOmegaQ);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
    }
}

TEST(Simplex, ProjectionProperties) {
    Rng rng(8);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd v(4);
        for (int i = 0; i < 4; ++i) v[i] = nd(rng);
        const Eigen::VectorXd p = project_to_simplex(v);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GE(p.minCoeff(), 0.0);
        // Idempotent.
        EXPECT_LT((project_to_simplex(p) - p).norm(), 1e-12);
    }
}

TEST(LeastSquares, ExponentialRecoveryAndCovariance) {
    const std::vector<double> x = linspace(0.0, 3.0, 30);
    Rng rng(4);
    std::normal_distribution<double> nd(0.0, 1e-3);
    std::vector<double> y;
    for (double xi : x) y.push_back(2.0 * std::exp(-1.3 * xi) + nd(rng));
    const ResidualFn f = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t k = 0; k < x.size(); ++k) r[static_cast<Eigen::Index>(k)] = p[0] * std::exp(-p[1] * x[k]) - y[k];
        return r;
    };
    const LmResult res = levenberg_marquardt(f, Eigen::Vector2d(1.0, 0.5));
    EXPECT_NEAR(res.params[0], 2.0, 5.0 * std::sqrt(res.covariance(0, 0)));
    EXPECT_NEAR(res.params[1], 1.3, 5.0 * std::sqrt(res.covariance(1, 1)));
    EXPECT_GT(res.covariance(0, 0), 0.0);
    EXPECT_LT(std::sqrt(res.covariance(1, 1)), 1e-2);
}

TEST(LeastSquares, ErrorMapping) {
    const ResidualFn flat = [](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(3);
        r << p[0] - 1.0, p[0] + 1.0, 2.0 * p[0];
        return r;
    };
    try {
        levenberg_marquardt(flat, Eigen::Vector2d(0.3, 0.7));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
    }
    const ResidualFn bad = [](const Eigen::VectorXd& p) { return Eigen::VectorXd::Constant(3, std::log(p[0] - 5.0)); };
    try {
        levenberg_marquardt(bad, Eigen::Vector2d(1.0, 1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NumericDivergence);
    }
}
