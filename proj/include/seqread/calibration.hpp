#pragma once

// Calibration procedures: photon number and decay, dispersive and Kerr
// rates, pi-pulse decay and thermal populations.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "seqread/dynamics.hpp"
#include "seqread/hilbert.hpp"
#include "seqread/random.hpp"

namespace seqread {

inline constexpr double kDefaultP1Scale = 0.95;

struct DecayCurve {
    std::vector<double> times;
    std::vector<double> p0;
    std::vector<double> p1;
    void validate() const;
};

/// p0 = exp(-n(t)), p1 = s n(t) exp(-n(t)) with n(t) = nbar e^{-kappa_r t}.
std::pair<double, double> fock_decay_model(double nbar, double kappa_r, double t, double p1_scale = kDefaultP1Scale);

DecayCurve simulate_decay_curve(double nbar, double kappa_r, const std::vector<double>& times, double noise_std,
                                Rng* rng, double p1_scale = kDefaultP1Scale);

struct PhotonCalibration {
    double nbar = 0.0;
    double kappa_r = 0.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    double nbar_stderr() const { return std::sqrt(covariance(0, 0)); }
    double kappa_stderr() const { return std::sqrt(covariance(1, 1)); }
};

PhotonCalibration fit_photon_calibration(const DecayCurve& curve, double p1_scale = kDefaultP1Scale);

struct DetuningSeries {
    std::vector<double> nbar;
    std::vector<double> detuning_g;  // rad/s
    std::vector<double> detuning_e;  // rad/s
    void validate() const;
};

/// Mean-field detuning -d arg<r>/dt of a coherent probe with mean photon
/// number nbar, from the exact branch evolution over [0, t_max].
double simulated_detuning(double nbar, Branch branch, const DeviceParams& params, double t_max = 100e-9,
                          int n_times = 21, int dim = kDefaultTruncation);

DetuningSeries simulate_detuning_series(const std::vector<double>& nbar, const DeviceParams& params,
                                        double t_max = 100e-9, int dim = kDefaultTruncation);

struct DispersiveFit {
    double chi = 0.0;
    double kerr_g = 0.0;
    double kerr_e = 0.0;
    double kerr_g_stderr = 0.0;
    double kerr_e_stderr = 0.0;
};

/// Linear fits of detuning versus nbar per branch over points with
/// nbar <= max_nbar: chi from the intercept difference, K = -slope / 2.
DispersiveFit fit_dispersive_and_kerr(const DetuningSeries& series, double max_nbar = 1e300);

/// exp(-n dt (1/t1 + 1/t2) / 2) for an odd number of pi pulses.
double pulse_fidelity_decay(int n_pulses, double dt, double t1, double t2);

/// Relabelings of (g, e, f): entry i names the original level whose
/// population sits at level i after the preparation pulses.
inline const std::array<std::string, 6> kThermalPermutations = {"gef", "gfe", "egf", "efg", "fge", "feg"};

struct ThermalSolution {
    double p_g = 0.0;
    double p_e = 0.0;
    double p_f = 0.0;
    double temperature = 0.0;  // K
    double residual = 0.0;     // rms distance of the fitted responses
};

/// Responses under each permutation for given populations.
std::array<Complex, 6> thermal_responses(const std::array<double, 3>& populations, const std::array<Complex, 3>& apexes);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Two-level Boltzmann temperature from p_e / p_g at qubit frequency omega_q.
double boltzmann_temperature(double p_g, double p_e, double omega_q);

ThermalSolution solve_thermal_populations(const std::array<Complex, 6>& responses, const std::array<Complex, 3>& apexes,
                                          double omega_q);

}  // namespace seqread
