#pragma once

// Conditional evolution of the readout mode while it interacts with the qubit.

#include <numbers>

#include "seqread/hilbert.hpp"
#include "seqread/ode.hpp"
#include "seqread/random.hpp"

namespace seqread {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Physical constants of the device. Angular frequencies in rad/s, rates in
/// 1/s, times in s. Defaults reproduce the characterized sample.
struct DeviceParams {
    double chi = kTwoPi * 2.05e6;
    double kerr_g = kTwoPi * 8.4e3;
    double kerr_e = kTwoPi * 37e3;
    double kappa_r = kTwoPi * 250e3;
    double kappa_b = kTwoPi * 21e6;
    double t1 = 6.1e-6;
    double t2 = 9.2e-6;
    double eta = 0.11;
    double if_freq = 50e6;
    double sample_rate = 1e9;
    double thermal_excitation = 0.008;
    double pi_pulse_fidelity = 0.995;
    // Documentation only; the simulation works in the rotating frame.
    double omega_q = kTwoPi * 4.45e9;
    double omega_r = kTwoPi * 3.73e9;
    double omega_b = kTwoPi * 10.22e9;

    /// Throws ErrorCode::InvalidArgument when an invariant is violated.
    void validate() const;
};

/// Diagonal of H_int / hbar in the Fock basis:
///   g: -K_g n(n-1);  e: -chi n - K_e n(n-1).
Eigen::VectorXd interaction_energies(Branch branch, const DeviceParams& params, int dim);

FockOperator interaction_hamiltonian(Branch branch, const DeviceParams& params, int dim);

/// Evolves the readout mode for t_int under the branch Hamiltonian. Without
/// decay the propagator is the exact per-level phase; with decay the Lindblad
/// equation with collapse operator sqrt(kappa_r) r is integrated.
ReadoutState evolve_interaction(const ReadoutState& state, Branch branch, double t_int,
                                const DeviceParams& params, bool include_decay);

/// Lindblad evolution for an arbitrary diagonal Hamiltonian and loss rate kappa.
ReadoutState evolve_lindblad(const ReadoutState& state, const Eigen::VectorXd& energies, double kappa,
                             double t, const OdeOptions& opts = {1e-8, 1e-10});

/// Interaction in which the qubit relaxes e -> g after `relax_time` (clamped
/// to [0, t_int]); a relax_time >= t_int means no jump.
ReadoutState evolve_with_relaxation(const ReadoutState& state, double t_int, double relax_time,
                                    const DeviceParams& params, bool include_decay);

/// <r> of the state.
Complex mean_field(const ReadoutState& state);

/// Exponentially distributed e -> g jump time.
double sample_relaxation_time(double t1, Rng& rng);

}  // namespace seqread
