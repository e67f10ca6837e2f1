#pragma once

// Flat "section.key = value" experiment configuration. Physical quantities
// carry their SI unit in the key name.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "seqread/discrimination.hpp"
#include "seqread/dynamics.hpp"
#include "seqread/release.hpp"
#include "seqread/tomography.hpp"

namespace seqread {

enum class MeasurementPath { direct, trace };
enum class WignerMode { direct, protocol };

struct ReadoutOptions {
    bool thermal_errors = true;
    bool pulse_errors = true;
    bool qubit_decay = true;
    bool cavity_decay = false;
    double displacement_time = 10e-9;  // probe loading before the interaction window
    double measurement_time = 220e-9;  // load + interact + release
    double t1_bin = 2e-9;              // quantization of relaxation times
    int hist_bins = 200;
    double hist_range = 16.0;  // half-width; keeps >= 99.9% coverage at eta = 0.11
    int reference_runs = 2000;  // lambda normalization records (trace path)
    bool qnd = false;
    double qnd_spacing = 220e-9;
    double demolition_probability = 0.0;
};

struct SweepOptions {
    std::vector<double> alpha0 = {2.1, 4.0, 5.8, 7.0};
    std::vector<double> t_int = {0.0, 50e-9, 100e-9, 150e-9, 200e-9};
    long n_runs = 20000;
};

struct ReleaseStudyOptions {
    std::vector<double> sigma = {5e-9, 10e-9, 20e-9, 28e-9, 40e-9, 60e-9, 80e-9, 100e-9};
    std::vector<double> g_max = {0.0, kTwoPi * 3e6, kTwoPi * 5e6, kTwoPi * 7.2e6};
    bool refit = false;
};

struct WignerOptions {
    std::vector<double> t_int = {0.0, 100e-9};
    WignerMode mode = WignerMode::direct;
    WignerGrid grid;
    double rotation_g_deg = 24.0;
    double rotation_e_deg = 97.0;
    int n_shots = 5000;
    bool exact = false;
    double readout_error_g = 0.016;
    double readout_error_e = 0.034;
};

struct CalibrationOptions {
    double nbar = 31.8;
    double noise = 0.01;
    int n_points = 100;
    double t_max = 4e-6;
    std::vector<double> nbar_list = {1, 2, 4, 6, 8, 10, 12, 15};
};

struct ExperimentConfig {
    DeviceParams device;
    PumpPulse pulse;
    Complex alpha0 = 5.8;
    double t_int = 100e-9;
    long n_runs = 100000;
    std::uint64_t seed = 1;
    int truncation = kDefaultTruncation;
    MeasurementPath measurement_path = MeasurementPath::direct;
    std::string output_dir = "out";
    int threads = 1;

    ReadoutOptions readout;
    SweepOptions sweep;
    ReleaseStudyOptions release;
    WignerOptions wigner;
    CalibrationOptions calibration;

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

/// Parses the key-value text; unknown keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Serializes every key (round-trips through parse_config).
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace seqread
