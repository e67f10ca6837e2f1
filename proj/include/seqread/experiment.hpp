#pragma once

// Composition of the modules into full measurement runs, sweeps and studies.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqread/calibration.hpp"
#include "seqread/config.hpp"
#include "seqread/discrimination.hpp"
#include "seqread/io.hpp"
#include "seqread/signal.hpp"
#include "seqread/tomography.hpp"

namespace seqread {

/// Imperfection events of one run, drawn before any amplitude is sampled.
struct RunEvents {
    bool started_excited = false;  // thermal population
    bool pulse_failed = false;     // e preparation only
    bool excited = false;          // qubit state at the start of the probe load
    bool relaxed = false;          // e -> g jump before the interaction window closed
    bool excited_at_release = false;
    int state_key = 0;             // 0: g throughout, 1: e throughout, 2 + k: jump after k bins
    std::optional<int> second_key; // state of a follow-up readout (QND mode)
};

/// Contributions to the error rates, each as a fraction of runs of the
/// given preparation.
struct ErrorBudget {
    double thermal_g = 0.0;              // g-prepared runs that started excited
    double thermal_e = 0.0;              // e-prepared runs that started excited
    double pulse_failure_e = 0.0;        // e-prepared runs whose pi pulse failed
    double relaxation_e = 0.0;           // e-prepared runs that relaxed during load + interaction
    double relaxation_misread_e = 0.0;   // ... and were read as g
    double preparation_misread_e = 0.0;  // e-prepared runs left in g by thermal/pulse errors and read as g
    double intrinsic_e = 0.0;            // event-free e-prepared runs read as g
    double intrinsic_g = 0.0;            // event-free g-prepared runs read as e
};

struct Ensembles {
    std::vector<Complex> beta_g;
    std::vector<Complex> beta_e;
    std::vector<RunEvents> events_g;
    std::vector<RunEvents> events_e;
    // Follow-up readout amplitudes (QND mode only).
    std::vector<Complex> second_g;
    std::vector<Complex> second_e;
    std::optional<WeightFunction> weight;
    std::optional<VoltageTrace> example_trace;
};

struct EnsembleRequest {
    Complex alpha0 = 5.8;
    double t_int = 100e-9;
    long n_runs = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    MeasurementPath path = MeasurementPath::direct;
    bool qnd = false;
};

/// Monte-Carlo readout of both preparations; deterministic given the seed
/// and independent of the thread count.
Ensembles simulate_ensembles(const ExperimentConfig& cfg, const EnsembleRequest& req);

/// Truncation used for a probe amplitude: the configured one, raised to keep
/// |alpha0|^2 <= dim / 3.
int working_truncation(const ExperimentConfig& cfg, Complex alpha0);

BinGrid readout_grid(const ExperimentConfig& cfg);

struct ReadoutResult {
    ReadoutReport report;
    ErrorBudget budget;
    AmplitudeHistogram hist_g;
    AmplitudeHistogram hist_e;
    Ensembles ensembles;
};

ReadoutResult run_readout(const ExperimentConfig& cfg);

struct SweepCell {
    double alpha0;
    double t_int;
    double overlap;
};

std::vector<SweepCell> sweep_overlap(const ExperimentConfig& cfg, const std::vector<double>& alpha0_list,
                                     const std::vector<double>& t_int_list);

struct ReleaseCell {
    double sigma;
    double g_max;
    double remaining;
    bool validated;
};

struct ReleaseStudy {
    std::vector<ReleaseCell> cells;
    std::vector<std::pair<double, EffectiveReleaseFit>> refits;  // per nominal g_max
};

ReleaseStudy run_release_study(const ExperimentConfig& cfg, const std::vector<double>& sigma_list,
                               const std::vector<double>& g_max_list);

struct WignerResult {
    Branch branch;
    double t_int;
    WignerMap map;
};

std::vector<WignerResult> run_wigner(const ExperimentConfig& cfg);

/// Synthetic calibration round trips, reported as key-value entries.
std::vector<std::pair<std::string, std::string>> run_calibration(const ExperimentConfig& cfg);

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

/// Fast invariant suite exercised by the selfcheck command.
std::vector<CheckResult> run_selfcheck(const ExperimentConfig& cfg);

/// Output writers; `png` enables best-effort rasters next to the CSVs.
void write_readout_outputs(const ExperimentConfig& cfg, const ReadoutResult& r, bool png);
void write_sweep_outputs(const ExperimentConfig& cfg, const std::vector<SweepCell>& cells, bool png);
void write_release_outputs(const ExperimentConfig& cfg, const ReleaseStudy& study);
void write_wigner_outputs(const ExperimentConfig& cfg, const std::vector<WignerResult>& maps, bool png);

std::string readout_report_text(const ReadoutResult& r);

}  // namespace seqread
