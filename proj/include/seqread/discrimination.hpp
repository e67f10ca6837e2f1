#pragma once

// Histograms of measured amplitudes, overlap, decision region and error rates.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "seqread/hilbert.hpp"

namespace seqread {

struct BinGrid {
    std::vector<double> x_edges;
    std::vector<double> y_edges;

    static BinGrid uniform(int nx, int ny, double lo, double hi);
    /// Default: 200 x 200 over [-12, 12]^2.
    static BinGrid standard() { return uniform(200, 200, -12.0, 12.0); }

    int nx() const { return static_cast<int>(x_edges.size()) - 1; }
    int ny() const { return static_cast<int>(y_edges.size()) - 1; }
    double bin_area(int ix, int iy) const;
    bool contains(Complex beta) const;
    /// Bin holding beta; points outside the grid map to the nearest edge bin.
    std::pair<int, int> locate(Complex beta) const;
    void validate() const;

    bool operator==(const BinGrid& o) const { return x_edges == o.x_edges && y_edges == o.y_edges; }
};

struct AmplitudeHistogram {
    BinGrid grid;
    Eigen::MatrixXd density;  // nx x ny, normalized so sum density * area = 1
    long n_samples = 0;

    double mass() const;
    double center_x(int ix) const { return 0.5 * (grid.x_edges[ix] + grid.x_edges[ix + 1]); }
    double center_y(int iy) const { return 0.5 * (grid.y_edges[iy] + grid.y_edges[iy + 1]); }
};

/// Throws CoverageDeficit when fewer than `min_coverage` of the samples fall
/// inside the grid. Out-of-grid samples are dropped from the density.
AmplitudeHistogram histogram2d(const std::vector<Complex>& samples, const BinGrid& grid, int threads = 1,
                               double min_coverage = 0.999);

/// Merges fx x fy blocks of bins (grid dimensions must be divisible).
AmplitudeHistogram merge_bins(const AmplitudeHistogram& h, int fx, int fy);

/// Normalized scalar product sum pg pe / sqrt(sum pg^2 sum pe^2).
double overlap(const AmplitudeHistogram& pg, const AmplitudeHistogram& pe);

/// Total-variation distance between two histograms on the same grid.
double total_variation(const AmplitudeHistogram& a, const AmplitudeHistogram& b);

struct DecisionRegion {
    BinGrid grid;
    std::vector<std::uint8_t> mask;  // 1 where the bin belongs to Z_g, row-major over (ix, iy)

    bool in_g(Complex beta) const;
    bool at(int ix, int iy) const { return mask[static_cast<std::size_t>(ix) * grid.ny() + iy] != 0; }
};

/// Z_g = { pg >= pe }; ties go to g.
DecisionRegion decision_region(const AmplitudeHistogram& pg, const AmplitudeHistogram& pe);

struct ReadoutReport {
    double overlap = 0.0;
    double error_g = 0.0;
    double error_e = 0.0;
    double fidelity = 0.0;
    std::optional<double> qndness;
    long n_runs = 0;
};

/// error_g: g-prepared samples outside Z_g; error_e: e-prepared samples inside Z_g.
ReadoutReport error_rates(const std::vector<Complex>& samples_g, const std::vector<Complex>& samples_e,
                          const DecisionRegion& region);

Branch classify(Complex beta, const DecisionRegion& region);

struct HeldOutReport {
    ReadoutReport train;
    ReadoutReport test;
};

/// Region built on the first half of each ensemble, rates measured on both halves.
HeldOutReport held_out_error_rates(const std::vector<Complex>& samples_g, const std::vector<Complex>& samples_e,
                                   const BinGrid& grid);

struct RunPair {
    Branch outcome1;
    Branch outcome2;
    Branch prepared;
};

/// Among pairs whose first outcome matches the preparation, the fraction
/// whose second outcome repeats the first.
double qnd_probability(const std::vector<RunPair>& pairs);

}  // namespace seqread
