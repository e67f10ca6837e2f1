#pragma once

// CSV tables with the documented column schemas, key-value reports and
// optional PNG rasters.

#include <string>
#include <utility>
#include <vector>

#include "seqread/discrimination.hpp"
#include "seqread/release.hpp"
#include "seqread/signal.hpp"
#include "seqread/tomography.hpp"

namespace seqread {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
    static CsvTable parse(const std::string& text);
    /// Throws InvalidArgument unless the header equals `expected`.
    void expect_columns(const std::vector<std::string>& expected) const;
    double number(std::size_t row, std::size_t col) const;
};

/// Shortest round-trip representation of a double ("%.17g").
std::string format_number(double v);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

namespace schema {
inline const std::vector<std::string> trajectory = {"t_s", "re_r", "im_r", "re_b", "im_b"};
inline const std::vector<std::string> trace = {"t_s", "volts"};
inline const std::vector<std::string> weight = {"t_s", "re", "im"};
inline const std::vector<std::string> beta = {"re_beta", "im_beta", "branch", "run_id"};
inline const std::vector<std::string> histogram = {"re_center", "im_center", "density"};
inline const std::vector<std::string> wigner = {"re_alpha", "im_alpha", "w_value"};
inline const std::vector<std::string> sweep = {"alpha0", "t_int_s", "overlap"};
inline const std::vector<std::string> release = {"sigma_s", "g_max_rad_per_s", "remaining_fraction", "validated"};
}  // namespace schema

struct BetaRecord {
    Complex beta;
    Branch prepared;
    long run_id;
};

CsvTable trajectory_table(const ModeTrajectory& traj);
CsvTable trace_table(const VoltageTrace& trace);
CsvTable weight_table(const WeightFunction& w);
CsvTable beta_table(const std::vector<BetaRecord>& records);
CsvTable histogram_table(const AmplitudeHistogram& h);
CsvTable wigner_table(const WignerMap& map);

std::vector<BetaRecord> parse_beta_table(const CsvTable& t);
WignerMap parse_wigner_table(const CsvTable& t);

/// "key = value" lines.
std::string key_value_report(const std::vector<std::pair<std::string, std::string>>& entries);

/// Writes an 8-bit RGB heat map; `values` is row-major with `ny` rows of `nx`.
/// Diverging maps are symmetric about zero (blue-white-red); otherwise
/// white-to-dark sequential. Returns false if the file could not be written.
bool write_png_heatmap(const std::string& path, const std::vector<double>& values, int nx, int ny, bool diverging);

}  // namespace seqread
