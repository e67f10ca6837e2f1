#include "seqread/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <png.h>

#include "seqread/errors.hpp"

namespace seqread {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string CsvTable::to_string() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
        out += '\n';
    }
    return out;
}

CsvTable CsvTable::parse(const std::string& text) {
    CsvTable t;
    std::stringstream ss(text);
    std::string line;
    bool header = true;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (header) {
            t.columns = std::move(cells);
            header = false;
            continue;
        }
        if (cells.size() != t.columns.size())
            fail(ErrorCode::InvalidArgument, "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                                 std::to_string(t.columns.size()));
        t.rows.push_back(std::move(cells));
    }
    if (header) fail(ErrorCode::InvalidArgument, "CSV text has no header");
    return t;
}

void CsvTable::expect_columns(const std::vector<std::string>& expected) const {
    if (columns != expected) fail(ErrorCode::InvalidArgument, "CSV header does not match the schema");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& s = rows.at(row).at(col);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) fail(ErrorCode::InvalidArgument, "CSV cell is not a number: " + s);
    return v;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, table.to_string()); }

CsvTable read_csv(const std::string& path) { return CsvTable::parse(read_text(path)); }

CsvTable trajectory_table(const ModeTrajectory& traj) {
    CsvTable t{schema::trajectory, {}};
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        t.rows.push_back({format_number(traj.times[k]), format_number(traj.r_amp[k].real()),
                          format_number(traj.r_amp[k].imag()), format_number(traj.b_amp[k].real()),
                          format_number(traj.b_amp[k].imag())});
    return t;
}

CsvTable trace_table(const VoltageTrace& trace) {
    CsvTable t{schema::trace, {}};
    for (std::size_t k = 0; k < trace.size(); ++k)
        t.rows.push_back({format_number(trace.time(k)), format_number(trace.samples[k])});
    return t;
}

CsvTable weight_table(const WeightFunction& w) {
    CsvTable t{schema::weight, {}};
    for (std::size_t k = 0; k < w.re.size(); ++k)
        t.rows.push_back({format_number(w.t_start + static_cast<double>(k) / w.sample_rate), format_number(w.re[k]),
                          format_number(w.im[k])});
    return t;
}

CsvTable beta_table(const std::vector<BetaRecord>& records) {
    CsvTable t{schema::beta, {}};
    t.rows.reserve(records.size());
    for (const BetaRecord& r : records)
        t.rows.push_back({format_number(r.beta.real()), format_number(r.beta.imag()), std::string(1, to_char(r.prepared)),
                          std::to_string(r.run_id)});
    return t;
}

CsvTable histogram_table(const AmplitudeHistogram& h) {
    CsvTable t{schema::histogram, {}};
    for (int iy = 0; iy < h.grid.ny(); ++iy)
        for (int ix = 0; ix < h.grid.nx(); ++ix)
            t.rows.push_back({format_number(h.center_x(ix)), format_number(h.center_y(iy)),
                              format_number(h.density(ix, iy))});
    return t;
}

CsvTable wigner_table(const WignerMap& map) {
    CsvTable t{schema::wigner, {}};
    for (std::size_t k = 0; k < map.values.size(); ++k)
        t.rows.push_back({format_number(map.alphas[k].real()), format_number(map.alphas[k].imag()),
                          format_number(map.values[k])});
    return t;
}

std::vector<BetaRecord> parse_beta_table(const CsvTable& t) {
    t.expect_columns(schema::beta);
    std::vector<BetaRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string& b = t.rows[r][2];
        if (b.size() != 1) fail(ErrorCode::InvalidArgument, "branch cell must be g or e");
        out.push_back({Complex(t.number(r, 0), t.number(r, 1)), branch_from_char(b[0]),
                       static_cast<long>(t.number(r, 3))});
    }
    return out;
}

WignerMap parse_wigner_table(const CsvTable& t) {
    t.expect_columns(schema::wigner);
    WignerMap m;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        m.alphas.emplace_back(t.number(r, 0), t.number(r, 1));
        m.values.push_back(t.number(r, 2));
    }
    // Recover the uniform grid from the point set.
    if (!m.alphas.empty()) {
        std::vector<double> xs, ys;
        for (const Complex& a : m.alphas) {
            xs.push_back(a.real());
            ys.push_back(a.imag());
        }
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
        m.grid.nx = static_cast<int>(xs.size());
        m.grid.ny = static_cast<int>(ys.size());
        m.grid.lo = xs.front();
        m.grid.hi = xs.back();
    }
    return m;
}

std::string key_value_report(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
}

namespace {

void diverging_color(double x, png_byte* px) {
    // x in [-1, 1]: blue -> white -> red.
    const double t = std::clamp(x, -1.0, 1.0);
    const double a = std::abs(t);
    const auto lerp = [a](double from, double to) { return static_cast<png_byte>(std::lround(from + (to - from) * a)); };
    if (t >= 0) {
        px[0] = lerp(255, 178);
        px[1] = lerp(255, 24);
        px[2] = lerp(255, 43);
    } else {
        px[0] = lerp(255, 33);
        px[1] = lerp(255, 102);
        px[2] = lerp(255, 172);
    }
}

void sequential_color(double x, png_byte* px) {
    const double t = std::clamp(x, 0.0, 1.0);
    px[0] = static_cast<png_byte>(std::lround(255 * (1 - t) + 8 * t));
    px[1] = static_cast<png_byte>(std::lround(255 * (1 - t) + 48 * t));
    px[2] = static_cast<png_byte>(std::lround(255 * (1 - t) + 107 * t));
}

// Row-major RGB pixels, first row on top. Closes fp.
bool encode_png(FILE* fp, const std::vector<png_byte>& pixels, int nx, int ny) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(nx), static_cast<png_uint_32>(ny), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < ny; ++r) png_write_row(png, &pixels[static_cast<std::size_t>(r) * nx * 3]);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    return true;
}

}  // namespace

bool write_png_heatmap(const std::string& path, const std::vector<double>& values, int nx, int ny, bool diverging) {
    if (nx <= 0 || ny <= 0 || values.size() != static_cast<std::size_t>(nx) * ny) return false;
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;
    std::vector<png_byte> pixels(static_cast<std::size_t>(nx) * ny * 3);
    // Top image row is the largest imaginary part.
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const double v = values[static_cast<std::size_t>(iy) * nx + ix] / scale;
            png_byte* px = &pixels[(static_cast<std::size_t>(ny - 1 - iy) * nx + ix) * 3];
            if (diverging) diverging_color(v, px);
            else sequential_color(v, px);
        }
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) return false;
    return encode_png(fp, pixels, nx, ny);
}

}  // namespace seqread
