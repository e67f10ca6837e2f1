#include "seqread/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "seqread/errors.hpp"

namespace seqread {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        fail(ErrorCode::ConfigError, "key '" + key + "': not a number: '" + v + "'");
    return d;
}

long to_long(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long l = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        fail(ErrorCode::ConfigError, "key '" + key + "': not an integer: '" + v + "'");
    return l;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    if (!v.empty() && v[0] == '-') fail(ErrorCode::ConfigError, "key '" + key + "': seed must be non-negative");
    const unsigned long long l = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        fail(ErrorCode::ConfigError, "key '" + key + "': not an unsigned integer: '" + v + "'");
    return l;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorCode::ConfigError, "key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) fail(ErrorCode::ConfigError, "key '" + key + "': empty list");
    return out;
}

std::string list_str(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt(v[k]);
    return s;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

struct Key {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define SEQ_DOUBLE(NAME, FIELD) \
    Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_double(NAME, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.FIELD); }}
#define SEQ_LONG(NAME, FIELD) \
    Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_long(NAME, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }}
#define SEQ_INT(NAME, FIELD) \
    Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = static_cast<int>(to_long(NAME, v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }}
#define SEQ_BOOL(NAME, FIELD) \
    Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_bool(NAME, v); }, \
        [](const ExperimentConfig& c) { return bool_str(c.FIELD); }}
#define SEQ_LIST(NAME, FIELD) \
    Key{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_list(NAME, v); }, \
        [](const ExperimentConfig& c) { return list_str(c.FIELD); }}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        SEQ_DOUBLE("device.chi_rad_per_s", device.chi),
        SEQ_DOUBLE("device.kerr_g_rad_per_s", device.kerr_g),
        SEQ_DOUBLE("device.kerr_e_rad_per_s", device.kerr_e),
        SEQ_DOUBLE("device.kappa_r_per_s", device.kappa_r),
        SEQ_DOUBLE("device.kappa_b_per_s", device.kappa_b),
        SEQ_DOUBLE("device.t1_s", device.t1),
        SEQ_DOUBLE("device.t2_s", device.t2),
        SEQ_DOUBLE("device.eta", device.eta),
        SEQ_DOUBLE("device.if_freq_hz", device.if_freq),
        SEQ_DOUBLE("device.sample_rate_hz", device.sample_rate),
        SEQ_DOUBLE("device.thermal_excitation", device.thermal_excitation),
        SEQ_DOUBLE("device.pi_pulse_fidelity", device.pi_pulse_fidelity),
        SEQ_DOUBLE("device.omega_q_rad_per_s", device.omega_q),
        SEQ_DOUBLE("device.omega_r_rad_per_s", device.omega_r),
        SEQ_DOUBLE("device.omega_b_rad_per_s", device.omega_b),
        SEQ_DOUBLE("pulse.g_max_rad_per_s", pulse.g_max),
        SEQ_DOUBLE("pulse.sigma_s", pulse.sigma),
        SEQ_DOUBLE("pulse.window_s", pulse.window),
        SEQ_DOUBLE("pulse.t0_s", pulse.t0),
        Key{"readout.alpha0_re",
            [](ExperimentConfig& c, const std::string& v) { c.alpha0.real(to_double("readout.alpha0_re", v)); },
            [](const ExperimentConfig& c) { return fmt(c.alpha0.real()); }},
        Key{"readout.alpha0_im",
            [](ExperimentConfig& c, const std::string& v) { c.alpha0.imag(to_double("readout.alpha0_im", v)); },
            [](const ExperimentConfig& c) { return fmt(c.alpha0.imag()); }},
        SEQ_DOUBLE("readout.t_int_s", t_int),
        SEQ_LONG("readout.n_runs", n_runs),
        SEQ_INT("readout.truncation", truncation),
        Key{"readout.measurement_path",
            [](ExperimentConfig& c, const std::string& v) {
                if (v == "direct") c.measurement_path = MeasurementPath::direct;
                else if (v == "trace") c.measurement_path = MeasurementPath::trace;
                else fail(ErrorCode::ConfigError, "readout.measurement_path must be direct or trace");
            },
            [](const ExperimentConfig& c) {
                return std::string(c.measurement_path == MeasurementPath::direct ? "direct" : "trace");
            }},
        SEQ_BOOL("readout.thermal_errors", readout.thermal_errors),
        SEQ_BOOL("readout.pulse_errors", readout.pulse_errors),
        SEQ_BOOL("readout.qubit_decay", readout.qubit_decay),
        SEQ_BOOL("readout.cavity_decay", readout.cavity_decay),
        SEQ_DOUBLE("readout.displacement_s", readout.displacement_time),
        SEQ_DOUBLE("readout.measurement_s", readout.measurement_time),
        SEQ_DOUBLE("readout.t1_bin_s", readout.t1_bin),
        SEQ_INT("readout.hist_bins", readout.hist_bins),
        SEQ_DOUBLE("readout.hist_range", readout.hist_range),
        SEQ_INT("readout.reference_runs", readout.reference_runs),
        SEQ_BOOL("readout.qnd", readout.qnd),
        SEQ_DOUBLE("readout.qnd_spacing_s", readout.qnd_spacing),
        SEQ_DOUBLE("readout.demolition_probability", readout.demolition_probability),
        Key{"run.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("run.seed", v); },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        SEQ_INT("run.threads", threads),
        Key{"run.output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
            [](const ExperimentConfig& c) { return c.output_dir; }},
        SEQ_LIST("sweep.alpha0_list", sweep.alpha0),
        SEQ_LIST("sweep.t_int_list_s", sweep.t_int),
        SEQ_LONG("sweep.n_runs", sweep.n_runs),
        SEQ_LIST("release.sigma_list_s", release.sigma),
        SEQ_LIST("release.g_max_list_rad_per_s", release.g_max),
        SEQ_BOOL("release.refit", release.refit),
        SEQ_LIST("wigner.t_int_list_s", wigner.t_int),
        Key{"wigner.mode",
            [](ExperimentConfig& c, const std::string& v) {
                if (v == "direct") c.wigner.mode = WignerMode::direct;
                else if (v == "protocol") c.wigner.mode = WignerMode::protocol;
                else fail(ErrorCode::ConfigError, "wigner.mode must be direct or protocol");
            },
            [](const ExperimentConfig& c) {
                return std::string(c.wigner.mode == WignerMode::direct ? "direct" : "protocol");
            }},
        SEQ_INT("wigner.grid_points", wigner.grid.nx),
        SEQ_DOUBLE("wigner.range", wigner.grid.hi),
        SEQ_DOUBLE("wigner.rotation_g_deg", wigner.rotation_g_deg),
        SEQ_DOUBLE("wigner.rotation_e_deg", wigner.rotation_e_deg),
        SEQ_INT("wigner.n_shots", wigner.n_shots),
        SEQ_BOOL("wigner.exact", wigner.exact),
        SEQ_DOUBLE("wigner.readout_error_g", wigner.readout_error_g),
        SEQ_DOUBLE("wigner.readout_error_e", wigner.readout_error_e),
        SEQ_DOUBLE("calibration.nbar", calibration.nbar),
        SEQ_DOUBLE("calibration.noise", calibration.noise),
        SEQ_INT("calibration.n_points", calibration.n_points),
        SEQ_DOUBLE("calibration.t_max_s", calibration.t_max),
        SEQ_LIST("calibration.nbar_list", calibration.nbar_list),
    };
    return table;
}

#undef SEQ_DOUBLE
#undef SEQ_LONG
#undef SEQ_INT
#undef SEQ_BOOL
#undef SEQ_LIST

}  // namespace

void ExperimentConfig::validate() const {
    try {
        device.validate();
        pulse.validate();
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    if (n_runs < 1) fail(ErrorCode::ConfigError, "readout.n_runs must be >= 1");
    if (truncation < 2) fail(ErrorCode::ConfigError, "readout.truncation must be >= 2");
    if (!truncation_safe(alpha0, truncation))
        fail(ErrorCode::ConfigError, "readout.alpha0 violates |alpha0|^2 <= truncation / 3");
    if (!(t_int >= 0.0)) fail(ErrorCode::ConfigError, "readout.t_int_s must be >= 0");
    if (threads < 1) fail(ErrorCode::ConfigError, "run.threads must be >= 1");
    if (readout.hist_bins < 1 || !(readout.hist_range > 0.0))
        fail(ErrorCode::ConfigError, "histogram binning must be positive");
    if (!(readout.t1_bin > 0.0)) fail(ErrorCode::ConfigError, "readout.t1_bin_s must be > 0");
    if (!(readout.displacement_time >= 0.0)) fail(ErrorCode::ConfigError, "readout.displacement_s must be >= 0");
    if (!(readout.demolition_probability >= 0.0 && readout.demolition_probability <= 1.0))
        fail(ErrorCode::ConfigError, "readout.demolition_probability must lie in [0, 1]");
    if (readout.reference_runs < 1) fail(ErrorCode::ConfigError, "readout.reference_runs must be >= 1");
    if (sweep.n_runs < 1) fail(ErrorCode::ConfigError, "sweep.n_runs must be >= 1");
    if (wigner.grid.nx < 2 || !(wigner.grid.hi > 0.0)) fail(ErrorCode::ConfigError, "invalid Wigner grid");
    if (!(wigner.readout_error_g >= 0.0 && wigner.readout_error_e >= 0.0 &&
          wigner.readout_error_g + wigner.readout_error_e < 1.0))
        fail(ErrorCode::ConfigError, "wigner readout errors must be >= 0 and leave contrast");
    if (wigner.n_shots < 100) fail(ErrorCode::ConfigError, "wigner.n_shots must be >= 100");
    if (calibration.n_points < 5) fail(ErrorCode::ConfigError, "calibration.n_points must be >= 5");
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    bool window_set = false, t0_set = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        bool known = false;
        for (const Key& k : keys()) {
            if (k.name != key) continue;
            k.set(cfg, value);
            known = true;
            break;
        }
        if (!known) fail(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        window_set |= key == "pulse.window_s";
        t0_set |= key == "pulse.t0_s";
    }
    if (!window_set) cfg.pulse.window = 8.0 * cfg.pulse.sigma;
    if (!t0_set) cfg.pulse.t0 = 0.5 * cfg.pulse.window;
    cfg.wigner.grid.ny = cfg.wigner.grid.nx;
    cfg.wigner.grid.lo = -cfg.wigner.grid.hi;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string dump_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
    return out;
}

}  // namespace seqread
