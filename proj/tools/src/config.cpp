#include "qndsim_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qndsim/errors.hpp"

namespace qndsim::cli {

namespace {

using Json = nlohmann::ordered_json;

// Reads keys of one JSON object and rejects whatever was not consumed.
class Section {
  public:
    Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) {
            throw ConfigError("'" + name_ + "' must be an object");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const Json& at(const std::string& key) { return j_.at(key); }

    void number(const std::string& key, double& out) {
        if (has(key)) {
            out = as_number(key);
        }
    }

    // Seconds; "inf" turns the channel off.
    void time(const std::string& key, double& out) {
        if (!has(key)) {
            return;
        }
        const Json& v = j_.at(key);
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "inf" || s == "infinity") {
                out = std::numeric_limits<double>::infinity();
                return;
            }
            throw ConfigError(path(key) + ": expected seconds or \"inf\", got \"" + s + "\"");
        }
        out = as_number(key);
    }

    void hertz(const std::string& key, double& out) {
        if (has(key)) {
            out = kTwoPi * as_number(key);
        }
    }

    void integer(const std::string& key, int& out) {
        if (has(key)) {
            const Json& v = j_.at(key);
            if (!v.is_number_integer()) {
                throw ConfigError(path(key) + ": expected an integer");
            }
            out = v.get<int>();
        }
    }

    void unsigned_integer(const std::string& key, std::uint64_t& out) {
        if (has(key)) {
            const Json& v = j_.at(key);
            if (!v.is_number_unsigned()) {
                throw ConfigError(path(key) + ": expected a non-negative integer");
            }
            out = v.get<std::uint64_t>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (has(key)) {
            if (!j_.at(key).is_boolean()) {
                throw ConfigError(path(key) + ": expected true or false");
            }
            out = j_.at(key).get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (has(key)) {
            if (!j_.at(key).is_string()) {
                throw ConfigError(path(key) + ": expected a string");
            }
            out = j_.at(key).get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (!has(key)) {
            return;
        }
        const Json& v = j_.at(key);
        if (!v.is_array()) {
            throw ConfigError(path(key) + ": expected an array of numbers");
        }
        out.clear();
        for (const auto& x : v) {
            if (!x.is_number()) {
                throw ConfigError(path(key) + ": expected an array of numbers");
            }
            out.push_back(x.get<double>());
        }
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("unknown key '" + path(key) + "'");
            }
        }
    }

    std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  private:
    double as_number(const std::string& key) const {
        const Json& v = j_.at(key);
        if (!v.is_number()) {
            throw ConfigError(path(key) + ": expected a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            throw ConfigError(path(key) + ": must be finite");
        }
        return x;
    }

    const Json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

void parse_system(Section& s, SystemBlock& out) {
    s.string("preset", out.preset);
    if (out.preset == "device") {
        out.params = SystemParams::device();
    } else if (out.preset == "ideal") {
        out.params = SystemParams::ideal();
    } else {
        throw ConfigError("system.preset must be \"device\" or \"ideal\"");
    }
    auto& p = out.params;
    s.hertz("omega_c_hz", p.omega_c);
    s.hertz("omega_q_hz", p.omega_q);
    s.hertz("chi_hz", p.chi);
    s.hertz("kappa_ex_hz", p.kappa_ex);
    s.hertz("kappa_in_hz", p.kappa_in);
    s.hertz("anharmonicity_hz", p.anharmonicity);
    s.time("t1_s", p.T1);
    s.time("t2_star_s", p.T2_star);
    s.time("t2_echo_s", p.T2_echo);
    s.number("p_th", p.p_th);
    s.number("n_th", p.n_th);
    s.number("readout_error_g", p.readout_error_g);
    s.number("readout_error_e", p.readout_error_e);
    s.number("eta_meas", p.eta_meas);
    s.finish();
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
}

void parse_schedule(Section& s, ScheduleBlock& out) {
    s.number("fwhm_s", out.fwhm);
    s.number("t_i_s", out.t_i);
    s.number("readout_delay_s", out.readout_delay);
    s.number("step_fraction", out.step_fraction);
    if (s.has("gate_interval_s")) {
        double g = 0.0;
        s.number("gate_interval_s", g);
        out.gate_interval = g;
    }
    s.numbers("input_photon_grid", out.input_photon_grid);
    s.number("input_photons", out.input_photons);
    s.finish();
    if (!(out.fwhm > 0.0) || !(out.readout_delay >= 0.0) || !(out.step_fraction > 0.0) ||
        !(out.input_photons >= 0.0) || (out.gate_interval && !(*out.gate_interval > 0.0))) {
        throw ConfigError("schedule: durations, step_fraction and input_photons must be positive");
    }
}

void parse_protocol(Section& s, ProtocolBlock& out) {
    s.integer("n_ph", out.n_ph);
    s.string("input_model", out.input_model);
    s.integer("n_max", out.n_max);
    s.number("wigner_extent", out.wigner_extent);
    s.integer("wigner_points", out.wigner_points);
    s.finish();
    if (out.input_model != "coherent" && out.input_model != "single_photon_superposition") {
        throw ConfigError("protocol.input_model must be \"coherent\" or \"single_photon_superposition\"");
    }
    if (out.n_ph < 1 || out.n_max < 0 || out.wigner_extent < 3.0 || out.wigner_points < 2) {
        throw ConfigError("protocol: n_ph >= 1, n_max >= 0, wigner_extent >= 3, wigner_points >= 2");
    }
}

void parse_tomography(Section& s, TomographyBlock& out) {
    s.integer("phases", out.phases);
    s.unsigned_integer("shots", out.shots);
    if (s.has("eta")) {
        double eta = 0.0;
        s.number("eta", eta);
        out.eta = eta;
    }
    if (s.has("seed")) {
        std::uint64_t seed = 0;
        s.unsigned_integer("seed", seed);
        out.seed = seed;
    }
    s.integer("iterations", out.iterations);
    s.number("tolerance", out.tolerance);
    s.integer("n_tomo", out.n_tomo);
    s.integer("n_tomo_composite", out.n_tomo_composite);
    s.number("coherent_photons", out.coherent_photons);
    s.string("composite_source", out.composite_source);
    s.number("composite_photons", out.composite_photons);
    s.finish();
    if (out.phases < 1 || out.shots < 1 || out.iterations < 1 || out.n_tomo < 2 ||
        out.n_tomo_composite < 2 || out.tolerance < 0.0 || out.coherent_photons < 0.0 ||
        out.composite_photons < 0.0) {
        throw ConfigError("tomography: counts must be positive and photon numbers non-negative");
    }
    if (out.eta && !(*out.eta > 0.0 && *out.eta <= 1.0)) {
        throw ConfigError("tomography.eta must lie in (0, 1]");
    }
    if (out.composite_source != "protocol" && out.composite_source != "ideal") {
        throw ConfigError("tomography.composite_source must be \"protocol\" or \"ideal\"");
    }
}

void parse_spectrum(Section& s, SpectrumBlock& out) {
    s.number("span_hz", out.span_hz);
    s.integer("points", out.points);
    s.finish();
    if (!(out.span_hz > 0.0) || out.points < 2) {
        throw ConfigError("spectrum: span_hz > 0 and points >= 2");
    }
}

void parse_sweep(Section& s, SweepBlock& out) {
    s.string("axis", out.axis);
    s.numbers("values", out.values);
    s.boolean("protocol_columns", out.protocol_columns);
    s.number("protocol_photons", out.protocol_photons);
    s.finish();
    try {
        parse_sweep_axis(out.axis);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
    }
}

Json time_json(double t) {
    return std::isfinite(t) ? Json(t) : Json("inf");
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Section top(j, "");
    if (top.has("system")) {
        Section s(top.at("system"), "system");
        parse_system(s, c.system);
    }
    if (top.has("schedule")) {
        Section s(top.at("schedule"), "schedule");
        parse_schedule(s, c.schedule);
    }
    if (top.has("protocol")) {
        Section s(top.at("protocol"), "protocol");
        parse_protocol(s, c.protocol);
    }
    if (top.has("tomography")) {
        Section s(top.at("tomography"), "tomography");
        parse_tomography(s, c.tomography);
    }
    if (top.has("spectrum")) {
        Section s(top.at("spectrum"), "spectrum");
        parse_spectrum(s, c.spectrum);
    }
    if (top.has("sweep")) {
        Section s(top.at("sweep"), "sweep");
        parse_sweep(s, c.sweep);
    }
    top.string("output_dir", c.output_dir);
    top.integer("threads", c.threads);
    top.finish();
    if (c.threads < 0) {
        throw ConfigError("threads must be >= 0");
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const RunConfig& c) {
    const auto& p = c.system.params;
    Json j;
    j["system"] = {
        {"preset", c.system.preset},
        {"omega_c_hz", p.omega_c / kTwoPi},
        {"omega_q_hz", p.omega_q / kTwoPi},
        {"chi_hz", p.chi / kTwoPi},
        {"kappa_ex_hz", p.kappa_ex / kTwoPi},
        {"kappa_in_hz", p.kappa_in / kTwoPi},
        {"anharmonicity_hz", p.anharmonicity / kTwoPi},
        {"t1_s", time_json(p.T1)},
        {"t2_star_s", time_json(p.T2_star)},
        {"t2_echo_s", time_json(p.T2_echo)},
        {"p_th", p.p_th},
        {"n_th", p.n_th},
        {"readout_error_g", p.readout_error_g},
        {"readout_error_e", p.readout_error_e},
        {"eta_meas", p.eta_meas},
    };
    const auto& s = c.schedule;
    j["schedule"] = {
        {"fwhm_s", s.fwhm},
        {"t_i_s", s.t_i},
        {"readout_delay_s", s.readout_delay},
        {"step_fraction", s.step_fraction},
        {"gate_interval_s", optional_json(s.gate_interval)},
        {"input_photon_grid", s.input_photon_grid},
        {"input_photons", s.input_photons},
    };
    const auto& pr = c.protocol;
    j["protocol"] = {
        {"n_ph", pr.n_ph},
        {"input_model", pr.input_model},
        {"n_max", pr.n_max},
        {"wigner_extent", pr.wigner_extent},
        {"wigner_points", pr.wigner_points},
    };
    const auto& t = c.tomography;
    j["tomography"] = {
        {"phases", t.phases},
        {"shots", t.shots},
        {"eta", optional_json(t.eta)},
        {"seed", optional_json(t.seed)},
        {"iterations", t.iterations},
        {"tolerance", t.tolerance},
        {"n_tomo", t.n_tomo},
        {"n_tomo_composite", t.n_tomo_composite},
        {"coherent_photons", t.coherent_photons},
        {"composite_source", t.composite_source},
        {"composite_photons", t.composite_photons},
    };
    j["spectrum"] = {{"span_hz", c.spectrum.span_hz}, {"points", c.spectrum.points}};
    j["sweep"] = {
        {"axis", c.sweep.axis},
        {"values", c.sweep.values},
        {"protocol_columns", c.sweep.protocol_columns},
        {"protocol_photons", c.sweep.protocol_photons},
    };
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j.dump(2);
}

RunConfig resolve_for(const RunConfig& config, const std::string& subcommand) {
    RunConfig c = config;
    const bool tomography_timing = subcommand == "protocol" || subcommand == "tomo-selftest";
    if (!c.schedule.gate_interval) {
        c.schedule.gate_interval = tomography_timing ? 1100e-9 : 800e-9;
    }
    if (c.schedule.input_photon_grid.empty()) {
        for (int k = 0; k <= 12; ++k) {
            c.schedule.input_photon_grid.push_back(0.05 * k);
        }
    }
    if (!c.tomography.eta) {
        c.tomography.eta = c.system.params.eta_meas;
    }
    if (c.sweep.values.empty() && c.sweep.axis == "gate_interval") {
        for (int k = 0; k <= 12; ++k) {
            c.sweep.values.push_back(500e-9 + 50e-9 * k);
        }
    }
    return c;
}

ScheduleSpec schedule_spec(const RunConfig& config) {
    ScheduleSpec spec;
    spec.fwhm = config.schedule.fwhm;
    spec.t_i = config.schedule.t_i;
    spec.readout_delay = config.schedule.readout_delay;
    spec.step_fraction = config.schedule.step_fraction;
    spec.gate_interval = config.schedule.gate_interval.value_or(800e-9);
    return spec;
}

ProtocolOptions protocol_options(const RunConfig& config) {
    ProtocolOptions o;
    o.n_ph = config.protocol.n_ph;
    o.n_max = config.protocol.n_max;
    o.input_model = config.protocol.input_model == "coherent" ? InputModel::Coherent
                                                              : InputModel::SinglePhotonSuperposition;
    return o;
}

}  // namespace qndsim::cli
