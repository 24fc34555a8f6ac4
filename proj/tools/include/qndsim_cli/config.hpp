#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qndsim/model.hpp"
#include "qndsim/protocol.hpp"

namespace qndsim::cli {

/// Frequencies in the file are plain Hz (the value divided by 2 pi); the
/// struct holds angular rates like the library.
struct SystemBlock {
    std::string preset = "device";  // "device" or "ideal"
    SystemParams params = SystemParams::device();
};

struct ScheduleBlock {
    double fwhm = 500e-9;
    double t_i = -400e-9;
    double readout_delay = 100e-9;
    double step_fraction = 1.0;
    /// Empty means the subcommand default (800 ns efficiency, 1100 ns protocol).
    std::optional<double> gate_interval;
    std::vector<double> input_photon_grid;  // |alpha_in|^2 values for efficiency
    double input_photons = 0.165;           // protocol drive
};

struct ProtocolBlock {
    int n_ph = 2;
    std::string input_model = "single_photon_superposition";  // or "coherent"
    int n_max = 0;
    double wigner_extent = 3.0;
    int wigner_points = 121;
};

struct TomographyBlock {
    int phases = 100;
    std::uint64_t shots = 10000;
    std::optional<double> eta;  // defaults to system eta_meas
    std::optional<std::uint64_t> seed;
    int iterations = 10000;
    double tolerance = 1e-10;
    int n_tomo = 5;
    int n_tomo_composite = 3;
    double coherent_photons = 0.137;
    std::string composite_source = "protocol";  // or "ideal"
    double composite_photons = 0.165;
};

struct SpectrumBlock {
    double span_hz = 20e6;
    int points = 801;
};

struct SweepBlock {
    std::string axis = "gate_interval";
    /// Seconds for time axes, Hz for kappa axes, 1/s for gamma axes.
    std::vector<double> values;
    bool protocol_columns = true;
    double protocol_photons = 0.165;
};

struct RunConfig {
    SystemBlock system;
    ScheduleBlock schedule;
    ProtocolBlock protocol;
    TomographyBlock tomography;
    SpectrumBlock spectrum;
    SweepBlock sweep;
    std::string output_dir = "qndsim_out";
    int threads = 1;
};

/// Parses a JSON document. Unknown keys, wrong types and invalid values
/// throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Fully resolved JSON form (defaults included), pretty-printed.
std::string to_json(const RunConfig& config);

/// Fills subcommand-dependent defaults (gate interval, grids, eta).
RunConfig resolve_for(const RunConfig& config, const std::string& subcommand);

ScheduleSpec schedule_spec(const RunConfig& config);
ProtocolOptions protocol_options(const RunConfig& config);

}  // namespace qndsim::cli
