#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qndsim/dynamics.hpp"

namespace qndsim {

enum class InputModel {
    /// Coherent input pulse, all photon orders.
    Coherent,
    /// sqrt(1-x)|0> + sqrt(x)|1> input built from the weak-field response;
    /// output states then carry at most one photon.
    SinglePhotonSuperposition,
};

struct ProtocolOptions {
    int n_ph = 2;           // photon truncation of the output-mode states
    InputModel input_model = InputModel::Coherent;
    int n_max = 0;          // cavity truncation; 0 chooses from |alpha_in|^2
    int extra_orders = 5;   // moment orders beyond n_ph kept in the series
    double weak_probe = 1e-3;  // smallest probe photon number for the weak-field model
};

/// Timing template; `build` creates a PulseSchedule for a given amplitude.
struct ScheduleSpec {
    double gate_interval = 800e-9;
    double fwhm = 500e-9;
    double t_i = -400e-9;
    double readout_delay = 100e-9;
    double step_fraction = 1.0;
    bool ramsey_gates = true;
    std::optional<double> output_delay;

    PulseSchedule build(Complex alpha_in) const;
};

struct ProtocolResult {
    double input_photons = 0.0;
    double phase_flip_probability = 0.0;  // with readout errors
    double excited_population = 0.0;      // <sigma_ee(t_f)>, no readout errors
    double outcome_weight_g = 0.0;        // readout-mixed weights of the truncated blocks
    double outcome_weight_e = 0.0;
    int n_ph = 0;
    double output_delay = 0.0;
    double mean_output_photons = 0.0;     // unconditional <A^dag A>
    double survival = 0.0;                // mean_output_photons / |alpha_in|^2

    std::optional<QuantumState> rho_g;    // conditioned on reading g (readout-mixed)
    std::optional<QuantumState> rho_e;
    std::optional<QuantumState> rho_uncond;
    std::optional<QuantumState> rho_comp;  // qubit (2) x mode (n_ph + 1)

    double negativity = 0.0;
    double fidelity_g_vacuum = 0.0;
    double fidelity_e_single = 0.0;

    OutputMoments moments;

    /// Conditional state for a readout outcome. Throws ConditioningError when
    /// that outcome has (numerically) zero probability.
    const QuantumState& conditional(QubitLevel outcome) const;
};

LindbladModel model_for(const SystemParams& p, double input_photons, int n_max = 0);

ProtocolResult run_protocol(const SystemParams& p, const PulseSchedule& schedule,
                            const ProtocolOptions& options = {});

/// Readout-corrected phase-flip probability only (no hierarchy).
double phase_flip_probability(const SystemParams& p, const PulseSchedule& schedule,
                              int n_max = 0);

struct QuadraticFit {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double residual_rms = 0.0;
    double operator()(double x) const { return c0 + x * (c1 + x * c2); }
};

QuadraticFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y);

struct EfficiencyReport {
    std::vector<double> grid;             // |alpha_in|^2
    std::vector<double> phase_flip;       // per grid point
    QuadraticFit curve_fit;               // over the full grid
    std::vector<double> probe_grid;       // weak-power points
    std::vector<double> probe_phase_flip;
    QuadraticFit weak_fit;                // over the probe points
    double efficiency = 0.0;              // weak_fit.c1
    double dark_count = 0.0;              // weak_fit.c0
    /// 1 - P(x_max) / (dark + efficiency x_max)
    double bending_at_max = 0.0;
};

/// Weak-power probe spacing for the zero-power slope.
inline constexpr double kProbeSpacing = 2.5e-3;

EfficiencyReport efficiency_scan(const SystemParams& p, const ScheduleSpec& spec,
                                 const std::vector<double>& grid);

/// Zero-power slope and intercept only (five probe runs).
EfficiencyReport weak_power_efficiency(const SystemParams& p, const ScheduleSpec& spec);

enum class SweepAxis { GateInterval, PulseLength, KappaEx, KappaIn, Gamma, GammaPhi };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
    double value = 0.0;
    double efficiency = 0.0;
    double dark_count = 0.0;
    double survival = 0.0;
    double negativity = 0.0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::GateInterval;
    std::vector<SweepRow> rows;
    std::size_t argmax = 0;
    /// Parabolic interpolation of the efficiency peak through the best point
    /// and its neighbours (the best grid value when at an edge).
    double peak_location = 0.0;
};

struct SweepOptions {
    bool protocol_columns = true;  // survival and negativity at `protocol_photons`
    double protocol_photons = 0.165;
};

/// Applies an axis value: times in seconds, rates in rad/s or 1/s.
void apply_axis(SweepAxis axis, double value, SystemParams& p, ScheduleSpec& spec);

SweepResult sweep(const SystemParams& p, const ScheduleSpec& spec, SweepAxis axis,
                  const std::vector<double>& values, const SweepOptions& options = {});

/// sum_n sqrt(p_n) |n mod 2> |n> with Poisson weights renormalized on n <= n_ph.
QuantumState ideal_composite(double input_photons, int n_ph);

struct EntanglementReport {
    double negativity = 0.0;
    double fidelity_to_ideal = 0.0;
    double mode_phase = 0.0;   // phase per photon of the best-matching ideal state
    double qubit_phase = 0.0;  // phase on |e> of the best-matching ideal state
};

/// Negativity of the composite state and its fidelity with ideal_composite at
/// the same input photon number, maximized over local phase conventions.
EntanglementReport entanglement_report(const ProtocolResult& result);

}  // namespace qndsim
