#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "qndsim/model.hpp"

namespace qndsim {

/// Timing of one Ramsey detection shot. Y/2 is applied at t_i, -Y/2 at t_g,
/// and the qubit is read out at t_f.
struct PulseSchedule {
    double t_i = -400e-9;
    double t_g = 400e-9;
    double t_f = 500e-9;
    TemporalMode input;  // f_in, centred at t = 0
    Complex alpha_in{0.0, 0.0};
    std::optional<double> output_delay;  // filled in by optimal_output_delay when empty
    bool ramsey_gates = true;
    double step_fraction = 1.0;  // scales the default maximum step (dt-halving checks)

    /// t_i fixed, t_g = t_i + gate_interval, t_f = t_g + readout_delay.
    static PulseSchedule standard(double gate_interval, double fwhm, Complex alpha_in,
                                  double t_i = -400e-9, double readout_delay = 100e-9);

    void validate() const;
    /// min(1/(40 kappa_tot), l/200) times step_fraction.
    double max_step(const SystemParams& p) const;
    /// a_in(t) = alpha_in f_in(-t)
    Complex input_field(double t) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<QuantumState> states;
};

enum class Gate { Y2, MinusY2 };

/// 2x2 gate matrix in the (g, e) basis.
ComplexMatrix gate_matrix(Gate which);
QuantumState apply_gate(const QuantumState& rho, Gate which);

/// Master-equation evolution from t_i to t_f with the schedule's drive and
/// gates. `rho0` is the state before the first gate. Every `record_every`-th
/// step is stored (the final state always is).
Trajectory evolve(const LindbladModel& model, const PulseSchedule& schedule,
                  const QuantumState& rho0, int record_every = 1);

/// Evolution under an arbitrary incoming field a_in(t) without gates.
Trajectory evolve_field(const LindbladModel& model, const std::function<Complex(double)>& a_in,
                        double t_begin, double t_end, double max_step, const QuantumState& rho0,
                        int record_every = 1);

enum class Side { Left, Right };

struct Insertion {
    double time;
    ComplexMatrix op;  // acts on the qubit-cavity space
    Side side = Side::Left;
};

/// Multi-time correlation function by the quantum regression theorem. The
/// operator-modified density matrix is propagated from t_i (after the first
/// gate), insertions multiply it from the chosen side, gates at t_g act by
/// conjugation, and the trace is taken at the last insertion time. Insertions
/// at t_g act after the gate.
Complex correlator(const LindbladModel& model, const PulseSchedule& schedule,
                   std::vector<Insertion> insertions,
                   const std::optional<QuantumState>& rho0 = std::nullopt);

/// Delay of the output mode relative to the input that maximizes its overlap
/// with the linear reflected envelope (qubit in g). Golden-section search on
/// [0, 5/kappa_ex] with 1 ns tolerance.
double optimal_output_delay(const SystemParams& p, const PulseSchedule& schedule);

/// Output mode f_out: the input Gaussian delayed by tau_d, normalized on [t_i, t_f].
TemporalMode output_mode(const PulseSchedule& schedule, double tau_d);

/// Joint qubit / output-mode moments <|p><q| A^dag^n A^m> for m, n <= order.
struct OutputMoments {
    int order = 0;
    double output_delay = 0.0;
    double max_top_fock_population = 0.0;
    // index [p][q][m][n] flattened
    std::vector<Complex> values;

    Complex get(QubitLevel p, QubitLevel q, int n_dag, int m) const;
    Complex& at(int p, int q, int n_dag, int m);
    Complex at(int p, int q, int n_dag, int m) const;
    /// Tr over the qubit: <A^dag^n A^m>
    Complex mode_moment(int n_dag, int m) const;
    void resize(int order);

    static OutputMoments axpy(double a, const OutputMoments& x, const OutputMoments& y);
};

/// Moments via the regression hierarchy: for every (m, n) a density-like
/// matrix is propagated with the output operator b(t) = a_in(t) - i sqrt(kappa_ex) a
/// weighted by f_out inserted m times on the left and n times on the right.
/// Throws ConvergenceError when the top cavity level holds more than 1e-7.
OutputMoments output_mode_moments(const LindbladModel& model, const PulseSchedule& schedule,
                                  int order);

/// Same moments from an auxiliary cavity that absorbs f_out through a
/// time-dependent cascaded coupling. `capture_levels` truncates that cavity.
OutputMoments capture_mode_oracle(const LindbladModel& model, const PulseSchedule& schedule,
                                  int order = 2, int capture_levels = 6);

}  // namespace qndsim
