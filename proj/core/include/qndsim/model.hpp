#pragma once

#include <string>
#include <vector>

#include "qndsim/operator_algebra.hpp"

namespace qndsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class QubitLevel { Ground = 0, Excited = 1 };

/// Physical parameters. Rates and frequencies are angular (rad/s), times in
/// seconds. An infinite T1 / T2 switches the corresponding channel off.
struct SystemParams {
    double omega_c = kTwoPi * 10.62524e9;
    double omega_q = kTwoPi * 7.8693e9;
    double chi = kTwoPi * 1.50e6;
    double kappa_ex = kTwoPi * 3.32e6;
    double kappa_in = kTwoPi * 0.25e6;
    double anharmonicity = kTwoPi * -0.344e9;  // stored, not used by the two-level model
    double T1 = 32e-6;
    double T2_star = 26e-6;
    double T2_echo = 33e-6;
    double p_th = 0.067;
    double n_th = 0.0005;
    double readout_error_g = 0.0016;
    double readout_error_e = 0.022;
    double eta_meas = 0.43;

    /// Measured device values.
    static SystemParams device();
    /// kappa_ex = 2 chi, no internal loss, no qubit decoherence, perfect readout.
    static SystemParams ideal();

    double kappa_tot() const { return kappa_ex + kappa_in; }
    double n_B() const { return p_th / (1.0 + 2.0 * p_th); }
    double gamma() const;
    double gamma1() const { return gamma() * (1.0 + n_B()); }
    double gamma2() const { return gamma() * n_B(); }
    double gamma_phi() const;
    double gamma_phi_total() const { return gamma_phi() + 0.5 * (gamma1() + gamma2()); }
    double gamma_phi_echo() const;

    /// Throws InvalidArgument when a rate is negative, a probability leaves
    /// [0,1], or the derived pure dephasing rate is negative.
    void validate() const;
};

/// Normalized complex envelope. Gaussian modes keep their closed form so that
/// `at` is exact between grid points; the samples are what sums and FFTs use.
class TemporalMode {
  public:
    /// f(t) = (8 ln2 / (pi l^2))^{1/4} 2^{-(2(t-center)/l)^2}, sampled on
    /// [t_begin, t_end] and rescaled to unit norm on that window.
    static TemporalMode gaussian(double fwhm, double center, double t_begin, double t_end,
                                 double dt);

    Complex at(double t) const;
    double t_begin() const { return t0_; }
    double t_end() const { return t0_ + dt_ * static_cast<double>(samples_.size() - 1); }
    double dt() const { return dt_; }
    double fwhm() const { return fwhm_; }
    double center() const { return center_; }
    const std::vector<Complex>& samples() const { return samples_; }
    std::vector<double> times() const;

    /// Exact integral of |f|^2 from t_begin to t (clamped to the window).
    double cumulative_weight(double t) const;

    /// Trapezoidal sum of |f|^2 over the grid.
    double norm_squared() const;
    double peak_intensity() const;

  private:
    double fwhm_ = 0.0;
    double center_ = 0.0;
    double scale_ = 1.0;
    double t0_ = 0.0;
    double dt_ = 0.0;
    std::vector<Complex> samples_;
};

/// Gaussian input envelope centred at t = 0 on [-span/2, span/2].
TemporalMode gaussian_input_mode(double fwhm, double span, double dt);

/// Unnormalized closed-form Gaussian amplitude with unit continuous norm.
double gaussian_amplitude(double fwhm, double t);

struct CollapseOperator {
    std::string label;
    ComplexMatrix op;  // rate already folded in
};

/// Qubit (dim 2, first) times cavity (dim n_max, second), in the frame
/// rotating at omega_c and omega_q.
struct LindbladModel {
    SystemParams params;
    int n_max = 0;
    ComplexMatrix hamiltonian;
    std::vector<CollapseOperator> collapse;
    ComplexMatrix a;  // cavity annihilation on the joint space
    double drive_coupling = 0.0;  // sqrt(kappa_ex)

    int dim() const { return 2 * n_max; }
    std::vector<int> dims() const { return {2, n_max}; }
    /// |p><q| on the qubit, identity on the cavity.
    ComplexMatrix sigma(QubitLevel p, QubitLevel q) const;
    /// |g,0><g,0|
    QuantumState ground_state() const;
};

LindbladModel build_model(const SystemParams& p, int n_max);

/// One-port reflection coefficient at absolute angular frequency omega.
Complex reflection_coefficient(const SystemParams& p, QubitLevel qubit, double omega);

/// Measurement-induced dephasing of the qubit for a drive of photon flux
/// `photon_flux` (1/s) detuned by `detuning` (rad/s) from omega_c.
double drive_induced_dephasing(const SystemParams& p, double photon_flux, double detuning);

/// Mean photon number of the reflected pulse with the qubit in g, computed in
/// the frequency domain from the envelope spectrum.
double reflected_photon_number(const SystemParams& p, const TemporalMode& mode, double n_in);

struct ThermalBounds {
    double n_th_max = 0.0;    // cavity occupation bound from echo dephasing
    double n_th_pulse = 0.0;  // thermal photons in the pulse mode
    double eta_th = 1.0;
};

ThermalBounds thermal_bounds(const SystemParams& p, const TemporalMode& mode);

}  // namespace qndsim
