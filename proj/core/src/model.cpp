#include "qndsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "qndsim/errors.hpp"

namespace qndsim {
namespace {

bool is_off(double t) { return !std::isfinite(t) || t <= 0.0; }

std::mutex fftw_plan_mutex;

}  // namespace

SystemParams SystemParams::device() { return SystemParams{}; }

SystemParams SystemParams::ideal() {
    SystemParams p;
    p.kappa_ex = 2.0 * p.chi;
    p.kappa_in = 0.0;
    p.T1 = std::numeric_limits<double>::infinity();
    p.T2_star = std::numeric_limits<double>::infinity();
    p.T2_echo = std::numeric_limits<double>::infinity();
    p.p_th = 0.0;
    p.n_th = 0.0;
    p.readout_error_g = 0.0;
    p.readout_error_e = 0.0;
    return p;
}

double SystemParams::gamma() const {
    if (is_off(T1)) {
        return 0.0;
    }
    return 1.0 / ((1.0 + 2.0 * n_B()) * T1);
}

double SystemParams::gamma_phi() const {
    const double inv_t2 = is_off(T2_star) ? 0.0 : 1.0 / T2_star;
    const double inv_2t1 = is_off(T1) ? 0.0 : 0.5 / T1;
    return inv_t2 - inv_2t1;
}

double SystemParams::gamma_phi_echo() const {
    const double inv_t2 = is_off(T2_echo) ? 0.0 : 1.0 / T2_echo;
    const double inv_2t1 = is_off(T1) ? 0.0 : 0.5 / T1;
    return inv_t2 - inv_2t1;
}

void SystemParams::validate() const {
    auto fail = [](const std::string& what) { throw InvalidArgument("SystemParams: " + what); };
    const double rates[] = {chi, kappa_ex, kappa_in};
    for (double r : rates) {
        if (!std::isfinite(r) || r < 0.0) {
            fail("rates must be finite and non-negative");
        }
    }
    if (!std::isfinite(omega_c) || !std::isfinite(omega_q) || !std::isfinite(anharmonicity)) {
        fail("frequencies must be finite");
    }
    for (double t : {T1, T2_star, T2_echo}) {
        if (std::isnan(t) || t <= 0.0) {
            fail("coherence times must be positive (inf disables a channel)");
        }
    }
    for (double prob : {p_th, readout_error_g, readout_error_e, eta_meas}) {
        if (!(prob >= 0.0 && prob <= 1.0)) {
            fail("probabilities must lie in [0, 1]");
        }
    }
    if (!(n_th >= 0.0) || !std::isfinite(n_th)) {
        fail("n_th must be finite and non-negative");
    }
    if (gamma_phi() < -1e-12 * std::max(1.0, 1.0 / T2_star)) {
        fail("T2* exceeds 2 T1 (negative pure dephasing)");
    }
}

double gaussian_amplitude(double fwhm, double t) {
    const double x = 2.0 * t / fwhm;
    return std::pow(8.0 * std::log(2.0) / (M_PI * fwhm * fwhm), 0.25) * std::exp2(-x * x);
}

TemporalMode TemporalMode::gaussian(double fwhm, double center, double t_begin, double t_end,
                                    double dt) {
    if (!(fwhm > 0.0) || !(dt > 0.0) || !(t_end > t_begin)) {
        throw InvalidArgument("gaussian mode: need fwhm > 0, dt > 0 and a non-empty window");
    }
    TemporalMode m;
    m.fwhm_ = fwhm;
    m.center_ = center;
    m.t0_ = t_begin;
    const auto n = static_cast<std::size_t>(std::ceil((t_end - t_begin) / dt - 1e-9));
    m.dt_ = (t_end - t_begin) / static_cast<double>(n);
    m.samples_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        m.samples_[k] = gaussian_amplitude(fwhm, t_begin + m.dt_ * static_cast<double>(k) - center);
    }
    m.scale_ = 1.0;
    const double nrm = m.cumulative_weight(m.t_end());
    if (!(nrm > 0.0)) {
        throw InvalidArgument("gaussian mode has no weight inside the window");
    }
    m.scale_ = 1.0 / std::sqrt(nrm);
    for (auto& s : m.samples_) {
        s *= m.scale_;
    }
    return m;
}

double TemporalMode::cumulative_weight(double t) const {
    const double c = std::sqrt(8.0 * std::log(2.0)) / fwhm_;
    const double hi = std::clamp(t, t_begin(), t_end());
    return scale_ * scale_ * 0.5 * (std::erf(c * (hi - center_)) - std::erf(c * (t0_ - center_)));
}

Complex TemporalMode::at(double t) const {
    return scale_ * gaussian_amplitude(fwhm_, t - center_);
}

std::vector<double> TemporalMode::times() const {
    std::vector<double> t(samples_.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = t0_ + dt_ * static_cast<double>(k);
    }
    return t;
}

double TemporalMode::norm_squared() const {
    double s = 0.0;
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const double w = (k == 0 || k + 1 == samples_.size()) ? 0.5 : 1.0;
        s += w * std::norm(samples_[k]);
    }
    return s * dt_;
}

double TemporalMode::peak_intensity() const {
    double best = 0.0;
    for (const auto& s : samples_) {
        best = std::max(best, std::norm(s));
    }
    // the grid may straddle the centre
    if (center_ >= t_begin() && center_ <= t_end()) {
        best = std::max(best, std::norm(at(center_)));
    }
    return best;
}

TemporalMode gaussian_input_mode(double fwhm, double span, double dt) {
    if (!(fwhm > 0.0)) {
        throw InvalidArgument("pulse length must be positive");
    }
    if (span < 4.0 * fwhm * (1.0 - 1e-12)) {
        throw InvalidArgument("mode span must be at least four pulse lengths");
    }
    if (dt > fwhm / 20.0 * (1.0 + 1e-12)) {
        throw InvalidArgument("time step undersamples the pulse (dt > l/20)");
    }
    return TemporalMode::gaussian(fwhm, 0.0, -0.5 * span, 0.5 * span, dt);
}

ComplexMatrix LindbladModel::sigma(QubitLevel p, QubitLevel q) const {
    return tensor(qubit_projector(static_cast<int>(p), static_cast<int>(q)), identity(n_max));
}

QuantumState LindbladModel::ground_state() const {
    ComplexMatrix rho = ComplexMatrix::Zero(dim(), dim());
    rho(0, 0) = 1.0;
    return QuantumState(dims(), rho);
}

LindbladModel build_model(const SystemParams& p, int n_max) {
    if (n_max < 3) {
        throw InvalidArgument("cavity truncation n_max must be at least 3");
    }
    p.validate();
    LindbladModel m;
    m.params = p;
    m.n_max = n_max;
    m.a = tensor(identity(2), annihilation(n_max));
    const ComplexMatrix n = m.a.adjoint() * m.a;
    const ComplexMatrix sgg = m.sigma(QubitLevel::Ground, QubitLevel::Ground);
    const ComplexMatrix see = m.sigma(QubitLevel::Excited, QubitLevel::Excited);
    const ComplexMatrix sminus = m.sigma(QubitLevel::Ground, QubitLevel::Excited);
    m.hamiltonian = p.chi * (n * sgg - n * see);
    m.drive_coupling = std::sqrt(p.kappa_ex);

    m.collapse.push_back({"cavity", std::sqrt(p.kappa_tot()) * m.a});
    m.collapse.push_back({"qubit_decay", std::sqrt(p.gamma1()) * sminus});
    m.collapse.push_back({"qubit_excitation", std::sqrt(p.gamma2()) * sminus.adjoint()});
    m.collapse.push_back(
        {"qubit_dephasing", std::sqrt(2.0 * std::max(0.0, p.gamma_phi())) * see});
    return m;
}

Complex reflection_coefficient(const SystemParams& p, QubitLevel qubit, double omega) {
    const double omega_r = p.omega_c + (qubit == QubitLevel::Ground ? p.chi : -p.chi);
    const double d = omega - omega_r;
    return Complex(0.5 * (p.kappa_ex - p.kappa_in), d) /
           Complex(0.5 * p.kappa_tot(), -d);
}

double drive_induced_dephasing(const SystemParams& p, double photon_flux, double detuning) {
    if (photon_flux < 0.0) {
        throw InvalidArgument("photon flux must be non-negative");
    }
    const double k2 = 0.25 * p.kappa_tot() * p.kappa_tot();
    const double n_plus =
        p.kappa_ex * photon_flux / (k2 + (detuning + p.chi) * (detuning + p.chi));
    const double n_minus =
        p.kappa_ex * photon_flux / (k2 + (detuning - p.chi) * (detuning - p.chi));
    return p.kappa_tot() * p.chi * p.chi / (k2 + p.chi * p.chi + detuning * detuning) *
           (n_plus + n_minus);
}

double reflected_photon_number(const SystemParams& p, const TemporalMode& mode, double n_in) {
    if (std::abs(mode.norm_squared() - 1.0) > 1e-6) {
        throw InvalidArgument("reflected_photon_number: mode is not normalized");
    }
    const double dt = mode.dt();
    const auto& s = mode.samples();
    // zero-pad to at least 8 pulse lengths and 4x the sample count
    const auto min_len = static_cast<std::size_t>(std::ceil(8.0 * mode.fwhm() / dt));
    std::size_t n = 1;
    while (n < std::max(min_len, 4 * s.size())) {
        n <<= 1;
    }

    std::vector<Complex> in(n, Complex{}), out(n);
    std::copy(s.begin(), s.end(), in.begin());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_plan_mutex);
        plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }

    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double sk = (k <= n / 2) ? static_cast<double>(k)
                                       : static_cast<double>(k) - static_cast<double>(n);
        // an envelope e^{-i d t} in the rotating frame sits at omega_c + d
        const double omega = p.omega_c - kTwoPi * sk / (static_cast<double>(n) * dt);
        const double w = std::norm(out[k]);
        num += w * std::norm(reflection_coefficient(p, QubitLevel::Ground, omega));
        den += w;
    }
    return n_in * num / den;
}

ThermalBounds thermal_bounds(const SystemParams& p, const TemporalMode& mode) {
    ThermalBounds b;
    const double k = p.kappa_tot();
    if (p.chi > 0.0 && k > 0.0) {
        b.n_th_max = (k * k + p.chi * p.chi) / (4.0 * k * p.chi * p.chi) *
                     std::max(0.0, p.gamma_phi_echo());
    }
    const double peak = mode.peak_intensity();
    if (peak > 0.0) {
        b.n_th_pulse = p.kappa_ex * p.n_th / peak;
    }
    b.eta_th = 1.0 / (1.0 + 2.0 * b.n_th_pulse);
    return b;
}

}  // namespace qndsim
