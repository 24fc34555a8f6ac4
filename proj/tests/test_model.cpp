#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qndsim/dynamics.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/model.hpp"

using namespace qndsim;

namespace {

constexpr double kPi = std::numbers::pi;

double coherence_at(const Trajectory& tr, const LindbladModel& m, double t) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        if (std::abs(tr.times[k] - t) < std::abs(tr.times[best] - t)) best = k;
    }
    const ComplexMatrix op = m.sigma(QubitLevel::Excited, QubitLevel::Ground);
    return std::abs((op * tr.states[best].matrix()).trace());
}

QuantumState plus_vacuum(const LindbladModel& m) {
    ComplexVector psi = ComplexVector::Zero(m.dim());
    psi(0) = psi(m.n_max) = 1.0 / std::sqrt(2.0);
    return QuantumState::pure(m.dims(), psi);
}

}  // namespace

TEST(SystemParams, DerivedRatesIdentities) {
    const SystemParams p = SystemParams::device();
    EXPECT_NEAR(0.5 * (p.gamma1() + p.gamma2()), 1.0 / (2.0 * p.T1), 1e-9);
    // 0.015625 per microsecond
    EXPECT_NEAR(0.5 * (p.gamma1() + p.gamma2()) * 1e-6, 0.015625, 1e-12);
    EXPECT_NEAR(p.gamma_phi_total(), 1.0 / p.T2_star, 1e-12 / p.T2_star);
    EXPECT_NEAR(p.kappa_tot(), kTwoPi * 3.57e6, 1e-3);
    EXPECT_NEAR(p.n_B(), 0.067 / 1.134, 1e-15);
}

TEST(SystemParams, ValidationRejectsUnphysicalValues) {
    SystemParams p;
    p.kappa_in = -1.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = SystemParams{};
    p.readout_error_e = 1.5;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = SystemParams{};
    p.T2_star = 100e-6;  // 1/T2* < 1/(2 T1)
    EXPECT_THROW(p.validate(), InvalidArgument);
    EXPECT_NO_THROW(SystemParams::ideal().validate());
}

TEST(BuildModel, RejectsSmallTruncation) {
    EXPECT_THROW(build_model(SystemParams{}, 2), InvalidArgument);
}

TEST(BuildModel, HamiltonianHermitianAndRatesNonNegative) {
    const LindbladModel m = build_model(SystemParams{}, 6);
    EXPECT_LT(max_abs(m.hamiltonian - m.hamiltonian.adjoint()), 1e-9);
    EXPECT_EQ(m.collapse.size(), 4u);
}

TEST(BuildModel, NoCouplingNoDissipationKeepsCoherence) {
    SystemParams p = SystemParams::ideal();
    p.chi = 0.0;
    p.kappa_ex = 0.0;
    const LindbladModel m = build_model(p, 4);
    const ComplexMatrix n = m.a.adjoint() * m.a;
    const ComplexMatrix sz = m.sigma(QubitLevel::Excited, QubitLevel::Excited) -
                             m.sigma(QubitLevel::Ground, QubitLevel::Ground);
    EXPECT_LT(max_abs(m.hamiltonian * n - n * m.hamiltonian), 1e-12);
    EXPECT_LT(max_abs(m.hamiltonian * sz - sz * m.hamiltonian), 1e-12);
    const auto tr = evolve_field(m, [](double) { return Complex(0.0); }, 0.0, 2e-6, 5e-9, plus_vacuum(m), 50);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        EXPECT_NEAR(coherence_at(tr, m, tr.times[k]), 0.5, 1e-12);
    }
}

TEST(BuildModel, FreeCoherenceDecaysAtInverseT2Star) {
    const SystemParams p = SystemParams::device();
    const LindbladModel m = build_model(p, 4);
    const auto tr = evolve_field(m, [](double) { return Complex(0.0); }, 0.0, 4e-6, 1e-8, plus_vacuum(m), 10);
    const double rate = std::log(coherence_at(tr, m, 1e-6) / coherence_at(tr, m, 3e-6)) / 2e-6;
    EXPECT_NEAR(rate, 1.0 / 26e-6, 1e-6 / 26e-6);
}

TEST(GaussianMode, PeakIntensityAndNorm) {
    const TemporalMode f = gaussian_input_mode(500e-9, 4e-6, 2.5e-9);
    // sqrt(8 ln 2 / (pi l^2)) for l = 500 ns
    EXPECT_NEAR(std::norm(f.at(0.0)), 2657129.8810718404, 1e-3);
    EXPECT_NEAR(f.norm_squared(), 1.0, 1e-6);
}

TEST(GaussianMode, AmplitudeFwhmIsPulseLength) {
    const double dt = 1e-9;
    const TemporalMode f = gaussian_input_mode(500e-9, 4e-6, dt);
    const double peak = std::abs(f.at(0.0));
    const auto t = f.times();
    double left = 0.0, right = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (std::abs(f.samples()[k]) >= 0.5 * peak) {
            if (left == 0.0) left = t[k];
            right = t[k];
        }
    }
    EXPECT_NEAR(right - left, 500e-9, 2.0 * dt);
}

TEST(GaussianMode, Preconditions) {
    EXPECT_THROW(gaussian_input_mode(500e-9, 1.9e-6, 1e-9), InvalidArgument);
    EXPECT_THROW(gaussian_input_mode(500e-9, 4e-6, 30e-9), InvalidArgument);
}

TEST(Reflection, LosslessCavityHasUnitModulus) {
    SystemParams p;
    p.kappa_in = 0.0;
    for (int k = -200; k <= 200; ++k) {
        const double w = p.omega_c + kTwoPi * 1e5 * k;
        EXPECT_NEAR(std::abs(reflection_coefficient(p, QubitLevel::Ground, w)), 1.0, 1e-12);
        EXPECT_NEAR(std::abs(reflection_coefficient(p, QubitLevel::Excited, w)), 1.0, 1e-12);
    }
}

TEST(Reflection, DipDepthAtShiftedResonance) {
    const SystemParams p;
    const Complex r = reflection_coefficient(p, QubitLevel::Ground, p.omega_c + p.chi);
    // ((3.32 - 0.25) / 3.57)^2
    EXPECT_NEAR(std::norm(r), 0.7395036445950929, 1e-12);
    const Complex re = reflection_coefficient(p, QubitLevel::Excited, p.omega_c - p.chi);
    EXPECT_NEAR(std::norm(re), 0.7395036445950929, 1e-12);
}

TEST(Reflection, SymmetricAboutShiftedResonance) {
    const SystemParams p;
    for (double d : {1e5, 7e5, 2e6, 9e6}) {
        const double w0 = p.omega_c + p.chi;
        EXPECT_NEAR(std::abs(reflection_coefficient(p, QubitLevel::Ground, w0 + kTwoPi * d)),
                    std::abs(reflection_coefficient(p, QubitLevel::Ground, w0 - kTwoPi * d)), 1e-12);
    }
}

TEST(Reflection, DifferentialPhaseAtCavityFrequency) {
    const SystemParams p;
    const double dphi = std::arg(reflection_coefficient(p, QubitLevel::Excited, p.omega_c)) -
                        std::arg(reflection_coefficient(p, QubitLevel::Ground, p.omega_c));
    // 2 [atan(chi / (kappa_tot/2)) + atan(chi / ((kappa_ex - kappa_in)/2))]
    EXPECT_NEAR(dphi, 2.945446836846778, 1e-9);
    SystemParams matched = SystemParams::ideal();
    const double dm = std::arg(reflection_coefficient(matched, QubitLevel::Excited, matched.omega_c)) -
                      std::arg(reflection_coefficient(matched, QubitLevel::Ground, matched.omega_c));
    EXPECT_NEAR(dm, kPi, 1e-12);
}

TEST(DriveDephasing, ZeroAndLinear) {
    const SystemParams p;
    EXPECT_EQ(drive_induced_dephasing(p, 0.0, 1e6), 0.0);
    const double g1 = drive_induced_dephasing(p, 1e6, kTwoPi * 0.16e6);
    EXPECT_NEAR(drive_induced_dephasing(p, 2e6, kTwoPi * 0.16e6), 2.0 * g1, 1e-9 * g1);
    EXPECT_THROW(drive_induced_dephasing(p, -1.0, 0.0), InvalidArgument);
}

TEST(DriveDephasing, MatchesSimulatedRamseyDecaySlope) {
    const SystemParams p;
    const LindbladModel m = build_model(p, 8);
    const double delta = kTwoPi * 0.16e6;
    auto measured_rate = [&](double flux) {
        const double amp = std::sqrt(flux);
        const auto tr = evolve_field(
            m, [&](double t) { return amp * std::polar(1.0, -delta * t); }, 0.0, 2.5e-6,
            1e-9, plus_vacuum(m), 10);
        return std::log(coherence_at(tr, m, 1.0e-6) / coherence_at(tr, m, 2.0e-6)) / 1.0e-6;
    };
    const double base = measured_rate(0.0);
    const double slope = (measured_rate(1e6) - base) / 1e6;
    const double predicted = drive_induced_dephasing(p, 1e6, delta) / 1e6;
    EXPECT_NEAR(slope, predicted, 0.05 * predicted);
}

TEST(ReflectedPhotons, DeviceValue) {
    const TemporalMode f = gaussian_input_mode(500e-9, 8e-6, 2.5e-9);
    EXPECT_NEAR(reflected_photon_number(SystemParams{}, f, 0.165), 0.137, 0.003);
}

TEST(ReflectedPhotons, LosslessKeepsPhotons) {
    SystemParams p;
    p.kappa_in = 0.0;
    const TemporalMode f = gaussian_input_mode(500e-9, 8e-6, 2.5e-9);
    EXPECT_NEAR(reflected_photon_number(p, f, 0.165), 0.165, 1e-9);
}

TEST(ReflectedPhotons, NarrowbandLimitIsResonantReflectance) {
    // Long pulse on resonance (chi = 0 puts both branches at the carrier).
    SystemParams p;
    p.chi = 0.0;
    const TemporalMode f = gaussian_input_mode(40e-6, 400e-6, 0.5e-6);
    EXPECT_NEAR(reflected_photon_number(p, f, 1.0), 0.7395036445950929, 2e-4);
}

TEST(ReflectedPhotons, NonIncreasingInInternalLoss) {
    const TemporalMode f = gaussian_input_mode(500e-9, 8e-6, 2.5e-9);
    SystemParams p;
    double prev = 2.0;
    for (double kin : {0.0, 0.1e6, 0.25e6, 0.5e6, 1.0e6}) {
        p.kappa_in = kTwoPi * kin;
        const double n = reflected_photon_number(p, f, 1.0);
        EXPECT_LE(n, prev + 1e-12);
        prev = n;
    }
}

TEST(ThermalBounds, DeviceValues) {
    const TemporalMode f = gaussian_input_mode(500e-9, 8e-6, 2.5e-9);
    const ThermalBounds b = thermal_bounds(SystemParams{}, f);
    EXPECT_NEAR(b.n_th_max, 0.001, 0.0002);
    EXPECT_NEAR(b.n_th_max, 0.001090236605982038, 1e-9);
    EXPECT_NEAR(b.n_th_pulse, 0.004, 0.0005);
    SystemParams cold;
    cold.n_th = 0.0;
    EXPECT_EQ(thermal_bounds(cold, f).eta_th, 1.0);
}
