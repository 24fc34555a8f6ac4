#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/protocol.hpp"
#include "qndsim/tomography.hpp"

using namespace qndsim;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEta = 0.43;

QuantumState fock(int dim, int n) { return QuantumState::pure({dim}, fock_vector(dim, n)); }

QuantumState coherent(int dim, double mean_photons) {
    return QuantumState::pure({dim}, coherent_vector(dim, std::sqrt(mean_photons)));
}

double mean_photons(const QuantumState& rho) {
    const auto p = photon_distribution(rho);
    double n = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) n += static_cast<double>(k) * p[k];
    return n;
}

std::vector<double> bin_probabilities(const QuadraturePOVM& povm, const QuantumState& rho) {
    std::vector<double> p;
    for (const ComplexMatrix& e : povm.elements) p.push_back((e * rho.matrix()).trace().real());
    return p;
}

double quadrature_mean(const QuadraturePOVM& povm, const QuantumState& rho) {
    const auto p = bin_probabilities(povm, rho);
    double m = 0.0;
    for (int j = 0; j < povm.grid.bins; ++j) m += p[j] * povm.grid.center(j);
    return m;
}

MleOptions options(bool correct, int n_tomo = 5) {
    MleOptions o;
    o.n_tomo = n_tomo;
    o.correct_efficiency = correct;
    o.eta = kEta;
    return o;
}

QuantumState product_plus_vacuum() {
    ComplexVector psi = ComplexVector::Zero(6);
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    return QuantumState::pure({2, 3}, psi);
}

}  // namespace

TEST(QuadraturePOVM, CompleteAndPositive) {
    for (double eta : {1.0, kEta}) {
        for (double theta : {0.0, 0.7, 2.0}) {
            const QuadraturePOVM povm = build_povm(theta, eta, 6);
            ComplexMatrix sum = ComplexMatrix::Zero(6, 6);
            for (const ComplexMatrix& e : povm.elements) {
                sum += e;
                EXPECT_LT(max_abs(e - e.adjoint()), 1e-14);
                EXPECT_GE(hermitian_eigenvalues(e).minCoeff(), -1e-12);
            }
            EXPECT_LT(max_abs(sum - identity(6)), 1e-6);
        }
    }
}

TEST(QuadraturePOVM, Preconditions) {
    EXPECT_THROW(build_povm(0.0, 1.0, 3), InvalidArgument);
    EXPECT_THROW(build_povm(0.0, 1.2, 5), InvalidArgument);
    QuadratureGrid narrow;
    narrow.x_min = -1.5;
    narrow.x_max = 1.5;
    EXPECT_THROW(build_povm(0.0, 1.0, 5, narrow), InvalidArgument);
}

TEST(QuadraturePOVM, VacuumAndSinglePhotonDensities) {
    const QuadraturePOVM povm = build_povm(0.4, 1.0, 5);
    const auto p0 = bin_probabilities(povm, fock(5, 0));
    const auto p1 = bin_probabilities(povm, fock(5, 1));
    const double w = povm.grid.width();
    for (int j = 0; j < povm.grid.bins; ++j) {
        const double a = povm.grid.center(j) - 0.5 * w;
        const double b = a + w;
        EXPECT_NEAR(p0[j], oracle::simpson(oracle::vacuum_pdf, a, b, 16), 1e-9);
        EXPECT_NEAR(p1[j], oracle::simpson(oracle::fock1_pdf, a, b, 16), 1e-9);
    }
}

TEST(QuadraturePOVM, LossyPhotonDensity) {
    const QuadraturePOVM povm = build_povm(1.1, kEta, 5);
    const auto p = bin_probabilities(povm, fock(5, 1));
    const double w = povm.grid.width();
    for (int j = 0; j < povm.grid.bins; ++j) {
        const double a = povm.grid.center(j) - 0.5 * w;
        EXPECT_NEAR(p[j], oracle::simpson([](double x) { return oracle::lossy_fock1_pdf(x, kEta); }, a, a + w, 16),
                    1e-9);
    }
}

TEST(QuadraturePOVM, CoherentMeanShrinksWithSqrtEta) {
    const QuantumState c = coherent(10, 0.36);
    const QuadratureGrid wide{-7.0, 7.0, 281};
    for (double theta : {0.0, 0.5, 1.3}) {
        const double expected = std::sqrt(2.0) * 0.6 * std::cos(theta);
        EXPECT_NEAR(quadrature_mean(build_povm(theta, 1.0, 10, wide), c), expected, 1e-6);
        EXPECT_NEAR(quadrature_mean(build_povm(theta, kEta, 10, wide), c), std::sqrt(kEta) * expected, 1e-6);
    }
    EXPECT_NEAR(quadrature_mean(build_povm(0.0, 1.0, 10, wide), c),
                -quadrature_mean(build_povm(kPi, 1.0, 10, wide), c), 1e-9);
}

TEST(LossChannel, PhotonNumberScalesAndAdjointIsDual) {
    const QuantumState c = coherent(10, 0.5);
    EXPECT_NEAR(mean_photons(apply_loss(c, kEta, 0)), kEta * mean_photons(c), 1e-12);
    std::mt19937_64 rng(31);
    const QuantumState rho({5}, oracle::random_density(5, rng));
    const ComplexMatrix op = oracle::random_density(5, rng);
    const Complex lhs = (op * apply_loss(rho, 0.6, 0).matrix()).trace();
    const Complex rhs = (apply_loss_adjoint(op, 0.6) * rho.matrix()).trace();
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-13);
}

TEST(Sampling, VacuumMomentsAndDeterminism) {
    const MeasurementRecord r = sample(fock(4, 0), {0.3}, 200000, 1.0, 7);
    const SettingRecord& s = r.settings[0];
    double m = 0.0, m2 = 0.0;
    for (int j = 0; j < r.grid.bins; ++j) {
        const double x = r.grid.center(j);
        m += x * static_cast<double>(s.counts[j]);
        m2 += x * x * static_cast<double>(s.counts[j]);
    }
    m /= static_cast<double>(s.shots);
    m2 /= static_cast<double>(s.shots);
    EXPECT_NEAR(m, 0.0, 5.0 * std::sqrt(0.5 / 200000.0));
    // bin width adds w^2/12 to the variance
    EXPECT_NEAR(m2 - m * m, 0.5 + r.grid.width() * r.grid.width() / 12.0, 0.01);
    const MeasurementRecord again = sample(fock(4, 0), {0.3}, 200000, 1.0, 7);
    EXPECT_EQ(again.settings[0].counts, s.counts);
}

TEST(Sampling, LossyPhotonChiSquare) {
    const std::uint64_t shots = 100000;
    const MeasurementRecord r = sample(fock(4, 1), {0.0}, shots, kEta, 11);
    const double w = r.grid.width();
    double chi2 = 0.0;
    int used = 0;
    for (int j = 0; j < r.grid.bins; ++j) {
        const double a = r.grid.center(j) - 0.5 * w;
        const double e = static_cast<double>(shots) *
                         oracle::simpson([](double x) { return oracle::lossy_fock1_pdf(x, kEta); }, a, a + w, 16);
        if (e < 5.0) continue;
        const double d = static_cast<double>(r.settings[0].counts[j]) - e;
        chi2 += d * d / e;
        ++used;
    }
    ASSERT_GT(used, 50);
    EXPECT_LT(chi2, used + 5.0 * std::sqrt(2.0 * used));
}

TEST(Mle, NeedsEnoughPhases) {
    const MeasurementRecord r = sample(fock(4, 0), phase_settings(10), 1000, 1.0, 1);
    EXPECT_THROW(mle_reconstruct(r, options(false)), InvalidArgument);
}

TEST(Mle, VacuumReconstruction) {
    const MeasurementRecord r = sample(fock(5, 0), phase_settings(100), 10000, 1.0, 3);
    const MleResult res = mle_reconstruct(r, options(false));
    EXPECT_GT(fidelity_to_pure(res.state, fock_vector(5, 0)), 0.995);
}

TEST(Mle, LikelihoodIsMonotone) {
    const MeasurementRecord r = sample(coherent(6, 0.3), phase_settings(40), 5000, kEta, 5);
    const MleResult res = mle_reconstruct(r, options(true));
    ASSERT_GT(res.log_likelihood.size(), 2u);
    for (std::size_t k = 1; k < res.log_likelihood.size(); ++k) {
        EXPECT_GE(res.log_likelihood[k], res.log_likelihood[k - 1] - 1e-12) << k;
    }
    EXPECT_TRUE(res.converged);
}

TEST(Mle, LossyCoherentUncorrectedAndCorrected) {
    const MeasurementRecord r = sample(coherent(8, 0.137), phase_settings(100), 10000, kEta, 2024);
    const MleResult raw = mle_reconstruct(r, options(false));
    EXPECT_NEAR(mean_photons(raw.state), 0.058, 0.006);
    EXPECT_GT(fidelity_to_pure(raw.state, coherent_vector(5, std::sqrt(kEta * 0.137))), 0.99);
    const MleResult fixed = mle_reconstruct(r, options(true));
    EXPECT_NEAR(mean_photons(fixed.state), 0.137, 0.01);
    EXPECT_GT(fidelity_to_pure(fixed.state, coherent_vector(5, std::sqrt(0.137))), 0.99);
}

TEST(Mle, RoundTripsWithMatchedEfficiency) {
    const std::vector<QuantumState> states{fock(5, 0), fock(5, 1), coherent(5, 0.137), thermal_state(5, 0.1)};
    std::uint64_t seed = 100;
    for (const QuantumState& s : states) {
        const MeasurementRecord r = sample(s, phase_settings(100), 10000, kEta, seed++);
        const MleResult res = mle_reconstruct(r, options(true));
        EXPECT_GT(fidelity(res.state, s), 0.98) << "seed " << seed - 1;
    }
}

TEST(Mle, EfficiencyCorrectionConsistency) {
    const QuantumState s = coherent(5, 0.3);
    const MleResult smeared = mle_reconstruct(sample(s, phase_settings(100), 10000, kEta, 41), options(true));
    const MleResult clean = mle_reconstruct(sample(s, phase_settings(100), 10000, 1.0, 42), options(false));
    EXPECT_GT(fidelity(smeared.state, clean.state), 0.98);
    EXPECT_NEAR(mean_photons(smeared.state), mean_photons(clean.state), 0.02);
}

TEST(CompositeMle, ProductStateIsSeparable) {
    const MeasurementRecord r = sample_composite(product_plus_vacuum(), phase_settings(30), 5000, kEta, 8);
    const MleResult res = composite_mle(r, options(false, 3));
    EXPECT_LT(negativity(res.state, 1), 0.01);
}

TEST(CompositeMle, IdealCompositeThroughLoss) {
    const QuantumState ideal = ideal_composite(0.165, 2);
    const MeasurementRecord r = sample_composite(ideal, phase_settings(100), 10000, kEta, 77);
    const double uncorrected = negativity(composite_mle(r, options(false, 3)).state, 1);
    EXPECT_NEAR(uncorrected, 0.159, 0.03);
    // noiseless target: negativity of the lossy state itself
    EXPECT_NEAR(uncorrected, negativity(apply_loss(ideal, kEta, 1), 1), 0.01);
    EXPECT_NEAR(negativity(composite_mle(r, options(true, 3)).state, 1), 0.346, 0.03);
}

TEST(CompositeMle, MissingBasisAndWrongRecordType) {
    MeasurementRecord r = sample_composite(product_plus_vacuum(), phase_settings(20), 200, 1.0, 9);
    const MeasurementRecord single = sample(fock(4, 0), phase_settings(20), 200, 1.0, 9);
    EXPECT_THROW(composite_mle(single, options(false, 3)), InvalidArgument);
    EXPECT_THROW(mle_reconstruct(r, options(false)), InvalidArgument);
    std::erase_if(r.settings, [](const SettingRecord& s) { return s.basis == QubitBasis::Y; });
    EXPECT_THROW(composite_mle(r, options(false, 3)), InvalidArgument);
}

TEST(CompositeMle, ModeMarginalMatchesSingleModeReconstruction) {
    const QuantumState ideal = ideal_composite(0.165, 2);
    const MeasurementRecord r = sample_composite(ideal, phase_settings(100), 10000, kEta, 55);
    const MleResult joint = composite_mle(r, options(true, 3));
    MeasurementRecord z{r.grid, {}};
    for (const SettingRecord& s : r.settings) {
        if (s.basis != QubitBasis::Z) continue;
        auto it = std::find_if(z.settings.begin(), z.settings.end(),
                               [&](const SettingRecord& o) { return o.theta == s.theta; });
        if (it == z.settings.end()) {
            z.settings.push_back(SettingRecord{s.theta, QubitBasis::None, -1, s.shots, s.counts});
        } else {
            it->shots += s.shots;
            for (std::size_t j = 0; j < s.counts.size(); ++j) it->counts[j] += s.counts[j];
        }
    }
    const MleResult single = mle_reconstruct(z, options(true, 4));
    const int keep[] = {1};
    const QuantumState marginal = pad_mode(partial_trace(joint.state, keep), 4);
    EXPECT_GT(fidelity(marginal, single.state), 0.98);
}

TEST(Wigner, VacuumAndSinglePhotonAtOrigin) {
    EXPECT_NEAR(wigner_at(fock(4, 0), 0.0), 2.0 / kPi, 1e-12);
    EXPECT_NEAR(wigner_at(fock(4, 1), 0.0), -2.0 / kPi, 1e-12);
    // Gaussian falloff of the vacuum: W(alpha) = (2/pi) exp(-2|alpha|^2)
    EXPECT_NEAR(wigner_at(fock(4, 0), {0.5, -0.3}), 2.0 / kPi * std::exp(-2.0 * 0.34), 1e-12);
}

TEST(Wigner, CoherentPeakAndNormalization) {
    const Complex a0(0.5, 0.3);
    const QuantumState c = QuantumState::pure({20}, coherent_vector(20, a0));
    EXPECT_NEAR(wigner_at(c, a0), 2.0 / kPi, 1e-9);
    const WignerGrid g = wigner(c, 3.0, 121);
    Eigen::Index i = 0, j = 0;
    g.values.maxCoeff(&i, &j);
    EXPECT_NEAR(g.x[i], a0.real(), 0.05 + 1e-12);
    EXPECT_NEAR(g.p[j], a0.imag(), 0.05 + 1e-12);
    EXPECT_NEAR(g.integral(), 1.0, 1e-4);
    EXPECT_NEAR(wigner(fock(4, 1)).integral(), 1.0, 1e-4);
    EXPECT_THROW(wigner(c, 2.0), InvalidArgument);
}

TEST(PhotonDistribution, CoherentInput) {
    const auto p = photon_distribution(coherent(12, 0.165));
    EXPECT_NEAR(p[0], 0.8479, 1e-4);
    EXPECT_NEAR(p[1], 0.1399, 1e-4);
    EXPECT_NEAR(p[2], 0.0115, 1e-4);
}
