#pragma once

#include <cstdint>
#include <vector>

#include "qndsim/operator_algebra.hpp"

namespace qndsim {

/// Uniform quadrature bins. Quadratures are in vacuum units, Var(x) = 1/2
/// for the vacuum.
struct QuadratureGrid {
    double x_min = -5.0;
    double x_max = 5.0;
    int bins = 201;

    double width() const { return (x_max - x_min) / bins; }
    double center(int j) const { return x_min + (j + 0.5) * width(); }
    void validate() const;
};

/// Phase-independent part of a quadrature POVM: Pi_theta(x_j) = U Pi0_j U^dag
/// with U = diag(e^{i m theta}); Pi0_j is real symmetric.
struct QuadratureBasis {
    double eta = 1.0;
    int n_tomo = 0;
    QuadratureGrid grid;
    std::vector<Eigen::MatrixXd> elements;
};

struct QuadraturePOVM {
    double theta = 0.0;
    double eta = 1.0;
    int n_tomo = 0;
    QuadratureGrid grid;
    std::vector<ComplexMatrix> elements;
};

/// Throws InvalidArgument when N_tomo < 4, the grid does not reach +-5, or
/// the bins miss more than 1e-4 of the identity.
QuadratureBasis build_quadrature_basis(double eta, int n_tomo, const QuadratureGrid& grid = {});
QuadraturePOVM build_povm(double theta, double eta, int n_tomo, const QuadratureGrid& grid = {});

/// Fock-basis loss channel of transmittance eta on one subsystem.
QuantumState apply_loss(const QuantumState& rho, double eta, int subsystem);
/// Heisenberg-picture (adjoint) loss channel on a single-mode operator.
ComplexMatrix apply_loss_adjoint(const ComplexMatrix& op, double eta);

enum class QubitBasis { None = -1, X = 0, Y = 1, Z = 2 };

struct SettingRecord {
    double theta = 0.0;
    QubitBasis basis = QubitBasis::None;
    int qubit_outcome = -1;  // 0: +1 eigenstate (g for Z), 1: -1 eigenstate
    std::uint64_t shots = 0;
    std::vector<std::uint64_t> counts;  // one per bin
};

struct MeasurementRecord {
    QuadratureGrid grid;
    std::vector<SettingRecord> settings;
    bool composite() const;
    void validate() const;
};

/// Phases k pi / n for k = 0..n-1.
std::vector<double> phase_settings(int n);

/// Binned quadrature samples from rho (a single mode of dimension <= N_tomo).
/// Each setting uses its own mt19937_64 stream seeded by (seed, setting index).
MeasurementRecord sample(const QuantumState& rho, const std::vector<double>& thetas,
                         std::uint64_t shots, double eta, std::uint64_t seed,
                         const QuadratureGrid& grid = {});

/// Joint qubit (X, Y, Z) and quadrature samples from a qubit x mode state.
/// Every (basis, theta) pair gets `shots` shots, split by qubit outcome into
/// two settings.
MeasurementRecord sample_composite(const QuantumState& rho, const std::vector<double>& thetas,
                                   std::uint64_t shots, double eta, std::uint64_t seed,
                                   const QuadratureGrid& grid = {});

struct MleOptions {
    int n_tomo = 5;
    int max_iterations = 10000;
    double tolerance = 1e-10;  // stop when the per-shot log-likelihood gain drops below
    bool correct_efficiency = true;
    double eta = 1.0;          // used when correct_efficiency is set
};

struct MleResult {
    QuantumState state;
    int iterations = 0;
    std::vector<double> log_likelihood;  // per shot, one entry per accepted iterate
    bool converged = false;
};

/// Iterative R rho R maximum likelihood on single-mode records.
MleResult mle_reconstruct(const MeasurementRecord& record, const MleOptions& options);

/// Joint reconstruction of qubit x mode records; needs all three qubit bases.
MleResult composite_mle(const MeasurementRecord& record, const MleOptions& options);

struct WignerGrid {
    std::vector<double> x;  // Re(alpha)
    std::vector<double> p;  // Im(alpha)
    Eigen::MatrixXd values;  // values(i, j) at (x[i], p[j])
    /// Riemann sum of W over the grid.
    double integral() const;
};

/// W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^dag] on a square grid of
/// half-width `extent` (>= 3) in the alpha plane.
WignerGrid wigner(const QuantumState& rho, double extent = 3.0, int points = 121);
double wigner_at(const QuantumState& rho, Complex alpha);

/// Fock populations of a single-mode state.
std::vector<double> photon_distribution(const QuantumState& rho);

/// Pad a single-mode state with empty Fock levels.
QuantumState pad_mode(const QuantumState& rho, int dim);

}  // namespace qndsim
