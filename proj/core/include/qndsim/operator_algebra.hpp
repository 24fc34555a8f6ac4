#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qndsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr std::size_t kDefaultDimensionCap = 4096;

/// Tolerances a density matrix must satisfy. Eigenvalues in [-positivity, 0)
/// are clipped (with a warning); anything more negative is rejected.
struct StateTolerances {
    double hermiticity = 1e-10;
    double trace = 1e-9;
    double positivity = 1e-9;
};

/// Density matrix over an ordered tensor product of subsystems.
class QuantumState {
  public:
    QuantumState(std::vector<int> dims, ComplexMatrix rho, const StateTolerances& tol = {});

    /// Divides by the trace before validation.
    static QuantumState from_unnormalized(std::vector<int> dims, const ComplexMatrix& m,
                                          const StateTolerances& tol = {});
    static QuantumState pure(std::vector<int> dims, const ComplexVector& psi);

    const std::vector<int>& dims() const { return dims_; }
    int dim() const { return static_cast<int>(rho_.rows()); }
    int subsystem_count() const { return static_cast<int>(dims_.size()); }
    const ComplexMatrix& matrix() const { return rho_; }

    /// Amount clipped from negative eigenvalues at construction (0 if none).
    double repaired_weight() const { return repaired_weight_; }

  private:
    std::vector<int> dims_;
    ComplexMatrix rho_;
    double repaired_weight_ = 0.0;
};

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b,
                     std::size_t dimension_cap = kDefaultDimensionCap);
ComplexMatrix tensor(std::span<const ComplexMatrix> factors,
                     std::size_t dimension_cap = kDefaultDimensionCap);

QuantumState tensor(const QuantumState& a, const QuantumState& b);

/// Reduced state on the subsystems listed in `keep` (order of the original
/// subsystems is preserved).
QuantumState partial_trace(const QuantumState& s, std::span<const int> keep);

/// Partial transpose of a (not necessarily normalized) matrix with the given
/// subsystem dimensions.
ComplexMatrix partial_transpose(const ComplexMatrix& rho, std::span<const int> dims,
                                int subsystem);
ComplexMatrix partial_transpose(const QuantumState& s, int subsystem);

RealVector hermitian_eigenvalues(const ComplexMatrix& m);

/// Sum of |eigenvalues| of a Hermitian matrix.
double trace_norm_hermitian(const ComplexMatrix& m);

/// ||a - b||_1 / 2
double trace_distance(const QuantumState& a, const QuantumState& b);

/// (||rho^{T_cut}||_1 - 1) / 2 where subsystem `cut` is transposed.
double negativity(const QuantumState& s, int cut);

/// Uhlmann fidelity (squared convention): F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const QuantumState& s, const QuantumState& target);

/// <psi|rho|psi> for a normalized vector.
double fidelity_to_pure(const QuantumState& s, const ComplexVector& psi);

// Basic operators and states used throughout.
ComplexMatrix identity(int dim);
ComplexMatrix annihilation(int dim);
/// |p><q| on a two-level system, p,q in {0 (ground), 1 (excited)}.
ComplexMatrix qubit_projector(int p, int q);
ComplexVector fock_vector(int dim, int n);
/// Truncated coherent-state amplitudes, renormalized on the truncated space.
ComplexVector coherent_vector(int dim, Complex alpha);
QuantumState thermal_state(int dim, double mean_photons);

/// u rho u^dagger
ComplexMatrix conjugate_by(const ComplexMatrix& u, const ComplexMatrix& rho);

double max_abs(const ComplexMatrix& m);

}  // namespace qndsim
