#pragma once

// Internal: time-dependent Lindblad generator on sparse operators and a
// fixed-step RK4 driver over stacks of matrices.

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "qndsim/operator_algebra.hpp"

namespace qndsim::detail {

using SparseC = Eigen::SparseMatrix<Complex>;
using Coefficient = std::function<Complex(double)>;

struct OpTerm {
    SparseC op;
    Coefficient coef;  // empty means constant 1
};

/// Generator frozen at one instant.
struct Snapshot {
    SparseC heff;      // H - (i/2) sum L^dag L
    SparseC heff_adj;  // its adjoint
    std::vector<SparseC> jumps;
    std::vector<SparseC> jumps_adj;

    /// out = L(rho); works for non-Hermitian rho too.
    void apply(const ComplexMatrix& rho, ComplexMatrix& out) const;
};

class Generator {
  public:
    explicit Generator(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    void add_hamiltonian(const ComplexMatrix& op, Coefficient coef = {});
    void add_jump(const ComplexMatrix& op);
    void add_jump(std::vector<OpTerm> terms);

    Snapshot at(double t) const;

  private:
    int dim_;
    SparseC static_h_;
    bool has_static_h_ = false;
    std::vector<OpTerm> dynamic_h_;
    std::vector<SparseC> static_jumps_;
    std::vector<std::vector<OpTerm>> dynamic_jumps_;
};

SparseC to_sparse(const ComplexMatrix& m, double tol = 0.0);

using MatrixStack = std::vector<ComplexMatrix>;
using StackDerivative = std::function<void(double, const MatrixStack&, MatrixStack&)>;

/// Classic RK4 on a list of matrices. `work` is resized on demand.
class Rk4 {
  public:
    void step(double t, double h, MatrixStack& y, const StackDerivative& f);

  private:
    MatrixStack k1_, k2_, k3_, k4_, tmp_;
};

/// Splits [t0, t1] into the fewest equal steps no longer than max_step.
int step_count(double t0, double t1, double max_step);

}  // namespace qndsim::detail
