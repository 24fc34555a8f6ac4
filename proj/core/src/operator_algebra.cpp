#include "qndsim/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qndsim/diagnostics.hpp"
#include "qndsim/errors.hpp"

namespace qndsim {
namespace {

// clipping below this is floating-point noise and is not reported
constexpr double kSilentClip = 1e-12;

std::size_t product(const std::vector<int>& dims) {
    std::size_t d = 1;
    for (int k : dims) {
        d *= static_cast<std::size_t>(k);
    }
    return d;
}

void check_finite(const ComplexMatrix& m) {
    if (!m.allFinite()) {
        throw InvalidArgument("matrix has non-finite entries");
    }
}

// Row-major digit decomposition of a flat index over `dims`.
std::vector<int> digits_of(std::size_t index, const std::vector<int>& dims) {
    std::vector<int> out(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        out[k] = static_cast<int>(index % static_cast<std::size_t>(dims[k]));
        index /= static_cast<std::size_t>(dims[k]);
    }
    return out;
}

}  // namespace

QuantumState::QuantumState(std::vector<int> dims, ComplexMatrix rho, const StateTolerances& tol)
    : dims_(std::move(dims)), rho_(std::move(rho)) {
    if (dims_.empty() || std::any_of(dims_.begin(), dims_.end(), [](int d) { return d < 1; })) {
        throw InvalidArgument("subsystem dimensions must be positive");
    }
    const auto d = product(dims_);
    if (rho_.rows() != rho_.cols() || static_cast<std::size_t>(rho_.rows()) != d) {
        throw InvalidArgument("density matrix size does not match subsystem dimensions");
    }
    check_finite(rho_);

    const double herm = max_abs(rho_ - rho_.adjoint());
    if (herm > tol.hermiticity) {
        std::ostringstream os;
        os << "matrix is not Hermitian (deviation " << herm << ")";
        throw NotAStateError(os.str());
    }
    rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();

    const double tr = rho_.trace().real();
    if (std::abs(tr - 1.0) > tol.trace) {
        std::ostringstream os;
        os << "trace is " << tr << ", expected 1";
        throw NotAStateError(os.str());
    }

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho_);
    const double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -tol.positivity) {
        std::ostringstream os;
        os << "matrix has negative eigenvalue " << min_ev;
        throw NotAStateError(os.str());
    }
    if (min_ev < 0.0) {
        RealVector ev = es.eigenvalues();
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (ev[k] < 0.0) {
                repaired_weight_ -= ev[k];
                ev[k] = 0.0;
            }
        }
        ev /= ev.sum();
        rho_ = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
        if (repaired_weight_ > kSilentClip) {
            std::ostringstream os;
            os << "clipped negative eigenvalues (total weight " << repaired_weight_ << ")";
            warn(os.str());
        }
    }
}

QuantumState QuantumState::from_unnormalized(std::vector<int> dims, const ComplexMatrix& m,
                                             const StateTolerances& tol) {
    const Complex tr = m.trace();
    if (!(tr.real() > 0.0)) {
        throw NotAStateError("matrix has non-positive trace");
    }
    return QuantumState(std::move(dims), m / tr.real(), tol);
}

QuantumState QuantumState::pure(std::vector<int> dims, const ComplexVector& psi) {
    const double nrm = psi.norm();
    if (!(nrm > 0.0)) {
        throw InvalidArgument("zero state vector");
    }
    const ComplexVector v = psi / nrm;
    return QuantumState(std::move(dims), v * v.adjoint());
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b, std::size_t dimension_cap) {
    const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
    const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
    if (rows > dimension_cap || cols > dimension_cap) {
        std::ostringstream os;
        os << "tensor product dimension " << rows << "x" << cols << " exceeds cap "
           << dimension_cap;
        throw SizeError(os.str());
    }
    ComplexMatrix out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

ComplexMatrix tensor(std::span<const ComplexMatrix> factors, std::size_t dimension_cap) {
    if (factors.empty()) {
        throw InvalidArgument("tensor of an empty factor list");
    }
    ComplexMatrix out = factors[0];
    for (std::size_t k = 1; k < factors.size(); ++k) {
        out = tensor(out, factors[k], dimension_cap);
    }
    return out;
}

QuantumState tensor(const QuantumState& a, const QuantumState& b) {
    std::vector<int> dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return QuantumState(std::move(dims), tensor(a.matrix(), b.matrix()));
}

QuantumState partial_trace(const QuantumState& s, std::span<const int> keep) {
    if (keep.empty()) {
        throw InvalidArgument("partial_trace needs at least one subsystem to keep");
    }
    const auto& dims = s.dims();
    const int nsub = s.subsystem_count();
    std::vector<bool> kept(static_cast<std::size_t>(nsub), false);
    for (int k : keep) {
        if (k < 0 || k >= nsub) {
            throw InvalidArgument("partial_trace: subsystem index out of range");
        }
        kept[static_cast<std::size_t>(k)] = true;
    }

    std::vector<int> kept_dims;
    for (int k = 0; k < nsub; ++k) {
        if (kept[static_cast<std::size_t>(k)]) {
            kept_dims.push_back(dims[static_cast<std::size_t>(k)]);
        }
    }

    const int d = s.dim();
    std::vector<int> kept_index(static_cast<std::size_t>(d));
    std::vector<int> traced_index(static_cast<std::size_t>(d));
    for (int r = 0; r < d; ++r) {
        const auto dig = digits_of(static_cast<std::size_t>(r), dims);
        int ki = 0;
        int ti = 0;
        for (int k = 0; k < nsub; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            if (kept[uk]) {
                ki = ki * dims[uk] + dig[uk];
            } else {
                ti = ti * dims[uk] + dig[uk];
            }
        }
        kept_index[static_cast<std::size_t>(r)] = ki;
        traced_index[static_cast<std::size_t>(r)] = ti;
    }

    const auto dk = static_cast<Eigen::Index>(product(kept_dims));
    ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
    const auto& rho = s.matrix();
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r < d; ++r) {
            if (traced_index[static_cast<std::size_t>(r)] == traced_index[static_cast<std::size_t>(c)]) {
                out(kept_index[static_cast<std::size_t>(r)], kept_index[static_cast<std::size_t>(c)]) +=
                    rho(r, c);
            }
        }
    }
    return QuantumState(std::move(kept_dims), out);
}

ComplexMatrix partial_transpose(const ComplexMatrix& rho, std::span<const int> dims_span,
                                int subsystem) {
    const std::vector<int> dims(dims_span.begin(), dims_span.end());
    if (subsystem < 0 || subsystem >= static_cast<int>(dims.size())) {
        throw InvalidArgument("partial_transpose: subsystem index out of range");
    }
    const auto d = product(dims);
    if (rho.rows() != rho.cols() || static_cast<std::size_t>(rho.rows()) != d) {
        throw InvalidArgument("partial_transpose: matrix size does not match dimensions");
    }
    std::size_t stride = 1;
    for (std::size_t k = dims.size(); k-- > static_cast<std::size_t>(subsystem) + 1;) {
        stride *= static_cast<std::size_t>(dims[k]);
    }
    const auto ds = static_cast<std::size_t>(dims[static_cast<std::size_t>(subsystem)]);

    ComplexMatrix out(rho.rows(), rho.cols());
    for (std::size_t r = 0; r < d; ++r) {
        const std::size_t rs = (r / stride) % ds;
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t cs = (c / stride) % ds;
            // swap the subsystem digit between row and column
            const std::size_t r2 = r + (cs - rs) * stride;
            const std::size_t c2 = c + (rs - cs) * stride;
            out(static_cast<Eigen::Index>(r2), static_cast<Eigen::Index>(c2)) =
                rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
    return out;
}

ComplexMatrix partial_transpose(const QuantumState& s, int subsystem) {
    return partial_transpose(s.matrix(), s.dims(), subsystem);
}

RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double trace_norm_hermitian(const ComplexMatrix& m) {
    return hermitian_eigenvalues(m).cwiseAbs().sum();
}

double trace_distance(const QuantumState& a, const QuantumState& b) {
    if (a.dims() != b.dims()) {
        throw InvalidArgument("trace_distance: dimension mismatch");
    }
    return 0.5 * trace_norm_hermitian(a.matrix() - b.matrix());
}

double negativity(const QuantumState& s, int cut) {
    const double n = 0.5 * (trace_norm_hermitian(partial_transpose(s, cut)) - 1.0);
    return std::max(0.0, n);
}

double fidelity(const QuantumState& s, const QuantumState& target) {
    if (s.dims() != target.dims()) {
        throw InvalidArgument("fidelity: dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(s.matrix());
    const RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const ComplexMatrix sqrt_rho =
        es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    const ComplexMatrix inner = sqrt_rho * target.matrix() * sqrt_rho;
    const RealVector iev = hermitian_eigenvalues(0.5 * (inner + inner.adjoint()));
    const double tr = iev.cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(tr * tr, 0.0, 1.0);
}

double fidelity_to_pure(const QuantumState& s, const ComplexVector& psi) {
    if (psi.size() != s.dim()) {
        throw InvalidArgument("fidelity_to_pure: dimension mismatch");
    }
    const ComplexVector v = psi / psi.norm();
    return std::clamp((v.adjoint() * s.matrix() * v)(0, 0).real(), 0.0, 1.0);
}

ComplexMatrix identity(int dim) { return ComplexMatrix::Identity(dim, dim); }

ComplexMatrix annihilation(int dim) {
    ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

ComplexMatrix qubit_projector(int p, int q) {
    if (p < 0 || p > 1 || q < 0 || q > 1) {
        throw InvalidArgument("qubit_projector: index must be 0 or 1");
    }
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(p, q) = 1.0;
    return m;
}

ComplexVector fock_vector(int dim, int n) {
    if (n < 0 || n >= dim) {
        throw InvalidArgument("fock_vector: level outside truncation");
    }
    ComplexVector v = ComplexVector::Zero(dim);
    v[n] = 1.0;
    return v;
}

ComplexVector coherent_vector(int dim, Complex alpha) {
    ComplexVector v(dim);
    Complex term = 1.0;
    for (int n = 0; n < dim; ++n) {
        if (n > 0) {
            term *= alpha / std::sqrt(static_cast<double>(n));
        }
        v[n] = term;
    }
    return v / v.norm();
}

QuantumState thermal_state(int dim, double mean_photons) {
    if (mean_photons < 0.0) {
        throw InvalidArgument("thermal_state: negative mean photon number");
    }
    ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
    const double ratio = mean_photons / (1.0 + mean_photons);
    double p = 1.0;
    for (int n = 0; n < dim; ++n) {
        rho(n, n) = p;
        p *= ratio;
    }
    return QuantumState::from_unnormalized({dim}, rho);
}

ComplexMatrix conjugate_by(const ComplexMatrix& u, const ComplexMatrix& rho) {
    return u * rho * u.adjoint();
}

double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace qndsim
