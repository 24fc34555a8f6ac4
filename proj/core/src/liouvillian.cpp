#include "liouvillian.hpp"

#include <cmath>

#include "qndsim/errors.hpp"

namespace qndsim::detail {

SparseC to_sparse(const ComplexMatrix& m, double tol) {
    SparseC s = m.sparseView(1.0, tol);
    s.makeCompressed();
    return s;
}

void Snapshot::apply(const ComplexMatrix& rho, ComplexMatrix& out) const {
    out.noalias() = -kI * (heff * rho);
    out.noalias() += kI * (rho * heff_adj);
    for (std::size_t k = 0; k < jumps.size(); ++k) {
        const ComplexMatrix lr = jumps[k] * rho;
        out.noalias() += lr * jumps_adj[k];
    }
}

void Generator::add_hamiltonian(const ComplexMatrix& op, Coefficient coef) {
    if (op.rows() != dim_ || op.cols() != dim_) {
        throw InvalidArgument("generator: operator dimension mismatch");
    }
    if (coef) {
        dynamic_h_.push_back({to_sparse(op), std::move(coef)});
        return;
    }
    if (has_static_h_) {
        static_h_ += to_sparse(op);
    } else {
        static_h_ = to_sparse(op);
        has_static_h_ = true;
    }
}

void Generator::add_jump(const ComplexMatrix& op) {
    if (op.rows() != dim_ || op.cols() != dim_) {
        throw InvalidArgument("generator: operator dimension mismatch");
    }
    if (op.cwiseAbs().maxCoeff() == 0.0) {
        return;
    }
    static_jumps_.push_back(to_sparse(op));
}

void Generator::add_jump(std::vector<OpTerm> terms) {
    for (const auto& t : terms) {
        if (t.op.rows() != dim_ || t.op.cols() != dim_) {
            throw InvalidArgument("generator: operator dimension mismatch");
        }
    }
    dynamic_jumps_.push_back(std::move(terms));
}

Snapshot Generator::at(double t) const {
    Snapshot s;
    SparseC h(dim_, dim_);
    if (has_static_h_) {
        h = static_h_;
    }
    for (const auto& term : dynamic_h_) {
        h += term.coef(t) * term.op;
    }

    s.jumps = static_jumps_;
    for (const auto& terms : dynamic_jumps_) {
        SparseC l(dim_, dim_);
        for (const auto& term : terms) {
            l += (term.coef ? term.coef(t) : Complex(1.0)) * term.op;
        }
        s.jumps.push_back(std::move(l));
    }
    SparseC ldl(dim_, dim_);
    s.jumps_adj.reserve(s.jumps.size());
    for (const auto& l : s.jumps) {
        SparseC ladj = l.adjoint();
        ldl += SparseC(ladj * l);
        s.jumps_adj.push_back(std::move(ladj));
    }
    s.heff = h - Complex(0.0, 0.5) * ldl;
    s.heff.makeCompressed();
    s.heff_adj = s.heff.adjoint();
    return s;
}

void Rk4::step(double t, double h, MatrixStack& y, const StackDerivative& f) {
    const std::size_t n = y.size();
    for (auto* buf : {&k1_, &k2_, &k3_, &k4_, &tmp_}) {
        if (buf->size() != n) {
            buf->assign(n, ComplexMatrix());
        }
    }
    f(t, y, k1_);
    for (std::size_t i = 0; i < n; ++i) {
        tmp_[i] = y[i] + (0.5 * h) * k1_[i];
    }
    f(t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) {
        tmp_[i] = y[i] + (0.5 * h) * k2_[i];
    }
    f(t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) {
        tmp_[i] = y[i] + h * k3_[i];
    }
    f(t + h, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
}

int step_count(double t0, double t1, double max_step) {
    if (!(max_step > 0.0)) {
        throw InvalidArgument("step size must be positive");
    }
    const double len = t1 - t0;
    if (len <= 0.0) {
        return 0;
    }
    return std::max(1, static_cast<int>(std::ceil(len / max_step - 1e-9)));
}

}  // namespace qndsim::detail
