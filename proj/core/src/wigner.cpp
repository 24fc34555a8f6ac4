#include <cmath>
#include <numbers>

#include "qndsim/errors.hpp"
#include "qndsim/parallel.hpp"
#include "qndsim/tomography.hpp"

namespace qndsim {

namespace {

// <m|D(beta)|n> from the associated-Laguerre closed form.
ComplexMatrix displacement_elements(int dim, Complex beta) {
    const double r2 = std::norm(beta);
    const double gauss = std::exp(-0.5 * r2);
    ComplexMatrix d(dim, dim);
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            const int lo = std::min(m, n);
            const int k = std::abs(m - n);
            const double norm = std::exp(0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + k + 1.0)));
            const Complex base = m >= n ? beta : -std::conj(beta);
            d(m, n) = norm * std::pow(base, k) * gauss *
                      std::assoc_laguerre(static_cast<unsigned>(lo), static_cast<unsigned>(k), r2);
        }
    }
    return d;
}

void require_single_mode(const QuantumState& rho) {
    if (rho.subsystem_count() != 1) {
        throw InvalidArgument("Wigner function needs a single-mode state");
    }
}

}  // namespace

double wigner_at(const QuantumState& rho, Complex alpha) {
    require_single_mode(rho);
    const ComplexMatrix d = displacement_elements(rho.dim(), 2.0 * alpha);
    Complex acc = 0.0;
    for (int n = 0; n < rho.dim(); ++n) {
        const double parity = n % 2 == 0 ? 1.0 : -1.0;
        for (int m = 0; m < rho.dim(); ++m) {
            acc += rho.matrix()(n, m) * d(m, n) * parity;
        }
    }
    return 2.0 / std::numbers::pi * acc.real();
}

WignerGrid wigner(const QuantumState& rho, double extent, int points) {
    require_single_mode(rho);
    if (!(extent >= 3.0)) {
        throw InvalidArgument("Wigner grid must span at least +-3");
    }
    if (points < 2) {
        throw InvalidArgument("Wigner grid needs at least two points per axis");
    }
    WignerGrid out;
    out.x.resize(points);
    out.p.resize(points);
    for (int i = 0; i < points; ++i) {
        out.x[i] = -extent + 2.0 * extent * i / (points - 1);
        out.p[i] = out.x[i];
    }
    out.values.resize(points, points);
    parallel_for(static_cast<std::size_t>(points), [&](std::size_t i) {
        for (int j = 0; j < points; ++j) {
            out.values(i, j) = wigner_at(rho, Complex(out.x[i], out.p[j]));
        }
    });
    return out;
}

double WignerGrid::integral() const {
    if (x.size() < 2 || p.size() < 2) {
        return 0.0;
    }
    const double dx = x[1] - x[0];
    const double dp = p[1] - p[0];
    return values.sum() * dx * dp;
}

}  // namespace qndsim
