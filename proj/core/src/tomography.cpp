#include "qndsim/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "qndsim/errors.hpp"
#include "qndsim/parallel.hpp"

namespace qndsim {

namespace {

constexpr double kCompletenessLimit = 1e-4;
constexpr double kProbabilityFloor = 1e-12;
constexpr int kMinPhases = 20;

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGlNodes{0.1834346424956498, 0.5255324099163290,
                                         0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kGlWeights{0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

// Harmonic-oscillator eigenfunctions psi_0..psi_{n-1} at x (vacuum variance 1/2).
void hermite_functions(double x, int n, double* out) {
    out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    if (n > 1) {
        out[1] = std::sqrt(2.0) * x * out[0];
    }
    for (int k = 1; k + 1 < n; ++k) {
        out[k + 1] = std::sqrt(2.0 / (k + 1)) * x * out[k] - std::sqrt(double(k) / (k + 1)) * out[k - 1];
    }
}

// Kraus operators of a pure-loss channel of transmittance eta on dim levels.
std::vector<Eigen::MatrixXd> loss_kraus(int dim, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw InvalidArgument("efficiency must lie in [0, 1], got " + std::to_string(eta));
    }
    std::vector<Eigen::MatrixXd> out;
    for (int k = 0; k < dim; ++k) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
        for (int n = k; n < dim; ++n) {
            const double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
            const double w = std::exp(log_binom) * std::pow(eta, n - k) * std::pow(1.0 - eta, k);
            e(n - k, n) = std::sqrt(w);
        }
        if (e.cwiseAbs().maxCoeff() > 0.0) {
            out.push_back(std::move(e));
        }
    }
    return out;
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

// Bin elements flattened row-wise: row j holds vec(Pi0_j).
Eigen::MatrixXd flatten(const QuadratureBasis& basis) {
    const int d = basis.n_tomo;
    Eigen::MatrixXd m(basis.grid.bins, d * d);
    for (int j = 0; j < basis.grid.bins; ++j) {
        m.row(j) = Eigen::Map<const Eigen::RowVectorXd>(basis.elements[j].data(), d * d);
    }
    return m;
}

// Column of Re[(U^dag rho U)_{mn}] in the same order as flatten().
void phase_rotated_real(const ComplexMatrix& rho, double theta, double* out) {
    const int d = static_cast<int>(rho.rows());
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            const Complex ph = std::polar(1.0, (n - m) * theta);
            out[n * d + m] = (rho(m, n) * ph).real();
        }
    }
}

QubitBasis checked_basis(QubitBasis b) {
    if (b != QubitBasis::X && b != QubitBasis::Y && b != QubitBasis::Z) {
        throw InvalidArgument("qubit basis must be X, Y or Z");
    }
    return b;
}

// Eigenvector of the qubit measurement; outcome 0 is g for Z and + otherwise.
Eigen::Vector2cd qubit_vector(QubitBasis basis, int outcome) {
    const double s = 1.0 / std::sqrt(2.0);
    const double sign = outcome == 0 ? 1.0 : -1.0;
    switch (checked_basis(basis)) {
        case QubitBasis::X:
            return {s, sign * s};
        case QubitBasis::Y:
            return {s, Complex(0.0, sign * s)};
        default:
            return outcome == 0 ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
    }
}

// Mode block <psi|rho|psi> of a qubit x mode operator.
ComplexMatrix mode_block(const ComplexMatrix& rho, const Eigen::Vector2cd& psi, int d) {
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const Complex w = std::conj(psi(a)) * psi(b);
            if (w != Complex(0.0)) {
                out += w * rho.block(a * d, b * d, d, d);
            }
        }
    }
    return out;
}

std::mt19937_64 setting_stream(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

std::vector<std::uint64_t> draw_histogram(const Eigen::VectorXd& probs, std::uint64_t shots,
                                          std::mt19937_64& rng) {
    std::vector<double> w(probs.size());
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        w[j] = std::max(probs(j), 0.0);
    }
    std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
    std::vector<std::uint64_t> counts(w.size(), 0);
    for (std::uint64_t s = 0; s < shots; ++s) {
        ++counts[dist(rng)];
    }
    return counts;
}

// One measurement configuration for the likelihood engine. Single-mode
// records use a trivial qubit factor.
struct EngineSetting {
    double theta = 0.0;
    bool has_qubit = false;
    Eigen::Vector2cd psi;
};

class LikelihoodEngine {
  public:
    LikelihoodEngine(const MeasurementRecord& record, const QuadratureBasis& basis, bool composite)
        : d_(basis.n_tomo), composite_(composite), pi0_(flatten(basis)) {
        const int bins = basis.grid.bins;
        const auto s_count = static_cast<Eigen::Index>(record.settings.size());
        freq_.resize(bins, s_count);
        double total = 0.0;
        for (const auto& s : record.settings) {
            total += static_cast<double>(s.shots);
        }
        if (total <= 0.0) {
            throw InvalidArgument("measurement record holds no shots");
        }
        for (Eigen::Index s = 0; s < s_count; ++s) {
            const auto& rec = record.settings[s];
            for (int j = 0; j < bins; ++j) {
                freq_(j, s) = static_cast<double>(rec.counts[j]) / total;
            }
            EngineSetting es;
            es.theta = rec.theta;
            es.has_qubit = composite;
            if (composite) {
                es.psi = qubit_vector(rec.basis, rec.qubit_outcome);
            }
            settings_.push_back(es);
        }
    }

    int dim() const { return composite_ ? 2 * d_ : d_; }

    // Returns the per-shot log-likelihood and leaves probabilities in probs_.
    double evaluate(const ComplexMatrix& rho) {
        const auto s_count = static_cast<Eigen::Index>(settings_.size());
        Eigen::MatrixXd v(d_ * d_, s_count);
        for (Eigen::Index s = 0; s < s_count; ++s) {
            const auto& es = settings_[s];
            if (es.has_qubit) {
                phase_rotated_real(mode_block(rho, es.psi, d_), es.theta, v.col(s).data());
            } else {
                phase_rotated_real(rho, es.theta, v.col(s).data());
            }
        }
        probs_.noalias() = pi0_ * v;
        double ll = 0.0;
        for (Eigen::Index s = 0; s < s_count; ++s) {
            for (Eigen::Index j = 0; j < probs_.rows(); ++j) {
                const double f = freq_(j, s);
                if (f > 0.0) {
                    ll += f * std::log(std::max(probs_(j, s), kProbabilityFloor));
                }
            }
        }
        return ll;
    }

    // R = sum_j (f_j / p_j) Pi_j using the probabilities of the last evaluate().
    ComplexMatrix r_operator() const {
        const auto s_count = static_cast<Eigen::Index>(settings_.size());
        Eigen::MatrixXd w(probs_.rows(), s_count);
        for (Eigen::Index s = 0; s < s_count; ++s) {
            for (Eigen::Index j = 0; j < probs_.rows(); ++j) {
                const double f = freq_(j, s);
                w(j, s) = f > 0.0 ? f / std::max(probs_(j, s), kProbabilityFloor) : 0.0;
            }
        }
        const Eigen::MatrixXd rv = pi0_.transpose() * w;
        ComplexMatrix r = ComplexMatrix::Zero(dim(), dim());
        ComplexMatrix block(d_, d_);
        for (Eigen::Index s = 0; s < s_count; ++s) {
            const auto& es = settings_[s];
            for (int n = 0; n < d_; ++n) {
                for (int m = 0; m < d_; ++m) {
                    block(m, n) = rv(n * d_ + m, s) * std::polar(1.0, (m - n) * es.theta);
                }
            }
            if (es.has_qubit) {
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        r.block(a * d_, b * d_, d_, d_) += es.psi(a) * std::conj(es.psi(b)) * block;
                    }
                }
            } else {
                r += block;
            }
        }
        return r;
    }

  private:
    int d_;
    bool composite_;
    Eigen::MatrixXd pi0_;
    Eigen::MatrixXd freq_;
    Eigen::MatrixXd probs_;
    std::vector<EngineSetting> settings_;
};

ComplexMatrix sandwich(const ComplexMatrix& t, const ComplexMatrix& rho) {
    ComplexMatrix out = t * rho * t.adjoint();
    out = 0.5 * (out + out.adjoint()).eval();
    return out / out.trace().real();
}

MleResult run_mle(const MeasurementRecord& record, const MleOptions& options, bool composite) {
    record.validate();
    if (options.n_tomo < 2) {
        throw InvalidArgument("reconstruction needs at least two Fock levels");
    }
    if (options.max_iterations < 1) {
        throw InvalidArgument("max_iterations must be positive");
    }
    std::set<long long> phases;
    for (const auto& s : record.settings) {
        double t = std::fmod(s.theta, std::numbers::pi);
        if (t < 0.0) {
            t += std::numbers::pi;
        }
        phases.insert(std::llround(t * 1e9));
    }
    if (static_cast<int>(phases.size()) < kMinPhases) {
        throw InvalidArgument("reconstruction needs at least " + std::to_string(kMinPhases) +
                              " distinct phases in [0, pi)");
    }
    // Completeness is checked for N_tomo >= 4; smaller reconstructions reuse the
    // first rows of a larger basis, which are exact.
    const int basis_dim = std::max(options.n_tomo, 4);
    const double eta = options.correct_efficiency ? options.eta : 1.0;
    QuadratureBasis basis = build_quadrature_basis(eta, basis_dim, record.grid);
    if (basis_dim != options.n_tomo) {
        for (auto& e : basis.elements) {
            e = e.topLeftCorner(options.n_tomo, options.n_tomo).eval();
        }
        basis.n_tomo = options.n_tomo;
    }

    LikelihoodEngine engine(record, basis, composite);
    const int dim = engine.dim();
    const ComplexMatrix eye = ComplexMatrix::Identity(dim, dim);
    ComplexMatrix rho = eye / static_cast<double>(dim);
    double ll = engine.evaluate(rho);

    MleResult result{QuantumState::from_unnormalized(
                         composite ? std::vector<int>{2, options.n_tomo} : std::vector<int>{options.n_tomo}, rho),
                     0, {ll}, false};
    for (int it = 1; it <= options.max_iterations; ++it) {
        const ComplexMatrix r = engine.r_operator();
        ComplexMatrix candidate = sandwich(r, rho);
        double ll_new = engine.evaluate(candidate);
        if (!(ll_new >= ll)) {
            // Diluted steps (I + eps R) are ascent directions for small eps.
            bool improved = false;
            for (double eps = 0.5; eps > 1e-12; eps *= 0.5) {
                candidate = sandwich(eye + eps * r, rho);
                ll_new = engine.evaluate(candidate);
                if (ll_new >= ll) {
                    improved = true;
                    break;
                }
            }
            if (!improved) {
                engine.evaluate(rho);
                result.converged = true;
                break;
            }
        }
        const double gain = ll_new - ll;
        rho = std::move(candidate);
        ll = ll_new;
        result.log_likelihood.push_back(ll);
        result.iterations = it;
        if (gain < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.state = QuantumState::from_unnormalized(result.state.dims(), rho);
    return result;
}

}  // namespace

void QuadratureGrid::validate() const {
    if (bins < 2 || !(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw InvalidArgument("quadrature grid needs x_max > x_min and at least two bins");
    }
}

QuadratureBasis build_quadrature_basis(double eta, int n_tomo, const QuadratureGrid& grid) {
    grid.validate();
    if (n_tomo < 4) {
        throw InvalidArgument("N_tomo must be at least 4, got " + std::to_string(n_tomo));
    }
    const auto kraus = loss_kraus(n_tomo, eta);
    const double half = 0.5 * grid.width();

    QuadratureBasis out{eta, n_tomo, grid, std::vector<Eigen::MatrixXd>(grid.bins)};
    parallel_for(static_cast<std::size_t>(grid.bins), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Eigen::MatrixXd pi0 = Eigen::MatrixXd::Zero(n_tomo, n_tomo);
        Eigen::VectorXd psi(n_tomo);
        for (int k = 0; k < 8; ++k) {
            const double node = (k < 4 ? -1.0 : 1.0) * kGlNodes[k % 4];
            const double x = grid.center(j) + half * node;
            hermite_functions(x, n_tomo, psi.data());
            pi0.noalias() += (half * kGlWeights[k % 4]) * psi * psi.transpose();
        }
        Eigen::MatrixXd smeared = Eigen::MatrixXd::Zero(n_tomo, n_tomo);
        for (const auto& e : kraus) {
            smeared.noalias() += e.transpose() * pi0 * e;
        }
        out.elements[j] = smeared;
    });

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_tomo, n_tomo);
    for (const auto& e : out.elements) {
        sum += e;
    }
    const double miss = (sum - Eigen::MatrixXd::Identity(n_tomo, n_tomo)).cwiseAbs().maxCoeff();
    if (miss > kCompletenessLimit) {
        throw InvalidArgument("quadrature grid too narrow: bins miss " + std::to_string(miss) +
                              " of the identity for N_tomo = " + std::to_string(n_tomo));
    }
    // Remove the small residual so the elements sum to the identity.
    const Eigen::MatrixXd fix = inverse_sqrt_spd(sum);
    for (auto& e : out.elements) {
        e = (fix * e * fix).eval();
        e = (0.5 * (e + e.transpose())).eval();
    }
    return out;
}

QuadraturePOVM build_povm(double theta, double eta, int n_tomo, const QuadratureGrid& grid) {
    const QuadratureBasis basis = build_quadrature_basis(eta, n_tomo, grid);
    QuadraturePOVM out{theta, eta, n_tomo, grid, {}};
    out.elements.reserve(basis.elements.size());
    for (const auto& e : basis.elements) {
        ComplexMatrix pi(n_tomo, n_tomo);
        for (int m = 0; m < n_tomo; ++m) {
            for (int n = 0; n < n_tomo; ++n) {
                pi(m, n) = e(m, n) * std::polar(1.0, (m - n) * theta);
            }
        }
        out.elements.push_back(std::move(pi));
    }
    return out;
}

QuantumState apply_loss(const QuantumState& rho, double eta, int subsystem) {
    const auto& dims = rho.dims();
    if (subsystem < 0 || subsystem >= rho.subsystem_count()) {
        throw InvalidArgument("subsystem index out of range");
    }
    const int d = dims[subsystem];
    int before = 1;
    int after = 1;
    for (int i = 0; i < subsystem; ++i) {
        before *= dims[i];
    }
    for (int i = subsystem + 1; i < rho.subsystem_count(); ++i) {
        after *= dims[i];
    }
    ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
    for (const auto& e : loss_kraus(d, eta)) {
        const ComplexMatrix factors[] = {identity(before), e.cast<Complex>(), identity(after)};
        out += conjugate_by(tensor(factors), rho.matrix());
    }
    return QuantumState::from_unnormalized(dims, out);
}

ComplexMatrix apply_loss_adjoint(const ComplexMatrix& op, double eta) {
    if (op.rows() != op.cols()) {
        throw InvalidArgument("operator must be square");
    }
    const int d = static_cast<int>(op.rows());
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (const auto& e : loss_kraus(d, eta)) {
        out += e.transpose() * op * e;
    }
    return out;
}

bool MeasurementRecord::composite() const {
    return std::any_of(settings.begin(), settings.end(),
                       [](const SettingRecord& s) { return s.basis != QubitBasis::None; });
}

void MeasurementRecord::validate() const {
    grid.validate();
    if (settings.empty()) {
        throw InvalidArgument("measurement record has no settings");
    }
    const bool comp = composite();
    for (const auto& s : settings) {
        if (static_cast<int>(s.counts.size()) != grid.bins) {
            throw InvalidArgument("histogram length does not match the grid");
        }
        std::uint64_t total = 0;
        for (auto c : s.counts) {
            total += c;
        }
        if (total != s.shots) {
            throw InvalidArgument("histogram total differs from the shot count");
        }
        if (comp) {
            checked_basis(s.basis);
            if (s.qubit_outcome != 0 && s.qubit_outcome != 1) {
                throw InvalidArgument("qubit outcome must be 0 or 1");
            }
        } else if (s.qubit_outcome != -1) {
            throw InvalidArgument("single-mode setting carries a qubit outcome");
        }
    }
}

std::vector<double> phase_settings(int n) {
    if (n < 1) {
        throw InvalidArgument("need at least one phase setting");
    }
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) {
        out[k] = k * std::numbers::pi / n;
    }
    return out;
}

MeasurementRecord sample(const QuantumState& rho, const std::vector<double>& thetas,
                         std::uint64_t shots, double eta, std::uint64_t seed,
                         const QuadratureGrid& grid) {
    if (rho.subsystem_count() != 1) {
        throw InvalidArgument("sample expects a single-mode state");
    }
    if (thetas.empty()) {
        throw InvalidArgument("need at least one phase setting");
    }
    const int d = std::max(rho.dim(), 4);
    const QuadratureBasis basis = build_quadrature_basis(eta, d, grid);
    const Eigen::MatrixXd pi0 = flatten(basis);
    const ComplexMatrix padded = pad_mode(rho, d).matrix();

    MeasurementRecord record{grid, std::vector<SettingRecord>(thetas.size())};
    parallel_for(thetas.size(), [&](std::size_t i) {
        Eigen::VectorXd v(d * d);
        phase_rotated_real(padded, thetas[i], v.data());
        const Eigen::VectorXd probs = pi0 * v;
        auto rng = setting_stream(seed, i);
        record.settings[i] = SettingRecord{thetas[i], QubitBasis::None, -1, shots,
                                           draw_histogram(probs, shots, rng)};
    });
    return record;
}

MeasurementRecord sample_composite(const QuantumState& rho, const std::vector<double>& thetas,
                                   std::uint64_t shots, double eta, std::uint64_t seed,
                                   const QuadratureGrid& grid) {
    if (rho.subsystem_count() != 2 || rho.dims()[0] != 2) {
        throw InvalidArgument("sample_composite expects a qubit x mode state");
    }
    if (thetas.empty()) {
        throw InvalidArgument("need at least one phase setting");
    }
    const int d_in = rho.dims()[1];
    const int d = std::max(d_in, 4);
    const QuadratureBasis basis = build_quadrature_basis(eta, d, grid);
    const Eigen::MatrixXd pi0 = flatten(basis);
    ComplexMatrix padded = ComplexMatrix::Zero(2 * d, 2 * d);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            padded.block(a * d, b * d, d_in, d_in) = rho.matrix().block(a * d_in, b * d_in, d_in, d_in);
        }
    }

    const std::size_t n_theta = thetas.size();
    const QubitBasis bases[] = {QubitBasis::X, QubitBasis::Y, QubitBasis::Z};
    MeasurementRecord record{grid, std::vector<SettingRecord>(3 * n_theta * 2)};
    const int bins = grid.bins;
    parallel_for(3 * n_theta, [&](std::size_t idx) {
        const QubitBasis b = bases[idx / n_theta];
        const double theta = thetas[idx % n_theta];
        Eigen::VectorXd joint(2 * bins);
        Eigen::VectorXd v(d * d);
        for (int o = 0; o < 2; ++o) {
            phase_rotated_real(mode_block(padded, qubit_vector(b, o), d), theta, v.data());
            joint.segment(o * bins, bins) = pi0 * v;
        }
        auto rng = setting_stream(seed, idx);
        const auto counts = draw_histogram(joint, shots, rng);
        for (int o = 0; o < 2; ++o) {
            SettingRecord s{theta, b, o, 0, std::vector<std::uint64_t>(counts.begin() + o * bins,
                                                                        counts.begin() + (o + 1) * bins)};
            for (auto c : s.counts) {
                s.shots += c;
            }
            record.settings[2 * idx + o] = std::move(s);
        }
    });
    return record;
}

MleResult mle_reconstruct(const MeasurementRecord& record, const MleOptions& options) {
    if (record.composite()) {
        throw InvalidArgument("record holds qubit outcomes; use composite_mle");
    }
    return run_mle(record, options, false);
}

MleResult composite_mle(const MeasurementRecord& record, const MleOptions& options) {
    if (!record.composite()) {
        throw InvalidArgument("record holds no qubit outcomes");
    }
    for (QubitBasis b : {QubitBasis::X, QubitBasis::Y, QubitBasis::Z}) {
        for (int o = 0; o < 2; ++o) {
            const bool present = std::any_of(record.settings.begin(), record.settings.end(), [&](const SettingRecord& s) {
                return s.basis == b && s.qubit_outcome == o;
            });
            if (!present) {
                throw InvalidArgument("composite record is missing qubit basis " +
                                      std::string(1, "XYZ"[static_cast<int>(b)]) + " outcome " +
                                      std::to_string(o));
            }
        }
    }
    return run_mle(record, options, true);
}

std::vector<double> photon_distribution(const QuantumState& rho) {
    if (rho.subsystem_count() != 1) {
        throw InvalidArgument("photon_distribution expects a single-mode state");
    }
    std::vector<double> out(rho.dim());
    for (int n = 0; n < rho.dim(); ++n) {
        out[n] = rho.matrix()(n, n).real();
    }
    return out;
}

QuantumState pad_mode(const QuantumState& rho, int dim) {
    if (rho.subsystem_count() != 1) {
        throw InvalidArgument("pad_mode expects a single-mode state");
    }
    if (dim < rho.dim()) {
        throw InvalidArgument("pad_mode cannot shrink a state");
    }
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m.topLeftCorner(rho.dim(), rho.dim()) = rho.matrix();
    return QuantumState({dim}, m);
}

}  // namespace qndsim
