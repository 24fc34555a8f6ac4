#include "qndsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/QR>

#include "qndsim/errors.hpp"
#include "qndsim/parallel.hpp"

namespace qndsim {
namespace {

constexpr double kConditioningFloor = 1e-12;

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

// <p,i| rho |q,j> = sum_k (-1)^k / (k! sqrt(i! j!)) <|q><p| A^dag^{j+k} A^{i+k}>
ComplexMatrix composite_from_moments(const OutputMoments& mom, int n_ph) {
    const int d = n_ph + 1;
    ComplexMatrix c = ComplexMatrix::Zero(2 * d, 2 * d);
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    Complex s = 0.0;
                    for (int k = 0; k + std::max(i, j) <= mom.order; ++k) {
                        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                        s += sign / factorial(k) * mom.at(q, p, j + k, i + k);
                    }
                    c(p * d + i, q * d + j) = s / std::sqrt(factorial(i) * factorial(j));
                }
            }
        }
    }
    return 0.5 * (c + c.adjoint());
}

double readout_corrected(const SystemParams& p, double pe) {
    return p.readout_error_g + pe * (1.0 - p.readout_error_g - p.readout_error_e);
}

double resolved_delay(const SystemParams& p, const PulseSchedule& s) {
    return s.output_delay ? *s.output_delay : optimal_output_delay(p, s);
}

// Weak-field response assembled into moments of order 1 for the input
// sqrt(1-x)|0> + sqrt(x)|1>.
OutputMoments superposition_moments(const LindbladModel& model, const PulseSchedule& schedule,
                                    double probe) {
    const double x = std::norm(schedule.alpha_in);
    if (x > 1.0) {
        throw InvalidArgument("single-photon superposition needs |alpha_in|^2 <= 1");
    }
    const Complex phase =
        std::abs(schedule.alpha_in) > 0.0 ? schedule.alpha_in / std::abs(schedule.alpha_in) : 1.0;
    PulseSchedule s0 = schedule;
    s0.output_delay = resolved_delay(model.params, schedule);
    PulseSchedule s1 = s0;
    PulseSchedule s2 = s0;
    s0.alpha_in = 0.0;
    s1.alpha_in = std::sqrt(probe) * phase;
    s2.alpha_in = std::sqrt(4.0 * probe) * phase;
    const OutputMoments m0 = output_mode_moments(model, s0, 1);
    const OutputMoments m1 = output_mode_moments(model, s1, 1);
    const OutputMoments m2 = output_mode_moments(model, s2, 1);

    const double h = std::sqrt(probe);
    // Richardson: f(h) = f0 + c h^2  ->  (4 f(h) - f(2h)) / 3
    auto richardson = [](Complex f1, Complex f2) { return (4.0 * f1 - f2) / 3.0; };

    OutputMoments out;
    out.resize(1);
    out.output_delay = m0.output_delay;
    out.max_top_fock_population = std::max({m0.max_top_fock_population,
                                            m1.max_top_fock_population,
                                            m2.max_top_fock_population});
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            const Complex base = m0.at(p, q, 0, 0);
            const Complex d_pop = richardson((m1.at(p, q, 0, 0) - base) / probe,
                                             (m2.at(p, q, 0, 0) - base) / (4.0 * probe));
            out.at(p, q, 0, 0) = base + x * d_pop;
            const Complex d_num =
                richardson((m1.at(p, q, 1, 1) - m0.at(p, q, 1, 1)) / probe,
                           (m2.at(p, q, 1, 1) - m0.at(p, q, 1, 1)) / (4.0 * probe));
            out.at(p, q, 1, 1) = x * d_num;
            const double amp = std::sqrt(x * (1.0 - x));
            for (auto [nd, m] : {std::pair{0, 1}, std::pair{1, 0}}) {
                const Complex d_amp =
                    richardson((m1.at(p, q, nd, m) - m0.at(p, q, nd, m)) / h,
                               (m2.at(p, q, nd, m) - m0.at(p, q, nd, m)) / (2.0 * h));
                out.at(p, q, nd, m) = amp * d_amp;
            }
        }
    }
    return out;
}

}  // namespace

PulseSchedule ScheduleSpec::build(Complex alpha_in) const {
    PulseSchedule s = PulseSchedule::standard(gate_interval, fwhm, alpha_in, t_i, readout_delay);
    s.step_fraction = step_fraction;
    s.ramsey_gates = ramsey_gates;
    s.output_delay = output_delay;
    return s;
}

const QuantumState& ProtocolResult::conditional(QubitLevel outcome) const {
    const auto& r = outcome == QubitLevel::Ground ? rho_g : rho_e;
    if (!r) {
        throw ConditioningError("readout outcome has zero probability; no conditional state");
    }
    return *r;
}

LindbladModel model_for(const SystemParams& p, double input_photons, int n_max) {
    if (n_max <= 0) {
        if (input_photons <= 0.3) {
            n_max = 7;
        } else if (input_photons <= 1.0) {
            n_max = 9;
        } else {
            n_max = 9 + 3 * static_cast<int>(std::ceil(input_photons - 1.0));
        }
    }
    return build_model(p, n_max);
}

ProtocolResult run_protocol(const SystemParams& p, const PulseSchedule& schedule,
                            const ProtocolOptions& options) {
    schedule.validate();
    if (options.n_ph < 1) {
        throw InvalidArgument("photon truncation n_ph must be at least 1");
    }
    if (options.extra_orders < 0 || !(options.weak_probe > 0.0 && options.weak_probe < 0.05)) {
        throw InvalidArgument("invalid protocol options");
    }
    const double x = std::norm(schedule.alpha_in);
    const LindbladModel model = model_for(p, x, options.n_max);

    ProtocolResult r;
    r.input_photons = x;
    r.n_ph = options.n_ph;
    if (options.input_model == InputModel::Coherent) {
        r.moments = output_mode_moments(model, schedule, options.n_ph + options.extra_orders);
    } else {
        r.moments = superposition_moments(model, schedule, options.weak_probe);
    }
    r.output_delay = r.moments.output_delay;
    r.excited_population = r.moments.at(1, 1, 0, 0).real();
    r.phase_flip_probability = readout_corrected(p, r.excited_population);
    r.mean_output_photons = r.moments.mode_moment(1, 1).real();
    r.survival = x > 0.0 ? r.mean_output_photons / x : 0.0;

    const int d = options.n_ph + 1;
    const ComplexMatrix c = composite_from_moments(r.moments, options.n_ph);
    const double total = c.trace().real();
    r.rho_comp = QuantumState::from_unnormalized({2, d}, c);

    const ComplexMatrix bg = c.block(0, 0, d, d);
    const ComplexMatrix be = c.block(d, d, d, d);
    const double eg = p.readout_error_g;
    const double ee = p.readout_error_e;
    const ComplexMatrix mg = (1.0 - eg) * bg + ee * be;
    const ComplexMatrix me = eg * bg + (1.0 - ee) * be;
    r.outcome_weight_g = mg.trace().real() / total;
    r.outcome_weight_e = me.trace().real() / total;
    if (r.outcome_weight_g > kConditioningFloor) {
        r.rho_g = QuantumState::from_unnormalized({d}, mg);
        r.fidelity_g_vacuum = r.rho_g->matrix()(0, 0).real();
    }
    if (r.outcome_weight_e > kConditioningFloor) {
        r.rho_e = QuantumState::from_unnormalized({d}, me);
        r.fidelity_e_single = r.rho_e->matrix()(1, 1).real();
    }
    r.rho_uncond = QuantumState::from_unnormalized({d}, bg + be);
    r.negativity = negativity(*r.rho_comp, 1);
    return r;
}

double phase_flip_probability(const SystemParams& p, const PulseSchedule& schedule, int n_max) {
    PulseSchedule s = schedule;
    if (!s.output_delay) {
        s.output_delay = 0.0;  // the order-0 moment does not see the output mode
    }
    const LindbladModel model = model_for(p, std::norm(s.alpha_in), n_max);
    const OutputMoments m = output_mode_moments(model, s, 0);
    return readout_corrected(p, m.at(1, 1, 0, 0).real());
}

QuadraticFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) {
        throw InvalidArgument("quadratic fit needs at least three points");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double xv = x[static_cast<std::size_t>(k)];
        a(k, 0) = 1.0;
        a(k, 1) = xv;
        a(k, 2) = xv * xv;
        b(k) = y[static_cast<std::size_t>(k)];
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    QuadraticFit f{c(0), c(1), c(2), 0.0};
    f.residual_rms = std::sqrt((a * c - b).squaredNorm() / static_cast<double>(n));
    return f;
}

EfficiencyReport weak_power_efficiency(const SystemParams& p, const ScheduleSpec& spec) {
    EfficiencyReport rep;
    for (int k = 0; k <= 4; ++k) {
        const double x = kProbeSpacing * k;
        rep.probe_grid.push_back(x);
        rep.probe_phase_flip.push_back(phase_flip_probability(p, spec.build(std::sqrt(x))));
    }
    rep.weak_fit = fit_quadratic(rep.probe_grid, rep.probe_phase_flip);
    rep.efficiency = rep.weak_fit.c1;
    rep.dark_count = rep.weak_fit.c0;
    return rep;
}

EfficiencyReport efficiency_scan(const SystemParams& p, const ScheduleSpec& spec,
                                 const std::vector<double>& grid) {
    if (grid.size() < 4) {
        throw InvalidArgument("efficiency scan needs at least four grid points");
    }
    for (double x : grid) {
        if (!std::isfinite(x) || x < 0.0) {
            throw InvalidArgument("grid values must be finite and non-negative");
        }
    }
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    if (*lo > 0.0 || *hi < 0.6) {
        throw InvalidArgument("efficiency grid must span [0, 0.6] or wider");
    }

    EfficiencyReport rep = weak_power_efficiency(p, spec);
    rep.grid = grid;
    rep.phase_flip.assign(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t k) {
        rep.phase_flip[k] = phase_flip_probability(p, spec.build(std::sqrt(grid[k])));
    });
    rep.curve_fit = fit_quadratic(rep.grid, rep.phase_flip);
    const std::size_t kmax =
        static_cast<std::size_t>(std::distance(grid.begin(), std::max_element(grid.begin(), grid.end())));
    const double linear = rep.dark_count + rep.efficiency * grid[kmax];
    rep.bending_at_max = linear > 0.0 ? 1.0 - rep.phase_flip[kmax] / linear : 0.0;
    return rep;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "gate_interval") return SweepAxis::GateInterval;
    if (name == "pulse_length") return SweepAxis::PulseLength;
    if (name == "kappa_ex") return SweepAxis::KappaEx;
    if (name == "kappa_in") return SweepAxis::KappaIn;
    if (name == "gamma") return SweepAxis::Gamma;
    if (name == "gamma_phi") return SweepAxis::GammaPhi;
    throw InvalidArgument("unknown sweep axis '" + name + "'");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::GateInterval: return "gate_interval";
        case SweepAxis::PulseLength: return "pulse_length";
        case SweepAxis::KappaEx: return "kappa_ex";
        case SweepAxis::KappaIn: return "kappa_in";
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::GammaPhi: return "gamma_phi";
    }
    return "unknown";
}

void apply_axis(SweepAxis axis, double value, SystemParams& p, ScheduleSpec& spec) {
    if (!std::isfinite(value) || value < 0.0) {
        throw InvalidArgument("sweep values must be finite and non-negative");
    }
    const double inf = std::numeric_limits<double>::infinity();
    switch (axis) {
        case SweepAxis::GateInterval:
            spec.gate_interval = value;
            break;
        case SweepAxis::PulseLength:
            spec.fwhm = value;
            break;
        case SweepAxis::KappaEx:
            p.kappa_ex = value;
            break;
        case SweepAxis::KappaIn:
            p.kappa_in = value;
            break;
        case SweepAxis::Gamma: {
            // keep the pure dephasing rate while changing relaxation
            const double gphi = p.gamma_phi();
            p.T1 = value > 0.0 ? 1.0 / ((1.0 + 2.0 * p.n_B()) * value) : inf;
            const double inv_t2 = gphi + (std::isfinite(p.T1) ? 0.5 / p.T1 : 0.0);
            p.T2_star = inv_t2 > 0.0 ? 1.0 / inv_t2 : inf;
            break;
        }
        case SweepAxis::GammaPhi: {
            const double inv_t2 = value + (std::isfinite(p.T1) ? 0.5 / p.T1 : 0.0);
            p.T2_star = inv_t2 > 0.0 ? 1.0 / inv_t2 : inf;
            break;
        }
    }
}

SweepResult sweep(const SystemParams& p, const ScheduleSpec& spec, SweepAxis axis,
                  const std::vector<double>& values, const SweepOptions& options) {
    if (values.empty()) {
        throw InvalidArgument("sweep needs at least one value");
    }
    SweepResult res;
    res.axis = axis;
    res.rows.resize(values.size());
    parallel_for(values.size(), [&](std::size_t k) {
        SystemParams pk = p;
        ScheduleSpec sk = spec;
        apply_axis(axis, values[k], pk, sk);
        const EfficiencyReport eff = weak_power_efficiency(pk, sk);
        SweepRow row;
        row.value = values[k];
        row.efficiency = eff.efficiency;
        row.dark_count = eff.dark_count;
        if (options.protocol_columns) {
            const ProtocolResult pr =
                run_protocol(pk, sk.build(std::sqrt(options.protocol_photons)));
            row.survival = pr.survival;
            row.negativity = pr.negativity;
        }
        res.rows[k] = row;
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < res.rows.size(); ++k) {
        if (res.rows[k].efficiency > res.rows[best].efficiency) {
            best = k;
        }
    }
    res.argmax = best;
    res.peak_location = res.rows[best].value;
    if (best > 0 && best + 1 < res.rows.size()) {
        const double x0 = res.rows[best - 1].value, y0 = res.rows[best - 1].efficiency;
        const double x1 = res.rows[best].value, y1 = res.rows[best].efficiency;
        const double x2 = res.rows[best + 1].value, y2 = res.rows[best + 1].efficiency;
        const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
        const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if (den != 0.0) {
            const double vertex = x1 - 0.5 * num / den;
            if (vertex > x0 && vertex < x2) {
                res.peak_location = vertex;
            }
        }
    }
    return res;
}

QuantumState ideal_composite(double input_photons, int n_ph) {
    if (!(input_photons >= 0.0) || !std::isfinite(input_photons)) {
        throw InvalidArgument("input photon number must be finite and non-negative");
    }
    if (n_ph < 0) {
        throw InvalidArgument("n_ph must be non-negative");
    }
    const int d = n_ph + 1;
    ComplexVector psi = ComplexVector::Zero(2 * d);
    double w = 1.0;
    for (int n = 0; n < d; ++n) {
        if (n > 0) {
            w *= input_photons / n;
        }
        psi[(n % 2) * d + n] = std::sqrt(w);
    }
    return QuantumState::pure({2, d}, psi);
}

EntanglementReport entanglement_report(const ProtocolResult& result) {
    if (!result.rho_comp) {
        throw InvalidArgument("protocol result has no composite state");
    }
    const QuantumState& rho = *result.rho_comp;
    const int d = rho.dims()[1];
    EntanglementReport rep;
    rep.negativity = negativity(rho, 1);

    const QuantumState ideal = ideal_composite(result.input_photons, d - 1);
    // amplitudes of the ideal vector, phases applied below
    ComplexVector base(2 * d);
    for (int k = 0; k < 2 * d; ++k) {
        base[k] = std::sqrt(std::max(0.0, ideal.matrix()(k, k).real()));
    }
    auto fid = [&](double phi, double theta) {
        ComplexVector v = base;
        for (int n = 0; n < d; ++n) {
            const Complex ph = std::polar(1.0, n * phi + (n % 2) * theta);
            v[(n % 2) * d + n] *= ph;
        }
        return (v.adjoint() * rho.matrix() * v)(0, 0).real();
    };

    double best_phi = 0.0, best_theta = 0.0, best = fid(0.0, 0.0);
    double span = M_PI;
    double c_phi = 0.0, c_theta = 0.0;
    constexpr int kGrid = 36;
    for (int round = 0; round < 8; ++round) {
        for (int i = -kGrid / 2; i <= kGrid / 2; ++i) {
            for (int j = -kGrid / 2; j <= kGrid / 2; ++j) {
                const double phi = c_phi + span * i / (kGrid / 2);
                const double theta = c_theta + span * j / (kGrid / 2);
                const double f = fid(phi, theta);
                if (f > best) {
                    best = f;
                    best_phi = phi;
                    best_theta = theta;
                }
            }
        }
        c_phi = best_phi;
        c_theta = best_theta;
        span *= 4.0 / kGrid;
    }
    rep.fidelity_to_ideal = std::clamp(best, 0.0, 1.0);
    rep.mode_phase = std::remainder(best_phi, 2.0 * M_PI);
    rep.qubit_phase = std::remainder(best_theta, 2.0 * M_PI);
    return rep;
}

}  // namespace qndsim
