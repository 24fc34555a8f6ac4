#include "qndsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "liouvillian.hpp"
#include "qndsim/errors.hpp"

namespace qndsim {

using detail::Generator;
using detail::MatrixStack;
using detail::Rk4;
using detail::SparseC;
using detail::step_count;

namespace {

constexpr double kTraceTolerance = 1e-8;
constexpr double kTopFockLimit = 1e-7;
constexpr double kWeightFloor = 1e-6;  // capture coupling regularization

// Lindblad generator of the qubit-cavity model driven by a_in(t).
Generator make_generator(const LindbladModel& model, std::function<Complex(double)> a_in) {
    Generator gen(model.dim());
    gen.add_hamiltonian(model.hamiltonian);
    const double g = model.drive_coupling;
    if (a_in && g > 0.0) {
        // H_d = i (eps a^dag - eps^* a), eps = -i sqrt(kappa_ex) a_in
        gen.add_hamiltonian(model.a.adjoint(), [a_in, g](double t) { return g * a_in(t); });
        gen.add_hamiltonian(model.a, [a_in, g](double t) { return g * std::conj(a_in(t)); });
    }
    for (const auto& c : model.collapse) {
        gen.add_jump(c.op);
    }
    return gen;
}

double top_fock_population(const ComplexMatrix& rho, int n_max) {
    return rho(n_max - 1, n_max - 1).real() + rho(2 * n_max - 1, 2 * n_max - 1).real();
}

void check_state(const ComplexMatrix& rho, int n_max, double t) {
    const double tr = rho.trace().real();
    if (!std::isfinite(tr) || std::abs(tr - 1.0) > kTraceTolerance) {
        std::ostringstream os;
        os << "trace drifted to " << tr << " at t = " << t << " s";
        throw ConvergenceError(os.str());
    }
    const double top = top_fock_population(rho, n_max);
    if (top > kTopFockLimit) {
        std::ostringstream os;
        os << "cavity truncation too small: top Fock population " << top << " at t = " << t
           << " s";
        throw ConvergenceError(os.str());
    }
}

QuantumState as_state(const LindbladModel& model, const ComplexMatrix& rho) {
    return QuantumState(model.dims(), 0.5 * (rho + rho.adjoint()));
}

ComplexMatrix embed_qubit_gate(Gate which, int rest_dim) {
    return tensor(gate_matrix(which), identity(rest_dim));
}

void check_dims(const LindbladModel& model, const QuantumState& rho) {
    if (rho.dims() != model.dims()) {
        throw InvalidArgument("initial state dimensions do not match the model");
    }
}

}  // namespace

PulseSchedule PulseSchedule::standard(double gate_interval, double fwhm, Complex alpha_in,
                                      double t_i, double readout_delay) {
    PulseSchedule s;
    s.t_i = t_i;
    s.t_g = t_i + gate_interval;
    s.t_f = s.t_g + readout_delay;
    const double span = std::max(8.0 * fwhm, 2.0 * std::max(std::abs(s.t_i), std::abs(s.t_f)));
    s.input = gaussian_input_mode(fwhm, span, fwhm / 200.0);
    s.alpha_in = alpha_in;
    return s;
}

void PulseSchedule::validate() const {
    if (!(t_i < t_g) || !(t_g <= t_f)) {
        throw InvalidArgument("schedule needs t_i < t_g <= t_f");
    }
    if (!(input.fwhm() > 0.0)) {
        throw InvalidArgument("schedule has no input mode");
    }
    if (!std::isfinite(alpha_in.real()) || !std::isfinite(alpha_in.imag())) {
        throw InvalidArgument("input amplitude must be finite");
    }
    if (!(step_fraction > 0.0)) {
        throw InvalidArgument("step_fraction must be positive");
    }
    if (output_delay && !(*output_delay >= 0.0)) {
        throw InvalidArgument("output delay must be non-negative");
    }
}

double PulseSchedule::max_step(const SystemParams& p) const {
    double h = input.fwhm() / 200.0;
    if (p.kappa_tot() > 0.0) {
        h = std::min(h, 1.0 / (40.0 * p.kappa_tot()));
    }
    return h * step_fraction;
}

Complex PulseSchedule::input_field(double t) const { return alpha_in * input.at(-t); }

ComplexMatrix gate_matrix(Gate which) {
    const double s = 1.0 / std::sqrt(2.0);
    ComplexMatrix u(2, 2);
    if (which == Gate::Y2) {
        u << s, -s, s, s;
    } else {
        u << s, s, -s, s;
    }
    return u;
}

QuantumState apply_gate(const QuantumState& rho, Gate which) {
    if (rho.dims().empty() || rho.dims().front() != 2) {
        throw InvalidArgument("apply_gate: first subsystem must be the qubit");
    }
    const ComplexMatrix u = embed_qubit_gate(which, rho.dim() / 2);
    return QuantumState(rho.dims(), conjugate_by(u, rho.matrix()));
}

Trajectory evolve_field(const LindbladModel& model, const std::function<Complex(double)>& a_in,
                        double t_begin, double t_end, double max_step, const QuantumState& rho0,
                        int record_every) {
    check_dims(model, rho0);
    if (!(t_end >= t_begin)) {
        throw InvalidArgument("evolve_field: t_end before t_begin");
    }
    record_every = std::max(1, record_every);
    const Generator gen = make_generator(model, a_in);
    MatrixStack y{rho0.matrix()};
    Trajectory traj;
    traj.times.push_back(t_begin);
    traj.states.push_back(rho0);
    const int n = step_count(t_begin, t_end, max_step);
    const double h = n > 0 ? (t_end - t_begin) / n : 0.0;
    Rk4 rk;
    const detail::StackDerivative f = [&gen](double t, const MatrixStack& x, MatrixStack& dx) {
        gen.at(t).apply(x[0], dx[0]);
    };
    for (int k = 0; k < n; ++k) {
        const double t = t_begin + h * k;
        rk.step(t, h, y, f);
        check_state(y[0], model.n_max, t + h);
        if ((k + 1) % record_every == 0 || k + 1 == n) {
            traj.times.push_back(t_begin + h * (k + 1));
            traj.states.push_back(as_state(model, y[0]));
        }
    }
    return traj;
}

Trajectory evolve(const LindbladModel& model, const PulseSchedule& schedule,
                  const QuantumState& rho0, int record_every) {
    schedule.validate();
    check_dims(model, rho0);
    const double h = schedule.max_step(model.params);
    const auto field = [&schedule](double t) { return schedule.input_field(t); };

    QuantumState start = schedule.ramsey_gates ? apply_gate(rho0, Gate::Y2) : rho0;
    Trajectory first = evolve_field(model, field, schedule.t_i, schedule.t_g, h, start,
                                    record_every);
    QuantumState mid = first.states.back();
    if (schedule.ramsey_gates) {
        mid = apply_gate(mid, Gate::MinusY2);
    }
    Trajectory second =
        evolve_field(model, field, schedule.t_g, schedule.t_f, h, mid, record_every);

    Trajectory out = std::move(first);
    // the post-gate state replaces the pre-gate sample at t_g
    out.states.back() = second.states.front();
    out.times.insert(out.times.end(), second.times.begin() + 1, second.times.end());
    out.states.insert(out.states.end(), second.states.begin() + 1, second.states.end());
    return out;
}

Complex correlator(const LindbladModel& model, const PulseSchedule& schedule,
                   std::vector<Insertion> insertions, const std::optional<QuantumState>& rho0) {
    schedule.validate();
    if (insertions.empty()) {
        throw InvalidArgument("correlator needs at least one insertion");
    }
    for (std::size_t k = 0; k < insertions.size(); ++k) {
        const auto& ins = insertions[k];
        if (ins.time < schedule.t_i || ins.time > schedule.t_f) {
            throw InvalidArgument("correlator: insertion time outside the schedule");
        }
        if (k > 0 && ins.time < insertions[k - 1].time) {
            throw InvalidArgument("correlator: insertion times must be non-decreasing");
        }
        if (ins.op.rows() != model.dim() || ins.op.cols() != model.dim()) {
            throw InvalidArgument("correlator: operator dimension mismatch");
        }
    }
    const QuantumState init = rho0 ? *rho0 : model.ground_state();
    check_dims(model, init);

    const Generator gen = make_generator(model, [&schedule](double t) {
        return schedule.input_field(t);
    });
    const double hmax = schedule.max_step(model.params);
    const detail::StackDerivative f = [&gen](double t, const MatrixStack& x, MatrixStack& dx) {
        gen.at(t).apply(x[0], dx[0]);
    };
    const ComplexMatrix u_minus = embed_qubit_gate(Gate::MinusY2, model.n_max);

    MatrixStack x{schedule.ramsey_gates
                      ? conjugate_by(embed_qubit_gate(Gate::Y2, model.n_max), init.matrix())
                      : init.matrix()};
    bool gate_done = !schedule.ramsey_gates;
    double t = schedule.t_i;
    Rk4 rk;
    auto advance = [&](double t_to) {
        const int n = step_count(t, t_to, hmax);
        const double h = n > 0 ? (t_to - t) / n : 0.0;
        for (int k = 0; k < n; ++k) {
            rk.step(t + h * k, h, x, f);
        }
        t = t_to;
    };
    for (const auto& ins : insertions) {
        if (!gate_done && ins.time >= schedule.t_g) {
            advance(schedule.t_g);
            x[0] = conjugate_by(u_minus, x[0]);
            gate_done = true;
        }
        advance(ins.time);
        if (ins.side == Side::Left) {
            x[0] = ins.op * x[0];
        } else {
            x[0] = x[0] * ins.op;
        }
    }
    return x[0].trace();
}

TemporalMode output_mode(const PulseSchedule& schedule, double tau_d) {
    return TemporalMode::gaussian(schedule.input.fwhm(), tau_d, schedule.t_i, schedule.t_f,
                                  schedule.input.fwhm() / 200.0);
}

double optimal_output_delay(const SystemParams& p, const PulseSchedule& schedule) {
    schedule.validate();
    // linear reflected envelope with the qubit in g and unit input amplitude
    const double h = std::min(schedule.max_step(p), 1e-9);
    const int n = step_count(schedule.t_i, schedule.t_f, h);
    const double dt = (schedule.t_f - schedule.t_i) / n;
    const Complex rate(-0.5 * p.kappa_tot(), -p.chi);
    const double g = std::sqrt(p.kappa_ex);
    auto fin = [&](double t) { return schedule.input.at(-t); };
    auto rhs = [&](double t, Complex a) { return rate * a - kI * g * fin(t); };

    std::vector<Complex> out(static_cast<std::size_t>(n) + 1);
    Complex a = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double t = schedule.t_i + dt * k;
        out[static_cast<std::size_t>(k)] = fin(t) - kI * g * a;
        if (k == n) {
            break;
        }
        const Complex k1 = rhs(t, a);
        const Complex k2 = rhs(t + 0.5 * dt, a + 0.5 * dt * k1);
        const Complex k3 = rhs(t + 0.5 * dt, a + 0.5 * dt * k2);
        const Complex k4 = rhs(t + dt, a + dt * k3);
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    auto overlap = [&](double tau) {
        const TemporalMode m = output_mode(schedule, tau);
        Complex s = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double w = (k == 0 || k == n) ? 0.5 : 1.0;
            s += w * std::conj(m.at(schedule.t_i + dt * k)) * out[static_cast<std::size_t>(k)];
        }
        return std::norm(s * dt);
    };

    const double upper = p.kappa_ex > 0.0 ? 5.0 / p.kappa_ex : 0.0;
    double lo = 0.0;
    double hi = upper;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = overlap(x1);
    double f2 = overlap(x2);
    while (hi - lo > 1e-9) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = overlap(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = overlap(x1);
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

void OutputMoments::resize(int ord) {
    order = ord;
    values.assign(static_cast<std::size_t>(4 * (ord + 1) * (ord + 1)), Complex{});
}

Complex& OutputMoments::at(int p, int q, int n_dag, int m) {
    return values[static_cast<std::size_t>(((p * 2 + q) * (order + 1) + n_dag) * (order + 1) + m)];
}

Complex OutputMoments::at(int p, int q, int n_dag, int m) const {
    if (n_dag < 0 || m < 0 || n_dag > order || m > order) {
        throw InvalidArgument("moment order out of range");
    }
    return values[static_cast<std::size_t>(((p * 2 + q) * (order + 1) + n_dag) * (order + 1) + m)];
}

Complex OutputMoments::get(QubitLevel p, QubitLevel q, int n_dag, int m) const {
    return at(static_cast<int>(p), static_cast<int>(q), n_dag, m);
}

Complex OutputMoments::mode_moment(int n_dag, int m) const {
    return at(0, 0, n_dag, m) + at(1, 1, n_dag, m);
}

OutputMoments OutputMoments::axpy(double a, const OutputMoments& x, const OutputMoments& y) {
    if (x.order != y.order) {
        throw InvalidArgument("moment orders differ");
    }
    OutputMoments out = y;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] += a * x.values[k];
    }
    return out;
}

namespace {

// Upper-triangular (m <= n) storage for the hierarchy; rho_{nm} = rho_{mn}^dag.
struct TriIndex {
    int order;
    int operator()(int m, int n) const { return m * (order + 1) - m * (m - 1) / 2 + (n - m); }
    int size() const { return (order + 1) * (order + 2) / 2; }
};

Complex qubit_trace(const ComplexMatrix& x, int p, int q, int n_max) {
    // Tr[|p><q| X] = sum_k X(q k, p k)
    Complex s = 0.0;
    for (int k = 0; k < n_max; ++k) {
        s += x(q * n_max + k, p * n_max + k);
    }
    return s;
}

double resolve_delay(const LindbladModel& model, const PulseSchedule& schedule) {
    return schedule.output_delay ? *schedule.output_delay
                                 : optimal_output_delay(model.params, schedule);
}

}  // namespace

OutputMoments output_mode_moments(const LindbladModel& model, const PulseSchedule& schedule,
                                  int order) {
    schedule.validate();
    if (order < 0) {
        throw InvalidArgument("moment order must be non-negative");
    }
    const double tau = resolve_delay(model, schedule);
    const TemporalMode fout = output_mode(schedule, tau);
    if (std::abs(fout.cumulative_weight(fout.t_end()) - 1.0) > 1e-9) {
        throw InvalidArgument("output mode is not normalized");
    }

    const Generator gen = make_generator(model, [&schedule](double t) {
        return schedule.input_field(t);
    });
    const SparseC a = detail::to_sparse(model.a);
    const SparseC a_dag = a.adjoint();
    const Complex c = -kI * model.drive_coupling;
    const int nm = model.n_max;
    const TriIndex idx{order};

    MatrixStack y(static_cast<std::size_t>(idx.size()), ComplexMatrix::Zero(model.dim(), model.dim()));
    {
        ComplexMatrix r0 = model.ground_state().matrix();
        if (schedule.ramsey_gates) {
            r0 = conjugate_by(embed_qubit_gate(Gate::Y2, nm), r0);
        }
        y[0] = r0;
    }

    ComplexMatrix scratch;
    const detail::StackDerivative f = [&](double t, const MatrixStack& x, MatrixStack& dx) {
        const detail::Snapshot snap = gen.at(t);
        const Complex field = schedule.input_field(t);
        const Complex g = fout.at(t);
        const Complex gc = std::conj(g);
        for (int m = 0; m <= order; ++m) {
            for (int n = m; n <= order; ++n) {
                ComplexMatrix& out = dx[static_cast<std::size_t>(idx(m, n))];
                snap.apply(x[static_cast<std::size_t>(idx(m, n))], out);
                if (m > 0) {
                    // m g^* b X_{m-1,n}
                    const ComplexMatrix& xm = x[static_cast<std::size_t>(idx(m - 1, n))];
                    out.noalias() += (static_cast<double>(m) * gc * field) * xm;
                    out.noalias() += (static_cast<double>(m) * gc * c) * (a * xm);
                }
                if (n > 0) {
                    // n g X_{m,n-1} b^dag
                    if (m <= n - 1) {
                        const ComplexMatrix& xn = x[static_cast<std::size_t>(idx(m, n - 1))];
                        out.noalias() += (static_cast<double>(n) * g * std::conj(field)) * xn;
                        out.noalias() += (static_cast<double>(n) * g * std::conj(c)) * (xn * a_dag);
                    } else {
                        scratch = x[static_cast<std::size_t>(idx(n - 1, m))].adjoint();
                        out.noalias() += (static_cast<double>(n) * g * std::conj(field)) * scratch;
                        out.noalias() +=
                            (static_cast<double>(n) * g * std::conj(c)) * (scratch * a_dag);
                    }
                }
            }
        }
    };

    OutputMoments res;
    res.resize(order);
    res.output_delay = tau;
    const double hmax = schedule.max_step(model.params);
    Rk4 rk;
    auto run_segment = [&](double t0, double t1) {
        const int n = step_count(t0, t1, hmax);
        const double h = n > 0 ? (t1 - t0) / n : 0.0;
        for (int k = 0; k < n; ++k) {
            rk.step(t0 + h * k, h, y, f);
            check_state(y[0], nm, t0 + h * (k + 1));
            res.max_top_fock_population =
                std::max(res.max_top_fock_population, top_fock_population(y[0], nm));
        }
    };
    run_segment(schedule.t_i, schedule.t_g);
    if (schedule.ramsey_gates) {
        const ComplexMatrix u = embed_qubit_gate(Gate::MinusY2, nm);
        for (auto& x : y) {
            x = conjugate_by(u, x);
        }
    }
    run_segment(schedule.t_g, schedule.t_f);

    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            for (int m = 0; m <= order; ++m) {
                for (int n = 0; n <= order; ++n) {
                    // <|p><q| A^dag^n A^m> = Tr[|p><q| rho_{mn}]
                    Complex v;
                    if (m <= n) {
                        v = qubit_trace(y[static_cast<std::size_t>(idx(m, n))], p, q, nm);
                    } else {
                        // Tr[S X^dag] = conj(Tr[S^dag X])
                        v = std::conj(qubit_trace(y[static_cast<std::size_t>(idx(n, m))], q, p, nm));
                    }
                    res.at(p, q, n, m) = v;
                }
            }
        }
    }
    return res;
}

OutputMoments capture_mode_oracle(const LindbladModel& model, const PulseSchedule& schedule,
                                  int order, int capture_levels) {
    schedule.validate();
    if (capture_levels < 3) {
        throw InvalidArgument("capture mode needs at least 3 levels");
    }
    if (order < 0 || order >= capture_levels) {
        throw InvalidArgument("moment order must be below the capture truncation");
    }
    const double tau = resolve_delay(model, schedule);
    const TemporalMode v = output_mode(schedule, tau);
    const int mc = capture_levels;
    const int nm = model.n_max;
    const int dim = model.dim() * mc;
    const ComplexMatrix ic = identity(mc);

    const ComplexMatrix b = tensor(identity(model.dim()), annihilation(mc));
    const ComplexMatrix ls = -kI * model.drive_coupling * tensor(model.a, ic);
    const ComplexMatrix ls_dag = ls.adjoint();

    const auto lambda = [&v](double t) {
        return -v.at(t) / std::sqrt(std::max(v.cumulative_weight(t), kWeightFloor));
    };
    const auto field = [&schedule](double t) { return schedule.input_field(t); };

    Generator gen(dim);
    gen.add_hamiltonian(tensor(model.hamiltonian, ic));
    for (const auto& cop : model.collapse) {
        if (cop.label == "cavity") {
            gen.add_jump(std::sqrt(model.params.kappa_in) * tensor(model.a, ic));
        } else {
            gen.add_jump(tensor(cop.op, ic));
        }
    }
    // drive on both cascaded elements: i (c^* L - c L^dag), L = L_s + lambda b
    gen.add_hamiltonian(ls, [field](double t) { return kI * std::conj(field(t)); });
    gen.add_hamiltonian(ls_dag, [field](double t) { return -kI * field(t); });
    gen.add_hamiltonian(b, [field, lambda](double t) { return kI * std::conj(field(t)) * lambda(t); });
    gen.add_hamiltonian(b.adjoint(),
                        [field, lambda](double t) { return -kI * field(t) * std::conj(lambda(t)); });
    // cascade coupling (i/2)(L_s^dag L_v - L_v^dag L_s)
    gen.add_hamiltonian(ls_dag * b, [lambda](double t) { return 0.5 * kI * lambda(t); });
    gen.add_hamiltonian(b.adjoint() * ls,
                        [lambda](double t) { return -0.5 * kI * std::conj(lambda(t)); });
    gen.add_jump({{detail::to_sparse(ls), {}}, {detail::to_sparse(b), lambda}});

    ComplexMatrix r0 = ComplexMatrix::Zero(dim, dim);
    r0(0, 0) = 1.0;
    if (schedule.ramsey_gates) {
        r0 = conjugate_by(embed_qubit_gate(Gate::Y2, nm * mc), r0);
    }
    MatrixStack y{r0};
    const detail::StackDerivative f = [&gen](double t, const MatrixStack& x, MatrixStack& dx) {
        gen.at(t).apply(x[0], dx[0]);
    };
    const double hmax = schedule.max_step(model.params);
    Rk4 rk;
    auto run_segment = [&](double t0, double t1) {
        const int n = step_count(t0, t1, hmax);
        const double h = n > 0 ? (t1 - t0) / n : 0.0;
        for (int k = 0; k < n; ++k) {
            double t = t0 + h * k;
            const double t_end = t0 + h * (k + 1);
            // substep where the capture coupling is fast
            while (t < t_end - 1e-18) {
                const double rate = std::norm(lambda(t));
                double hs = t_end - t;
                if (rate * hs > 0.05) {
                    hs = 0.05 / rate;
                }
                rk.step(t, hs, y, f);
                t += hs;
            }
            const double tr = y[0].trace().real();
            if (!std::isfinite(tr) || std::abs(tr - 1.0) > kTraceTolerance) {
                throw ConvergenceError("capture-mode evolution lost trace");
            }
        }
    };
    run_segment(schedule.t_i, schedule.t_g);
    if (schedule.ramsey_gates) {
        y[0] = conjugate_by(embed_qubit_gate(Gate::MinusY2, nm * mc), y[0]);
    }
    run_segment(schedule.t_g, schedule.t_f);

    OutputMoments res;
    res.resize(order);
    res.output_delay = tau;
    const ComplexMatrix bd = b.adjoint();
    std::vector<ComplexMatrix> bpow{identity(dim)};
    std::vector<ComplexMatrix> bdpow{identity(dim)};
    for (int k = 1; k <= order; ++k) {
        bpow.push_back(bpow.back() * b);
        bdpow.push_back(bdpow.back() * bd);
    }
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            const ComplexMatrix s = tensor(qubit_projector(p, q), identity(nm * mc));
            for (int n = 0; n <= order; ++n) {
                for (int m = 0; m <= order; ++m) {
                    res.at(p, q, n, m) = (s * bdpow[static_cast<std::size_t>(n)] *
                                          bpow[static_cast<std::size_t>(m)] * y[0])
                                             .trace();
                }
            }
        }
    }
    return res;
}

}  // namespace qndsim
