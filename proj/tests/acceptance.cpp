// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qndsim/dynamics.hpp"
#include "qndsim/operator_algebra.hpp"
#include "qndsim/protocol.hpp"
#include "qndsim/tomography.hpp"

using namespace qndsim;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        detail << (ok ? "" : "[x] ") << what << "; ";
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScheduleSpec interval(double gate_interval) {
    ScheduleSpec s;
    s.gate_interval = gate_interval;
    return s;
}

ProtocolResult superposition_run(const SystemParams& p, double photons) {
    ProtocolOptions o;
    o.input_model = InputModel::SinglePhotonSuperposition;
    return run_protocol(p, interval(1100e-9).build(std::sqrt(photons)), o);
}

double mean_photons(const QuantumState& rho) {
    const auto p = photon_distribution(rho);
    double n = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) n += static_cast<double>(k) * p[k];
    return n;
}

void criterion_reflected_photons(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemParams p = SystemParams::device();
    const double n_freq = reflected_photon_number(p, gaussian_input_mode(500e-9, 8e-6, 2.5e-9), 0.165);
    // wide window without gates so the whole reflected pulse is collected
    PulseSchedule s = PulseSchedule::standard(2400e-9, 500e-9, std::sqrt(0.165), -1200e-9);
    s.ramsey_gates = false;
    const double n_time = output_mode_moments(build_model(p, 7), s, 1).mode_moment(1, 1).real();
    const double elapsed = seconds_since(t0);
    o.check(std::abs(n_freq - 0.137) <= 0.003, "n_out " + fmt(n_freq) + " (0.137 +- 0.003)");
    o.check(std::abs(n_time - n_freq) <= 0.002, "time-domain " + fmt(n_time) + " within 0.002");
    o.check(elapsed < 60.0, "runtime " + fmt(elapsed, 3) + " s");
}

void criterion_efficiency(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> grid;
    for (int k = 0; k <= 12; ++k) grid.push_back(0.05 * k);
    const EfficiencyReport r = efficiency_scan(SystemParams::device(), interval(800e-9), grid);
    const double elapsed = seconds_since(t0);
    o.check(within(r.efficiency, 0.81, 0.87), "eta " + fmt(r.efficiency) + " in [0.81, 0.87]");
    o.check(within(r.dark_count, 0.010, 0.020), "dark " + fmt(r.dark_count) + " in [0.010, 0.020]");
    o.check(r.bending_at_max >= 0.05, "bending at 0.6 " + fmt(r.bending_at_max) + " >= 0.05");
    o.check(elapsed < 600.0, "runtime " + fmt(elapsed, 3) + " s");
}

void criterion_fidelities(Outcome& o) {
    const ProtocolResult r = superposition_run(SystemParams::device(), 0.165);
    o.check(std::abs(r.fidelity_g_vacuum - 0.9894) <= 0.004, "F_g " + fmt(r.fidelity_g_vacuum) + " (0.9894 +- 0.004)");
    o.check(std::abs(r.fidelity_e_single - 0.82) <= 0.02, "F_e " + fmt(r.fidelity_e_single) + " (0.82 +- 0.02)");
}

void criterion_entanglement(Outcome& o) {
    const double ideal = negativity(ideal_composite(0.165, 2), 1);
    const double sim = superposition_run(SystemParams::device(), 0.165).negativity;
    o.check(std::abs(ideal - 0.346) <= 0.002, "ideal N " + fmt(ideal) + " (0.346 +- 0.002)");
    o.check(within(sim, 0.25, 0.346), "simulated N " + fmt(sim) + " in [0.25, 0.346]");
}

void criterion_sweeps(Outcome& o) {
    SweepOptions opt;
    opt.protocol_columns = false;
    const SystemParams ideal = SystemParams::ideal();
    std::vector<double> kappas;
    for (int k = 0; k <= 16; ++k) kappas.push_back(kTwoPi * (1.0e6 + 0.25e6 * k));
    const SweepResult ks = sweep(ideal, ScheduleSpec{}, SweepAxis::KappaEx, kappas, opt);
    const double rel = ks.peak_location / (2.0 * ideal.chi) - 1.0;
    o.check(std::abs(rel) <= 0.15, "kappa_ex peak " + fmt(ks.peak_location / kTwoPi / 1e6) + " MHz vs 2chi " +
                                       fmt(2.0 * ideal.chi / kTwoPi / 1e6) + " MHz (" + fmt(100 * rel, 3) + "%)");
    std::vector<double> gaps;
    for (int k = 0; k <= 12; ++k) gaps.push_back(500e-9 + 50e-9 * k);
    const SweepResult gs = sweep(SystemParams::device(), ScheduleSpec{}, SweepAxis::GateInterval, gaps, opt);
    o.check(within(gs.peak_location, 700e-9, 900e-9), "gate interval peak " + fmt(gs.peak_location * 1e9) + " ns");
}

void criterion_tomography(Outcome& o) {
    const double eta = 0.43;
    const auto phases = phase_settings(100);
    const QuantumState coh = QuantumState::pure({8}, coherent_vector(8, std::sqrt(0.137)));
    MleOptions single;
    single.correct_efficiency = false;
    const MleResult raw = mle_reconstruct(sample(coh, phases, 10000, eta, 20240601), single);
    const double n_hat = mean_photons(raw.state);
    const double f = fidelity_to_pure(raw.state, coherent_vector(5, std::sqrt(eta * 0.137)));
    o.check(std::abs(n_hat - 0.058) <= 0.006, "n_hat " + fmt(n_hat) + " (0.058 +- 0.006)");
    o.check(f > 0.99, "fidelity to coherent " + fmt(f, 5) + " > 0.99");

    const ProtocolResult r = superposition_run(SystemParams::device(), 0.165);
    MleOptions comp;
    comp.n_tomo = 3;
    comp.correct_efficiency = false;
    const MleResult joint = composite_mle(sample_composite(*r.rho_comp, phases, 10000, eta, 20240602), comp);
    const double n = negativity(joint.state, 1);
    o.check(std::abs(n - 0.159) <= 0.03, "composite N " + fmt(n) + " (0.159 +- 0.03)");
}

// Largest moment discrepancy relative to the moment's own magnitude.
double moment_mismatch(const OutputMoments& a, const OutputMoments& b, int order) {
    double worst = 0.0;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int n = 0; n <= order; ++n)
                for (int m = 0; m <= order; ++m) {
                    const Complex va = a.at(p, q, n, m);
                    const Complex vb = b.at(p, q, n, m);
                    const double scale = std::max(std::abs(va), 1e-6);
                    worst = std::max(worst, std::abs(va - vb) / scale);
                }
    return worst;
}

double moment_difference(const OutputMoments& a, const OutputMoments& b, int order) {
    double worst = 0.0;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int n = 0; n <= order; ++n)
                for (int m = 0; m <= order; ++m) worst = std::max(worst, std::abs(a.at(p, q, n, m) - b.at(p, q, n, m)));
    return worst;
}

void criterion_oracle(Outcome& o) {
    struct Case {
        SystemParams p;
        double photons;
        double gap;
    };
    std::vector<Case> cases{{SystemParams::device(), 0.165, 800e-9}};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        SystemParams p;
        p.chi = kTwoPi * (0.8e6 + 1.7e6 * u(rng));
        p.kappa_ex = kTwoPi * (1.5e6 + 3.5e6 * u(rng));
        p.kappa_in = kTwoPi * 0.5e6 * u(rng);
        p.T1 = 10e-6 + 40e-6 * u(rng);
        p.T2_star = std::min(2.0 * p.T1, 5e-6 + 40e-6 * u(rng));
        p.p_th = 0.1 * u(rng);
        cases.push_back({p, 0.05 + 0.25 * u(rng), 700e-9 + 400e-9 * u(rng)});
    }
    const int order = 2;
    double worst_rel = 0.0;
    double worst_dt = 0.0;
    for (const Case& c : cases) {
        const LindbladModel m = model_for(c.p, c.photons);
        PulseSchedule s = PulseSchedule::standard(c.gap, 500e-9, std::sqrt(c.photons));
        s.output_delay = optimal_output_delay(c.p, s);
        const OutputMoments reg = output_mode_moments(m, s, order);
        // third-order moments need eight capture levels to converge below 1e-5
        const OutputMoments cap = capture_mode_oracle(m, s, order, 8);
        worst_rel = std::max(worst_rel, moment_mismatch(reg, cap, order));
        PulseSchedule fine = s;
        fine.step_fraction = 0.5;
        worst_dt = std::max(worst_dt, moment_difference(reg, output_mode_moments(m, fine, order), order));
    }
    o.check(worst_rel <= 1e-3, "regression vs capture worst relative " + fmt(worst_rel, 3) + " over " +
                                   std::to_string(cases.size()) + " parameter sets");
    o.check(worst_dt < 1e-4, "dt halving worst change " + fmt(worst_dt, 3));
}

void criterion_invariants(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    // trace, Hermiticity, positivity and the decomposition identity of protocol outputs
    double worst_state = 0.0;
    double worst_decomp = 0.0;
    for (InputModel model : {InputModel::Coherent, InputModel::SinglePhotonSuperposition}) {
        ProtocolOptions opt;
        opt.input_model = model;
        for (double x : {0.05, 0.165, 0.4}) {
            const ProtocolResult r = run_protocol(SystemParams::device(), interval(1100e-9).build(std::sqrt(x)), opt);
            for (const QuantumState* s : {&*r.rho_g, &*r.rho_e, &*r.rho_uncond, &*r.rho_comp}) {
                worst_state = std::max({worst_state, std::abs(s->matrix().trace().real() - 1.0),
                                        max_abs(s->matrix() - s->matrix().adjoint()),
                                        -hermitian_eigenvalues(s->matrix()).minCoeff()});
            }
            const ComplexMatrix mix = r.outcome_weight_g * r.rho_g->matrix() + r.outcome_weight_e * r.rho_e->matrix();
            worst_decomp = std::max(worst_decomp, max_abs(mix - r.rho_uncond->matrix()));
        }
    }
    o.check(worst_state < 1e-9, "state validity " + fmt(worst_state, 3));
    o.check(worst_decomp < 1e-8, "decomposition identity " + fmt(worst_decomp, 3));

    double worst_povm = 0.0;
    for (double eta : {1.0, 0.43}) {
        for (double theta : phase_settings(7)) {
            const QuadraturePOVM povm = build_povm(theta, eta, 5);
            ComplexMatrix sum = ComplexMatrix::Zero(5, 5);
            for (const ComplexMatrix& e : povm.elements) {
                sum += e;
                worst_povm = std::max(worst_povm, -hermitian_eigenvalues(e).minCoeff());
            }
            worst_povm = std::max(worst_povm, max_abs(sum - identity(5)));
        }
    }
    o.check(worst_povm < 1e-6, "POVM completeness/positivity " + fmt(worst_povm, 3));

    double worst_drop = 0.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.4);
    for (int k = 0; k < 5; ++k) {
        const double mu = u(rng);
        const QuantumState th = thermal_state(5, mu);
        MleOptions opt;
        opt.eta = 0.43;
        const MleResult res = mle_reconstruct(sample(th, phase_settings(30), 3000, 0.43, 900 + k), opt);
        for (std::size_t i = 1; i < res.log_likelihood.size(); ++i) {
            worst_drop = std::max(worst_drop, res.log_likelihood[i - 1] - res.log_likelihood[i]);
        }
    }
    o.check(worst_drop <= 1e-12, "MLE likelihood worst drop " + fmt(worst_drop, 3));
    const double elapsed = seconds_since(t0);
    o.check(elapsed < 1800.0, "runtime " + fmt(elapsed, 3) + " s");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"reflected photon number", criterion_reflected_photons},
        {"quantum efficiency and dark count", criterion_efficiency},
        {"conditional fidelities", criterion_fidelities},
        {"entanglement ceiling", criterion_entanglement},
        {"parameter sweeps", criterion_sweeps},
        {"tomography round trips", criterion_tomography},
        {"regression vs capture oracle", criterion_oracle},
        {"invariant suites", criterion_invariants},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %zu %-36s %s  (%.1f s)  %s\n", i + 1, criteria[i].first.c_str(),
                    o.pass ? "PASS" : "FAIL", seconds_since(t0), o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
