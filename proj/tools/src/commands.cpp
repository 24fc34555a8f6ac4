#include "qndsim_cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/io.hpp"
#include "qndsim/parallel.hpp"
#include "qndsim/tomography.hpp"

namespace qndsim::cli {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
}

Json fit_json(const QuadraticFit& f) {
    return {{"c0", f.c0}, {"c1", f.c1}, {"c2", f.c2}, {"residual_rms", f.residual_rms}};
}

double mean_photons(const QuantumState& mode) {
    const auto pd = photon_distribution(mode);
    double n = 0.0;
    for (std::size_t k = 0; k < pd.size(); ++k) {
        n += static_cast<double>(k) * pd[k];
    }
    return n;
}

QuantumState truncate_mode(const QuantumState& rho, int dim) {
    const ComplexMatrix m = rho.matrix().topLeftCorner(dim, dim);
    return QuantumState::from_unnormalized({dim}, m);
}

Json record_json(const MeasurementRecord& r) {
    Json settings = Json::array();
    for (const auto& s : r.settings) {
        const char* basis = s.basis == QubitBasis::X   ? "X"
                            : s.basis == QubitBasis::Y ? "Y"
                            : s.basis == QubitBasis::Z ? "Z"
                                                       : "none";
        settings.push_back({{"theta", s.theta},
                            {"basis", basis},
                            {"qubit_outcome", s.qubit_outcome},
                            {"shots", s.shots},
                            {"counts", s.counts}});
    }
    return {{"grid", {{"x_min", r.grid.x_min}, {"x_max", r.grid.x_max}, {"bins", r.grid.bins}}},
            {"settings", settings}};
}

std::vector<double> to_angular(SweepAxis axis, std::vector<double> values) {
    if (axis == SweepAxis::KappaEx || axis == SweepAxis::KappaIn) {
        for (double& v : values) {
            v *= kTwoPi;
        }
    }
    return values;
}

}  // namespace

std::vector<std::string> cmd_spectrum(const RunConfig& config, const fs::path& out) {
    const auto& p = config.system.params;
    const auto& sp = config.spectrum;
    std::vector<std::vector<double>> rows;
    double best_g = 2.0, best_e = 2.0, dip_g = 0.0, dip_e = 0.0;
    for (int k = 0; k < sp.points; ++k) {
        const double nu = -0.5 * sp.span_hz + sp.span_hz * k / (sp.points - 1);
        const double w = p.omega_c + kTwoPi * nu;
        const Complex rg = reflection_coefficient(p, QubitLevel::Ground, w);
        const Complex re = reflection_coefficient(p, QubitLevel::Excited, w);
        const double rfg = std::norm(rg);
        const double rfe = std::norm(re);
        if (rfg < best_g) {
            best_g = rfg;
            dip_g = nu;
        }
        if (rfe < best_e) {
            best_e = rfe;
            dip_e = nu;
        }
        rows.push_back({nu, rfg, std::arg(rg), rfe, std::arg(re), std::arg(rg * std::conj(re))});
    }
    io::write_csv(out / "spectrum.csv",
                  {"detuning_hz", "reflectance_g", "phase_g", "reflectance_e", "phase_e", "phase_difference"},
                  rows);
    const Complex rg0 = reflection_coefficient(p, QubitLevel::Ground, p.omega_c);
    const Complex re0 = reflection_coefficient(p, QubitLevel::Excited, p.omega_c);
    write_json(out / "spectrum.json", {{"dip_g_detuning_hz", dip_g},
                                       {"dip_e_detuning_hz", dip_e},
                                       {"min_reflectance_g", best_g},
                                       {"min_reflectance_e", best_e},
                                       {"phase_difference_at_center", std::arg(rg0 * std::conj(re0))}});
    return {"spectrum.csv", "spectrum.json"};
}

std::vector<std::string> cmd_efficiency(const RunConfig& config, const fs::path& out) {
    const auto report =
        efficiency_scan(config.system.params, schedule_spec(config), config.schedule.input_photon_grid);
    std::vector<std::vector<double>> curve;
    for (std::size_t k = 0; k < report.grid.size(); ++k) {
        const double x = report.grid[k];
        curve.push_back({x, report.phase_flip[k], report.curve_fit(x), report.dark_count + report.efficiency * x});
    }
    io::write_csv(out / "efficiency_curve.csv", {"input_photons", "phase_flip", "curve_fit", "linear"}, curve);
    std::vector<std::vector<double>> probe;
    for (std::size_t k = 0; k < report.probe_grid.size(); ++k) {
        probe.push_back({report.probe_grid[k], report.probe_phase_flip[k]});
    }
    io::write_csv(out / "efficiency_probe.csv", {"input_photons", "phase_flip"}, probe);
    write_json(out / "efficiency.json", {{"efficiency", report.efficiency},
                                         {"dark_count", report.dark_count},
                                         {"bending_at_max", report.bending_at_max},
                                         {"weak_fit", fit_json(report.weak_fit)},
                                         {"curve_fit", fit_json(report.curve_fit)}});
    return {"efficiency_curve.csv", "efficiency_probe.csv", "efficiency.json"};
}

std::vector<std::string> cmd_protocol(const RunConfig& config, const fs::path& out) {
    const auto schedule = schedule_spec(config).build(std::sqrt(config.schedule.input_photons));
    const ProtocolResult r = run_protocol(config.system.params, schedule, protocol_options(config));
    const QuantumState& rho_g = r.conditional(QubitLevel::Ground);
    const QuantumState& rho_e = r.conditional(QubitLevel::Excited);
    const EntanglementReport ent = entanglement_report(r);

    std::vector<std::string> files;
    auto matrix = [&](const std::string& name, const QuantumState& s) {
        io::write_matrix_csv(out / name, s.matrix());
        files.push_back(name);
    };
    matrix("rho_g.csv", rho_g);
    matrix("rho_e.csv", rho_e);
    matrix("rho_uncond.csv", *r.rho_uncond);
    matrix("rho_comp.csv", *r.rho_comp);

    const auto pg = photon_distribution(rho_g);
    const auto pe = photon_distribution(rho_e);
    const auto pu = photon_distribution(*r.rho_uncond);
    std::vector<std::vector<double>> dist;
    for (std::size_t n = 0; n < pg.size(); ++n) {
        dist.push_back({static_cast<double>(n), pg[n], pe[n], pu[n]});
    }
    io::write_csv(out / "photon_distribution.csv", {"n", "p_g", "p_e", "p_uncond"}, dist);
    files.push_back("photon_distribution.csv");

    const double extent = config.protocol.wigner_extent;
    const int points = config.protocol.wigner_points;
    auto wig = [&](const std::string& name, const QuantumState& s) {
        io::write_wigner_csv(out / name, wigner(s, extent, points));
        files.push_back(name);
    };
    wig("wigner_g.csv", rho_g);
    wig("wigner_e.csv", rho_e);
    wig("wigner_uncond.csv", *r.rho_uncond);

    write_json(out / "protocol.json", {{"input_photons", r.input_photons},
                                       {"input_model", config.protocol.input_model},
                                       {"phase_flip_probability", r.phase_flip_probability},
                                       {"outcome_weight_g", r.outcome_weight_g},
                                       {"outcome_weight_e", r.outcome_weight_e},
                                       {"output_delay_s", r.output_delay},
                                       {"mean_output_photons", r.mean_output_photons},
                                       {"survival", r.survival},
                                       {"fidelity_g_vacuum", r.fidelity_g_vacuum},
                                       {"fidelity_e_single", r.fidelity_e_single},
                                       {"negativity", ent.negativity},
                                       {"fidelity_to_ideal", ent.fidelity_to_ideal},
                                       {"ideal_mode_phase", ent.mode_phase},
                                       {"ideal_qubit_phase", ent.qubit_phase}});
    files.push_back("protocol.json");
    return files;
}

std::vector<std::string> cmd_tomo_selftest(const RunConfig& config, const fs::path& out) {
    const auto& t = config.tomography;
    if (!t.seed) {
        throw ConfigError("tomo-selftest needs tomography.seed or --seed");
    }
    const double eta = t.eta.value_or(config.system.params.eta_meas);
    const auto thetas = phase_settings(t.phases);

    struct Row {
        std::string name;
        bool corrected;
        double photons;
        double fidelity;
        double negativity;
        int iterations;
        bool converged;
    };
    std::vector<Row> rows;

    // Single mode: coherent input seen through the detector.
    const int d_src = std::max(t.n_tomo, 8);
    const ComplexVector alpha_vec = coherent_vector(d_src, std::sqrt(t.coherent_photons));
    const QuantumState coherent = QuantumState::pure({d_src}, alpha_vec);
    const MeasurementRecord rec = sample(coherent, thetas, t.shots, eta, *t.seed);
    io::write_record_csv(out / "record_coherent.csv", rec);
    write_json(out / "record_coherent.json", record_json(rec));
    for (bool corrected : {false, true}) {
        MleOptions o{t.n_tomo, t.iterations, t.tolerance, corrected, eta};
        const MleResult r = mle_reconstruct(rec, o);
        const double expected = corrected ? t.coherent_photons : eta * t.coherent_photons;
        const double f = fidelity_to_pure(r.state, coherent_vector(t.n_tomo, std::sqrt(expected)));
        rows.push_back({"coherent", corrected, mean_photons(r.state), f, 0.0, r.iterations, r.converged});
    }

    // Qubit x mode.
    const int dc = t.n_tomo_composite;
    QuantumState source = ideal_composite(t.composite_photons, dc - 1);
    if (t.composite_source == "protocol") {
        ProtocolOptions po = protocol_options(config);
        po.n_ph = dc - 1;
        const auto schedule = schedule_spec(config).build(std::sqrt(t.composite_photons));
        source = *run_protocol(config.system.params, schedule, po).rho_comp;
    }
    const MeasurementRecord crec = sample_composite(source, thetas, t.shots, eta, *t.seed + 1);
    io::write_record_csv(out / "record_composite.csv", crec);
    for (bool corrected : {false, true}) {
        MleOptions o{dc, t.iterations, t.tolerance, corrected, eta};
        const MleResult r = composite_mle(crec, o);
        const QuantumState target = corrected ? source : apply_loss(source, eta, 1);
        const int mode[] = {1};
        rows.push_back({"composite", corrected, mean_photons(partial_trace(r.state, mode)),
                        fidelity(r.state, target), negativity(r.state, 1), r.iterations, r.converged});
    }

    std::ofstream csv(out / "tomo_selftest.csv", std::ios::binary);
    csv << "case,corrected,mean_photons,fidelity,negativity,iterations,converged\n";
    Json table = Json::array();
    for (const auto& r : rows) {
        csv << r.name << ',' << (r.corrected ? 1 : 0) << ',' << io::format_double(r.photons) << ','
            << io::format_double(r.fidelity) << ',' << io::format_double(r.negativity) << ','
            << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
        table.push_back({{"case", r.name},
                         {"corrected", r.corrected},
                         {"mean_photons", r.photons},
                         {"fidelity", r.fidelity},
                         {"negativity", r.negativity},
                         {"iterations", r.iterations},
                         {"converged", r.converged}});
    }
    if (!csv) {
        throw Error("cannot write tomo_selftest.csv");
    }
    write_json(out / "tomo_selftest.json", {{"eta", eta}, {"seed", *t.seed}, {"rows", table}});
    return {"record_coherent.csv", "record_coherent.json", "record_composite.csv", "tomo_selftest.csv",
            "tomo_selftest.json"};
}

std::vector<std::string> cmd_sweep(const RunConfig& config, const fs::path& out) {
    const SweepAxis axis = parse_sweep_axis(config.sweep.axis);
    if (config.sweep.values.empty()) {
        throw ConfigError("sweep.values is required for axis " + config.sweep.axis);
    }
    SweepOptions so;
    so.protocol_columns = config.sweep.protocol_columns;
    so.protocol_photons = config.sweep.protocol_photons;
    const SweepResult res = sweep(config.system.params, schedule_spec(config), axis,
                                  to_angular(axis, config.sweep.values), so);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
        const auto& r = res.rows[k];
        rows.push_back({config.sweep.values[k], r.efficiency, r.dark_count, r.survival, r.negativity});
    }
    io::write_csv(out / "sweep.csv", {"value", "efficiency", "dark_count", "survival", "negativity"}, rows);
    const double scale = (axis == SweepAxis::KappaEx || axis == SweepAxis::KappaIn) ? 1.0 / kTwoPi : 1.0;
    write_json(out / "sweep.json", {{"axis", to_string(axis)},
                                    {"argmax", res.argmax},
                                    {"best_value", config.sweep.values[res.argmax]},
                                    {"peak_location", res.peak_location * scale},
                                    {"peak_efficiency", res.rows[res.argmax].efficiency}});
    return {"sweep.csv", "sweep.json"};
}

int run(int argc, const char* const* argv) {
    CLI::App app{"qndsim: QND single-photon detection simulator"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
    app.add_option("--seed", seed, "Random seed (overrides tomography.seed)");
    app.add_option("--threads", threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"spectrum", "Reflection coefficient versus frequency"},
        {"efficiency", "Phase-flip probability scan, efficiency and dark count"},
        {"protocol", "Conditional and composite output states"},
        {"tomo-selftest", "Sampling and maximum-likelihood round trips"},
        {"sweep", "Efficiency versus one parameter"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    RunConfig config;
    fs::path out;
    std::vector<std::string> files;
    std::string status = "ok";
    int code = kExitOk;
    try {
        if (!config_path.empty()) {
            config = load_config(config_path);
        }
        if (!out_dir.empty()) {
            config.output_dir = out_dir;
        }
        if (seed) {
            config.tomography.seed = *seed;
        }
        if (threads) {
            config.threads = *threads;
        }
        config = resolve_for(config, sub);
        out = config.output_dir;
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) {
            throw ConfigError("cannot create output directory " + out.string());
        }
        set_thread_count(config.threads);
        if (sub == "spectrum") {
            files = cmd_spectrum(config, out);
        } else if (sub == "efficiency") {
            files = cmd_efficiency(config, out);
        } else if (sub == "protocol") {
            files = cmd_protocol(config, out);
        } else if (sub == "tomo-selftest") {
            files = cmd_tomo_selftest(config, out);
        } else {
            files = cmd_sweep(config, out);
        }
    } catch (const ConfigError& e) {
        status = std::string("config error: ") + e.what();
        code = kExitConfig;
    } catch (const InvalidArgument& e) {
        status = std::string("invalid input: ") + e.what();
        code = kExitConfig;
    } catch (const ConvergenceError& e) {
        status = std::string("convergence failure: ") + e.what();
        code = kExitConvergence;
    } catch (const ConditioningError& e) {
        status = std::string("conditioning failure: ") + e.what();
        code = kExitConvergence;
    } catch (const std::exception& e) {
        status = std::string("error: ") + e.what();
        code = kExitFailure;
    }
    if (code != kExitOk) {
        std::cerr << "qndsim " << sub << ": " << status << '\n';
    }
    if (out.empty() && !out_dir.empty()) {
        // config failed before resolution; still record the failure
        out = out_dir;
    }
    if (!out.empty() && fs::is_directory(out)) {
        try {
            Json manifest;
            manifest["tool"] = "qndsim";
            manifest["version"] = "0.1.0";
            manifest["subcommand"] = sub;
            manifest["status"] = status;
            manifest["exit_code"] = code;
            manifest["config"] = Json::parse(to_json(config));
            manifest["outputs"] = files;
            write_json(out / "manifest.json", manifest);
        } catch (const std::exception& e) {
            std::cerr << "qndsim: cannot write manifest: " << e.what() << '\n';
            if (code == kExitOk) {
                code = kExitFailure;
            }
        }
    }
    return code;
}

}  // namespace qndsim::cli
