// fermips: config-driven drivers for the MPS engines. Progress goes to
// stderr; data lands in CSV files plus a JSON summary under --out.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fermips/io.hpp"
#include "fermips/refsolver.hpp"

namespace fs = std::filesystem;
using namespace fermips;
using nlohmann::json;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    long seed = 0;
};

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// whether the config text itself sets a key (config wins over flags)
bool config_sets(const std::string &text, const std::string &key) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto b = line.find_first_not_of(" \t");
        auto e = line.find_last_not_of(" \t", eq - 1);
        if (b != std::string::npos && e != std::string::npos && e >= b &&
            line.substr(b, e - b + 1) == key)
            return true;
    }
    return false;
}

struct Problem {
    FermionOperatorSum hamiltonian;
    FermionOperatorSum one_body;  // Trotter "T" piece
    FermionOperatorSum two_body;  // Trotter "V" piece
    std::optional<HubbardSpec> hubbard;
    std::optional<IntegralHamiltonian> integrals;
    int n_sites = 0;
    int n_elec = 0;
    int twice_sz = 0;
};

Problem make_problem(const RunConfig &c) {
    Problem p;
    if (c.use_fcidump) {
        auto dump = parse_fcidump(slurp(c.fcidump_path));
        for (auto &w : dump.warnings) std::cerr << "fcidump: " << w << "\n";
        p.integrals = dump.to_integrals();
        p.n_sites = p.integrals->norb;
        p.hamiltonian = from_integrals(*p.integrals);
        IntegralHamiltonian one = *p.integrals, two = *p.integrals;
        std::fill(two.h1.begin(), two.h1.end(), cplx{0});
        two.e_core = 0.0;
        std::fill(one.g2.begin(), one.g2.end(), 0.0);
        p.one_body = from_integrals(one);
        p.two_body = from_integrals(two);
        p.n_elec = c.n_elec >= 0 ? c.n_elec : dump.nelec;
        p.twice_sz = c.n_elec >= 0 ? c.twice_sz : dump.ms2;
    } else {
        p.hubbard = c.hubbard;
        p.n_sites = c.hubbard.sites;
        p.hamiltonian = hubbard_hamiltonian(c.hubbard);
        HubbardSpec hop = c.hubbard;
        hop.u = 0.0;
        p.one_body = hubbard_hamiltonian(hop);
        p.two_body = p.hamiltonian + p.one_body.scaled(-1.0);
        p.n_elec = c.n_elec;
        p.twice_sz = c.twice_sz;
    }
    if (p.n_elec < 0 || p.n_elec > 2 * p.n_sites || std::abs(p.twice_sz) > p.n_elec ||
        (p.n_elec - p.twice_sz) % 2 != 0)
        throw InvalidSpec("sector (" + std::to_string(p.n_elec) + "," +
                          std::to_string(p.twice_sz) + ") is invalid for " +
                          std::to_string(p.n_sites) + " orbitals");
    return p;
}

// deterministic product-state seed. paired=true builds the closed-shell
// reference (doubly occupied orbitals first) that ADAPT grows from; the
// default spreads up spins from the left and down spins from the right.
MPSWavefunction seed_state(const Problem &p, bool paired = false) {
    int na = (p.n_elec + p.twice_sz) / 2, nb = (p.n_elec - p.twice_sz) / 2;
    if (na > p.n_sites || nb > p.n_sites)
        throw InvalidSpec("sector does not fit into a single product state seed");
    std::vector<int> occ(p.n_sites, 0);
    if (paired) {
        int site = 0;
        for (int k = 0; k < std::min(na, nb); ++k) occ[site++] = 3;
        for (int k = 0; k < na - nb; ++k) occ[site++] = 1;
        for (int k = 0; k < nb - na; ++k) occ[site++] = 2;
    } else {
        for (int k = 0; k < na; ++k) occ[k] |= 1;
        for (int k = 0; k < nb; ++k) occ[p.n_sites - 1 - k] |= 2;
    }
    return MPSWavefunction::from_occupation(occ);
}

std::vector<long> stage_bonds(const RunConfig &c) {
    return c.bond_series.empty() ? std::vector<long>{c.policy.max_bond} : c.bond_series;
}

SweepSchedule stage_schedule(long m, const RunConfig &c) {
    auto s = default_schedule(m, c.sweeps);
    s.cutoff = c.policy.cutoff;
    return s;
}

long peak_bond(const MPSWavefunction &psi) {
    long m = 0;
    for (long b : psi.bond_dims()) m = std::max(m, b);
    return m;
}

struct Report {
    json summary = json::object();
    std::vector<std::string> files;
};

void finish(const RunConfig &c, const CliArgs &args, Report &rep,
            std::chrono::steady_clock::time_point t0, long peak) {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.summary["task"] = config_entries(c).at("task");
    rep.summary["wall_time_s"] = wall;
    rep.summary["peak_bond"] = peak;
    rep.summary["files"] = rep.files;
    rep.summary["config"] = json::parse(config_json(c));
    auto path = (fs::path(args.out_dir) / "summary.json").string();
    std::ofstream out(path);
    out << rep.summary.dump(2) << "\n";
    if (!out) throw Error("cannot write '" + path + "'");
    std::cerr << "done in " << wall << " s; summary: " << path << "\n";
}

std::string out_path(const CliArgs &args, const std::string &name, Report &rep) {
    auto p = (fs::path(args.out_dir) / name).string();
    rep.files.push_back(p);
    return p;
}

// ---------------------------------------------------------------------------

int cmd_ground_state(const RunConfig &c, const CliArgs &args) {
    auto t0 = std::chrono::steady_clock::now();
    auto p = make_problem(c);
    auto w = build_mpo(p.hamiltonian);
    auto hf = seed_state(p);
    Report rep;

    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<double, double>> points; // (discarded weight, energy)
    MPSWavefunction psi = hf;
    double energy = 0.0;
    long peak = 1;
    int stage = 0;
    for (long m : stage_bonds(c)) {
        std::cerr << "stage " << stage << ": DMRG at M=" << m << "\n";
        auto res = dmrg(w, psi, stage_schedule(m, c));
        psi = res.psi;
        energy = res.energy;
        peak = std::max(peak, peak_bond(psi));
        int sweep = 0;
        for (auto &rec : res.per_sweep)
            rows.push_back({std::to_string(stage), std::to_string(rec.max_bond),
                            std::to_string(sweep++), csv_num(rec.energy),
                            csv_num(rec.max_discarded)});
        points.push_back({res.per_sweep.back().max_discarded, res.energy});
        ++stage;
    }
    write_csv(out_path(args, "ground_state.csv", rep),
              "ground-state(stage,M,sweep,energy,discarded_weight)",
              {"stage", "M", "sweep", "energy", "discarded_weight"}, rows);

    rep.summary["energy"] = energy;
    rep.summary["reference_overlap"] = std::abs(overlap(hf, psi.normalized()));
    if (points.size() >= 2) {
        try {
            auto [e0, slope] = extrapolate_to_zero_truncation(points);
            rep.summary["extrapolated_energy"] = e0;
            rep.summary["extrapolation_slope"] = slope;
        } catch (const DegeneratePoints &) {
            std::cerr << "extrapolation skipped: stages share a discarded weight\n";
        }
    }
    finish(c, args, rep, t0, peak);
    return 0;
}

int cmd_state_prep(const RunConfig &c, const CliArgs &args) {
    auto t0 = std::chrono::steady_clock::now();
    auto p = make_problem(c);
    auto w = build_mpo(p.hamiltonian);
    auto hf = seed_state(p);
    Report rep;

    std::cerr << "target ground state at M=" << c.policy.max_bond << "\n";
    auto target = dmrg(w, hf, stage_schedule(c.policy.max_bond, c)).psi;
    long peak = peak_bond(target);

    std::vector<std::vector<std::string>> rows;
    auto cross = json::object();
    auto track = [&](const std::string &method, double t, double energy, double ov) {
        rows.push_back({method, csv_num(t), csv_num(energy), csv_num(ov)});
        if (ov > 0.9 && !cross.contains(method)) cross[method] = t;
    };

    // imaginary time from the product seed
    EvolutionParams ip = c.evolution;
    ip.imaginary = true;
    ip.n_steps = 1;
    ip.policy = c.policy;
    MPSWavefunction psi = hf;
    int n_tau = static_cast<int>(std::ceil(c.prep_tau_max / ip.dt - 1e-12));
    track("imag", 0.0, std::real(expectation(psi, w)), std::abs(overlap(target, psi)));
    for (int k = 1; k <= n_tau; ++k) {
        auto out = evolve(w, psi, ip);
        psi = out.psi;
        peak = std::max(peak, peak_bond(psi));
        track("imag", k * ip.dt, out.steps.back().energy, std::abs(overlap(target, psi)));
    }
    std::cerr << "imaginary time done (" << n_tau << " steps)\n";

    // adiabatic ramp from an easy starting Hamiltonian to the full one
    FermionOperatorSum start_h =
        p.hubbard ? hubbard_hamiltonian({p.hubbard->sites, p.hubbard->t_h, c.prep_u_start,
                                         p.hubbard->periodic})
                  : p.one_body;
    auto w0 = build_mpo(start_h);
    auto gs0 = dmrg(w0, hf, stage_schedule(c.policy.max_bond, c)).psi;
    EvolutionParams ap = c.evolution;
    ap.policy = c.policy;
    auto ramp = adiabatic_evolve(w0, w, c.prep_total_time, ap, gs0, &target);
    for (auto &pt : ramp.trajectory)
        track("adiabatic", pt.s * c.prep_total_time, pt.energy, pt.overlap);
    peak = std::max(peak, peak_bond(ramp.psi));
    std::cerr << "adiabatic ramp done (" << ramp.trajectory.size() << " points)\n";

    write_csv(out_path(args, "state_prep.csv", rep), "state-prep(method,t,energy,overlap)",
              {"method", "t", "energy", "overlap"}, rows);
    rep.summary["first_overlap_above_0.9"] = cross;
    rep.summary["target_energy"] = std::real(expectation(target, w));
    finish(c, args, rep, t0, peak);
    return 0;
}

int cmd_adapt(const RunConfig &c, const CliArgs &args) {
    auto t0 = std::chrono::steady_clock::now();
    auto p = make_problem(c);
    auto w = build_mpo(p.hamiltonian);
    auto hf = seed_state(p, /*paired=*/true);
    Report rep;

    std::cerr << "ADAPT over " << adapt_pool(p.n_sites).size() << " pool operators at M="
              << c.policy.max_bond << "\n";
    auto st = adapt_vqe(w, adapt_pool(p.n_sites), hf, c.policy, c.adapt_stop,
                        [](const AdaptState &s) {
                            std::cerr << "iter " << s.energy_history.size() << ": E = "
                                      << s.energy_history.back() << ", |g| = "
                                      << s.gradient_norm_history.back() << "\n";
                        });

    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < st.gradient_norm_history.size(); ++k) {
        bool grew = k < st.operators.size();
        rows.push_back({std::to_string(k),
                        csv_num(grew ? st.energy_history[k]
                                     : (st.energy_history.empty()
                                            ? std::real(expectation(hf, w))
                                            : st.energy_history.back())),
                        csv_num(st.gradient_norm_history[k]),
                        grew ? std::to_string(st.operators[k]) : "-1"});
    }
    write_csv(out_path(args, "adapt.csv", rep), "adapt(iter,energy,grad_norm,op_id)",
              {"iter", "energy", "grad_norm", "op_id"}, rows);
    rep.summary["converged"] = st.converged;
    rep.summary["n_operators"] = st.operators.size();
    if (!st.energy_history.empty()) rep.summary["energy"] = st.energy_history.back();
    finish(c, args, rep, t0, c.policy.max_bond);
    return 0;
}

int cmd_trotter(const RunConfig &c, const CliArgs &args) {
    auto t0 = std::chrono::steady_clock::now();
    auto p = make_problem(c);
    auto t_op = build_mpo(p.one_body);
    auto v_op = build_mpo(p.two_body);
    auto seed = seed_state(p);
    Report rep;

    std::vector<std::vector<std::string>> rows;
    std::vector<double> lds, lns;
    double dt = c.trotter_dt;
    for (int k = 0; k < c.trotter_points; ++k, dt /= 2) {
        std::cerr << "power iteration at dt=" << dt << "\n";
        auto est = trotter_error_norm(t_op, v_op, dt, c.policy, 40, &seed);
        rows.push_back({csv_num(dt), csv_num(est.value), std::to_string(est.iterations),
                        csv_num(est.residual)});
        if (est.value > 0) {
            lds.push_back(std::log(dt));
            lns.push_back(std::log(est.value));
        }
    }
    write_csv(out_path(args, "trotter.csv", rep), "trotter(dt,norm,iters,residual)",
              {"dt", "norm", "iters", "residual"}, rows);
    if (lds.size() >= 2) {
        double n = static_cast<double>(lds.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = 0; k < lds.size(); ++k) {
            sx += lds[k], sy += lns[k], sxx += lds[k] * lds[k], sxy += lds[k] * lns[k];
        }
        rep.summary["loglog_slope"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    if (p.integrals) {
        auto [tau, nu] = particle_weighted_norms(*p.integrals, c.trotter_eta);
        rep.summary["tau_norm"] = tau;
        rep.summary["nu_norm"] = nu;
    }
    finish(c, args, rep, t0, c.policy.max_bond);
    return 0;
}

int cmd_quench(const RunConfig &c, const CliArgs &args) {
    auto t0 = std::chrono::steady_clock::now();
    if (c.use_fcidump)
        throw InvalidSpec("quench needs the chain current operator; use a Hubbard model");
    auto p = make_problem(c);
    auto w = build_mpo(p.hamiltonian);
    auto wj = build_mpo(current_operator(*p.hubbard));
    auto hf = seed_state(p);
    Report rep;

    std::vector<double> omegas;
    for (double om = c.spectrum.omega_min; om <= c.spectrum.omega_max + 1e-12;
         om += c.spectrum.omega_step)
        omegas.push_back(om);

    long peak = 1;
    std::vector<std::vector<double>> spectra;
    auto bonds = stage_bonds(c);
    for (long m : bonds) {
        std::cerr << "quench at M=" << m << "\n";
        auto gs = dmrg(w, hf, stage_schedule(m, c));
        EvolutionParams ep = c.evolution;
        ep.policy = CompressionPolicy{m, c.policy.cutoff};
        auto series = current_autocorrelation(w, wj, gs.psi, gs.energy, ep, c.spectrum.t_max);
        std::vector<std::vector<std::string>> crows;
        for (auto &pt : series)
            crows.push_back({csv_num(pt.tau), csv_num(pt.c.real()), csv_num(pt.c.imag())});
        write_csv(out_path(args, "quench_corr_M" + std::to_string(m) + ".csv", rep),
                  "quench(tau,re_C,im_C)", {"tau", "re_C", "im_C"}, crows);

        auto spec = optical_spectrum(series, c.spectrum.gamma, c.spectrum.window, omegas,
                                     p.n_sites);
        std::vector<std::vector<std::string>> srows;
        std::vector<double> avals;
        for (auto &[om, a] : spec) {
            srows.push_back({csv_num(om), csv_num(a)});
            avals.push_back(a);
        }
        write_csv(out_path(args, "quench_spectrum_M" + std::to_string(m) + ".csv", rep),
                  "quench(omega,A)", {"omega", "A"}, srows);
        spectra.push_back(std::move(avals));
        peak = std::max(peak, m);
    }
    auto conv = json::array();
    for (std::size_t k = 1; k < spectra.size(); ++k) {
        double dev = 0;
        for (std::size_t i = 0; i < omegas.size(); ++i)
            dev = std::max(dev, std::abs(spectra[k][i] - spectra[k - 1][i]));
        conv.push_back({{"M", bonds[k - 1]}, {"M_next", bonds[k]}, {"max_abs_dev", dev}});
    }
    rep.summary["spectrum_convergence"] = conv;
    finish(c, args, rep, t0, peak);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"fermips: symmetry-adapted MPS emulator for spin-1/2 fermions"};
    app.require_subcommand(1);
    CliArgs args;
    std::string task_override;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", args.config_path, "run configuration file")->required();
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--threads", args.threads, "block-contraction worker threads");
        sub->add_option("--seed", args.seed, "RNG seed (config wins if set there)");
    };
    auto *gs = app.add_subcommand("ground-state", "DMRG energy with extrapolation");
    auto *sp = app.add_subcommand("state-prep", "imaginary-time and adiabatic preparation");
    auto *ad = app.add_subcommand("adapt", "ADAPT-VQE emulation");
    auto *tr = app.add_subcommand("trotter", "Trotter error norm estimation");
    auto *qu = app.add_subcommand("quench", "current quench and optical spectrum");
    for (auto *sub : {gs, sp, ad, tr, qu}) add_common(sub);
    CLI11_PARSE(app, argc, argv);

    try {
        auto text = slurp(args.config_path);
        auto c = load_config(text);
        // config wins over flags except --out
        if (!config_sets(text, "seed")) c.seed = static_cast<unsigned long>(args.seed);
        if (!config_sets(text, "threads")) c.threads = args.threads;
        set_contraction_threads(c.threads);
        fs::create_directories(args.out_dir);

        TaskKind want = gs->parsed()   ? TaskKind::ground_state
                        : sp->parsed() ? TaskKind::state_prep
                        : ad->parsed() ? TaskKind::adapt
                        : tr->parsed() ? TaskKind::trotter
                                       : TaskKind::quench;
        if (c.task != want)
            throw InvalidSpec("config task '" + config_entries(c).at("task") +
                              "' does not match the subcommand");
        switch (want) {
        case TaskKind::ground_state: return cmd_ground_state(c, args);
        case TaskKind::state_prep: return cmd_state_prep(c, args);
        case TaskKind::adapt: return cmd_adapt(c, args);
        case TaskKind::trotter: return cmd_trotter(c, args);
        case TaskKind::quench: return cmd_quench(c, args);
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
