// Copyright 2026 The qest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qest: command-line front end for tomography, identification and control
// experiments.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qest/qest.hpp"

namespace {

using namespace qest;
namespace fs = std::filesystem;

struct Globals {
    std::uint64_t seed = 1;
    std::optional<int> trials;
    std::string out;
    std::string format = "csv";
    unsigned workers = 0;
};

void write_or_print(const std::string &out, const std::string &content) {
    if (out.empty() || out == "-")
        std::cout << content;
    else
        write_text_file(out, content);
}

std::string out_dir(const Globals &g, const std::string &fallback) { return g.out.empty() ? fallback : g.out; }

Json diagnostics_json(const TomographyDiagnostics &d) {
    return Json{{"residual_norm", d.residual_norm},
                {"condition_number", d.condition_number},
                {"projection_engaged", d.projection_engaged},
                {"min_eigenvalue", d.min_eigenvalue}};
}

// ---------------------------------------------------------------------------

struct TomoArgs {
    std::string records;
    int dim = 0;
    std::string weights = "shots";
    std::string povms;
};

int run_tomo(const Globals &g, const TomoArgs &a) {
    if (a.dim < 2)
        fail(ErrorKind::config, "tomo: --dim must be >= 2");
    const HermitianBasis basis = gell_mann_basis(a.dim);
    std::vector<Povm> povms;
    if (a.povms.empty()) {
        povms = measurement_catalog(a.dim);
    } else {
        const Json j = read_json_file(a.povms);
        if (!j.is_array())
            fail(ErrorKind::config, a.povms + ": expected a list of POVMs");
        for (std::size_t i = 0; i < j.size(); ++i)
            povms.push_back(povm_from_json(j[i], a.povms + "[" + std::to_string(i) + "]"));
        for (const auto &p : povms)
            if (p.dim != a.dim)
                fail(ErrorKind::config, a.povms + ": POVM '" + p.label + "' has the wrong dimension");
    }
    const auto records = records_from_csv(read_text_file(a.records), povms, basis, a.records);
    const auto result = tomography_pipeline(records, a.dim, basis, parse_weight_policy(a.weights));
    Json theta = Json::array();
    for (Eigen::Index i = 0; i < result.theta.values.size(); ++i)
        theta.push_back(result.theta.values(i));
    const Json out{{"dim", a.dim},
                   {"basis", basis.id},
                   {"weights", a.weights},
                   {"rho", density_to_json(result.rho, "estimate")},
                   {"theta", theta},
                   {"diagnostics", diagnostics_json(result.diagnostics)}};
    write_or_print(g.out, dump_json(out));
    return 0;
}

// ---------------------------------------------------------------------------

struct AdaptArgs {
    int dim = 2;
    std::int64_t total = 10000;
    std::int64_t stage1 = 2000;
    std::int64_t steps = 8;
    std::string candidates = "cube";
    std::string weights = "invvar";
};

int run_adapt(const Globals &g, const AdaptArgs &a) {
    const auto schedule = AdaptiveSchedule::from_totals(a.total, a.stage1, a.steps);
    const auto mode = parse_candidate_mode(a.candidates);
    const auto policy = parse_weight_policy(a.weights);
    const int trials = g.trials.value_or(100);
    require_positive(trials, "--trials");
    const auto results = parallel_map(static_cast<std::size_t>(trials), g.workers ? g.workers : default_workers(),
                                      [&](std::size_t t) {
                                          const DensityMatrix truth =
                                              random_truth(a.dim, StateEnsemble::pure, derive_seed(g.seed, {t, 0}));
                                          return run_adaptive_protocol(truth, schedule, mode,
                                                                       derive_seed(g.seed, {t, 1}), policy);
                                      });
    Table table;
    table.columns = {"trial", "step", "copies_used", "trace_Q", "mse", "povm"};
    for (std::size_t t = 0; t < results.size(); ++t)
        for (const auto &s : results[t].steps)
            table.add({static_cast<std::int64_t>(t), s.step, s.copies_used, s.trace_q, s.mse, s.povm});
    const auto fmt = parse_output_format(g.format);
    write_or_print(g.out, fmt == OutputFormat::csv ? table_to_csv(table) : dump_json(table_to_json(table)));
    return 0;
}

// ---------------------------------------------------------------------------

struct HamidArgs {
    int dim = 2;
    double time = 1.0;
    std::string true_h;
    std::string shots = "noiseless";
};

int run_hamid(const Globals &g, const HamidArgs &a) {
    if (a.dim < 2)
        fail(ErrorKind::config, "hamid: --dim must be >= 2");
    if (!(a.time > 0.0))
        fail(ErrorKind::config, "hamid: --time must be positive");
    const CMatrix h_true = hamiltonian_from_json(read_json_file(a.true_h), a.dim, a.true_h);
    LambdaMode mode = LambdaMode::noiseless;
    std::int64_t shots = 0;
    if (a.shots != "noiseless") {
        try {
            shots = std::stoll(a.shots);
        } catch (const std::logic_error &) {
            fail(ErrorKind::config, "hamid: --shots must be an integer or 'noiseless'");
        }
        require_positive(shots, "--shots");
        mode = LambdaMode::sampled;
    }
    const KrausSet channel = KrausSet::unitary(herm_expm(h_true, a.time));
    const NaturalBases bases = natural_state_basis(a.dim);
    const TransferMatrix lam = estimate_lambda(channel, bases, shots, g.seed, mode);
    const BMatrix bm = build_B_natural(a.dim);
    const HamiltonianEstimate est = identify_hamiltonian(lam, bm, a.time);
    const CMatrix traceless =
        h_true - (h_true.trace().real() / static_cast<double>(a.dim)) * CMatrix::Identity(a.dim, a.dim);
    Json h_hat = matrix_to_json(est.h);
    h_hat["label"] = "H_hat";
    const Json out{{"dim", a.dim},
                   {"time", a.time},
                   {"shots", a.shots},
                   {"seed", g.seed},
                   {"H_hat", h_hat},
                   {"diagnostics",
                    {{"rank1_dominance", est.rank1_dominance},
                     {"unitary_fit_residual", est.unitary_fit_residual},
                     {"phase_arc", est.phase_arc},
                     {"branch_ambiguous", est.branch_ambiguous}}},
                   {"recovery_error", (est.h - traceless).norm()}};
    write_or_print(g.out, dump_json(out));
    return 0;
}

// ---------------------------------------------------------------------------

int run_slc_cmd(const Globals &g, const std::string &config_path) {
    const Json j = read_json_file(config_path);
    const SlcConfig cfg = SlcConfig::from_json(j);
    const SampleSet train = cfg.training_samples();
    const SlcRun run = run_slc(cfg, train, cfg.initial_seed, cfg.test_seed);

    Table log;
    log.columns = {"iter", "JN"};
    for (std::size_t i = 0; i < run.training.log.size(); ++i)
        log.add({static_cast<std::int64_t>(i), run.training.log[i]});
    Table test;
    test.columns = {"omega", "theta", "fidelity"};
    for (std::size_t i = 0; i < run.test.fidelities.size(); ++i)
        test.add({run.test.samples[i].omega, run.test.samples[i].theta, run.test.fidelities[i]});

    const fs::path dir = out_dir(g, "slc-out");
    Json amps = Json::array();
    const RMatrix &u = run.training.field.amplitudes;
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
        Json row = Json::array();
        for (Eigen::Index m = 0; m < u.cols(); ++m)
            row.push_back(u(k, m));
        amps.push_back(std::move(row));
    }
    write_text_file(dir / "pulse.json",
                    dump_json(Json{{"T", cfg.horizon}, {"L", u.rows()}, {"M", u.cols()}, {"amplitudes", amps}}));
    const std::uint64_t seeds[] = {cfg.initial_seed, cfg.test_seed};
    const Json summary{{"training_JN", run.training.log.back()},
                       {"iterations", static_cast<std::int64_t>(run.training.log.size()) - 1},
                       {"converged", run.training.converged},
                       {"test_mean", run.test.mean},
                       {"test_min", run.test.min}};
    emit(dir, "slc", j, seeds, {{"training_log", log}, {"test", test}}, parse_output_format(g.format), summary);
    return 0;
}

// ---------------------------------------------------------------------------

struct SmcArgs {
    double p0 = 0.1;
    double eps = 0.1;
    double tau = 1.0;
    std::int64_t periods = 10000;
};

int run_smc(const Globals &g, const SmcArgs &a) {
    const SlidingConfig cfg{a.p0, a.tau};
    CMatrix h_delta(2, 2);
    h_delta << 0.0, a.eps, a.eps, 0.0;
    const auto res = periodic_measurement_demo(h_delta, cfg, a.periods, g.seed);
    Table t;
    t.columns = {"period", "ground_population", "in_domain", "outcome"};
    for (const auto &p : res.periods)
        t.add({p.period, p.ground_population, static_cast<std::int64_t>(p.in_domain),
               static_cast<std::int64_t>(p.outcome)});
    const double leak = std::pow(std::sin(a.eps * a.tau), 2);
    const double n = static_cast<double>(std::max<std::int64_t>(a.periods, 1));
    const double sigma = std::sqrt(leak * (1.0 - leak) / n);
    const Json config{{"p0", a.p0}, {"eps", a.eps}, {"tau", a.tau}, {"periods", a.periods}, {"seed", g.seed}};
    const Json summary{{"collapses_out", res.collapses_out},
                       {"collapse_frequency", res.collapse_frequency},
                       {"leak_per_period", leak},
                       {"sigma", sigma},
                       {"within_3sigma_of_leak", std::abs(res.collapse_frequency - leak) <= 3.0 * sigma},
                       {"below_p0_plus_3sigma", res.collapse_frequency <= a.p0 + 3.0 * sigma}};
    const std::uint64_t seeds[] = {g.seed};
    emit(out_dir(g, "smc-out"), "smc-demo", config, seeds, {{"periods", t}}, parse_output_format(g.format), summary);
    return 0;
}

// ---------------------------------------------------------------------------

int run_sweep_cmd(const Globals &g, const std::string &config_path, bool seed_given) {
    SweepConfig cfg = SweepConfig::from_json(read_json_file(config_path));
    if (seed_given)
        cfg.seed = g.seed;
    if (g.trials)
        cfg.trials = *g.trials;
    cfg.workers = g.workers;
    cfg.validate();
    const SweepResult res = run_mse_sweep(cfg);
    const std::uint64_t seeds[] = {cfg.seed};
    emit(out_dir(g, "sweep-out"), "sweep", cfg.to_json(), seeds, {{"mse", res.rows}, {"summary", res.summary}},
         parse_output_format(g.format), res.aggregate);
    return 0;
}

int run_compare_cmd(const Globals &g, const std::string &config_path, bool seed_given) {
    Json j = read_json_file(config_path);
    if (seed_given)
        j["seed"] = g.seed;
    if (g.trials)
        j["trials"] = *g.trials;
    CompareConfig cfg = CompareConfig::from_json(j);
    cfg.workers = g.workers;
    const SweepResult res = run_paired_comparison(cfg);
    const std::uint64_t seeds[] = {cfg.seed};
    emit(out_dir(g, "compare-out"), "compare", j, seeds, {{"pairs", res.rows}, {"summary", res.summary}},
         parse_output_format(g.format), res.aggregate);
    return 0;
}

int report(ErrorKind kind, const std::string &msg) {
    std::string line = msg;
    for (auto &c : line)
        if (c == '\n' || c == '\r')
            c = ' ';
    std::fprintf(stderr, "qest-error: %s: %s\n", std::string(to_string(kind)).c_str(), line.c_str());
    return exit_code(kind);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"qest: state tomography, Hamiltonian identification and robust control experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    auto *seed_opt = app.add_option("--seed", g.seed, "Base seed for all random streams");
    app.add_option("--trials", g.trials, "Number of Monte-Carlo trials");
    app.add_option("--out", g.out, "Output file (tomo, adapt, hamid) or directory (other commands)");
    app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--workers", g.workers, "Worker threads (0 = hardware concurrency)");

    TomoArgs tomo;
    auto *c_tomo = app.add_subcommand("tomo", "LRE state tomography from a records CSV");
    c_tomo->add_option("--records", tomo.records, "CSV with columns povm,element,shots,successes")->required();
    c_tomo->add_option("--dim", tomo.dim, "Hilbert-space dimension")->required();
    c_tomo->add_option("--weights", tomo.weights, "shots|invvar")->check(CLI::IsMember({"shots", "invvar"}));
    c_tomo->add_option("--povms", tomo.povms, "JSON list of POVMs (default: built-in measurement set)");

    AdaptArgs adapt;
    auto *c_adapt = app.add_subcommand("adapt", "Two-stage adaptive tomography trials");
    c_adapt->add_option("--dim", adapt.dim);
    c_adapt->add_option("--N", adapt.total, "Total copies");
    c_adapt->add_option("--N1", adapt.stage1, "Copies in the batch stage");
    c_adapt->add_option("--K", adapt.steps, "Adaptive rounds");
    c_adapt->add_option("--candidates", adapt.candidates)->check(CLI::IsMember({"cube", "continuum"}));
    c_adapt->add_option("--weights", adapt.weights)->check(CLI::IsMember({"shots", "invvar"}));

    HamidArgs hamid;
    auto *c_hamid = app.add_subcommand("hamid", "Hamiltonian identification from a simulated unitary channel");
    c_hamid->add_option("--dim", hamid.dim)->required();
    c_hamid->add_option("--time", hamid.time)->required();
    c_hamid->add_option("--true-h", hamid.true_h, "Matrix JSON of the true Hamiltonian")->required();
    c_hamid->add_option("--shots", hamid.shots, "Copies per probe output, or 'noiseless'");

    std::string slc_config;
    auto *c_slc = app.add_subcommand("slc", "Sampling-based learning control: train and test");
    c_slc->add_option("--config", slc_config)->required();

    SmcArgs smc;
    auto *c_smc = app.add_subcommand("smc-demo", "Periodic projective measurement demo");
    c_smc->add_option("--p0", smc.p0);
    c_smc->add_option("--eps", smc.eps);
    c_smc->add_option("--tau", smc.tau);
    c_smc->add_option("--periods", smc.periods);

    std::string sweep_config;
    auto *c_sweep = app.add_subcommand("sweep", "Monte-Carlo MSE sweep over copy numbers");
    c_sweep->add_option("--config", sweep_config)->required();

    std::string compare_config;
    auto *c_compare = app.add_subcommand("compare", "Paired-seed strategy comparison");
    c_compare->add_option("--config", compare_config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return report(ErrorKind::config, e.what());
    }

    try {
        if (*c_tomo)
            return run_tomo(g, tomo);
        if (*c_adapt)
            return run_adapt(g, adapt);
        if (*c_hamid)
            return run_hamid(g, hamid);
        if (*c_slc)
            return run_slc_cmd(g, slc_config);
        if (*c_smc)
            return run_smc(g, smc);
        if (*c_sweep)
            return run_sweep_cmd(g, sweep_config, seed_opt->count() > 0);
        if (*c_compare)
            return run_compare_cmd(g, compare_config, seed_opt->count() > 0);
    } catch (const Error &e) {
        return report(e.kind(), e.what());
    } catch (const nlohmann::json::exception &e) {
        return report(ErrorKind::config, e.what());
    } catch (const std::exception &e) {
        return report(ErrorKind::contract_violation, e.what());
    }
    return 0;
}
