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

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "qest/adaptive_tomography.hpp"
#include "qest/identification.hpp"
#include "qest/io.hpp"
#include "qest/robust_control.hpp"

namespace qest {

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// out[i] = fn(i) for i < n, evaluated on up to `workers` threads. Results are
/// index-ordered, so output never depends on scheduling. The first exception
/// by index is rethrown.
template <class Fn> auto parallel_map(std::size_t n, unsigned workers, Fn &&fn) {
    using T = decltype(fn(std::size_t{0}));
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < count; ++w)
            pool.emplace_back(worker);
        for (auto &t : pool)
            t.join();
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// Config access
// ---------------------------------------------------------------------------

/// Typed view of one JSON object. Keys are consumed as read; `finish()`
/// rejects anything left over.
class ConfigObject {
  public:
    ConfigObject(const Json &j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object())
            fail(ErrorKind::config, where_ + ": expected an object");
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    const Json &raw(const std::string &key) {
        if (!j_.contains(key))
            fail(ErrorKind::config, path(key) + ": missing required key");
        used_.insert(key);
        return j_.at(key);
    }

    template <class T> T require(const std::string &key) { return convert<T>(raw(key), key); }

    template <class T> T get(const std::string &key, T fallback) {
        if (!j_.contains(key))
            return fallback;
        return require<T>(key);
    }

    ConfigObject child(const std::string &key) { return ConfigObject(raw(key), path(key)); }

    std::string path(const std::string &key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto &[k, v] : j_.items())
            if (!used_.count(k))
                fail(ErrorKind::config, path(k) + ": unknown key");
    }

  private:
    template <class T> T convert(const Json &v, const std::string &key) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number())
                    throw std::invalid_argument("number expected");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer())
                    throw std::invalid_argument("integer expected");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string())
                    throw std::invalid_argument("string expected");
            }
            return v.get<T>();
        } catch (const std::exception &e) {
            fail(ErrorKind::config, path(key) + ": " + e.what());
        }
    }

    const Json &j_;
    std::string where_;
    std::set<std::string> used_;
};

template <class T> void require_positive(T value, const std::string &key) {
    if (!(value > T{0}))
        fail(ErrorKind::config, key + ": must be positive");
}

/// Matrix JSON, or the qubit shorthands "sigma_x", "sigma_y", "sigma_z", "zero".
inline CMatrix hamiltonian_from_json(const Json &j, int d, const std::string &where) {
    CMatrix h;
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "zero") {
            h = CMatrix::Zero(d, d);
        } else {
            if (d != 2)
                fail(ErrorKind::config, where + ": Pauli shorthand requires dim 2");
            h = CMatrix::Zero(2, 2);
            if (name == "sigma_x") {
                h(0, 1) = 1.0;
                h(1, 0) = 1.0;
            } else if (name == "sigma_y") {
                h(0, 1) = -kI;
                h(1, 0) = kI;
            } else if (name == "sigma_z") {
                h(0, 0) = 1.0;
                h(1, 1) = -1.0;
            } else {
                fail(ErrorKind::config, where + ": unknown operator name '" + name + "'");
            }
        }
    } else {
        h = matrix_from_json(j, where);
    }
    if (h.rows() != d || h.cols() != d)
        fail(ErrorKind::config, where + ": expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    if (!is_hermitian(h, 1e-10))
        fail(ErrorKind::config, where + ": operator is not Hermitian");
    return h;
}

enum class StateEnsemble { pure, mixed };

inline StateEnsemble parse_ensemble(const std::string &name) {
    if (name == "pure")
        return StateEnsemble::pure;
    if (name == "mixed")
        return StateEnsemble::mixed;
    fail(ErrorKind::config, "unknown state ensemble '" + name + "' (expected pure|mixed)");
}

inline DensityMatrix random_truth(int d, StateEnsemble ensemble, std::uint64_t seed) {
    Rng rng(seed);
    return ensemble == StateEnsemble::pure ? haar_pure_state(d, rng).density() : random_mixed_state(d, rng);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct SweepResult {
    Table rows;
    Table summary;
    Json aggregate = Json::object();
};

// ---------------------------------------------------------------------------
// MSE sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
    int dim = 2;
    std::vector<std::int64_t> copies{100, 1000, 10000};
    int trials = 10;
    std::uint64_t seed = 1;
    StateEnsemble ensemble = StateEnsemble::pure;
    WeightPolicy weights = WeightPolicy::shots;
    unsigned workers = 0;

    static SweepConfig from_json(const Json &j) {
        ConfigObject c(j, "sweep");
        SweepConfig cfg;
        cfg.dim = c.get<int>("dim", cfg.dim);
        if (c.has("N"))
            cfg.copies = c.require<std::vector<std::int64_t>>("N");
        cfg.trials = c.get<int>("trials", cfg.trials);
        cfg.seed = c.get<std::uint64_t>("seed", cfg.seed);
        cfg.ensemble = parse_ensemble(c.get<std::string>("ensemble", "pure"));
        cfg.weights = parse_weight_policy(c.get<std::string>("weights", "shots"));
        c.finish();
        cfg.validate();
        return cfg;
    }

    Json to_json() const {
        return Json{{"dim", dim},
                    {"N", copies},
                    {"trials", trials},
                    {"seed", seed},
                    {"ensemble", ensemble == StateEnsemble::pure ? "pure" : "mixed"},
                    {"weights", weights == WeightPolicy::shots ? "shots" : "invvar"}};
    }

    void validate() const {
        if (dim < 2)
            fail(ErrorKind::config, "sweep.dim: must be >= 2");
        if (copies.empty())
            fail(ErrorKind::config, "sweep.N: grid is empty");
        for (auto n : copies)
            require_positive(n, "sweep.N");
        require_positive(trials, "sweep.trials");
    }
};

/// Same truth per trial index across the N grid; measurement streams differ.
inline SweepResult run_mse_sweep(const SweepConfig &cfg) {
    cfg.validate();
    const HermitianBasis basis = gell_mann_basis(cfg.dim);
    const auto povms = measurement_catalog(cfg.dim);
    const std::size_t n_axis = cfg.copies.size();
    const auto trials = static_cast<std::size_t>(cfg.trials);

    const auto mses = parallel_map(n_axis * trials, cfg.workers ? cfg.workers : default_workers(), [&](std::size_t i) {
        const std::size_t a = i / trials;
        const std::size_t t = i % trials;
        const DensityMatrix truth = random_truth(cfg.dim, cfg.ensemble, derive_seed(cfg.seed, {t, 0}));
        const auto records = simulate_povm_set(truth, povms, cfg.copies[a], derive_seed(cfg.seed, {t, 1, a}), basis);
        return mse(tomography_pipeline(records, cfg.dim, basis, cfg.weights).rho, truth);
    });

    SweepResult res;
    res.rows.columns = {"N", "trial", "mse"};
    res.summary.columns = {"N", "mean_mse", "median_mse", "min_mse"};
    std::vector<double> xs, means;
    for (std::size_t a = 0; a < n_axis; ++a) {
        std::vector<double> col(mses.begin() + static_cast<std::ptrdiff_t>(a * trials),
                                mses.begin() + static_cast<std::ptrdiff_t>((a + 1) * trials));
        for (std::size_t t = 0; t < trials; ++t)
            res.rows.add({cfg.copies[a], static_cast<std::int64_t>(t), col[t]});
        double sum = 0.0;
        for (double m : col)
            sum += m;
        const double mean = sum / static_cast<double>(trials);
        std::sort(col.begin(), col.end());
        const double median =
            trials % 2 ? col[trials / 2] : 0.5 * (col[trials / 2 - 1] + col[trials / 2]);
        res.summary.add({cfg.copies[a], mean, median, col.front()});
        xs.push_back(static_cast<double>(cfg.copies[a]));
        means.push_back(mean);
    }
    if (n_axis >= 2)
        res.aggregate["loglog_slope"] = loglog_slope(xs, means);
    return res;
}

// ---------------------------------------------------------------------------
// SLC configuration
// ---------------------------------------------------------------------------

struct SlcConfig {
    UncertainSystem system;
    double horizon = 2.0;
    int intervals = 20;
    double initial_amplitude = 0.5;
    double initial_jitter = 0.0;
    std::uint64_t initial_seed = 0;
    Json samples = Json{{"scheme", "grid"}, {"n_omega", 3}, {"n_theta", 3}};
    TrainingConfig training;
    int test_count = 200;
    std::uint64_t test_seed = 1;
    int psi0 = 0;
    int target = 1;
    Json source;

    static SlcConfig from_json(const Json &j, const std::string &where = "slc") {
        ConfigObject c(j, where);
        SlcConfig cfg;
        cfg.source = j;
        const int d = c.require<int>("dim");
        if (d < 2)
            fail(ErrorKind::config, c.path("dim") + ": must be >= 2");
        const CMatrix h0 = hamiltonian_from_json(c.raw("H0"), d, c.path("H0"));
        const Json &hm = c.raw("Hm");
        if (!hm.is_array() || hm.empty())
            fail(ErrorKind::config, c.path("Hm") + ": expected a non-empty list");
        std::vector<CMatrix> controls;
        for (std::size_t i = 0; i < hm.size(); ++i)
            controls.push_back(hamiltonian_from_json(hm[i], d, c.path("Hm") + "[" + std::to_string(i) + "]"));
        const double ow = c.get<double>("omega_halfwidth", 0.0);
        const double tw = c.get<double>("theta_halfwidth", 0.0);
        if (!(ow >= 0.0 && ow < 1.0) || !(tw >= 0.0 && tw < 1.0))
            fail(ErrorKind::config, where + ": halfwidths must lie in [0, 1)");
        cfg.system = UncertainSystem(h0, controls, ow, tw);
        cfg.horizon = c.get<double>("T", cfg.horizon);
        require_positive(cfg.horizon, c.path("T"));
        cfg.intervals = c.get<int>("L", cfg.intervals);
        require_positive(cfg.intervals, c.path("L"));
        cfg.psi0 = c.get<int>("initial_state", 0);
        cfg.target = c.get<int>("target_state", 1);
        if (cfg.psi0 < 0 || cfg.psi0 >= d || cfg.target < 0 || cfg.target >= d)
            fail(ErrorKind::config, where + ": basis state index out of range");
        if (c.has("initial_field")) {
            ConfigObject f = c.child("initial_field");
            cfg.initial_amplitude = f.get<double>("amplitude", cfg.initial_amplitude);
            cfg.initial_jitter = f.get<double>("jitter", 0.0);
            cfg.initial_seed = f.get<std::uint64_t>("seed", 0);
            f.finish();
        }
        if (c.has("samples")) {
            cfg.samples = c.raw("samples");
            (void)cfg.training_samples(); // validate eagerly
        }
        cfg.training.iterations = c.get<int>("iterations", 500);
        cfg.training.step = c.get<double>("step", 1.0);
        cfg.training.tolerance = c.get<double>("tolerance", 1e-10);
        if (cfg.training.iterations < 0 || !(cfg.training.step > 0.0) || !(cfg.training.tolerance >= 0.0))
            fail(ErrorKind::config, where + ": need iterations >= 0, step > 0, tolerance >= 0");
        cfg.training.gradient = parse_gradient_mode(c.get<std::string>("gradient", "analytic"));
        if (c.has("test")) {
            ConfigObject t = c.child("test");
            cfg.test_count = t.get<int>("N", cfg.test_count);
            cfg.test_seed = t.get<std::uint64_t>("seed", cfg.test_seed);
            t.finish();
            require_positive(cfg.test_count, c.path("test.N"));
        }
        c.finish();
        return cfg;
    }

    SampleSet training_samples() const {
        ConfigObject s(samples, "slc.samples");
        const auto scheme = s.require<std::string>("scheme");
        SampleSet out;
        if (scheme == "grid") {
            const int no = s.require<int>("n_omega");
            const int nt = s.require<int>("n_theta");
            s.finish();
            if (no < 1 || nt < 1)
                fail(ErrorKind::config, "slc.samples: grid counts must be >= 1");
            out = SampleSet::grid(system, no, nt);
        } else if (scheme == "random") {
            const int n = s.require<int>("N");
            const auto seed = s.require<std::uint64_t>("seed");
            s.finish();
            if (n < 1)
                fail(ErrorKind::config, "slc.samples.N: must be >= 1");
            out = SampleSet::random(system, n, seed);
        } else if (scheme == "stencil") {
            s.finish();
            out = SampleSet::stencil(system);
        } else if (scheme == "nominal") {
            s.finish();
            out = SampleSet::nominal();
        } else {
            fail(ErrorKind::config, "slc.samples.scheme: expected grid|random|stencil|nominal");
        }
        return out;
    }

    ControlField initial_field(std::uint64_t seed) const {
        RMatrix amps = RMatrix::Constant(intervals, static_cast<Eigen::Index>(system.channels()), initial_amplitude);
        if (initial_jitter > 0.0) {
            Rng rng(seed);
            std::uniform_real_distribution<double> u(-initial_jitter, initial_jitter);
            for (Eigen::Index j = 0; j < amps.cols(); ++j)
                for (Eigen::Index i = 0; i < amps.rows(); ++i)
                    amps(i, j) += u(rng);
        }
        return ControlField(horizon, std::move(amps));
    }

    PureState psi0_state() const { return PureState::basis(system.dim, psi0); }
    PureState target_state() const { return PureState::basis(system.dim, target); }
};

struct SlcRun {
    TrainingResult training;
    TestStatistics test;
};

inline SlcRun run_slc(const SlcConfig &cfg, const SampleSet &train, std::uint64_t init_seed,
                      std::uint64_t test_seed) {
    const ControlField u0 = cfg.initial_field(init_seed);
    SlcRun run;
    run.training = slc_train(cfg.system, train, u0, cfg.psi0_state(), cfg.target_state(), cfg.training);
    run.test = slc_test(cfg.system, run.training.field, SampleSet::random(cfg.system, cfg.test_count, test_seed),
                        cfg.psi0_state(), cfg.target_state());
    return run;
}

// ---------------------------------------------------------------------------
// Paired comparison
// ---------------------------------------------------------------------------

enum class ComparisonKind { tomography, slc };

struct CompareConfig {
    ComparisonKind kind = ComparisonKind::tomography;
    std::string strategy_a;
    std::string strategy_b;
    int trials = 100;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    // tomography
    int dim = 2;
    std::int64_t copies = 10000;
    std::int64_t stage1 = 2000;
    std::int64_t steps = 8;
    WeightPolicy weights = WeightPolicy::inverse_variance;
    StateEnsemble ensemble = StateEnsemble::pure;
    // slc
    std::optional<SlcConfig> slc;
    Json source;

    static CompareConfig from_json(const Json &j) {
        ConfigObject c(j, "compare");
        CompareConfig cfg;
        cfg.source = j;
        const auto kind = c.require<std::string>("kind");
        if (kind == "tomography")
            cfg.kind = ComparisonKind::tomography;
        else if (kind == "slc")
            cfg.kind = ComparisonKind::slc;
        else
            fail(ErrorKind::config, "compare.kind: expected tomography|slc");
        cfg.strategy_a = c.require<std::string>("a");
        cfg.strategy_b = c.require<std::string>("b");
        cfg.trials = c.get<int>("trials", cfg.trials);
        cfg.seed = c.get<std::uint64_t>("seed", cfg.seed);
        require_positive(cfg.trials, "compare.trials");
        if (cfg.kind == ComparisonKind::tomography) {
            cfg.dim = c.get<int>("dim", cfg.dim);
            cfg.copies = c.get<std::int64_t>("N", cfg.copies);
            cfg.stage1 = c.get<std::int64_t>("N1", cfg.stage1);
            cfg.steps = c.get<std::int64_t>("K", cfg.steps);
            cfg.weights = parse_weight_policy(c.get<std::string>("weights", "invvar"));
            cfg.ensemble = parse_ensemble(c.get<std::string>("ensemble", "pure"));
            for (const auto &s : {cfg.strategy_a, cfg.strategy_b})
                if (s != "static" && s != "adaptive-cube" && s != "adaptive-continuum")
                    fail(ErrorKind::config, "compare: unknown tomography strategy '" + s +
                                                "' (expected static|adaptive-cube|adaptive-continuum)");
            (void)AdaptiveSchedule::from_totals(cfg.copies, cfg.stage1, cfg.steps);
        } else {
            cfg.slc = SlcConfig::from_json(c.raw("system"), "compare.system");
            for (const auto &s : {cfg.strategy_a, cfg.strategy_b})
                if (s != "robust" && s != "nominal")
                    fail(ErrorKind::config, "compare: unknown slc strategy '" + s + "' (expected robust|nominal)");
        }
        c.finish();
        return cfg;
    }

    /// Lower is better for tomography (MSE); higher for slc (worst-case fidelity).
    bool lower_is_better() const { return kind == ComparisonKind::tomography; }
    std::string metric() const { return kind == ComparisonKind::tomography ? "mse" : "worst_fidelity"; }
};

namespace detail {

inline double tomography_metric(const CompareConfig &cfg, const std::string &strategy, const DensityMatrix &truth,
                                std::uint64_t seed) {
    if (strategy == "static")
        return mse(run_static_protocol(truth, cfg.copies, seed, cfg.weights), truth);
    const auto schedule = AdaptiveSchedule::from_totals(cfg.copies, cfg.stage1, cfg.steps);
    const auto mode = strategy == "adaptive-cube" ? CandidateMode::cube : CandidateMode::continuum;
    return mse(run_adaptive_protocol(truth, schedule, mode, seed, cfg.weights).estimate, truth);
}

inline double slc_metric(const SlcConfig &cfg, const std::string &strategy, std::uint64_t init_seed,
                         std::uint64_t test_seed) {
    const SampleSet train = strategy == "nominal" ? SampleSet::nominal() : cfg.training_samples();
    return run_slc(cfg, train, init_seed, test_seed).test.min;
}

} // namespace detail

/// Both strategies see the same per-trial seeds (truth or initial field,
/// measurement or test stream).
inline SweepResult run_paired_comparison(const CompareConfig &cfg) {
    const auto trials = static_cast<std::size_t>(cfg.trials);
    const auto pairs =
        parallel_map(trials, cfg.workers ? cfg.workers : default_workers(), [&](std::size_t t) {
            std::pair<double, double> out;
            if (cfg.kind == ComparisonKind::tomography) {
                const DensityMatrix truth = random_truth(cfg.dim, cfg.ensemble, derive_seed(cfg.seed, {t, 0}));
                const auto s = derive_seed(cfg.seed, {t, 1});
                out.first = detail::tomography_metric(cfg, cfg.strategy_a, truth, s);
                out.second = detail::tomography_metric(cfg, cfg.strategy_b, truth, s);
            } else {
                const auto init = derive_seed(cfg.seed, {t, 0});
                const auto test = derive_seed(cfg.seed, {t, 1});
                out.first = detail::slc_metric(*cfg.slc, cfg.strategy_a, init, test);
                out.second = detail::slc_metric(*cfg.slc, cfg.strategy_b, init, test);
            }
            return out;
        });

    SweepResult res;
    const std::string m = cfg.metric();
    res.rows.columns = {"trial", m + "_a", m + "_b", "winner"};
    std::int64_t wins_a = 0, wins_b = 0, ties = 0;
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto [a, b] = pairs[t];
        std::string winner = "tie";
        if (std::abs(a - b) > 1e-12) {
            const bool a_better = cfg.lower_is_better() ? a < b : a > b;
            winner = a_better ? "a" : "b";
        }
        (winner == "a" ? wins_a : winner == "b" ? wins_b : ties)++;
        sum_a += a;
        sum_b += b;
        res.rows.add({static_cast<std::int64_t>(t), a, b, winner});
    }
    const double n = static_cast<double>(trials);
    res.summary.columns = {"strategy_a", "strategy_b", "trials", "wins_a", "wins_b", "ties", "win_rate_a",
                           "mean_" + m + "_a", "mean_" + m + "_b", "mean_ratio_a_over_b"};
    res.summary.add({cfg.strategy_a, cfg.strategy_b, static_cast<std::int64_t>(trials), wins_a, wins_b, ties,
                     static_cast<double>(wins_a) / n, sum_a / n, sum_b / n, sum_b != 0.0 ? sum_a / sum_b : 0.0});
    res.aggregate = Json{{"win_rate_a", static_cast<double>(wins_a) / n},
                         {"mean_a", sum_a / n},
                         {"mean_b", sum_b / n},
                         {"ties", ties}};
    return res;
}

} // namespace qest
