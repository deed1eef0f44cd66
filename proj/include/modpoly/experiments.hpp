#pragma once

// Experiment drivers shared by the CLI and the acceptance runner: width
// sweeps of the addition solution, the composite table, the learnability
// suite, and a small job pool.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "modpoly/analytic.hpp"
#include "modpoly/composite.hpp"
#include "modpoly/field.hpp"
#include "modpoly/net.hpp"
#include "modpoly/parse.hpp"
#include "modpoly/spectral.hpp"
#include "modpoly/trainer.hpp"

namespace modpoly {

using json = nlohmann::json;

// ---- job pool ------------------------------------------------------------

/// MODPOLY_THREADS if set to a positive integer, else the hardware count.
inline unsigned thread_limit() {
    if (const char* env = std::getenv("MODPOLY_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, count) on up to `threads` workers. Results come
/// back in index order; the first failing index (by position) is rethrown.
template <typename Fn>
auto parallel_map(std::size_t count, Fn job, unsigned threads = thread_limit()) {
    using R = std::invoke_result_t<Fn, std::size_t>;
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(job(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n = std::min<std::size_t>(std::max(1u, threads), count);
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---- JSON views ----------------------------------------------------------

inline json to_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

inline json to_json(const IprReport& r) {
    return {{"average", r.average},
            {"per_neuron", r.per_neuron},
            {"histogram", to_json(r.histogram)},
            {"excluded_degenerate", r.excluded_degenerate}};
}

inline json to_json(const TrainConfig& c) {
    json j = {{"lr", c.lr},
              {"wd", c.wd},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps},
              {"epochs", c.epochs},
              {"split_frac", c.split_frac},
              {"seed", c.seed},
              {"init_scale", c.init_scale},
              {"eval_every", c.eval_every},
              {"stop_patience", c.stop_patience},
              {"min_epochs", c.min_epochs},
              {"decay_mode", c.decay_mode == WeightDecayMode::decoupled ? "decoupled" : "coupled"},
              {"divergence_loss", c.divergence_loss}};
    j["stop_at_test_acc"] = c.stop_at_test_acc ? json(*c.stop_at_test_acc) : json(nullptr);
    j["activation_power"] = c.activation_power ? json(*c.activation_power) : json(nullptr);
    return j;
}

/// Reads a TrainConfig from `j` on top of `base`; unknown keys are errors.
inline TrainConfig train_config_from_json(const json& j, TrainConfig base = {}) {
    if (!j.is_object()) throw ConfigError("training section must be an object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "lr") base.lr = value.get<double>();
            else if (key == "wd") base.wd = value.get<double>();
            else if (key == "beta1") base.beta1 = value.get<double>();
            else if (key == "beta2") base.beta2 = value.get<double>();
            else if (key == "eps") base.eps = value.get<double>();
            else if (key == "epochs") base.epochs = value.get<long>();
            else if (key == "split_frac") base.split_frac = value.get<double>();
            else if (key == "seed") base.seed = value.get<std::uint64_t>();
            else if (key == "init_scale") base.init_scale = value.get<double>();
            else if (key == "eval_every") base.eval_every = value.get<long>();
            else if (key == "stop_patience") base.stop_patience = value.get<int>();
            else if (key == "min_epochs") base.min_epochs = value.get<long>();
            else if (key == "divergence_loss") base.divergence_loss = value.get<double>();
            else if (key == "stop_at_test_acc")
                base.stop_at_test_acc = value.is_null() ? std::nullopt : std::optional(value.get<double>());
            else if (key == "activation_power")
                base.activation_power = value.is_null() ? std::nullopt : std::optional(value.get<unsigned>());
            else if (key == "decay_mode") {
                const auto s = value.get<std::string>();
                if (s == "decoupled") base.decay_mode = WeightDecayMode::decoupled;
                else if (s == "coupled") base.decay_mode = WeightDecayMode::coupled;
                else throw ConfigError("decay_mode must be \"decoupled\" or \"coupled\"");
            } else throw ConfigError("unknown training key \"" + key + "\"");
        } catch (const json::exception& e) {
            throw ConfigError("training key \"" + key + "\": " + e.what());
        }
    }
    try {
        base.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    return base;
}

inline json to_json(const MetricSeries& s) {
    return {{"epochs", s.epochs},       {"train_loss", s.train_loss}, {"test_loss", s.test_loss},
            {"train_acc", s.train_acc}, {"test_acc", s.test_acc},     {"avg_ipr", s.avg_ipr}};
}

// ---- width sweep ---------------------------------------------------------

struct WidthSweepRow {
    std::size_t terms = 0;
    std::size_t width = 0;
    double best_accuracy = 0.0;
};

struct WidthSweepResult {
    Residue p = 0;
    std::vector<WidthSweepRow> rows;
    /// Smallest swept width reaching accuracy 1 for each term count.
    std::map<std::size_t, std::optional<std::size_t>> min_width;

    void write_csv(std::ostream& os) const {
        os << "terms,width,best_accuracy\n";
        os.precision(17);
        for (const auto& r : rows) os << r.terms << ',' << r.width << ',' << r.best_accuracy << '\n';
    }

    json summary() const {
        json mw = json::object();
        for (const auto& [s, w] : min_width) mw[std::to_string(s)] = w ? json(*w) : json(nullptr);
        json rs = json::array();
        for (const auto& r : rows) rs.push_back({{"terms", r.terms}, {"width", r.width}, {"best_accuracy", r.best_accuracy}});
        return {{"p", p}, {"rows", rs}, {"min_width", mw}};
    }
};

struct WidthSweepSpec {
    Residue p = 23;
    std::vector<std::size_t> terms = {2, 3};
    std::vector<std::size_t> widths = {64, 128, 256, 512, 1024, 2048, 4096, 8192};
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::uint64_t subset = 10'000;
    /// Seed of the evaluation subset (shared by all seeds and widths).
    std::uint64_t subset_seed = 0;
    FrequencyMode mode = FrequencyMode::uniform_coverage;
};

/// Best-over-seeds accuracy of the all-ones S-term addition solution.
inline double best_addition_accuracy(Residue p, std::size_t terms, std::size_t width,
                                     const std::vector<std::uint64_t>& seeds, std::uint64_t subset,
                                     std::uint64_t subset_seed, FrequencyMode mode) {
    const SumTask task(p, std::vector<Residue>(terms, 1));
    const auto oracle = make_oracle(task);
    double best = 0.0;
    for (auto seed : seeds) {
        const auto net = build_addition_solution(task, width, seed, mode);
        best = std::max(best, accuracy(net, oracle, subset, subset_seed));
        if (best == 1.0) break;
    }
    return best;
}

inline WidthSweepResult run_width_sweep(const WidthSweepSpec& spec) {
    require_prime_modulus(spec.p);
    if (spec.seeds.empty()) throw ArgumentError("width sweep needs at least one seed");
    if (!std::is_sorted(spec.widths.begin(), spec.widths.end())) throw ArgumentError("widths must be ascending");
    for (auto w : spec.widths)
        if (w < spec.p) throw ArgumentError("every swept width must be at least p");
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (auto s : spec.terms)
        for (auto w : spec.widths) jobs.emplace_back(s, w);
    const auto acc = parallel_map(jobs.size(), [&](std::size_t i) {
        return best_addition_accuracy(spec.p, jobs[i].first, jobs[i].second, spec.seeds, spec.subset,
                                      spec.subset_seed, spec.mode);
    });
    WidthSweepResult r;
    r.p = spec.p;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        r.rows.push_back({jobs[i].first, jobs[i].second, acc[i]});
        auto& slot = r.min_width[jobs[i].first];
        if (!slot && acc[i] == 1.0) slot = jobs[i].second;
    }
    return r;
}

// ---- composite table -----------------------------------------------------

struct CompositeRow {
    std::string polynomial;
    Residue p = 0;
    double mse = 0.0;
    double accuracy = 0.0;
    std::size_t n1 = 0, n2 = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
};

inline json to_json(const CompositeRow& r) {
    return {{"polynomial", r.polynomial}, {"p", r.p},   {"mse", r.mse},   {"accuracy", r.accuracy},
            {"n1", r.n1},                 {"n2", r.n2}, {"beta", r.beta}, {"seed", r.seed}};
}

/// The six composite-table polynomials (three forms, p = 97 and p = 23).
inline std::vector<std::string> table_polynomials() {
    const char* forms[] = {"2n1^4n2 + n1^2n2^2 + 3n1n2^3", "n1^5n2^3 + 4n1^2n2 + 5n1^2n2^3",
                           "7n1^4n2^4 + 2n1^3n2^2 + 4n1^2n2^5"};
    std::vector<std::string> out;
    for (int p : {97, 23})
        for (const char* f : forms) out.push_back(std::string(f) + " mod " + std::to_string(p));
    return out;
}

struct CompositeSpec {
    std::size_t n1 = 500;
    std::size_t n2 = 2000;
    double beta = 100.0;
    std::uint64_t seed = 0;
    bool exhaustive = true;
};

inline CompositeRow solve_composite(const ModPolynomial& poly, const CompositeSpec& spec) {
    const auto ctx = build_field_context(poly.p());
    const auto cnet = build_composite(poly, ctx, spec.n1, spec.n2, spec.beta, spec.seed);
    const auto ev = evaluate_composite(cnet, spec.exhaustive, spec.seed);
    return {format_polynomial(poly) + " mod " + std::to_string(poly.p()), poly.p(), ev.mse, ev.accuracy, spec.n1,
            spec.n2, spec.beta, spec.seed};
}

/// Parses each task (which must carry its own modulus or use `p`), builds
/// the composite and evaluates it. Composed forms are expanded first.
inline std::vector<CompositeRow> run_composite_table(const std::vector<std::string>& tasks, const CompositeSpec& spec,
                                                std::optional<Residue> p = std::nullopt) {
    std::vector<ModPolynomial> polys;
    for (const auto& t : tasks) polys.push_back(expand_polynomial(t, p));
    return parallel_map(polys.size(), [&](std::size_t i) { return solve_composite(polys[i], spec); });
}

// ---- learnability suite --------------------------------------------------

struct HypothesisRow {
    std::string task; ///< without the modulus
    bool learnable = false;
};

/// The six learnability rows: three composed forms and their perturbations.
inline std::vector<HypothesisRow> learnability_rows() {
    return {{"(4n1 + n2^2)^3", true},      {"(4n1 + n2^2)^3 + n1n2", false}, {"(2n1 + 3n2)^4", true},
            {"(2n1 + 3n2)^4 - n1^2", false}, {"(5n1^3 + 2n2^4)^2", true},     {"(5n1^3 + 2n2^4)^2 - n2", false}};
}

struct HypothesisSpec {
    Residue p = 23;
    std::size_t width = 5000;
    unsigned power = 2;
    TrainConfig train = [] {
        TrainConfig c;
        c.epochs = 3000;
        c.stop_at_test_acc = 1.0;
        return c;
    }();
    double learnable_threshold = 0.995;
    double non_learnable_threshold = 0.15;
};

struct HypothesisResult {
    std::string task;
    Residue p = 0;
    std::uint64_t seed = 0;
    bool expected_learnable = false;
    double train_loss = 0.0, test_loss = 0.0, train_acc = 0.0, test_acc = 0.0;
    long epochs = 0;
    /// "match", "mismatch", "ambiguous" or "diverged".
    std::string verdict;
};

inline json to_json(const HypothesisResult& r) {
    return {{"task", r.task},           {"p", r.p},
            {"seed", r.seed},           {"expected_learnable", r.expected_learnable},
            {"train_loss", r.train_loss}, {"test_loss", r.test_loss},
            {"train_acc", r.train_acc}, {"test_acc", r.test_acc},
            {"epochs", r.epochs},       {"verdict", r.verdict}};
}

inline void write_hypothesis_csv(std::ostream& os, const std::vector<HypothesisResult>& rows) {
    os << "task,p,seed,expected_learnable,train_loss,test_loss,train_acc,test_acc,epochs,verdict\n";
    os.precision(17);
    for (const auto& r : rows)
        os << '"' << r.task << "\"," << r.p << ',' << r.seed << ',' << (r.expected_learnable ? "true" : "false") << ','
           << r.train_loss << ',' << r.test_loss << ',' << r.train_acc << ',' << r.test_acc << ',' << r.epochs << ','
           << r.verdict << '\n';
}

/// Verdict from the final test accuracy: at or above the learnable threshold
/// counts as learnable, at or below the other threshold as not learnable,
/// anything between is ambiguous.
inline std::string hypothesis_verdict(bool expected, double test_acc, const HypothesisSpec& spec) {
    if (test_acc >= spec.learnable_threshold) return expected ? "match" : "mismatch";
    if (test_acc <= spec.non_learnable_threshold) return expected ? "mismatch" : "match";
    return "ambiguous";
}

inline HypothesisResult run_hypothesis_row(const HypothesisRow& row, const HypothesisSpec& spec) {
    const auto parsed = parse_polynomial(row.task + " mod " + std::to_string(spec.p));
    const auto oracle = make_oracle(parsed);
    const auto data = generate_dataset(oracle);
    auto [train_ds, test_ds] = split(data, spec.train.split_frac, spec.train.seed);
    auto net = init_network(spec.p, 2, spec.width, spec.train.seed, spec.train.init_scale, spec.power);
    HypothesisResult r;
    r.task = row.task + " mod " + std::to_string(spec.p);
    r.p = spec.p;
    r.seed = spec.train.seed;
    r.expected_learnable = row.learnable;
    try {
        const auto series = train(net, train_ds, test_ds, spec.train);
        const auto last = series.size() - 1;
        r.train_loss = series.train_loss[last];
        r.test_loss = series.test_loss[last];
        r.train_acc = series.train_acc[last];
        r.test_acc = series.test_acc[last];
        r.epochs = series.epochs[last];
        r.verdict = hypothesis_verdict(row.learnable, r.test_acc, spec);
    } catch (const DivergenceError& e) {
        r.epochs = e.epoch();
        r.train_loss = e.loss();
        r.verdict = "diverged";
    }
    return r;
}

/// Every row under every seed (row-major: all seeds of row 0 first).
inline std::vector<HypothesisResult> run_hypothesis_suite(const std::vector<HypothesisRow>& rows,
                                                          const HypothesisSpec& spec,
                                                          const std::vector<std::uint64_t>& seeds) {
    require_prime_modulus(spec.p);
    if (seeds.empty()) throw ArgumentError("hypothesis suite needs at least one seed");
    return parallel_map(rows.size() * seeds.size(), [&](std::size_t i) {
        HypothesisSpec local = spec;
        local.train.seed = seeds[i % seeds.size()];
        return run_hypothesis_row(rows[i / seeds.size()], local);
    });
}

inline std::vector<HypothesisResult> run_hypothesis_suite(const std::vector<HypothesisRow>& rows,
                                                          const HypothesisSpec& spec) {
    return run_hypothesis_suite(rows, spec, {spec.train.seed});
}

} // namespace modpoly
