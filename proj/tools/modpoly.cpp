// modpoly: experiment runner.
//
//   modpoly <command> --config <path> [--seed N] [--out DIR] [--long]
//
// Exit codes: 0 ok, 2 config error, 3 divergence, 1 anything else.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "modpoly/checkpoint.hpp"
#include "modpoly/experiments.hpp"
#include "modpoly/weights_io.hpp"

namespace fs = std::filesystem;
using namespace modpoly;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_config = 2;
constexpr int exit_diverged = 3;

std::string hex_digest(const EVP_MD* md, std::string_view data) {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out, &len, md, nullptr) != 1) throw std::runtime_error("digest failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{out[i]};
    return os.str();
}

// Same id git gives the file as a blob.
std::string git_blob_hash(const std::string& bytes) {
    std::string blob = "blob " + std::to_string(bytes.size());
    blob.push_back('\0');
    blob += bytes;
    return hex_digest(EVP_sha1(), blob);
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Typed access to the config object; every key must be consumed.
class ConfigReader {
public:
    explicit ConfigReader(const json& j) : j_(j) {
        if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <typename T>
    T get(const std::string& key, T fallback) {
        used_.insert(key);
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        used_.insert(key);
        if (!has(key)) throw ConfigError("missing required key \"" + key + "\"");
        return convert<T>(key);
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!used_.contains(key)) throw ConfigError("unknown config key \"" + key + "\"");
    }

private:
    template <typename T>
    T convert(const std::string& key) const {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key \"" + key + "\": " + e.what());
        }
    }

    const json& j_;
    std::set<std::string> used_;
};

struct Run {
    std::string command;
    json config;
    fs::path out;
    bool long_mode = false;
    std::vector<std::string> artifacts;

    fs::path file(const std::string& name) {
        artifacts.push_back(name);
        return out / name;
    }

    void write_text(const std::string& name, const std::string& text) {
        std::ofstream os(file(name));
        if (!os) throw FormatError("cannot write " + (out / name).string());
        os << text;
    }
};

struct Outcome {
    json result;
    int status = exit_ok;
};

std::vector<std::uint64_t> read_seeds(ConfigReader& cfg, std::vector<std::uint64_t> fallback = {0}) {
    auto seeds = cfg.get<std::vector<std::uint64_t>>("seeds", fallback);
    if (seeds.empty()) throw ConfigError("seeds must be nonempty");
    return seeds;
}

FrequencyMode read_frequency_mode(ConfigReader& cfg) {
    const auto s = cfg.get<std::string>("frequency_mode", "uniform_coverage");
    if (s == "uniform_coverage") return FrequencyMode::uniform_coverage;
    if (s == "random") return FrequencyMode::random;
    throw ConfigError("frequency_mode must be \"uniform_coverage\" or \"random\"");
}

IprOptions read_ipr_options(ConfigReader& cfg) {
    IprOptions o;
    const auto s = cfg.get<std::string>("ipr_mode", "folded");
    if (s == "folded") o.mode = SpectrumMode::folded;
    else if (s == "full") o.mode = SpectrumMode::full;
    else throw ConfigError("ipr_mode must be \"folded\" or \"full\"");
    o.dead_tolerance = cfg.get<double>("ipr_dead_tolerance", o.dead_tolerance);
    return o;
}

std::string csv_number(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// ---- commands --------------------------------------------------------------

Outcome solve_add(Run& run, ConfigReader& cfg) {
    const auto p = cfg.require<Residue>("p");
    const auto coeffs = cfg.require<std::vector<Residue>>("coeffs");
    const auto width = cfg.require<std::size_t>("width");
    const auto seeds = read_seeds(cfg);
    const auto mode = read_frequency_mode(cfg);
    const auto ipr_opts = read_ipr_options(cfg);
    const auto limit = cfg.has("sample_limit") ? std::optional(cfg.get<std::uint64_t>("sample_limit", 0)) : std::nullopt;
    cfg.get<std::uint64_t>("sample_limit", 0);
    const bool save = cfg.get<bool>("save_weights", false);
    cfg.finish();

    const SumTask task(p, coeffs);
    const auto oracle = make_oracle(task);
    struct Seeded {
        TwoLayerNet net;
        double acc;
        IprReport ipr;
    };
    auto runs = parallel_map(seeds.size(), [&](std::size_t i) {
        auto net = build_addition_solution(task, width, seeds[i], mode);
        const double acc = accuracy(net, oracle, limit, seeds[i]);
        auto ipr = network_ipr(net, nullptr, ipr_opts);
        return Seeded{std::move(net), acc, std::move(ipr)};
    });
    json rows = json::array();
    std::string csv = "seed,accuracy,avg_ipr\n";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        rows.push_back({{"seed", seeds[i]}, {"accuracy", runs[i].acc}, {"ipr", to_json(runs[i].ipr)}});
        csv += std::to_string(seeds[i]) + ',' + csv_number(runs[i].acc) + ',' + csv_number(runs[i].ipr.average) + '\n';
        if (save) save_weights(run.file("weights_seed" + std::to_string(seeds[i]) + ".bin").string(), runs[i].net);
    }
    run.write_text("metrics.csv", csv);
    return {{{"p", p}, {"coeffs", coeffs}, {"width", width}, {"runs", rows}}};
}

Outcome solve_mul(Run& run, ConfigReader& cfg) {
    const auto p = cfg.require<Residue>("p");
    const auto a = cfg.get<std::uint64_t>("a", 1);
    const auto b = cfg.get<std::uint64_t>("b", 1);
    const auto width = cfg.require<std::size_t>("width");
    const auto seeds = read_seeds(cfg);
    const auto mode = read_frequency_mode(cfg);
    const auto ipr_opts = read_ipr_options(cfg);
    const bool save = cfg.get<bool>("save_weights", false);
    cfg.finish();

    const auto ctx = build_field_context(p);
    const auto oracle = make_oracle(monomial_task(p, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)));
    struct Seeded {
        TwoLayerNet net;
        double acc, margin;
        IprReport ipr;
    };
    auto runs = parallel_map(seeds.size(), [&](std::size_t i) {
        auto net = build_multiplication_solution(ctx, a, b, width, seeds[i], mode);
        const double acc = accuracy(net, oracle);
        const double margin = min_margin(net, oracle);
        auto ipr = network_ipr(net, ctx, ipr_opts);
        return Seeded{std::move(net), acc, margin, std::move(ipr)};
    });
    json rows = json::array();
    std::string csv = "seed,accuracy,min_margin,avg_ipr\n";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        rows.push_back({{"seed", seeds[i]},
                        {"accuracy", runs[i].acc},
                        {"min_margin", runs[i].margin},
                        {"ipr", to_json(runs[i].ipr)}});
        csv += std::to_string(seeds[i]) + ',' + csv_number(runs[i].acc) + ',' + csv_number(runs[i].margin) + ',' +
               csv_number(runs[i].ipr.average) + '\n';
        if (save) save_weights(run.file("weights_seed" + std::to_string(seeds[i]) + ".bin").string(), runs[i].net);
    }
    run.write_text("metrics.csv", csv);
    return {{{"p", p}, {"a", a}, {"b", b}, {"width", width}, {"runs", rows}}};
}

Outcome solve_poly(Run& run, ConfigReader& cfg) {
    auto tasks = cfg.get<std::vector<std::string>>("polynomials", {});
    if (tasks.empty()) tasks = table_polynomials();
    const auto p = cfg.has("p") ? std::optional<Residue>(cfg.get<Residue>("p", 0)) : std::nullopt;
    cfg.get<Residue>("p", 0);
    CompositeSpec spec;
    spec.n1 = cfg.get<std::size_t>("n1", spec.n1);
    spec.n2 = cfg.get<std::size_t>("n2", spec.n2);
    spec.beta = cfg.get<double>("beta", spec.beta);
    spec.exhaustive = cfg.get<bool>("exhaustive", spec.exhaustive);
    const auto seeds = read_seeds(cfg);
    cfg.finish();
    if (!(spec.beta > 0.0)) throw ConfigError("beta must be positive");

    std::vector<ModPolynomial> polys;
    json unsupported = json::array();
    for (const auto& t : tasks) {
        auto poly = expand_polynomial(t, p);
        bool ok = true;
        for (const auto& m : poly.terms())
            if (m.a == 0 || m.b == 0) ok = false;
        if (poly.size() == 1 && poly.terms()[0].coeff != 1) ok = false;
        if (ok) polys.push_back(std::move(poly));
        else
            unsupported.push_back({{"polynomial", t},
                                   {"reason", "every monomial needs positive exponents in both variables, and a "
                                              "single monomial needs coefficient 1"}});
    }
    const auto rows = parallel_map(polys.size() * seeds.size(), [&](std::size_t i) {
        CompositeSpec local = spec;
        local.seed = seeds[i % seeds.size()];
        return solve_composite(polys[i / seeds.size()], local);
    });
    json out = json::array();
    std::string csv = "polynomial,p,mse,accuracy,n1,n2,beta,seed\n";
    for (const auto& r : rows) {
        out.push_back(to_json(r));
        csv += '"' + r.polynomial + "\"," + std::to_string(r.p) + ',' + csv_number(r.mse) + ',' +
               csv_number(r.accuracy) + ',' + std::to_string(r.n1) + ',' + std::to_string(r.n2) + ',' +
               csv_number(r.beta) + ',' + std::to_string(r.seed) + '\n';
    }
    run.write_text("metrics.csv", csv);
    return {{{"rows", out}, {"unsupported", unsupported}}};
}

Outcome width_sweep(Run& run, ConfigReader& cfg) {
    WidthSweepSpec spec;
    spec.p = cfg.get<Residue>("p", spec.p);
    spec.terms = cfg.get<std::vector<std::size_t>>("terms", spec.terms);
    spec.widths = cfg.get<std::vector<std::size_t>>("widths", spec.widths);
    spec.seeds = read_seeds(cfg, spec.seeds);
    spec.subset = cfg.get<std::uint64_t>("subset", spec.subset);
    spec.subset_seed = cfg.get<std::uint64_t>("subset_seed", spec.subset_seed);
    spec.mode = read_frequency_mode(cfg);
    cfg.finish();
    for (auto s : spec.terms)
        if (s < 2) throw ConfigError("terms must all be at least 2");
    if (!std::is_sorted(spec.widths.begin(), spec.widths.end())) throw ConfigError("widths must be ascending");

    const auto r = run_width_sweep(spec);
    std::ostringstream csv;
    r.write_csv(csv);
    run.write_text("metrics.csv", csv.str());
    return {r.summary()};
}

Outcome train_cmd(Run& run, ConfigReader& cfg) {
    std::optional<ParsedTask> parsed;
    std::optional<SumTask> sum;
    std::string label;
    if (cfg.has("task")) {
        const auto text = cfg.require<std::string>("task");
        const auto p = cfg.has("p") ? std::optional<std::uint64_t>(cfg.get<std::uint64_t>("p", 0)) : std::nullopt;
        parsed = parse_polynomial(text, p);
        label = text;
    } else if (cfg.has("coeffs")) {
        sum.emplace(cfg.require<Residue>("p"), cfg.require<std::vector<Residue>>("coeffs"));
        label = "sum";
    } else {
        throw ConfigError("train needs either \"task\" or \"p\" with \"coeffs\"");
    }
    cfg.get<std::uint64_t>("p", 0);
    const auto width = cfg.require<std::size_t>("width");
    const auto seeds = read_seeds(cfg);
    TrainConfig base;
    if (cfg.has("training")) base = train_config_from_json(cfg.raw("training"));
    cfg.get<json>("training", json::object());
    const auto ipr_opts = read_ipr_options(cfg);
    const auto reshuffle = cfg.get<std::string>("ipr_reshuffle", "auto");
    const bool save = cfg.get<bool>("save_weights", false);
    const bool checkpoint = cfg.get<bool>("checkpoint", false);
    cfg.finish();
    if (reshuffle != "auto" && reshuffle != "always" && reshuffle != "never")
        throw ConfigError("ipr_reshuffle must be \"auto\", \"always\" or \"never\"");

    const auto oracle = parsed ? make_oracle(*parsed) : make_oracle(*sum);
    const auto p = oracle.p;
    const auto ctx = build_field_context(p);
    bool multiplicative = false;
    if (parsed)
        if (const auto* poly = std::get_if<ModPolynomial>(&*parsed))
            multiplicative = poly->size() == 1 && poly->terms()[0].a > 0 && poly->terms()[0].b > 0;
    const bool use_field = reshuffle == "always" || (reshuffle == "auto" && multiplicative);
    const auto data = generate_dataset(oracle);

    struct Seeded {
        std::optional<TwoLayerNet> net;
        MetricSeries series;
        std::optional<AdamState> state;
        std::optional<IprReport> ipr;
        std::optional<DivergenceError> diverged;
        double max_abs_weight = 0.0;
        bool weights_finite = true;
    };
    auto runs = parallel_map(seeds.size(), [&](std::size_t i) {
        TrainConfig c = base;
        c.seed = seeds[i];
        auto [train_ds, test_ds] = split(data, c.split_frac, c.seed);
        auto net = init_network(p, oracle.arity, width, c.seed, c.init_scale, c.activation_power.value_or(0));
        AdamState state = AdamState::for_net(net);
        TrainOptions opts;
        opts.ipr_field = use_field ? &ctx : nullptr;
        opts.ipr = ipr_opts;
        opts.state = &state;
        Seeded s;
        opts.on_eval = [&s](const MetricSeries& m) { s.series = m; };
        try {
            s.series = train(net, train_ds, test_ds, c, opts);
            s.ipr = network_ipr(net, opts.ipr_field, ipr_opts);
            s.net = std::move(net);
            s.state = std::move(state);
        } catch (const DivergenceError& e) {
            s.diverged = e;
            s.weights_finite = net.all_finite();
            for (const auto& b : net.blocks()) s.max_abs_weight = std::max(s.max_abs_weight, b.cwiseAbs().maxCoeff());
            s.max_abs_weight = std::max(s.max_abs_weight, net.out().cwiseAbs().maxCoeff());
        }
        return s;
    });

    json rows = json::array();
    int status = exit_ok;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        auto& s = runs[i];
        const auto seed = std::to_string(seeds[i]);
        std::ostringstream csv;
        s.series.write_csv(csv);
        if (i == 0) run.write_text("metrics.csv", csv.str());
        if (seeds.size() > 1) run.write_text("metrics_seed" + seed + ".csv", csv.str());
        if (s.diverged) {
            // Snapshot at the point of failure: metrics up to the last
            // evaluation plus the size of the weights that blew up.
            status = exit_diverged;
            json last_eval = nullptr;
            if (s.series.size() > 0) {
                const auto k = s.series.size() - 1;
                last_eval = {{"epoch", s.series.epochs[k]},
                             {"train_loss", s.series.train_loss[k]},
                             {"test_loss", s.series.test_loss[k]},
                             {"train_acc", s.series.train_acc[k]},
                             {"test_acc", s.series.test_acc[k]},
                             {"avg_ipr", s.series.avg_ipr[k]}};
            }
            rows.push_back({{"seed", seeds[i]},
                            {"status", "diverged"},
                            {"epoch", s.diverged->epoch()},
                            {"loss", std::isfinite(s.diverged->loss()) ? json(s.diverged->loss()) : json(nullptr)},
                            {"last_eval", last_eval},
                            {"weights_finite", s.weights_finite},
                            {"max_abs_weight",
                             std::isfinite(s.max_abs_weight) ? json(s.max_abs_weight) : json(nullptr)}});
            continue;
        }
        const auto last = s.series.size() - 1;
        const auto first_train = MetricSeries::first_epoch_at(s.series.epochs, s.series.train_acc, 0.99);
        const auto first_test = MetricSeries::first_epoch_at(s.series.epochs, s.series.test_acc, 0.99);
        rows.push_back({{"seed", seeds[i]},
                        {"status", "ok"},
                        {"final",
                         {{"epoch", s.series.epochs[last]},
                          {"train_loss", s.series.train_loss[last]},
                          {"test_loss", s.series.test_loss[last]},
                          {"train_acc", s.series.train_acc[last]},
                          {"test_acc", s.series.test_acc[last]},
                          {"avg_ipr", s.series.avg_ipr[last]}}},
                        {"initial_avg_ipr", s.series.avg_ipr.front()},
                        {"first_epoch_train_acc_99", first_train ? json(*first_train) : json(nullptr)},
                        {"first_epoch_test_acc_99", first_test ? json(*first_test) : json(nullptr)},
                        {"ipr", to_json(*s.ipr)}});
        if (save) save_weights(run.file("weights_seed" + seed + ".bin").string(), *s.net);
        if (checkpoint) {
            TrainConfig c = base;
            c.seed = seeds[i];
            const auto stem = "checkpoint_seed" + seed;
            save_checkpoint(run.out, stem, *s.net, c, *s.state);
            for (const char* ext : {".json", ".bin", ".adam_m.bin", ".adam_v.bin"}) run.artifacts.push_back(stem + ext);
        }
    }
    return {{{"task", label},
             {"p", p},
             {"width", width},
             {"ipr_reshuffled", use_field},
             {"training", to_json(base)},
             {"runs", rows}},
            status};
}

Outcome hypothesis_suite(Run& run, ConfigReader& cfg) {
    HypothesisSpec spec;
    std::vector<HypothesisRow> rows = learnability_rows();
    if (cfg.has("rows")) {
        rows.clear();
        for (const auto& r : cfg.raw("rows")) {
            try {
                rows.push_back({r.at("task").get<std::string>(), r.at("learnable").get<bool>()});
            } catch (const json::exception& e) {
                throw ConfigError(std::string("rows entries need \"task\" and \"learnable\": ") + e.what());
            }
        }
    }
    const auto p = cfg.get<Residue>("p", 23);
    const auto long_p = cfg.get<Residue>("long_p", 97);
    spec.p = run.long_mode ? long_p : p;
    spec.width = cfg.get<std::size_t>("width", spec.width);
    spec.power = cfg.get<unsigned>("activation_power", spec.power);
    if (cfg.has("training")) spec.train = train_config_from_json(cfg.raw("training"), spec.train);
    cfg.get<json>("training", json::object());
    spec.learnable_threshold = cfg.get<double>("learnable_threshold", spec.learnable_threshold);
    spec.non_learnable_threshold = cfg.get<double>("non_learnable_threshold", spec.non_learnable_threshold);
    const auto seeds = read_seeds(cfg, {spec.train.seed});
    cfg.finish();
    for (const auto& r : rows) (void)parse_task_expr(r.task);

    const auto results = run_hypothesis_suite(rows, spec, seeds);
    std::ostringstream csv;
    write_hypothesis_csv(csv, results);
    run.write_text("metrics.csv", csv.str());
    json out = json::array();
    for (const auto& r : results) out.push_back(to_json(r));
    return {{{"p", spec.p},
             {"width", spec.width},
             {"activation_power", spec.power},
             {"training", to_json(spec.train)},
             {"learnable_threshold", spec.learnable_threshold},
             {"non_learnable_threshold", spec.non_learnable_threshold},
             {"rows", out}}};
}

int execute(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir, bool long_mode) {
    std::string bytes;
    json config;
    {
        std::ifstream is(config_path, std::ios::binary);
        if (!is) {
            std::cerr << "modpoly: cannot read config " << config_path << '\n';
            return exit_config;
        }
        std::ostringstream ss;
        ss << is.rdbuf();
        bytes = ss.str();
    }
    try {
        config = json::parse(bytes);
    } catch (const json::exception& e) {
        std::cerr << "modpoly: config is not valid JSON: " << e.what() << '\n';
        return exit_config;
    }
    if (!config.is_object()) {
        std::cerr << "modpoly: config must be a JSON object\n";
        return exit_config;
    }
    if (config.contains("experiment") && config["experiment"] != command) {
        std::cerr << "modpoly: config is for experiment " << config["experiment"] << ", not " << command << '\n';
        return exit_config;
    }
    config.erase("experiment");
    if (seed) config["seeds"] = json::array({*seed});
    if (config.contains("out")) {
        if (!out_dir && config["out"].is_string()) out_dir = config["out"].get<std::string>();
        config.erase("out");
    }

    json effective = {{"experiment", command}, {"long", long_mode}, {"config", config}};
    const auto config_hash = hex_digest(EVP_sha256(), effective.dump());
    Run run{command, config, out_dir ? fs::path(*out_dir) : fs::path("runs") / (command + "-" + config_hash.substr(0, 12)),
            long_mode, {}};
    const auto started = utc_now();

    Outcome outcome;
    try {
        fs::create_directories(run.out);
        ConfigReader reader(config);
        if (command == "solve-add") outcome = solve_add(run, reader);
        else if (command == "solve-mul") outcome = solve_mul(run, reader);
        else if (command == "solve-poly") outcome = solve_poly(run, reader);
        else if (command == "width-sweep") outcome = width_sweep(run, reader);
        else if (command == "train") outcome = train_cmd(run, reader);
        else outcome = hypothesis_suite(run, reader);
    } catch (const ConfigError& e) {
        std::cerr << "modpoly: config error: " << e.what() << '\n';
        return exit_config;
    } catch (const ParseError& e) {
        std::cerr << "modpoly: task parse error at position " << e.position() << ": " << e.what() << '\n';
        return exit_config;
    } catch (const ModulusError& e) {
        std::cerr << "modpoly: config error: " << e.what() << '\n';
        return exit_config;
    } catch (const ArgumentError& e) {
        std::cerr << "modpoly: config error: " << e.what() << '\n';
        return exit_config;
    } catch (const UnsupportedError& e) {
        std::cerr << "modpoly: unsupported: " << e.what() << '\n';
        return exit_config;
    } catch (const DivergenceError& e) {
        std::cerr << "modpoly: " << e.what() << '\n';
        return exit_diverged;
    } catch (const std::exception& e) {
        std::cerr << "modpoly: " << e.what() << '\n';
        return exit_failure;
    }

    run.write_text("config.json", effective.dump(2) + '\n');
    run.artifacts.push_back("report.json");
    const json report = {{"command", command},
                         {"config_hash", config_hash},
                         {"input_hash", git_blob_hash(bytes)},
                         {"started_at", started},
                         {"finished_at", utc_now()},
                         {"status", outcome.status == exit_ok ? "ok" : "diverged"},
                         {"result", outcome.result},
                         {"artifacts", run.artifacts}};
    std::ofstream os(run.out / "report.json");
    os << report.dump(2) << '\n';
    if (!os) {
        std::cerr << "modpoly: cannot write report to " << run.out << '\n';
        return exit_failure;
    }
    std::cout << (run.out / "report.json").string() << '\n';
    return outcome.status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analytical and trained networks for modular polynomial tasks"};
    std::string command, config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool long_mode = false;
    app.add_option("command", command, "experiment to run")
        ->required()
        ->check(CLI::IsMember({"solve-add", "solve-mul", "solve-poly", "width-sweep", "train", "hypothesis-suite"}));
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--seed", seed, "replace the config's seed list with this one seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--long", long_mode, "use the long-mode modulus where the experiment has one");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }
    return execute(command, config_path, seed, out_dir, long_mode);
}
