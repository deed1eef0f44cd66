#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "modpoly/analytic.hpp"
#include "modpoly/checkpoint.hpp"
#include "modpoly/experiments.hpp"
#include "modpoly/weights_io.hpp"

using namespace modpoly;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("modpoly_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::uint32_t read_u32(const std::string& bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(bytes[at + i]);
    return v;
}

} // namespace

TEST(Weights, RoundTripIsBitExact) {
    const auto ctx = build_field_context(23);
    const auto net = build_multiplication_solution(ctx, 2, 3, 40, 1);
    std::stringstream ss;
    write_weights(ss, net);
    const auto back = read_weights(ss, 2);
    EXPECT_EQ(back.kind(), NetKind::multiplication);
    EXPECT_EQ(back.p(), 23u);
    EXPECT_EQ(back.width(), 40);
    EXPECT_EQ(back.block(0), net.block(0));
    EXPECT_EQ(back.block(1), net.block(1));
    EXPECT_EQ(back.out(), net.out());
}

TEST(Weights, ByteLayout) {
    std::vector<Matrix> blocks{Matrix(2, 3), Matrix(2, 3)};
    blocks[0] << 1, 2, 3, 4, 5, 6;
    blocks[1] << -1, -2, -3, -4, -5, -6;
    Matrix out(3, 2);
    out << 0.5, 0.25, 0.125, 1e300, -0.0, 7;
    const TwoLayerNet net(3, NetKind::trained, blocks, out);
    std::stringstream ss;
    write_weights(ss, net);
    const auto bytes = ss.str();
    ASSERT_EQ(bytes.size(), 8u + 16u + 8u * (12 + 6));
    EXPECT_EQ(bytes.substr(0, 8), "MODPOLY1");
    EXPECT_EQ(read_u32(bytes, 8), 2u);
    EXPECT_EQ(read_u32(bytes, 12), 3u);
    EXPECT_EQ(read_u32(bytes, 16), 2u);
    EXPECT_EQ(read_u32(bytes, 20), 2u);
    // second entry of the first block is row 0, column 1: 2.0 = 0x4000000000000000
    EXPECT_EQ(static_cast<unsigned char>(bytes[24 + 8 + 7]), 0x40u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[24 + 8 + 6]), 0x00u);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = bits << 8 | static_cast<unsigned char>(bytes[24 + 8 * 12 + 8 * 4 + i]);
    EXPECT_EQ(bits, 0x8000000000000000ull);
}

TEST(Weights, CorruptInputsRejected) {
    const auto net = build_addition_solution(SumTask(7, {1, 1}), 8, 0);
    std::stringstream ss;
    write_weights(ss, net);
    const auto good = ss.str();

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    std::stringstream a(bad_magic);
    EXPECT_THROW(read_weights(a), FormatError);

    std::stringstream b(good.substr(0, good.size() - 3));
    EXPECT_THROW(read_weights(b), FormatError);

    std::stringstream c(good + "x");
    EXPECT_THROW(read_weights(c), FormatError);

    std::string bad_kind = good;
    bad_kind[8] = 3;
    std::stringstream d(bad_kind);
    EXPECT_THROW(read_weights(d), FormatError);

    EXPECT_THROW(load_weights("/nonexistent/weights.bin"), FormatError);
}

TEST(Checkpoint, RoundTrip) {
    const auto dir = scratch_dir("ckpt");
    const auto oracle = make_oracle(monomial_task(11, 1, 1));
    auto [tr, te] = split(generate_dataset(oracle), 0.5, 0);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.stop_at_test_acc = 0.99;
    auto net = init_network(11, 2, 20, 0, 1.0, 3);
    AdamState state = AdamState::for_net(net);
    TrainOptions opts;
    opts.state = &state;
    train(net, tr, te, cfg, opts);
    save_checkpoint(dir, "ck", net, cfg, state);

    const auto back = load_checkpoint(dir, "ck");
    EXPECT_EQ(back.net.out(), net.out());
    EXPECT_EQ(back.net.power(), 3u);
    EXPECT_EQ(back.state.step, 15);
    EXPECT_EQ(back.state.m.blocks[1], state.m.blocks[1]);
    EXPECT_EQ(back.state.v.out, state.v.out);
    EXPECT_EQ(back.config.epochs, 15);
    EXPECT_EQ(back.config.stop_at_test_acc, 0.99);
    EXPECT_EQ(to_json(back.config), to_json(cfg));
    fs::remove_all(dir);
}

TEST(ConfigJson, UnknownAndInvalidKeys) {
    EXPECT_THROW(train_config_from_json(json{{"lrr", 0.1}}), ConfigError);
    EXPECT_THROW(train_config_from_json(json{{"lr", "fast"}}), ConfigError);
    EXPECT_THROW(train_config_from_json(json{{"lr", -1.0}}), ConfigError);
    EXPECT_THROW(train_config_from_json(json{{"decay_mode", "l2"}}), ConfigError);
    const auto cfg = train_config_from_json(json{{"epochs", 12}, {"decay_mode", "coupled"}, {"activation_power", 2}});
    EXPECT_EQ(cfg.epochs, 12);
    EXPECT_EQ(cfg.decay_mode, WeightDecayMode::coupled);
    EXPECT_EQ(cfg.activation_power, 2u);
}

TEST(ConfigJson, TrainConfigRoundTrip) {
    TrainConfig cfg;
    cfg.lr = 0.003;
    cfg.min_epochs = 77;
    cfg.stop_at_test_acc = 1.0;
    EXPECT_EQ(to_json(train_config_from_json(to_json(cfg))), to_json(cfg));
}

TEST(ReportJson, IprShape) {
    const auto report = network_ipr(build_addition_solution(SumTask(11, {1, 1}), 20, 0));
    const auto j = to_json(report);
    EXPECT_TRUE(j.at("average").is_number());
    EXPECT_EQ(j.at("per_neuron").size(), 20u);
    EXPECT_EQ(j.at("histogram").at("edges").size(), 21u);
    EXPECT_EQ(j.at("histogram").at("counts").size(), 20u);
    EXPECT_EQ(j.at("excluded_degenerate"), 0);
}

TEST(JobPool, ResultsInInputOrder) {
    std::atomic<int> running{0}, peak{0};
    const auto out = parallel_map(
        40,
        [&](std::size_t i) {
            const int now = ++running;
            int p = peak.load();
            while (now > p && !peak.compare_exchange_weak(p, now)) {
            }
            std::this_thread::sleep_for(std::chrono::microseconds(200 * (40 - i)));
            --running;
            return i * i;
        },
        4);
    ASSERT_EQ(out.size(), 40u);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(out[i], i * i);
    EXPECT_LE(peak.load(), 4);
}

TEST(JobPool, FirstFailureByIndexIsRethrown) {
    try {
        parallel_map(
            10,
            [](std::size_t i) -> int {
                if (i == 7) throw std::runtime_error("seven");
                if (i == 3) throw std::runtime_error("three");
                return 0;
            },
            3);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "three");
    }
}

TEST(JobPool, ThreadLimitFromEnvironment) {
    ::setenv("MODPOLY_THREADS", "3", 1);
    EXPECT_EQ(thread_limit(), 3u);
    ::setenv("MODPOLY_THREADS", "zero", 1);
    EXPECT_GE(thread_limit(), 1u);
    ::setenv("MODPOLY_THREADS", "-2", 1);
    EXPECT_GE(thread_limit(), 1u);
    ::unsetenv("MODPOLY_THREADS");
}

TEST(Hypothesis, Verdicts) {
    HypothesisSpec spec;
    EXPECT_EQ(hypothesis_verdict(true, 1.0, spec), "match");
    EXPECT_EQ(hypothesis_verdict(true, 0.02, spec), "mismatch");
    EXPECT_EQ(hypothesis_verdict(false, 0.0189, spec), "match");
    EXPECT_EQ(hypothesis_verdict(false, 0.7232, spec), "ambiguous");
    EXPECT_EQ(hypothesis_verdict(false, 0.999, spec), "mismatch");
}

TEST(Hypothesis, DefaultRowsParse) {
    const auto rows = learnability_rows();
    ASSERT_EQ(rows.size(), 6u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].learnable, i % 2 == 0);
        const auto task = parse_polynomial(rows[i].task + " mod 23");
        EXPECT_EQ(std::holds_alternative<ComposedTask>(task), rows[i].learnable);
    }
}

TEST(Hypothesis, DivergedRowIsKept) {
    HypothesisSpec spec;
    spec.p = 7;
    spec.width = 20;
    spec.train.epochs = 5;
    spec.train.divergence_loss = 1e-9;
    const auto rows = run_hypothesis_suite({{"(n1 + n2)^2", true}, {"n1n2 + n1", false}}, spec);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].verdict, "diverged");
    EXPECT_EQ(rows[1].verdict, "diverged");
    EXPECT_EQ(rows[1].task, "n1n2 + n1 mod 7");
}

TEST(Hypothesis, CsvHeader) {
    std::ostringstream os;
    write_hypothesis_csv(os, {HypothesisResult{"n1n2 mod 7", 7, 0, false, 0.1, 0.2, 1.0, 0.0, 30, "match"}});
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
              "task,p,seed,expected_learnable,train_loss,test_loss,train_acc,test_acc,epochs,verdict");
}
