#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "modpoly/trainer.hpp"

using namespace modpoly;

namespace {

Dataset small_batch(const TaskOracle& oracle, std::size_t rows, std::uint64_t seed) {
    const auto ds = generate_dataset(oracle);
    auto [a, b] = split(ds, static_cast<double>(rows) / static_cast<double>(ds.size()), seed);
    return a;
}

} // namespace

TEST(Dataset, EnumeratesEveryTuple) {
    const auto oracle = make_oracle(SumTask(5, {1, 2, 3}));
    const auto ds = generate_dataset(oracle);
    ASSERT_EQ(ds.size(), 125u);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto t = ds.row(i);
        EXPECT_EQ(ds.labels[i], (t[0] + 2 * t[1] + 3 * t[2]) % 5);
        EXPECT_EQ(t[0] * 25 + t[1] * 5 + t[2], i);
    }
}

TEST(Dataset, BudgetEnforced) {
    EXPECT_THROW(generate_dataset(make_oracle(SumTask(101, {1, 1, 1, 1}))), ArgumentError);
}

TEST(Split, SizesDisjointAndSeeded) {
    const auto ds = generate_dataset(make_oracle(monomial_task(97, 1, 1)));
    auto [train, test] = split(ds, 0.5, 0);
    EXPECT_EQ(train.size(), 4705u);
    EXPECT_EQ(test.size(), 4704u);
    std::set<std::pair<Residue, Residue>> seen;
    for (const auto* part : {&train, &test})
        for (std::size_t i = 0; i < part->size(); ++i) seen.insert({part->row(i)[0], part->row(i)[1]});
    EXPECT_EQ(seen.size(), 9409u);
    auto [again, rest] = split(ds, 0.5, 0);
    EXPECT_EQ(again.inputs, train.inputs);
    auto [other, rest2] = split(ds, 0.5, 1);
    EXPECT_NE(other.inputs, train.inputs);
    EXPECT_THROW(split(ds, 1.0, 0), ArgumentError);
}

TEST(Init, GaussianScales) {
    const auto net = init_network(97, 2, 2000, 3, 1.5);
    const auto stats = [](const Matrix& m) {
        const double mean = m.mean();
        return std::pair{mean, std::sqrt((m.array() - mean).square().mean())};
    };
    const auto [m1, s1] = stats(net.block(0));
    const auto [m2, s2] = stats(net.out());
    EXPECT_NEAR(m1, 0.0, 0.01);
    EXPECT_NEAR(s1, 1.5 / std::sqrt(97.0), 0.01 * 1.5 / std::sqrt(97.0) * 3);
    EXPECT_NEAR(m2, 0.0, 0.01);
    EXPECT_NEAR(s2, 1.5 / std::sqrt(2000.0), 0.01 * 1.5 / std::sqrt(2000.0) * 3);
    EXPECT_EQ(net.kind(), NetKind::trained);
    EXPECT_EQ(net.power(), 2u);
    EXPECT_EQ(init_network(7, 2, 10, 0, 1.0, 5).power(), 5u);
}

TEST(Loss, MatchesDirectComputation) {
    const auto oracle = make_oracle(monomial_task(7, 1, 1));
    const auto ds = generate_dataset(oracle);
    const auto net = init_network(7, 2, 16, 1);
    double total = 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Vector z = forward(net, ds.row(i));
        for (Eigen::Index q = 0; q < 7; ++q) {
            const double d = z[q] - (q == ds.labels[i] ? 1.0 : 0.0);
            total += d * d;
        }
        if (argmax(z) == ds.labels[i]) ++correct;
    }
    const auto r = evaluate(net, ds);
    EXPECT_NEAR(r.loss, total / (49.0 * 7.0), 1e-12);
    EXPECT_DOUBLE_EQ(r.accuracy, correct / 49.0);
}

TEST(Gradient, QuadraticActivationMatchesFiniteDifferences) {
    const auto oracle = make_oracle(monomial_task(11, 1, 1));
    for (std::uint64_t seed : {0, 1, 2}) {
        const auto net = init_network(11, 2, 24, seed);
        const auto batch = small_batch(oracle, 60, seed);
        EXPECT_LT(gradient_check(net, batch, 1e-5, 150, seed), 1e-5) << seed;
    }
}

TEST(Gradient, QuarticActivationMatchesFiniteDifferences) {
    const auto oracle = make_oracle(SumTask(5, {1, 1, 1, 1}));
    for (std::uint64_t seed : {0, 1, 2}) {
        const auto net = init_network(5, 4, 20, seed);
        ASSERT_EQ(net.power(), 4u);
        const auto batch = small_batch(oracle, 200, seed);
        EXPECT_LT(gradient_check(net, batch, 1e-4, 150, seed), 1e-4) << seed;
    }
}

TEST(Gradient, CubicAndLinearActivations) {
    const auto oracle = make_oracle(monomial_task(7, 2, 1));
    for (unsigned power : {1u, 3u}) {
        const auto net = init_network(7, 2, 12, 5, 1.0, power);
        EXPECT_LT(gradient_check(net, generate_dataset(oracle), 1e-5, 100, 5), 1e-5) << power;
    }
}

TEST(Gradient, ZeroWeightsGiveZeroFirstLayerGradient) {
    const auto oracle = make_oracle(monomial_task(7, 1, 1));
    auto net = init_network(7, 2, 10, 0);
    net.block(0).setZero();
    net.block(1).setZero();
    ParamSet grad = ParamSet::zeros_like(net);
    loss_and_gradient(net, generate_dataset(oracle), &grad);
    EXPECT_EQ(grad.blocks[0].cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(grad.blocks[1].cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(grad.out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, CheckRejectsBadEpsilon) {
    const auto oracle = make_oracle(monomial_task(7, 1, 1));
    const auto net = init_network(7, 2, 4, 0);
    const auto ds = generate_dataset(oracle);
    EXPECT_THROW(gradient_check(net, ds, 1e-9), ArgumentError);
    EXPECT_THROW(gradient_check(net, ds, 1e-2), ArgumentError);
}

TEST(Adam, DecoupledDecayWithZeroGradient) {
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.wd = 5.0;
    Matrix w = Matrix::Constant(2, 3, 2.0), g = Matrix::Zero(2, 3), m = Matrix::Zero(2, 3), v = Matrix::Zero(2, 3);
    adam_update(w, g, m, v, cfg, 1.0 - cfg.beta1, 1.0 - cfg.beta2);
    EXPECT_NEAR(w(0, 0), 2.0 * (1.0 - 0.05), 1e-15);
}

TEST(Adam, CoupledDecayEntersGradient) {
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.wd = 0.5;
    cfg.decay_mode = WeightDecayMode::coupled;
    Matrix w = Matrix::Constant(1, 1, 2.0), g = Matrix::Zero(1, 1), m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
    adam_update(w, g, m, v, cfg, 1.0 - cfg.beta1, 1.0 - cfg.beta2);
    // first bias-corrected Adam step moves by lr * sign(g) (up to eps)
    EXPECT_NEAR(w(0, 0), 2.0 - 0.01, 1e-8);
    EXPECT_NEAR(m(0, 0), 0.1 * 1.0, 1e-15);
}

TEST(Adam, FirstStepMatchesHandComputation) {
    TrainConfig cfg;
    cfg.lr = 0.1;
    cfg.wd = 0.0;
    Matrix w = Matrix::Constant(1, 1, 1.0), g = Matrix::Constant(1, 1, -4.0), m = Matrix::Zero(1, 1),
           v = Matrix::Zero(1, 1);
    adam_update(w, g, m, v, cfg, 1.0 - cfg.beta1, 1.0 - cfg.beta2);
    const double mhat = -4.0, vhat = 16.0;
    EXPECT_NEAR(w(0, 0), 1.0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
}

TEST(Train, DeterministicSeries) {
    const auto oracle = make_oracle(monomial_task(11, 1, 1));
    const auto ds = generate_dataset(oracle);
    auto [tr, te] = split(ds, 0.5, 0);
    TrainConfig cfg;
    cfg.epochs = 60;
    auto a = init_network(11, 2, 40, 0);
    auto b = init_network(11, 2, 40, 0);
    const auto s1 = train(a, tr, te, cfg);
    const auto s2 = train(b, tr, te, cfg);
    EXPECT_EQ(s1.train_loss, s2.train_loss);
    EXPECT_EQ(s1.test_acc, s2.test_acc);
    EXPECT_EQ(s1.avg_ipr, s2.avg_ipr);
    EXPECT_EQ(a.out(), b.out());
    EXPECT_EQ(s1.epochs.front(), 0);
    EXPECT_EQ(s1.epochs.back(), 60);
    EXPECT_EQ(s1.size(), 7u);
}

TEST(Train, LearnsSmallMultiplication) {
    const auto oracle = make_oracle(monomial_task(23, 1, 1));
    auto [tr, te] = split(generate_dataset(oracle), 0.5, 0);
    TrainConfig cfg;
    cfg.epochs = 600;
    auto net = init_network(23, 2, 200, 0);
    const auto s = train(net, tr, te, cfg);
    EXPECT_EQ(s.train_acc.back(), 1.0);
    EXPECT_LT(s.train_loss.back(), s.train_loss.front());
}

TEST(Train, EarlyStopRespectsPatienceAndMinimum) {
    const auto oracle = make_oracle(monomial_task(7, 1, 1));
    auto [tr, te] = split(generate_dataset(oracle), 0.5, 0);
    TrainConfig cfg;
    cfg.epochs = 1000;
    cfg.eval_every = 5;
    cfg.stop_at_test_acc = 0.0;
    cfg.stop_patience = 3;
    auto net = init_network(7, 2, 10, 0);
    EXPECT_EQ(train(net, tr, te, cfg).epochs.back(), 10);
    cfg.min_epochs = 42;
    auto net2 = init_network(7, 2, 10, 0);
    EXPECT_EQ(train(net2, tr, te, cfg).epochs.back(), 45);
}

TEST(Train, DivergenceIsReported) {
    const auto oracle = make_oracle(monomial_task(7, 1, 1));
    auto [tr, te] = split(generate_dataset(oracle), 0.5, 0);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.wd = 0.0;
    cfg.divergence_loss = 1e-6;
    auto net = init_network(7, 2, 10, 0);
    try {
        train(net, tr, te, cfg);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.epoch(), 0);
        EXPECT_GT(e.loss(), 1e-6);
    }
}

TEST(Train, ResumingFromStateMatchesUninterrupted) {
    const auto oracle = make_oracle(monomial_task(11, 1, 1));
    auto [tr, te] = split(generate_dataset(oracle), 0.5, 0);
    TrainConfig cfg;
    cfg.epochs = 40;
    auto whole = init_network(11, 2, 30, 0);
    train(whole, tr, te, cfg);

    auto part = init_network(11, 2, 30, 0);
    AdamState state = AdamState::for_net(part);
    TrainOptions opts;
    opts.state = &state;
    cfg.epochs = 20;
    train(part, tr, te, cfg, opts);
    train(part, tr, te, cfg, opts);
    EXPECT_EQ(state.step, 40);
    EXPECT_LT((part.out() - whole.out()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metrics, CsvHeaderAndFirstEpoch) {
    MetricSeries s;
    s.epochs = {0, 10, 20};
    s.train_loss = {1, 0.5, 0.1};
    s.test_loss = {1, 0.7, 0.2};
    s.train_acc = {0.1, 0.995, 1.0};
    s.test_acc = {0.0, 0.3, 0.99};
    s.avg_ipr = {0.2, 0.3, 0.9};
    std::ostringstream os;
    s.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "epoch,train_loss,test_loss,train_acc,test_acc,avg_ipr");
    int rows = 0;
    while (std::getline(is, line)) {
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
        ++rows;
    }
    EXPECT_EQ(rows, 3);
    EXPECT_EQ(MetricSeries::first_epoch_at(s.epochs, s.train_acc, 0.99), 10);
    EXPECT_EQ(MetricSeries::first_epoch_at(s.epochs, s.test_acc, 0.99), 20);
    EXPECT_FALSE(MetricSeries::first_epoch_at(s.epochs, s.test_acc, 1.0).has_value());
}

TEST(TrainConfig, Validation) {
    TrainConfig cfg;
    cfg.lr = 0.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.eval_every = 0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.split_frac = 0.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
}
