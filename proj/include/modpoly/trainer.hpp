#pragma once

// Full-batch training of two-layer power-activation networks on modular
// tasks: datasets, splits, initialisation, analytic backprop, Adam with
// weight decay, and per-evaluation metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "modpoly/error.hpp"
#include "modpoly/field.hpp"
#include "modpoly/net.hpp"
#include "modpoly/spectral.hpp"

namespace modpoly {

struct Dataset {
    Residue p = 0;
    std::size_t arity = 0;
    std::vector<Residue> inputs; ///< row-major, arity entries per row
    std::vector<Residue> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const Residue> row(std::size_t i) const {
        return std::span<const Residue>(inputs).subspan(i * arity, arity);
    }
};

inline constexpr std::uint64_t max_dataset_rows = 1'000'000;

/// Every S-tuple in lexicographic order, labelled by the oracle.
inline Dataset generate_dataset(const TaskOracle& oracle) {
    std::uint64_t total = 1;
    for (std::size_t s = 0; s < oracle.arity; ++s) {
        total *= oracle.p;
        if (total > max_dataset_rows)
            throw ArgumentError("dataset of " + std::to_string(oracle.p) + "^" + std::to_string(oracle.arity) +
                                " rows exceeds the budget of " + std::to_string(max_dataset_rows) + " rows");
    }
    Dataset ds;
    ds.p = oracle.p;
    ds.arity = oracle.arity;
    ds.inputs.resize(total * oracle.arity);
    ds.labels.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) {
        auto tuple = std::span(ds.inputs).subspan(i * oracle.arity, oracle.arity);
        decode_tuple(i, oracle.p, tuple);
        ds.labels[i] = oracle(tuple);
    }
    return ds;
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.p = ds.p;
    out.arity = ds.arity;
    out.inputs.reserve(rows.size() * ds.arity);
    out.labels.reserve(rows.size());
    for (auto r : rows) {
        const auto t = ds.row(r);
        out.inputs.insert(out.inputs.end(), t.begin(), t.end());
        out.labels.push_back(ds.labels[r]);
    }
    return out;
}

/// Seeded shuffle; the first ceil(frac * |ds|) rows train, the rest test.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double frac, std::uint64_t seed) {
    if (!(frac > 0.0 && frac < 1.0)) throw ArgumentError("split fraction must lie in (0, 1)");
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(ds.size())));
    const auto cut = std::min(n_train, order.size());
    return {subset(ds, std::span(order).first(cut)), subset(ds, std::span(order).subspan(cut))};
}

/// Gaussian init: first layer std init_scale/sqrt(p), second init_scale/sqrt(N).
inline TwoLayerNet init_network(Residue p, std::size_t arity, std::size_t width, std::uint64_t seed,
                                double init_scale = 1.0, unsigned power = 0) {
    if (width < 1) throw ArgumentError("width must be positive");
    if (arity < 1) throw ArgumentError("arity must be positive");
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(width);
    std::normal_distribution<double> first(0.0, init_scale / std::sqrt(static_cast<double>(p)));
    std::normal_distribution<double> second(0.0, init_scale / std::sqrt(static_cast<double>(width)));
    std::vector<Matrix> blocks(arity, Matrix(n, p));
    for (auto& b : blocks)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, j) = first(rng);
    Matrix out(p, n);
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = second(rng);
    return TwoLayerNet(p, NetKind::trained, std::move(blocks), std::move(out), power);
}

/// Parameter-shaped storage for gradients and optimiser moments.
struct ParamSet {
    std::vector<Matrix> blocks;
    Matrix out;

    static ParamSet zeros_like(const TwoLayerNet& net) {
        ParamSet g;
        for (const auto& b : net.blocks()) g.blocks.push_back(Matrix::Zero(b.rows(), b.cols()));
        g.out = Matrix::Zero(net.out().rows(), net.out().cols());
        return g;
    }
};

struct BatchResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// MSE averaged over rows and the p output coordinates, against one-hot
/// targets. Optionally fills `grad` with its analytic gradient.
inline BatchResult loss_and_gradient(const TwoLayerNet& net, const Dataset& batch, ParamSet* grad = nullptr) {
    if (batch.arity != net.arity()) throw ArgumentError("dataset arity does not match network");
    if (batch.p != net.p()) throw ModulusError("dataset modulus does not match network");
    const auto rows = static_cast<Eigen::Index>(batch.size());
    if (rows == 0) return {};
    const Matrix pre = hidden_preactivation_batch(net, batch.inputs);
    Matrix act = pre;
    apply_power(act, net.power());
    Matrix residual = net.out() * act;

    std::uint64_t correct = 0;
    for (Eigen::Index b = 0; b < rows; ++b) {
        const auto label = static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(b)]);
        if (argmax(residual.col(b)) == label) ++correct;
        residual(label, b) -= 1.0;
    }
    const double scale = 1.0 / (static_cast<double>(rows) * net.p());
    BatchResult r;
    r.loss = residual.squaredNorm() * scale;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(rows);
    if (grad == nullptr) return r;

    const Matrix d_logits = residual * (2.0 * scale);
    grad->out.noalias() = d_logits * act.transpose();
    Matrix d_pre = net.out().transpose() * d_logits;
    const unsigned power = net.power();
    if (power == 1) {
        // identity activation
    } else if (power == 2) {
        d_pre.array() *= 2.0 * pre.array();
    } else {
        d_pre.array() *= pre.unaryExpr([power](double x) { return power * ipow(x, power - 1); }).array();
    }
    for (auto& g : grad->blocks) g.setZero();
    const auto arity = net.arity();
    for (Eigen::Index b = 0; b < rows; ++b) {
        const auto t = batch.row(static_cast<std::size_t>(b));
        for (std::size_t s = 0; s < arity; ++s) grad->blocks[s].col(t[s]) += d_pre.col(b);
    }
    return r;
}

inline BatchResult evaluate(const TwoLayerNet& net, const Dataset& ds) { return loss_and_gradient(net, ds); }

enum class WeightDecayMode {
    /// w <- w (1 - lr wd) before each Adam step.
    decoupled,
    /// wd * w added to the gradient before the moment updates.
    coupled,
};

struct TrainConfig {
    double lr = 0.005;
    double wd = 5.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long epochs = 100'000;
    double split_frac = 0.5;
    std::uint64_t seed = 0;
    double init_scale = 1.0;
    long eval_every = 10;
    std::optional<double> stop_at_test_acc;
    /// Consecutive evaluations above stop_at_test_acc before stopping.
    int stop_patience = 10;
    /// Early stopping is not considered before this epoch.
    long min_epochs = 0;
    WeightDecayMode decay_mode = WeightDecayMode::decoupled;
    /// Activation exponent; empty means "equal to the arity".
    std::optional<unsigned> activation_power;
    double divergence_loss = 1e6;

    void validate() const {
        if (!(lr > 0.0)) throw ArgumentError("learning rate must be positive");
        if (!(split_frac > 0.0 && split_frac < 1.0)) throw ArgumentError("split fraction must lie in (0, 1)");
        if (wd < 0.0) throw ArgumentError("weight decay must be non-negative");
        if (eval_every < 1) throw ArgumentError("eval_every must be positive");
        if (epochs < 0) throw ArgumentError("epochs must be non-negative");
        if (!(init_scale > 0.0)) throw ArgumentError("init_scale must be positive");
    }
};

struct MetricSeries {
    std::vector<long> epochs;
    std::vector<double> train_loss, test_loss, train_acc, test_acc, avg_ipr;

    std::size_t size() const noexcept { return epochs.size(); }

    /// First recorded epoch at which `series` reaches `threshold`.
    static std::optional<long> first_epoch_at(const std::vector<long>& epochs, const std::vector<double>& series,
                                              double threshold) {
        for (std::size_t i = 0; i < series.size(); ++i)
            if (series[i] >= threshold) return epochs[i];
        return std::nullopt;
    }

    void write_csv(std::ostream& os) const {
        os << "epoch,train_loss,test_loss,train_acc,test_acc,avg_ipr\n";
        os.precision(17);
        for (std::size_t i = 0; i < size(); ++i)
            os << epochs[i] << ',' << train_loss[i] << ',' << test_loss[i] << ',' << train_acc[i] << ','
               << test_acc[i] << ',' << avg_ipr[i] << '\n';
    }
};

/// Adam moments plus step count.
struct AdamState {
    ParamSet m, v;
    long step = 0;

    static AdamState for_net(const TwoLayerNet& net) { return {ParamSet::zeros_like(net), ParamSet::zeros_like(net), 0}; }
};

inline void adam_update(Matrix& w, Matrix& g, Matrix& m, Matrix& v, const TrainConfig& cfg, double bias1,
                        double bias2) {
    if (cfg.decay_mode == WeightDecayMode::coupled) g += cfg.wd * w;
    else w *= 1.0 - cfg.lr * cfg.wd;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const double step = cfg.lr / bias1;
    const double root_bias2 = std::sqrt(bias2);
    w.array() -= step * m.array() / (v.array().sqrt() / root_bias2 + cfg.eps);
}

inline void adam_step(TwoLayerNet& net, ParamSet& grad, AdamState& state, const TrainConfig& cfg) {
    ++state.step;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t s = 0; s < net.arity(); ++s)
        adam_update(net.block(s), grad.blocks[s], state.m.blocks[s], state.v.blocks[s], cfg, bias1, bias2);
    adam_update(net.out(), grad.out, state.m.out, state.v.out, cfg, bias1, bias2);
}

struct TrainOptions {
    /// Reshuffle through this field's exponential map before measuring IPR
    /// (multiplication-style tasks).
    const FieldContext* ipr_field = nullptr;
    IprOptions ipr;
    /// Called after each evaluation with the latest metrics.
    std::function<void(const MetricSeries&)> on_eval;
    /// Resume from an existing optimiser state (else fresh).
    AdamState* state = nullptr;
};

/// Full-batch training; see TrainConfig for the optimiser. Metrics are
/// recorded at epoch 0, every eval_every epochs and at the last epoch.
/// Throws DivergenceError when the training loss is non-finite or above
/// cfg.divergence_loss.
inline MetricSeries train(TwoLayerNet& net, const Dataset& train_ds, const Dataset& test_ds, const TrainConfig& cfg,
                          const TrainOptions& opts = {}) {
    cfg.validate();
    if (train_ds.arity != net.arity() || test_ds.arity != net.arity())
        throw ArgumentError("dataset arity does not match network");
    AdamState local = AdamState::for_net(net);
    AdamState& state = opts.state ? *opts.state : local;
    ParamSet grad = ParamSet::zeros_like(net);
    MetricSeries series;
    int streak = 0;

    for (long epoch = 0;; ++epoch) {
        const bool last = epoch == cfg.epochs;
        const bool record = last || epoch % cfg.eval_every == 0;
        const auto tr = loss_and_gradient(net, train_ds, last ? nullptr : &grad);
        if (!std::isfinite(tr.loss) || tr.loss > cfg.divergence_loss)
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (train loss " +
                                      std::to_string(tr.loss) + ")",
                                  epoch, tr.loss);
        bool stop = last;
        if (record) {
            const auto te = evaluate(net, test_ds);
            series.epochs.push_back(epoch);
            series.train_loss.push_back(tr.loss);
            series.train_acc.push_back(tr.accuracy);
            series.test_loss.push_back(te.loss);
            series.test_acc.push_back(te.accuracy);
            series.avg_ipr.push_back(network_ipr(net, opts.ipr_field, opts.ipr).average);
            if (opts.on_eval) opts.on_eval(series);
            if (cfg.stop_at_test_acc) {
                streak = te.accuracy >= *cfg.stop_at_test_acc ? streak + 1 : 0;
                if (streak >= cfg.stop_patience && epoch >= cfg.min_epochs) stop = true;
            }
        }
        if (stop) break;
        adam_step(net, grad, state, cfg);
    }
    return series;
}

/// Largest relative error between the analytic gradient and central finite
/// differences, over `coords` randomly chosen weights. Pairs where both
/// values are below `floor` in magnitude compare absolutely.
inline double gradient_check(const TwoLayerNet& net, const Dataset& batch, double epsilon, std::size_t coords = 100,
                             std::uint64_t seed = 0, double floor = 1e-10) {
    if (batch.size() == 0) throw ArgumentError("gradient check needs a nonempty batch");
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw ArgumentError("epsilon must lie in [1e-7, 1e-3]");
    ParamSet grad = ParamSet::zeros_like(net);
    loss_and_gradient(net, batch, &grad);

    TwoLayerNet probe = net;
    const auto arity = net.arity();
    const auto block_size = static_cast<std::uint64_t>(net.width()) * net.p();
    const auto total = block_size * (arity + 1);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    double worst = 0.0;
    for (std::size_t c = 0; c < coords; ++c) {
        const auto idx = pick(rng);
        const auto which = idx / block_size;
        const auto offset = static_cast<Eigen::Index>(idx % block_size);
        Matrix& w = which < arity ? probe.block(which) : probe.out();
        const double analytic = which < arity ? grad.blocks[which].data()[offset] : grad.out.data()[offset];
        const double saved = w.data()[offset];
        w.data()[offset] = saved + epsilon;
        const double up = evaluate(probe, batch).loss;
        w.data()[offset] = saved - epsilon;
        const double down = evaluate(probe, batch).loss;
        w.data()[offset] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        const double err = std::abs(analytic - numeric) / std::max(scale, floor);
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace modpoly
