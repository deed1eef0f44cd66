#pragma once

// The two-layer power-activation network shared by the analytical
// constructions and the trainer:
//
//   f(n_1, ..., n_S) = out * phi(block_1[:, n_1] + ... + block_S[:, n_S]),
//   phi(x) = x^power  (element-wise)
//
// One-hot inputs only select columns, so the S*p dimensional input vector is
// never materialized.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "modpoly/error.hpp"
#include "modpoly/field.hpp"

namespace modpoly {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class NetKind : std::uint32_t { addition = 0, multiplication = 1, trained = 2 };

inline std::string to_string(NetKind kind) {
    switch (kind) {
    case NetKind::addition: return "addition";
    case NetKind::multiplication: return "multiplication";
    case NetKind::trained: return "trained";
    }
    return "unknown";
}

inline double ipow(double x, unsigned n) {
    double r = 1.0;
    for (unsigned i = 0; i < n; ++i) r *= x;
    return r;
}

class TwoLayerNet {
public:
    /// blocks: S matrices of shape N x p; out: p x N. power defaults to S.
    TwoLayerNet(Residue p, NetKind kind, std::vector<Matrix> blocks, Matrix out, unsigned power = 0)
        : p_(p), kind_(kind), blocks_(std::move(blocks)), out_(std::move(out)),
          power_(power == 0 ? static_cast<unsigned>(blocks_.size()) : power) {
        validate();
    }

    Residue p() const noexcept { return p_; }
    NetKind kind() const noexcept { return kind_; }
    std::size_t arity() const noexcept { return blocks_.size(); }
    Eigen::Index width() const noexcept { return out_.cols(); }
    unsigned power() const noexcept { return power_; }

    const std::vector<Matrix>& blocks() const noexcept { return blocks_; }
    const Matrix& block(std::size_t s) const { return blocks_.at(s); }
    const Matrix& out() const noexcept { return out_; }

    // Mutable views for in-place optimisation. Callers must keep shapes.
    Matrix& block(std::size_t s) { return blocks_.at(s); }
    Matrix& out() noexcept { return out_; }

    void validate() const {
        if (p_ < 2) throw ArgumentError("network modulus must be at least 2");
        if (blocks_.empty()) throw ArgumentError("network needs at least one input block");
        const auto n = out_.cols();
        if (n < 1) throw ArgumentError("network width must be positive");
        if (out_.rows() != static_cast<Eigen::Index>(p_)) throw ArgumentError("output matrix must be p x N");
        for (const auto& b : blocks_)
            if (b.rows() != n || b.cols() != static_cast<Eigen::Index>(p_))
                throw ArgumentError("every embedding block must be N x p");
        if (power_ < 1) throw ArgumentError("activation power must be positive");
        if (!all_finite()) throw ArgumentError("network weights must be finite");
    }

    bool all_finite() const {
        for (const auto& b : blocks_)
            if (!b.allFinite()) return false;
        return out_.allFinite();
    }

private:
    Residue p_;
    NetKind kind_;
    std::vector<Matrix> blocks_;
    Matrix out_;
    unsigned power_;
};

inline void check_inputs(const TwoLayerNet& net, std::span<const Residue> ns) {
    if (ns.size() != net.arity())
        throw ArgumentError("network expects " + std::to_string(net.arity()) + " inputs, got " +
                            std::to_string(ns.size()));
    for (auto n : ns) require_residue(n, net.p());
}

/// Pre-activations of every hidden neuron for one input tuple.
inline Vector hidden_preactivation(const TwoLayerNet& net, std::span<const Residue> ns) {
    check_inputs(net, ns);
    Vector h = net.block(0).col(ns[0]);
    for (std::size_t s = 1; s < ns.size(); ++s) h += net.block(s).col(ns[s]);
    return h;
}

/// out * act, with every logit summed over neurons in ascending order of the
/// per-neuron contributions. The result depends only on the multiset of
/// neurons, so permuting hidden units gives bit-identical logits.
inline Vector combine_neurons(const Matrix& out, const Vector& act) {
    const auto n = out.cols();
    Vector logits(out.rows());
    std::vector<double> terms(static_cast<std::size_t>(n));
    for (Eigen::Index q = 0; q < logits.size(); ++q) {
        for (Eigen::Index k = 0; k < n; ++k) terms[k] = out(q, k) * act[k];
        std::sort(terms.begin(), terms.end());
        double acc = 0.0;
        for (double t : terms) acc += t;
        logits[q] = acc;
    }
    return logits;
}

/// Logits for one input tuple (permutation-exact, see combine_neurons).
inline Vector forward(const TwoLayerNet& net, std::span<const Residue> ns) {
    Vector act = hidden_preactivation(net, ns);
    for (Eigen::Index k = 0; k < act.size(); ++k) act[k] = ipow(act[k], net.power());
    return combine_neurons(net.out(), act);
}

/// Hidden pre-activations for a batch; inputs are row-major tuples
/// (inputs.size() == batch * S). Result is N x batch.
inline Matrix hidden_preactivation_batch(const TwoLayerNet& net, std::span<const Residue> inputs) {
    const auto s_count = net.arity();
    if (inputs.size() % s_count != 0) throw ArgumentError("batch size is not a multiple of the network arity");
    const auto batch = static_cast<Eigen::Index>(inputs.size() / s_count);
    Matrix h(net.width(), batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto tuple = inputs.subspan(static_cast<std::size_t>(b) * s_count, s_count);
        for (auto n : tuple) require_residue(n, net.p());
        h.col(b) = net.block(0).col(tuple[0]);
        for (std::size_t s = 1; s < s_count; ++s) h.col(b) += net.block(s).col(tuple[s]);
    }
    return h;
}

inline void apply_power(Matrix& m, unsigned power) {
    if (power == 1) return;
    if (power == 2) {
        m = m.array().square().matrix();
        return;
    }
    m = m.unaryExpr([power](double x) { return ipow(x, power); });
}

/// p x batch logits via dense kernels. Agrees with forward() up to rounding.
inline Matrix forward_batch(const TwoLayerNet& net, std::span<const Residue> inputs) {
    Matrix h = hidden_preactivation_batch(net, inputs);
    apply_power(h, net.power());
    return net.out() * h;
}

/// Index of the largest entry; ties go to the smallest index.
template <typename Vec>
inline Residue argmax(const Vec& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<Residue>(best);
}

/// Decodes a flat index into an S-tuple, first slot most significant.
inline void decode_tuple(std::uint64_t index, Residue p, std::span<Residue> out) {
    for (std::size_t s = out.size(); s-- > 0;) {
        out[s] = static_cast<Residue>(index % p);
        index /= p;
    }
}

inline std::uint64_t tuple_count(Residue p, std::size_t arity) {
    std::uint64_t total = 1;
    for (std::size_t s = 0; s < arity; ++s) {
        if (total > (std::uint64_t{1} << 62) / p) throw ArgumentError("input space too large");
        total *= p;
    }
    return total;
}

/// Sorted indices of a uniform random subset (without replacement) of
/// {0..total-1}, via Floyd's algorithm.
inline std::vector<std::uint64_t> sample_indices(std::uint64_t total, std::uint64_t count, std::uint64_t seed) {
    std::vector<std::uint64_t> out;
    if (count >= total) {
        out.resize(total);
        for (std::uint64_t i = 0; i < total; ++i) out[i] = i;
        return out;
    }
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(count * 2);
    for (std::uint64_t j = total - count; j < total; ++j) {
        std::uniform_int_distribution<std::uint64_t> dist(0, j);
        const auto t = dist(rng);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    out.assign(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

/// Fraction of inputs where argmax(logits) equals the oracle.
///
/// Exhaustive when sample_limit is absent or covers the whole input space,
/// otherwise a seeded uniform subset of sample_limit inputs.
inline double accuracy(const TwoLayerNet& net, const TaskOracle& oracle,
                       std::optional<std::uint64_t> sample_limit = std::nullopt, std::uint64_t seed = 0) {
    if (oracle.arity != net.arity()) throw ArgumentError("oracle arity does not match network");
    if (oracle.p != net.p()) throw ModulusError("oracle modulus does not match network");
    const auto s_count = net.arity();
    const auto total = tuple_count(net.p(), s_count);
    const bool exhaustive = !sample_limit || *sample_limit >= total;
    std::vector<std::uint64_t> subset;
    if (!exhaustive) subset = sample_indices(total, *sample_limit, seed);
    const std::uint64_t count = exhaustive ? total : subset.size();

    constexpr std::uint64_t chunk = 2048;
    std::vector<Residue> inputs;
    std::uint64_t correct = 0;
    for (std::uint64_t start = 0; start < count; start += chunk) {
        const auto len = std::min(chunk, count - start);
        inputs.resize(len * s_count);
        for (std::uint64_t i = 0; i < len; ++i) {
            const auto idx = exhaustive ? start + i : subset[start + i];
            decode_tuple(idx, net.p(), std::span(inputs).subspan(i * s_count, s_count));
        }
        const Matrix logits = forward_batch(net, inputs);
        for (std::uint64_t i = 0; i < len; ++i) {
            const auto tuple = std::span<const Residue>(inputs).subspan(i * s_count, s_count);
            if (argmax(logits.col(static_cast<Eigen::Index>(i))) == oracle(tuple)) ++correct;
        }
    }
    return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count);
}

/// Smallest gap, over every input tuple, between the oracle's logit and the
/// largest other logit. Negative when some input is misclassified.
inline double min_margin(const TwoLayerNet& net, const TaskOracle& oracle) {
    if (oracle.arity != net.arity()) throw ArgumentError("oracle arity does not match network");
    if (oracle.p != net.p()) throw ModulusError("oracle modulus does not match network");
    const auto s_count = net.arity();
    const auto total = tuple_count(net.p(), s_count);
    constexpr std::uint64_t chunk = 2048;
    std::vector<Residue> inputs;
    double worst = std::numeric_limits<double>::infinity();
    for (std::uint64_t start = 0; start < total; start += chunk) {
        const auto len = std::min(chunk, total - start);
        inputs.resize(len * s_count);
        for (std::uint64_t i = 0; i < len; ++i)
            decode_tuple(start + i, net.p(), std::span(inputs).subspan(i * s_count, s_count));
        const Matrix logits = forward_batch(net, inputs);
        for (std::uint64_t i = 0; i < len; ++i) {
            const auto target = oracle(std::span<const Residue>(inputs).subspan(i * s_count, s_count));
            const auto col = logits.col(static_cast<Eigen::Index>(i));
            double other = -std::numeric_limits<double>::infinity();
            for (Eigen::Index q = 0; q < col.size(); ++q)
                if (q != static_cast<Eigen::Index>(target)) other = std::max(other, col[q]);
            worst = std::min(worst, col[target] - other);
        }
    }
    return worst;
}

} // namespace modpoly
