#pragma once

// Arbitrary two-variable polynomials by composition: one multiplication
// expert per monomial, a temperature-scaled softmax on every expert output,
// and one S-term addition expert carrying the coefficients.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "modpoly/analytic.hpp"
#include "modpoly/field.hpp"
#include "modpoly/net.hpp"

namespace modpoly {

/// softmax(beta * t), computed after subtracting the max. beta = +inf gives
/// the one-hot of the argmax (ties to the smallest index).
inline Vector softmax(const Vector& t, double beta) {
    Vector u(t.size());
    if (std::isinf(beta)) {
        u.setZero();
        u[argmax(t)] = 1.0;
        return u;
    }
    const double top = t.maxCoeff();
    double total = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        u[i] = std::exp(beta * (t[i] - top));
        total += u[i];
    }
    return u / total;
}

class CompositeNet {
public:
    CompositeNet(ModPolynomial poly, std::vector<TwoLayerNet> experts, std::optional<TwoLayerNet> adder, double beta)
        : poly_(std::move(poly)), experts_(std::move(experts)), adder_(std::move(adder)), beta_(beta) {
        if (!(beta_ >= 0.0)) throw ArgumentError("inverse temperature must be non-negative");
        if (experts_.size() != poly_.size()) throw ArgumentError("one expert per monomial is required");
        for (const auto& e : experts_)
            if (e.p() != poly_.p() || e.arity() != 2) throw ModulusError("experts must be two-input nets over p");
        if (experts_.size() > 1) {
            if (!adder_ || adder_->arity() != experts_.size() || adder_->p() != poly_.p())
                throw ArgumentError("adder arity and modulus must match the expert count");
        }
    }

    const ModPolynomial& polynomial() const noexcept { return poly_; }
    Residue p() const noexcept { return poly_.p(); }
    double beta() const noexcept { return beta_; }
    const std::vector<TwoLayerNet>& experts() const noexcept { return experts_; }
    /// Empty for single-term polynomials, which bypass the adder.
    const std::optional<TwoLayerNet>& adder() const noexcept { return adder_; }

private:
    ModPolynomial poly_;
    std::vector<TwoLayerNet> experts_;
    std::optional<TwoLayerNet> adder_;
    double beta_;
};

/// Seed for component `index` derived from the master seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Expert s gets seed derive_seed(seed, s); the adder gets derive_seed(seed, S).
inline CompositeNet build_composite(const ModPolynomial& poly, const FieldContext& ctx, std::size_t expert_width,
                                    std::size_t adder_width, double beta, std::uint64_t seed) {
    if (poly.p() != ctx.p()) throw ModulusError("field context modulus does not match polynomial");
    if (!(beta > 0.0)) throw ArgumentError("inverse temperature must be positive");
    std::vector<TwoLayerNet> experts;
    std::vector<Residue> coeffs;
    for (std::size_t s = 0; s < poly.size(); ++s) {
        const auto& t = poly.terms()[s];
        if (t.a == 0 || t.b == 0)
            throw UnsupportedError("monomial with a zero exponent cannot be solved by a multiplication expert");
        experts.push_back(build_multiplication_solution(ctx, t.a, t.b, expert_width, derive_seed(seed, s)));
        coeffs.push_back(t.coeff);
    }
    std::optional<TwoLayerNet> adder;
    if (poly.size() == 1) {
        if (coeffs[0] != 1) throw UnsupportedError("single-term polynomials must have unit coefficient");
    } else {
        adder = build_addition_solution(SumTask(poly.p(), coeffs), adder_width, derive_seed(seed, poly.size()));
    }
    return CompositeNet(poly, std::move(experts), std::move(adder), beta);
}

/// Expert outputs after the softmax glue, one p-vector per monomial.
inline std::vector<Vector> expert_outputs(const CompositeNet& cnet, Residue n1, Residue n2) {
    const Residue in[2] = {n1, n2};
    std::vector<Vector> u;
    u.reserve(cnet.experts().size());
    for (const auto& e : cnet.experts()) u.push_back(softmax(forward(e, in), cnet.beta()));
    return u;
}

/// W phi(sum_s U^(s) u^(s)) for soft one-hot inputs u^(s).
inline Vector adder_forward_soft(const TwoLayerNet& adder, std::span<const Vector> u) {
    if (u.size() != adder.arity()) throw ArgumentError("adder arity mismatch");
    Vector h = adder.block(0) * u[0];
    for (std::size_t s = 1; s < u.size(); ++s) h += adder.block(s) * u[s];
    for (Eigen::Index k = 0; k < h.size(); ++k) h[k] = ipow(h[k], adder.power());
    return combine_neurons(adder.out(), h);
}

inline Vector composite_forward(const CompositeNet& cnet, Residue n1, Residue n2) {
    require_residue(n1, cnet.p());
    require_residue(n2, cnet.p());
    if (!cnet.adder()) {
        const Residue in[2] = {n1, n2};
        return forward(cnet.experts()[0], in);
    }
    const auto u = expert_outputs(cnet, n1, n2);
    return adder_forward_soft(*cnet.adder(), u);
}

struct CompositeEvaluation {
    double mse = 0.0;
    double accuracy = 0.0;
};

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const auto half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

} // namespace detail

/// Logits for a batch of (n1, n2) pairs (row-major, 2 entries per pair)
/// using dense kernels; matches composite_forward up to rounding.
inline Matrix composite_forward_batch(const CompositeNet& cnet, std::span<const Residue> pairs) {
    if (!cnet.adder()) return forward_batch(cnet.experts()[0], pairs);
    const auto& adder = *cnet.adder();
    Matrix h;
    for (std::size_t s = 0; s < cnet.experts().size(); ++s) {
        Matrix t = forward_batch(cnet.experts()[s], pairs);
        for (Eigen::Index b = 0; b < t.cols(); ++b) t.col(b) = softmax(t.col(b), cnet.beta());
        if (s == 0) h = adder.block(0) * t;
        else h.noalias() += adder.block(s) * t;
    }
    apply_power(h, adder.power());
    return adder.out() * h;
}

/// MSE (over inputs and all p outputs, against one-hot targets) and argmax
/// accuracy against the polynomial. Covers all p^2 inputs when `exhaustive`,
/// else a seeded subset of min(p^2, 1000) inputs.
inline CompositeEvaluation evaluate_composite(const CompositeNet& cnet, bool exhaustive = true,
                                              std::uint64_t seed = 0) {
    const Residue p = cnet.p();
    const std::uint64_t total = std::uint64_t{p} * p;
    const auto indices = sample_indices(total, exhaustive ? total : std::min<std::uint64_t>(total, 1000), seed);
    std::vector<double> squared(indices.size());
    std::uint64_t correct = 0;
    constexpr std::size_t chunk = 1024;
    std::vector<Residue> pairs;
    for (std::size_t start = 0; start < indices.size(); start += chunk) {
        const auto len = std::min(chunk, indices.size() - start);
        pairs.resize(2 * len);
        for (std::size_t i = 0; i < len; ++i) {
            pairs[2 * i] = static_cast<Residue>(indices[start + i] / p);
            pairs[2 * i + 1] = static_cast<Residue>(indices[start + i] % p);
        }
        const Matrix z = composite_forward_batch(cnet, pairs);
        for (std::size_t i = 0; i < len; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            const Residue target = eval_polynomial(cnet.polynomial(), pairs[2 * i], pairs[2 * i + 1]);
            double err = 0.0;
            for (Eigen::Index q = 0; q < z.rows(); ++q) {
                const double d = z(q, col) - (q == static_cast<Eigen::Index>(target) ? 1.0 : 0.0);
                err += d * d;
            }
            squared[start + i] = err;
            if (argmax(z.col(col)) == target) ++correct;
        }
    }
    CompositeEvaluation ev;
    ev.mse = detail::pairwise_sum(squared) / (static_cast<double>(indices.size()) * p);
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
    return ev;
}

} // namespace modpoly
