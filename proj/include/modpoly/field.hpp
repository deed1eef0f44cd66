#pragma once

// Exact arithmetic over the prime field GF(p) together with the brute-force
// oracles that every network in this library is checked against.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modpoly/error.hpp"

namespace modpoly {

using Residue = std::uint32_t;

inline bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (std::uint64_t d = 3; d * d <= n; d += 2)
        if (n % d == 0) return false;
    return true;
}

/// base^exp mod m by square-and-multiply. Intermediates stay below m^2,
/// so any m < 2^32 is safe.
inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
    if (m == 1) return 0;
    std::uint64_t result = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1u) result = result * base % m;
        base = base * base % m;
        exp >>= 1;
    }
    return result;
}

inline std::vector<std::uint64_t> distinct_prime_factors(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            out.push_back(d);
            while (n % d == 0) n /= d;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

inline void require_prime_modulus(std::uint64_t p) {
    if (p < 3 || p >= (std::uint64_t{1} << 31) || !is_prime(p))
        throw ModulusError("modulus must be a prime in [3, 2^31), got " + std::to_string(p));
}

inline void require_residue(std::uint64_t n, std::uint64_t p) {
    if (n >= p)
        throw ArgumentError("residue " + std::to_string(n) + " out of range for modulus " +
                            std::to_string(p));
}

/// Smallest g in {2..p-1} of multiplicative order exactly p-1.
inline Residue find_primitive_root(std::uint64_t p) {
    require_prime_modulus(p);
    const auto factors = distinct_prime_factors(p - 1);
    for (std::uint64_t g = 2; g < p; ++g) {
        bool generator = true;
        for (auto q : factors) {
            if (pow_mod(g, (p - 1) / q, p) == 1) {
                generator = false;
                break;
            }
        }
        if (generator) return static_cast<Residue>(g);
    }
    // every prime field has a primitive root
    throw ModulusError("no primitive root found for " + std::to_string(p));
}

/// Discrete exp/log tables for GF(p). Immutable once built.
///
/// exp_table()[r] = g^r for r in [0, p-2]; log_table()[m] = log_g m for m != 0,
/// and log_table()[0] is empty (log of zero is undefined).
class FieldContext {
public:
    explicit FieldContext(std::uint64_t p) : p_(static_cast<Residue>(p)), g_(find_primitive_root(p)) {
        exp_.resize(p_ - 1);
        log_.assign(p_, std::nullopt);
        std::uint64_t x = 1;
        for (Residue r = 0; r + 1 < p_; ++r) {
            exp_[r] = static_cast<Residue>(x);
            log_[x] = r;
            x = x * g_ % p_;
        }
    }

    Residue p() const noexcept { return p_; }
    Residue generator() const noexcept { return g_; }
    /// Cycle length of the multiplicative group.
    Residue order() const noexcept { return p_ - 1; }

    std::span<const Residue> exp_table() const noexcept { return exp_; }
    std::span<const std::optional<Residue>> log_table() const noexcept { return log_; }

    /// g^r, with r taken mod p-1.
    Residue exp(std::uint64_t r) const noexcept { return exp_[r % (p_ - 1)]; }

    std::optional<Residue> log(Residue m) const {
        require_residue(m, p_);
        return log_[m];
    }

private:
    Residue p_;
    Residue g_;
    std::vector<Residue> exp_;
    std::vector<std::optional<Residue>> log_;
};

inline FieldContext build_field_context(std::uint64_t p) { return FieldContext(p); }

struct Monomial {
    Residue coeff = 1;
    std::uint32_t a = 0; ///< exponent of n1
    std::uint32_t b = 0; ///< exponent of n2

    friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// sum_s c_s * n1^a_s * n2^b_s  (mod p)
class ModPolynomial {
public:
    ModPolynomial(std::uint64_t p, std::vector<Monomial> terms) : p_(static_cast<Residue>(p)), terms_(std::move(terms)) {
        require_prime_modulus(p);
        if (terms_.empty()) throw ArgumentError("polynomial needs at least one term");
        for (const auto& t : terms_)
            if (t.coeff % p_ == 0) throw ArgumentError("polynomial coefficients must be nonzero mod p");
        for (auto& t : terms_) t.coeff %= p_;
    }

    Residue p() const noexcept { return p_; }
    std::span<const Monomial> terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    friend bool operator==(const ModPolynomial&, const ModPolynomial&) = default;

private:
    Residue p_;
    std::vector<Monomial> terms_;
};

/// (c_1 n_1 + ... + c_S n_S) mod p with S >= 2.
class SumTask {
public:
    SumTask(std::uint64_t p, std::vector<Residue> coeffs) : p_(static_cast<Residue>(p)), coeffs_(std::move(coeffs)) {
        require_prime_modulus(p);
        if (coeffs_.size() < 2) throw ArgumentError("sum task needs at least two terms");
        for (auto& c : coeffs_) {
            if (c % p_ == 0) throw ArgumentError("sum task coefficients must be nonzero mod p");
            c %= p_;
        }
    }

    Residue p() const noexcept { return p_; }
    std::size_t arity() const noexcept { return coeffs_.size(); }
    std::span<const Residue> coeffs() const noexcept { return coeffs_; }

private:
    Residue p_;
    std::vector<Residue> coeffs_;
};

/// h((g1(n1) + g2(n2)) mod p), every function given as a full table.
class ComposedTask {
public:
    ComposedTask(std::uint64_t p, std::vector<Residue> g1, std::vector<Residue> g2, std::vector<Residue> h)
        : p_(static_cast<Residue>(p)), g1_(std::move(g1)), g2_(std::move(g2)), h_(std::move(h)) {
        require_prime_modulus(p);
        for (const auto* table : {&g1_, &g2_, &h_}) {
            if (table->size() != p_) throw ArgumentError("composed task tables must have exactly p entries");
            for (auto v : *table) require_residue(v, p_);
        }
    }

    Residue p() const noexcept { return p_; }
    std::span<const Residue> g1() const noexcept { return g1_; }
    std::span<const Residue> g2() const noexcept { return g2_; }
    std::span<const Residue> h() const noexcept { return h_; }

private:
    Residue p_;
    std::vector<Residue> g1_, g2_, h_;
};

inline Residue eval_polynomial(const ModPolynomial& poly, Residue n1, Residue n2) {
    const std::uint64_t p = poly.p();
    require_residue(n1, p);
    require_residue(n2, p);
    std::uint64_t acc = 0;
    for (const auto& t : poly.terms()) {
        const std::uint64_t term = pow_mod(n1, t.a, p) * pow_mod(n2, t.b, p) % p;
        acc = (acc + t.coeff * term) % p;
    }
    return static_cast<Residue>(acc);
}

inline Residue eval_sum_task(const SumTask& task, std::span<const Residue> ns) {
    if (ns.size() != task.arity())
        throw ArgumentError("sum task expects " + std::to_string(task.arity()) + " inputs, got " +
                            std::to_string(ns.size()));
    const std::uint64_t p = task.p();
    std::uint64_t acc = 0;
    for (std::size_t s = 0; s < ns.size(); ++s) {
        require_residue(ns[s], p);
        acc = (acc + std::uint64_t{task.coeffs()[s]} * ns[s]) % p;
    }
    return static_cast<Residue>(acc);
}

inline Residue eval_composed(const ComposedTask& task, Residue n1, Residue n2) {
    require_residue(n1, task.p());
    require_residue(n2, task.p());
    return task.h()[(std::uint64_t{task.g1()[n1]} + task.g2()[n2]) % task.p()];
}

/// Arity-tagged ground-truth function over tuples of residues.
struct TaskOracle {
    Residue p = 0;
    std::size_t arity = 0;
    std::function<Residue(std::span<const Residue>)> fn;

    Residue operator()(std::span<const Residue> ns) const {
        if (ns.size() != arity)
            throw ArgumentError("oracle expects " + std::to_string(arity) + " inputs, got " + std::to_string(ns.size()));
        return fn(ns);
    }
};

inline TaskOracle make_oracle(SumTask task) {
    const auto p = task.p();
    const auto arity = task.arity();
    return {p, arity, [t = std::move(task)](std::span<const Residue> ns) { return eval_sum_task(t, ns); }};
}

inline TaskOracle make_oracle(ModPolynomial poly) {
    const auto p = poly.p();
    return {p, 2, [q = std::move(poly)](std::span<const Residue> ns) { return eval_polynomial(q, ns[0], ns[1]); }};
}

inline TaskOracle make_oracle(ComposedTask task) {
    const auto p = task.p();
    return {p, 2, [t = std::move(task)](std::span<const Residue> ns) { return eval_composed(t, ns[0], ns[1]); }};
}

/// n1^a * n2^b mod p as a one-term polynomial.
inline ModPolynomial monomial_task(std::uint64_t p, std::uint32_t a, std::uint32_t b) {
    return ModPolynomial(p, {Monomial{1, a, b}});
}

} // namespace modpoly
