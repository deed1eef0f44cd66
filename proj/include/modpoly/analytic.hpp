#pragma once

// Closed-form weights for multi-term modular addition and for two-variable
// modular multiplication.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "modpoly/field.hpp"
#include "modpoly/net.hpp"

namespace modpoly {

/// How hidden neurons are mapped onto frequency classes.
enum class FrequencyMode {
    /// Frequencies k mod L, then a seeded permutation of neurons. Every class
    /// appears floor(N/L) or ceil(N/L) times.
    uniform_coverage,
    /// Frequencies drawn i.i.d. uniform from {0..L-1}.
    random,
};

struct NeuronAssignment {
    std::vector<std::uint32_t> freq;          ///< one per neuron
    std::vector<std::vector<double>> phases;  ///< phases[s][k] in (-pi, pi]
    std::uint64_t seed = 0;
};

/// Uniform on (-pi, pi].
inline double sample_phase(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return std::numbers::pi - 2.0 * std::numbers::pi * unit(rng);
}

/// Assigns frequencies in {0..modulus-1} to neurons [first, n) and draws
/// `slots` phase vectors for them. Neurons below `first` keep freq 0, phase 0.
inline NeuronAssignment assign_neurons(std::size_t n, std::size_t first, std::uint32_t modulus, std::size_t slots,
                                       std::uint64_t seed, FrequencyMode mode) {
    NeuronAssignment a;
    a.seed = seed;
    a.freq.assign(n, 0);
    std::mt19937_64 rng(seed);
    if (mode == FrequencyMode::uniform_coverage) {
        for (std::size_t k = first; k < n; ++k) a.freq[k] = static_cast<std::uint32_t>((k - first) % modulus);
        std::shuffle(a.freq.begin() + static_cast<std::ptrdiff_t>(first), a.freq.end(), rng);
    } else {
        std::uniform_int_distribution<std::uint32_t> dist(0, modulus - 1);
        for (std::size_t k = first; k < n; ++k) a.freq[k] = dist(rng);
    }
    a.phases.assign(slots, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < slots; ++s)
        for (std::size_t k = first; k < n; ++k) a.phases[s][k] = sample_phase(rng);
    return a;
}

inline double log_factorial(unsigned s) {
    if (s <= 12) {
        std::uint64_t f = 1;
        for (unsigned i = 2; i <= s; ++i) f *= i;
        return std::log(static_cast<double>(f));
    }
    return std::lgamma(static_cast<double>(s) + 1.0);
}

/// A = (2^S / (N * S!))^(1/(S+1))
inline double addition_amplitude(unsigned terms, std::size_t width) {
    const double log_a = (terms * std::numbers::ln2 - std::log(static_cast<double>(width)) - log_factorial(terms)) /
                         static_cast<double>(terms + 1);
    return std::exp(log_a);
}

/// A = (2 / (N - 1))^(1/3). The product of three weights then carries the
/// 2/(N-1) prefactor that turns the surviving cosine sum into a unit delta.
inline double multiplication_amplitude(std::size_t width) {
    return std::cbrt(2.0 / static_cast<double>(width - 1));
}

struct AdditionSolution {
    TwoLayerNet net;
    NeuronAssignment neurons;
    double amplitude;
};

/// U^(s)_{ki} = A cos(2 pi f_k c_s i / p + psi^(s)_k)
/// W_{qk}     = A cos(-2 pi f_k q / p - sum_s psi^(s)_k)
inline AdditionSolution build_addition_solution_detailed(const SumTask& task, std::size_t width, std::uint64_t seed,
                                                         FrequencyMode mode = FrequencyMode::uniform_coverage) {
    const Residue p = task.p();
    const auto terms = task.arity();
    if (width < p)
        throw ArgumentError("addition width " + std::to_string(width) + " is below the modulus " + std::to_string(p));
    auto neurons = assign_neurons(width, 0, p, terms, seed, mode);
    const double amp = addition_amplitude(static_cast<unsigned>(terms), width);
    const double base = 2.0 * std::numbers::pi / p;
    const auto n = static_cast<Eigen::Index>(width);

    std::vector<Matrix> blocks(terms, Matrix(n, p));
    Matrix out(p, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const std::uint64_t f = neurons.freq[k];
        double phase_sum = 0.0;
        for (std::size_t s = 0; s < terms; ++s) {
            const double psi = neurons.phases[s][k];
            phase_sum += psi;
            const std::uint64_t fc = f * task.coeffs()[s] % p;
            for (Residue i = 0; i < p; ++i)
                blocks[s](k, i) = amp * std::cos(base * static_cast<double>(fc * i % p) + psi);
        }
        for (Residue q = 0; q < p; ++q)
            out(q, k) = amp * std::cos(-base * static_cast<double>(f * q % p) - phase_sum);
    }
    return {TwoLayerNet(p, NetKind::addition, std::move(blocks), std::move(out)), std::move(neurons), amp};
}

inline TwoLayerNet build_addition_solution(const SumTask& task, std::size_t width, std::uint64_t seed,
                                           FrequencyMode mode = FrequencyMode::uniform_coverage) {
    return build_addition_solution_detailed(task, width, seed, mode).net;
}

struct MultiplicationSolution {
    TwoLayerNet net;
    NeuronAssignment neurons;
    double amplitude;
};

/// Weights for n1^a n2^b mod p. Neuron 0 together with input column 0 and
/// output row 0 handles the zero element; neurons k >= 1 are cosines of the
/// discrete logarithms over the cycle of length p-1.
inline MultiplicationSolution build_multiplication_solution_detailed(const FieldContext& ctx, std::uint32_t a,
                                                                     std::uint32_t b, std::size_t width,
                                                                     std::uint64_t seed,
                                                                     FrequencyMode mode = FrequencyMode::uniform_coverage) {
    const Residue p = ctx.p();
    if (a == 0 || b == 0) throw ArgumentError("multiplication exponents must be nonzero");
    if (width < p)
        throw ArgumentError("multiplication width " + std::to_string(width) + " is below the modulus " +
                            std::to_string(p));
    const std::uint64_t cycle = ctx.order();
    auto neurons = assign_neurons(width, 1, static_cast<std::uint32_t>(cycle), 2, seed, mode);
    const double amp = multiplication_amplitude(width);
    const double base = 2.0 * std::numbers::pi / static_cast<double>(cycle);
    const auto n = static_cast<Eigen::Index>(width);

    std::vector<Matrix> blocks(2, Matrix::Zero(n, p));
    Matrix out = Matrix::Zero(p, n);
    blocks[0](0, 0) = 1.0;
    blocks[1](0, 0) = 1.0;
    out(0, 0) = 1.0;

    const std::uint64_t ea = a % cycle;
    const std::uint64_t eb = b % cycle;
    for (Eigen::Index k = 1; k < n; ++k) {
        const std::uint64_t f = neurons.freq[k];
        const double psi1 = neurons.phases[0][k];
        const double psi2 = neurons.phases[1][k];
        for (Residue i = 1; i < p; ++i) {
            const std::uint64_t li = *ctx.log_table()[i];
            blocks[0](k, i) = amp * std::cos(base * static_cast<double>(f * (ea * li % cycle) % cycle) + psi1);
            blocks[1](k, i) = amp * std::cos(base * static_cast<double>(f * (eb * li % cycle) % cycle) + psi2);
            out(i, k) = amp * std::cos(-base * static_cast<double>(f * li % cycle) - psi1 - psi2);
        }
    }
    return {TwoLayerNet(p, NetKind::multiplication, std::move(blocks), std::move(out), 2), std::move(neurons), amp};
}

inline TwoLayerNet build_multiplication_solution(const FieldContext& ctx, std::uint32_t a, std::uint32_t b,
                                                 std::size_t width, std::uint64_t seed,
                                                 FrequencyMode mode = FrequencyMode::uniform_coverage) {
    return build_multiplication_solution_detailed(ctx, a, b, width, seed, mode).net;
}

} // namespace modpoly
