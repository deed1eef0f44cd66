#pragma once

// Fourier concentration of network weights: inverse participation ratio of
// rows and columns, per neuron and averaged over a network.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "modpoly/error.hpp"
#include "modpoly/field.hpp"
#include "modpoly/net.hpp"

namespace modpoly {

enum class SpectrumMode {
    /// Conjugate pairs merged: bin f holds sqrt(|F_f|^2 + |F_{L-f}|^2).
    folded,
    /// Plain |F_f| for f in [0, L).
    full,
};

namespace detail {

// cos/sin of 2 pi j / L for j in [0, L), cached per length.
struct TwiddleTable {
    std::vector<double> cos, sin;
};

inline const TwiddleTable& twiddles(std::size_t length) {
    static std::mutex mutex;
    static std::map<std::size_t, TwiddleTable> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(length);
    if (it == cache.end()) {
        TwiddleTable t;
        t.cos.resize(length);
        t.sin.resize(length);
        for (std::size_t j = 0; j < length; ++j) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(length);
            t.cos[j] = std::cos(angle);
            t.sin[j] = std::sin(angle);
        }
        it = cache.emplace(length, std::move(t)).first;
    }
    return it->second;
}

// Unnormalised |F_f|^2 for f in [0, L/2].
inline std::vector<double> half_power_spectrum(std::span<const double> v) {
    const auto length = v.size();
    const auto& tw = twiddles(length);
    std::vector<double> power(length / 2 + 1);
    for (std::size_t f = 0; f < power.size(); ++f) {
        double re = 0.0, im = 0.0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < length; ++i) {
            re += v[i] * tw.cos[j];
            im -= v[i] * tw.sin[j];
            j += f;
            if (j >= length) j -= length;
        }
        power[f] = re * re + im * im;
    }
    return power;
}

} // namespace detail

/// Magnitudes of the conjugate-pair-folded DFT of a real vector.
/// Length floor(L/2)+1; sum of squares equals L * sum v_i^2.
inline std::vector<double> folded_spectrum(std::span<const double> v) {
    if (v.size() < 2) throw ArgumentError("spectrum needs a vector of length >= 2");
    const auto length = v.size();
    auto power = detail::half_power_spectrum(v);
    std::vector<double> mag(power.size());
    for (std::size_t f = 0; f < power.size(); ++f) {
        const bool self_paired = f == 0 || 2 * f == length;
        mag[f] = std::sqrt(self_paired ? power[f] : 2.0 * power[f]);
    }
    return mag;
}

/// |F_f| for every f in [0, L).
inline std::vector<double> full_spectrum(std::span<const double> v) {
    if (v.size() < 2) throw ArgumentError("spectrum needs a vector of length >= 2");
    const auto length = v.size();
    const auto power = detail::half_power_spectrum(v);
    std::vector<double> mag(length);
    for (std::size_t f = 0; f < length; ++f) mag[f] = std::sqrt(power[std::min(f, length - f)]);
    return mag;
}

/// (||m||_4 / ||m||_2)^4 of a magnitude vector; empty when m is all zero.
inline std::optional<double> ipr_of_magnitudes(std::span<const double> m) {
    double s2 = 0.0, s4 = 0.0;
    for (double x : m) {
        const double x2 = x * x;
        s2 += x2;
        s4 += x2 * x2;
    }
    if (!(s2 > 0.0)) return std::nullopt;
    return s4 / (s2 * s2);
}

/// IPR of the spectrum of v. Empty for the zero vector (degenerate).
inline std::optional<double> ipr(std::span<const double> v, SpectrumMode mode = SpectrumMode::folded) {
    if (v.size() < 2) throw ArgumentError("spectrum needs a vector of length >= 2");
    bool zero = true;
    for (double x : v)
        if (x != 0.0) {
            zero = false;
            break;
        }
    if (zero) return std::nullopt;
    const auto m = mode == SpectrumMode::folded ? folded_spectrum(v) : full_spectrum(v);
    return ipr_of_magnitudes(m);
}

inline std::optional<double> ipr(const Vector& v, SpectrumMode mode = SpectrumMode::folded) {
    return ipr(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), mode);
}

/// Multiplication weights re-indexed through the exponential map, with the
/// zero element dropped: row_blocks[t](k, i) = P^(t)(k, g^i) and
/// out(q, k) = Q(g^q, k) for i, q in [0, p-2]. Neuron 0 is dropped when
/// the net is an analytical multiplication net (it only handles zero).
struct ReshuffledWeights {
    std::vector<Matrix> blocks; ///< each (neurons) x (p-1)
    Matrix out;                 ///< (p-1) x (neurons)
    Eigen::Index first_neuron;  ///< original index of row 0
};

inline ReshuffledWeights reshuffle_multiplication_weights(const TwoLayerNet& net, const FieldContext& ctx) {
    if (net.kind() == NetKind::addition) throw ArgumentError("reshuffling applies to multiplication or trained nets");
    if (net.p() != ctx.p()) throw ModulusError("field context modulus does not match network");
    const Eigen::Index first = net.kind() == NetKind::multiplication ? 1 : 0;
    const Eigen::Index rows = net.width() - first;
    const Eigen::Index cycle = ctx.order();
    if (rows < 1) throw ArgumentError("no neurons left after excluding the zero-handling neuron");

    ReshuffledWeights r;
    r.first_neuron = first;
    for (const auto& block : net.blocks()) {
        Matrix m(rows, cycle);
        for (Eigen::Index i = 0; i < cycle; ++i) m.col(i) = block.col(ctx.exp(i)).tail(rows);
        r.blocks.push_back(std::move(m));
    }
    r.out.resize(cycle, rows);
    for (Eigen::Index q = 0; q < cycle; ++q) r.out.row(q) = net.out().row(ctx.exp(q)).tail(rows);
    return r;
}

struct Histogram {
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
};

inline Histogram histogram(std::span<const double> values, std::size_t bins = 20, double lo = 0.0, double hi = 1.0) {
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
    h.counts.assign(bins, 0);
    for (double v : values) {
        auto bin = static_cast<std::ptrdiff_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

struct IprReport {
    std::vector<double> per_neuron;
    double average = 0.0;
    Histogram histogram;
    std::uint64_t excluded_degenerate = 0;
};

struct IprOptions {
    SpectrumMode mode = SpectrumMode::folded;
    /// Neurons whose weight norm is at most this fraction of the largest
    /// neuron norm count as dead (weight decay drives unused neurons to
    /// numerical zero) and are excluded like all-zero neurons.
    double dead_tolerance = 1e-6;
};

namespace detail {

// Per-neuron IPR from the rows of the input blocks and the columns of the
// output matrix. Neurons with an all-zero constituent, or with a total
// norm below the dead tolerance, are excluded and counted.
inline IprReport neuron_ipr(const std::vector<Matrix>& blocks, const Matrix& out, const IprOptions& opts) {
    IprReport report;
    const auto n = out.cols();
    Vector norms = out.colwise().squaredNorm().transpose();
    for (const auto& b : blocks) norms += b.rowwise().squaredNorm();
    norms = norms.cwiseSqrt();
    const double cutoff = opts.dead_tolerance * (n > 0 ? norms.maxCoeff() : 0.0);

    for (Eigen::Index k = 0; k < n; ++k) {
        bool degenerate = !(norms[k] > cutoff);
        double sum = 0.0;
        for (std::size_t s = 0; s < blocks.size() && !degenerate; ++s) {
            const Vector v = blocks[s].row(k).transpose();
            const auto value = ipr(v, opts.mode);
            if (value) sum += *value;
            else degenerate = true;
        }
        if (!degenerate) {
            const Vector v = out.col(k);
            const auto value = ipr(v, opts.mode);
            if (value) sum += *value;
            else degenerate = true;
        }
        if (degenerate) {
            ++report.excluded_degenerate;
            continue;
        }
        report.per_neuron.push_back(sum / static_cast<double>(blocks.size() + 1));
    }
    double total = 0.0;
    for (double v : report.per_neuron) total += v;
    report.average = report.per_neuron.empty() ? 0.0 : total / static_cast<double>(report.per_neuron.size());
    report.histogram = histogram(report.per_neuron);
    return report;
}

} // namespace detail

/// Network IPR. Multiplication nets (and trained nets when a field is
/// supplied) are reshuffled through the exponential map first; the
/// zero-handling neuron of an analytical multiplication net is skipped.
inline IprReport network_ipr(const TwoLayerNet& net, const FieldContext* ctx = nullptr, const IprOptions& opts = {}) {
    if (net.kind() == NetKind::multiplication && ctx == nullptr)
        throw ArgumentError("multiplication nets need a field context for IPR");
    if (ctx != nullptr && net.kind() != NetKind::addition) {
        const auto r = reshuffle_multiplication_weights(net, *ctx);
        return detail::neuron_ipr(r.blocks, r.out, opts);
    }
    return detail::neuron_ipr(net.blocks(), net.out(), opts);
}

inline IprReport network_ipr(const TwoLayerNet& net, const FieldContext& ctx, const IprOptions& opts = {}) {
    return network_ipr(net, &ctx, opts);
}

} // namespace modpoly
