// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "modpoly/analytic.hpp"
#include "modpoly/composite.hpp"
#include "modpoly/experiments.hpp"
#include "modpoly/spectral.hpp"
#include "modpoly/trainer.hpp"

using namespace modpoly;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        v.pass = false;
        v.detail += " [over time budget " + std::to_string(budget_s) + " s]";
    }
    if (!v.pass) ++failures;
    std::printf("%s  %d  %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// Folded spectrum of all ones, built by inverse transform.
std::vector<double> flat_folded(std::size_t n) {
    std::vector<double> v(n, 1.0 / n);
    for (std::size_t f = 1; 2 * f < n; ++f)
        for (std::size_t i = 0; i < n; ++i)
            v[i] += std::sqrt(2.0) / n * std::cos(2 * std::numbers::pi * f * i / n + 0.1 * f);
    if (n % 2 == 0)
        for (std::size_t i = 0; i < n; ++i) v[i] += (i % 2 == 0 ? 1.0 : -1.0) / n;
    return v;
}

double worst_unit_ipr_gap(const std::vector<Matrix>& blocks, const Matrix& out) {
    double worst = 0.0;
    for (const auto& b : blocks)
        for (Eigen::Index k = 0; k < b.rows(); ++k)
            worst = std::max(worst, std::abs(*ipr(Vector(b.row(k).transpose())) - 1.0));
    for (Eigen::Index k = 0; k < out.cols(); ++k) worst = std::max(worst, std::abs(*ipr(Vector(out.col(k))) - 1.0));
    return worst;
}

const std::vector<std::size_t> sweep_widths = {64, 128, 256, 512, 1024, 2048, 4096, 8192};

} // namespace

int main() {
    std::printf("modpoly acceptance\n");

    criterion(1, "multiplication exactness p=97 a=b=1 N=500", 5.0, [] {
        const auto ctx = build_field_context(97);
        const auto net = build_multiplication_solution(ctx, 1, 1, 500, 0);
        const double acc = accuracy(net, make_oracle(monomial_task(97, 1, 1)));
        return Verdict{acc == 1.0, "exhaustive accuracy over 9409 pairs = " + fmt("%.6f", acc)};
    });

    std::optional<std::size_t> min_s2;
    criterion(2, "addition exactness p=23 S=2 sweep 64..8192 best of 10", 120.0, [&] {
        WidthSweepSpec spec;
        spec.terms = {2};
        spec.widths = sweep_widths;
        const auto r = run_width_sweep(spec);
        min_s2 = r.min_width.at(2);
        return Verdict{min_s2.has_value(), min_s2 ? "first exact width N=" + std::to_string(*min_s2) : "never exact"};
    });

    criterion(3, "width scaling S=3 vs S=2 at p=23", 1800.0, [&] {
        WidthSweepSpec spec;
        spec.terms = {3};
        spec.widths = sweep_widths;
        const auto r = run_width_sweep(spec);
        const auto min_s3 = r.min_width.at(3);
        if (!min_s2 || !min_s3) return Verdict{false, "a minimal width is missing from the sweep"};
        const double ratio = static_cast<double>(*min_s3) / static_cast<double>(*min_s2);
        return Verdict{ratio >= 4.0, "S=2 N=" + std::to_string(*min_s2) + ", S=3 N=" + std::to_string(*min_s3) +
                                         ", ratio " + fmt("%.1f", ratio) + " (need >= 4)"};
    });

    criterion(4, "composite table N1=500 N2=2000 beta=100", 600.0, [] {
        const double printed[] = {0.007674, 0.007660, 0.007683, 0.009758, 0.009757, 0.010201};
        const auto rows = run_composite_table(table_polynomials(), CompositeSpec{});
        bool ok = rows.size() == 6;
        std::string detail;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double ratio = rows[i].mse / printed[i];
            const bool row_ok = rows[i].accuracy == 1.0 && ratio <= 5.0 && ratio >= 0.2;
            ok = ok && row_ok;
            detail += (i ? "; " : "") + std::string("p=") + std::to_string(rows[i].p) + " acc " +
                      fmt("%.4f", rows[i].accuracy) + " mse " + fmt("%.6f", rows[i].mse);
        }
        return Verdict{ok, detail};
    });

    criterion(5, "grokking p=97 multiplication N=500", 3600.0, [] {
        const auto ctx = build_field_context(97);
        const auto data = generate_dataset(make_oracle(monomial_task(97, 1, 1)));
        TrainConfig cfg;
        cfg.lr = 0.005;
        cfg.wd = 5.0;
        cfg.split_frac = 0.5;
        cfg.epochs = 10000;
        cfg.stop_at_test_acc = 1.0;
        cfg.min_epochs = 3000;
        auto [train_ds, test_ds] = split(data, cfg.split_frac, cfg.seed);
        auto net = init_network(97, 2, 500, cfg.seed);
        TrainOptions opts;
        opts.ipr_field = &ctx;
        const auto s = train(net, train_ds, test_ds, cfg, opts);
        const auto tr = MetricSeries::first_epoch_at(s.epochs, s.train_acc, 0.99);
        const auto te = MetricSeries::first_epoch_at(s.epochs, s.test_acc, 0.99);
        const double final_acc = s.test_acc.back(), final_ipr = s.avg_ipr.back(), init_ipr = s.avg_ipr.front();
        const bool ok = tr && te && *tr < *te && final_acc == 1.0 && final_ipr >= 0.9 && init_ipr <= 0.3;
        return Verdict{ok, "train>=99% at " + (tr ? std::to_string(*tr) : "never") + ", test>=99% at " +
                               (te ? std::to_string(*te) : "never") + ", final test " + fmt("%.6f", final_acc) +
                               ", IPR " + fmt("%.3f", init_ipr) + " -> " + fmt("%.3f", final_ipr) + " at epoch " +
                               std::to_string(s.epochs.back())};
    });

    criterion(6, "learnability suite p=23", 7200.0, [] {
        const auto rows = run_hypothesis_suite(learnability_rows(), HypothesisSpec{});
        bool ok = rows.size() == 6;
        std::string detail;
        for (const auto& r : rows) {
            const bool row_ok = r.expected_learnable ? r.test_acc == 1.0 : (r.train_acc == 1.0 && r.test_acc <= 0.15);
            ok = ok && row_ok;
            detail += (detail.empty() ? "" : "; ") + r.task + " train " + fmt("%.4f", r.train_acc) + " test " +
                      fmt("%.4f", r.test_acc) + " @" + std::to_string(r.epochs);
        }
        return Verdict{ok, detail};
    });

    criterion(7, "IPR calibration", 600.0, [] {
        double worst = 0.0;
        for (std::size_t terms : {2u, 3u}) {
            const auto net = build_addition_solution(SumTask(23, std::vector<Residue>(terms, 1)), 512, 0);
            worst = std::max(worst, worst_unit_ipr_gap(net.blocks(), net.out()));
        }
        const auto four = build_addition_solution(SumTask(11, {1, 2, 3, 4}), 256, 1);
        worst = std::max(worst, worst_unit_ipr_gap(four.blocks(), four.out()));
        for (std::uint64_t p : {23ull, 97ull}) {
            const auto ctx = build_field_context(p);
            const auto net = build_multiplication_solution(ctx, 1, p == 23 ? 3 : 1, 500, 0);
            const auto r = reshuffle_multiplication_weights(net, ctx);
            worst = std::max(worst, worst_unit_ipr_gap(r.blocks, r.out));
        }
        double flat_gap = 0.0;
        for (std::size_t n : {11u, 22u, 23u, 96u, 97u})
            flat_gap = std::max(flat_gap, std::abs(*ipr(flat_folded(n)) - 1.0 / static_cast<double>(n / 2 + 1)));
        return Verdict{worst <= 1e-9 && flat_gap <= 1e-12,
                       "max |IPR-1| over analytical rows/columns " + fmt("%.2e", worst) + ", max flat-spectrum gap " +
                           fmt("%.2e", flat_gap)};
    });

    criterion(8, "gradient oracle", 120.0, [] {
        double quad = 0.0, quart = 0.0;
        const auto mul = generate_dataset(make_oracle(monomial_task(11, 1, 1)));
        const auto add4 = generate_dataset(make_oracle(SumTask(5, {1, 1, 1, 1})));
        for (std::uint64_t seed : {0, 1, 2}) {
            auto [b1, r1] = split(mul, 0.5, seed);
            auto [b2, r2] = split(add4, 0.3, seed);
            quad = std::max(quad, gradient_check(init_network(11, 2, 32, seed), b1, 1e-5, 120, seed));
            quart = std::max(quart, gradient_check(init_network(5, 4, 24, seed), b2, 1e-4, 120, seed));
        }
        return Verdict{quad < 1e-5 && quart < 1e-4,
                       "max relative error quadratic " + fmt("%.2e", quad) + ", quartic " + fmt("%.2e", quart) +
                           " (120 coordinates x 3 seeds each)"};
    });

    criterion(9, "random 3-term composites p=11", 300.0, [] {
        const Residue p = 11;
        const auto ctx = build_field_context(p);
        std::mt19937_64 rng(2024);
        int exact = 0;
        std::size_t widest_expert = 0, widest_adder = 0;
        for (int t = 0; t < 20; ++t) {
            std::set<std::pair<std::uint32_t, std::uint32_t>> used;
            std::vector<Monomial> terms;
            while (terms.size() < 3) {
                const auto a = static_cast<std::uint32_t>(1 + rng() % (p - 1));
                const auto b = static_cast<std::uint32_t>(1 + rng() % (p - 1));
                if (!used.insert({a, b}).second) continue;
                terms.push_back({static_cast<Residue>(1 + rng() % (p - 1)), a, b});
            }
            const ModPolynomial poly(p, terms);
            const std::uint64_t seed = rng();
            // expert width: smallest power of two at which every expert is exact
            std::size_t n1 = 16;
            for (;; n1 *= 2) {
                bool all = true;
                for (std::size_t s = 0; s < 3 && all; ++s)
                    all = accuracy(build_multiplication_solution(ctx, terms[s].a, terms[s].b, n1, derive_seed(seed, s)),
                                   make_oracle(monomial_task(p, terms[s].a, terms[s].b))) == 1.0;
                if (all || n1 >= 4096) break;
            }
            // adder width: same rule for the coefficient sum
            const SumTask sum(p, {terms[0].coeff, terms[1].coeff, terms[2].coeff});
            std::size_t n2 = 16;
            while (n2 < 8192 && accuracy(build_addition_solution(sum, n2, derive_seed(seed, 3)), make_oracle(sum)) < 1.0)
                n2 *= 2;
            widest_expert = std::max(widest_expert, n1);
            widest_adder = std::max(widest_adder, n2);
            const auto cnet = build_composite(poly, ctx, n1, n2, 100.0, seed);
            if (evaluate_composite(cnet).accuracy == 1.0) ++exact;
        }
        return Verdict{exact == 20, std::to_string(exact) + "/20 exact; widest expert N1=" +
                                        std::to_string(widest_expert) + ", widest adder N2=" +
                                        std::to_string(widest_adder)};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
