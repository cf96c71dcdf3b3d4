#include "compbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "compbias/errors.hpp"
#include "compbias/rng.hpp"

namespace compbias {

namespace {

int hamming(const std::vector<int>& a, const std::vector<int>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

struct Centered {
    std::vector<double> values;
    double sum_sq = 0.0;
};

Centered center(std::span<const double> xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    Centered c;
    c.values.reserve(xs.size());
    for (double x : xs) {
        c.values.push_back(x - mean);
        c.sum_sq += (x - mean) * (x - mean);
    }
    return c;
}

void check_pair(std::span<const double> xs, std::span<const double> ys, std::size_t min_n) {
    if (xs.size() != ys.size()) throw LengthMismatch("correlation inputs differ in length");
    if (xs.size() < min_n) throw DegenerateInput("too few observations for a correlation");
}

bool is_constant(std::span<const double> xs) {
    return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10'000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

PairDistanceVector hamming_pairs_g(const AttributeSpace& space) {
    const int n = space.object_count();
    PairDistanceVector out;
    out.values.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) out.values.push_back(hamming(space.digits(i), space.digits(j)));
    return out;
}

PairDistanceVector hamming_pairs_z(const Mapping& mapping) {
    const auto& space = *mapping.space;
    const int n = mapping.size();
    PairDistanceVector out;
    out.values.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.values.push_back(hamming(space.digits(mapping.table[i]), space.digits(mapping.table[j])));
    return out;
}

double topsim(const Mapping& mapping) {
    const auto g = hamming_pairs_g(*mapping.space).values;
    const auto z = hamming_pairs_z(mapping).values;
    const std::vector<double> gd(g.begin(), g.end());
    const std::vector<double> zd(z.begin(), z.end());
    return spearman(gd, zd).value_or(1.0);
}

double convergence_time(const LearningCurve& curve) {
    if (curve.losses.empty()) throw EmptyCurve("convergence time of an empty curve");
    return std::accumulate(curve.losses.begin(), curve.losses.end(), 0.0);
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // Use the symmetry relation where the continued fraction converges fastest.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double pearson_p_value(double rho, std::size_t n) {
    const double df = static_cast<double>(n) - 2.0;
    const double r2 = rho * rho;
    if (r2 >= 1.0) return 0.0;
    // t^2 = df r^2 / (1 - r^2); p = I_{df/(df+t^2)}(df/2, 1/2) = I_{1-r^2}(df/2, 1/2).
    return regularized_incomplete_beta(0.5 * df, 0.5, 1.0 - r2);
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys, 3);
    const auto cx = center(xs);
    const auto cy = center(ys);
    if (cx.sum_sq == 0.0 || cy.sum_sq == 0.0) throw DegenerateInput("pearson of a constant vector");
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxy += cx.values[i] * cy.values[i];
    PearsonResult r;
    r.rho = std::clamp(sxy / std::sqrt(cx.sum_sq * cy.sum_sq), -1.0, 1.0);
    r.p_value = pearson_p_value(r.rho, xs.size());
    return r;
}

double pearson_permutation_p(std::span<const double> xs, std::span<const double> ys, std::size_t shuffles,
                             std::uint64_t seed) {
    check_pair(xs, ys, 3);
    const auto cx = center(xs);
    auto cy = center(ys);
    if (cx.sum_sq == 0.0 || cy.sum_sq == 0.0) throw DegenerateInput("pearson of a constant vector");
    const double norm = std::sqrt(cx.sum_sq * cy.sum_sq);
    auto corr = [&](const std::vector<double>& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += cx.values[i] * y[i];
        return s / norm;
    };
    const double observed = std::fabs(corr(cy.values));
    // Shuffled sums can differ from an equivalent arrangement by rounding only.
    const double threshold = observed - 1e-12;
    Xoshiro256 rng(seed);
    std::size_t hits = 0;
    auto y = cy.values;
    for (std::size_t s = 0; s < shuffles; ++s) {
        for (std::size_t i = y.size() - 1; i > 0; --i) std::swap(y[i], y[rng.below(i + 1)]);
        if (std::fabs(corr(y)) >= threshold) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(shuffles + 1);
}

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys, 2);
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    if (is_constant(rx) || is_constant(ry)) return std::nullopt;
    const auto cx = center(rx);
    const auto cy = center(ry);
    double sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) sxy += cx.values[i] * cy.values[i];
    return std::clamp(sxy / std::sqrt(cx.sum_sq * cy.sum_sq), -1.0, 1.0);
}

}  // namespace compbias
