#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "compbias/mapping.hpp"

namespace compbias {

// Pairwise distances in canonical pair order (i < j, lexicographic).
struct PairDistanceVector {
    std::vector<int> values;
};

PairDistanceVector hamming_pairs_g(const AttributeSpace& space);
PairDistanceVector hamming_pairs_z(const Mapping& mapping);

// Spearman correlation between attribute-space and code-space Hamming
// distances. When either distance vector is constant the correlation is
// undefined and the mapping scores 1 (the all-to-one convention).
double topsim(const Mapping& mapping);

struct LearningCurve {
    std::vector<double> losses;  // one mean training loss per epoch
    int epochs() const { return static_cast<int>(losses.size()); }
};

// Area under the curve as a left Riemann sum with unit epoch width.
double convergence_time(const LearningCurve& curve);

// Ranks starting at 1; ties get the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p for a Pearson coefficient from the t distribution with n-2 dof.
double pearson_p_value(double rho, std::size_t n);

struct PearsonResult {
    double rho = 0.0;
    double p_value = 1.0;
};

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

inline constexpr std::size_t kDefaultShuffles = 10'000;

// Fraction of seeded shuffles of ys whose |rho| reaches the observed |rho|,
// with the +1 correction: (hits + 1) / (shuffles + 1).
double pearson_permutation_p(std::span<const double> xs, std::span<const double> ys,
                             std::size_t shuffles = kDefaultShuffles, std::uint64_t seed = 0);

// nullopt when either rank vector is constant.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace compbias
