#pragma once

// Local-regression weights and the weighted empirical quantile.

#include <cstddef>
#include <span>
#include <vector>

namespace cqm {

/// One historical appointment: characteristic z and observed duration s (minutes).
struct ContextRecord {
    double z = 0.0;
    double s = 0.0;
};

using Dataset = std::vector<ContextRecord>;

/// Nonnegative probability weights summing to one.
using WeightVector = std::vector<double>;

inline constexpr double kWeightSumTol = 1e-12;

enum class KernelKind { Naive, Epanechnikov, Tricubic };

struct Kernel {
    KernelKind kind = KernelKind::Naive;
    double bandwidth = 1.0;

    /// K(v), supported on |v| <= 1.
    double operator()(double v) const;
};

/// Throws InvalidArgument unless every weight is >= 0 and they sum to one.
void validate_weights(std::span<const double> weights);

/// w_i = K((z_i - query)/h) / sum_j K((z_j - query)/h). Throws NoMass when
/// every evaluation is zero.
WeightVector kernel_weights(std::span<const double> contexts, double query, const Kernel& kernel);

/// 1/k on the k nearest contexts. Distance ties at the k-th neighbour are
/// admitted by ascending index.
WeightVector knn_weights(std::span<const double> contexts, double query, std::size_t k);

struct QuantileResult {
    double value = 0.0;
    /// Smallest input index whose value equals `value`.
    std::size_t index = 0;
};

/// inf{ t : sum_i w_i 1(values_i <= t) >= tau }, tau in (0, 1].
QuantileResult weighted_quantile(std::span<const double> values, std::span<const double> weights,
                                 double tau);

double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Uniform 1/n weights.
WeightVector uniform_weights(std::size_t n);

}  // namespace cqm
