#include "cqm/estimator.hpp"

#include "cqm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cqm {

double Kernel::operator()(double v) const {
    const double a = std::abs(v);
    if (!(a <= 1.0)) return 0.0;
    switch (kind) {
        case KernelKind::Naive:
            return 1.0;
        case KernelKind::Epanechnikov:
            return 1.0 - v * v;
        case KernelKind::Tricubic: {
            const double c = 1.0 - a * a * a;
            return c * c * c;
        }
    }
    return 0.0;
}

void validate_weights(std::span<const double> weights) {
    if (weights.empty()) throw InvalidArgument("weight vector is empty");
    long double sum = 0.0L;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and nonnegative");
        sum += w;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > kWeightSumTol)
        throw InvalidArgument("weights must sum to one, got " + std::to_string(static_cast<double>(sum)));
}

namespace {

WeightVector normalize(std::vector<double> raw) {
    long double sum = 0.0L;
    for (double r : raw) sum += r;
    if (sum <= 0.0L) throw NoMass("all kernel evaluations are zero");
    for (double& r : raw) r = static_cast<double>(r / sum);
    return raw;
}

}  // namespace

WeightVector kernel_weights(std::span<const double> contexts, double query, const Kernel& kernel) {
    if (contexts.empty()) throw InvalidArgument("kernel_weights: no records");
    if (!(kernel.bandwidth > 0.0)) throw InvalidArgument("kernel_weights: bandwidth must be positive");
    std::vector<double> raw(contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i)
        raw[i] = kernel((contexts[i] - query) / kernel.bandwidth);
    return normalize(std::move(raw));
}

WeightVector knn_weights(std::span<const double> contexts, double query, std::size_t k) {
    const std::size_t n = contexts.size();
    if (k == 0 || k > n) throw InvalidArgument("knn_weights: k must lie in [1, N]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // stable on index so equal distances are admitted lowest index first
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(contexts[a] - query) < std::abs(contexts[b] - query);
    });
    WeightVector w(n, 0.0);
    for (std::size_t r = 0; r < k; ++r) w[order[r]] = 1.0 / static_cast<double>(k);
    return w;
}

QuantileResult weighted_quantile(std::span<const double> values, std::span<const double> weights,
                                 double tau) {
    if (values.size() != weights.size()) throw InvalidArgument("weighted_quantile: length mismatch");
    if (values.empty()) throw InvalidArgument("weighted_quantile: empty input");
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("weighted_quantile: tau must lie in (0, 1]");

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    });

    double cum = 0.0;
    std::size_t r = 0;
    while (r < order.size()) {
        // a tie group contributes all at once: the CDF jumps at a value, not an index
        const std::size_t head = order[r];
        const double v = values[head];
        while (r < order.size() && values[order[r]] == v) cum += weights[order[r++]];
        if (cum >= tau - kWeightSumTol) return {v, head};
    }
    // weights short of tau only through rounding; the largest value is the answer
    const std::size_t last = order.back();
    std::size_t first_of_last = last;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == values[last]) { first_of_last = i; break; }
    return {values[last], first_of_last};
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw InvalidArgument("weighted_mean: length mismatch");
    if (values.empty()) throw InvalidArgument("weighted_mean: empty input");
    long double acc = 0.0L;
    for (std::size_t i = 0; i < values.size(); ++i) acc += static_cast<long double>(values[i]) * weights[i];
    return static_cast<double>(acc);
}

WeightVector uniform_weights(std::size_t n) {
    if (n == 0) throw InvalidArgument("uniform_weights: n must be positive");
    return WeightVector(n, 1.0 / static_cast<double>(n));
}

}  // namespace cqm
