#pragma once

#include "igmc/special.hpp"
#include "igmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace igmc {

/// Self-normalized weighted mean: sum(w psi) / sum(w).
template <class Scalar>
Scalar weighted_mean(std::span<const Scalar> values, std::span<const Scalar> weights) {
    if (values.empty() || values.size() != weights.size())
        throw InputError("weighted_mean: empty or mismatched inputs");
    Scalar sw = 0, swv = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swv += weights[i] * values[i];
    }
    if (!(sw > Scalar(0))) throw InputError("weighted_mean: total weight must be positive");
    return swv / sw;
}

/// Self-normalized weighted variance: sum(w (psi-mean)^2) / sum(w).
template <class Scalar>
Scalar weighted_variance(std::span<const Scalar> values, std::span<const Scalar> weights) {
    const Scalar mean = weighted_mean(values, weights);
    Scalar sw = 0, swd = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Scalar d = values[i] - mean;
        sw += weights[i];
        swd += weights[i] * d * d;
    }
    return swd / sw;
}

template <class Scalar>
Scalar sample_variance(std::span<const Scalar> values) {
    if (values.size() < 2) return Scalar(0);
    Scalar m = 0;
    for (Scalar v : values) m += v;
    m /= Scalar(values.size());
    Scalar s = 0;
    for (Scalar v : values) s += (v - m) * (v - m);
    return s / Scalar(values.size() - 1);
}

/// Kish effective sample size (sum w)^2 / sum w^2.
template <class Scalar>
Scalar effective_sample_size(std::span<const Scalar> weights) {
    Scalar sw = 0, sw2 = 0;
    for (Scalar w : weights) {
        sw += w;
        sw2 += w * w;
    }
    return sw2 > Scalar(0) ? sw * sw / sw2 : Scalar(0);
}

template <class Scalar>
Scalar weighted_quantile(std::vector<Scalar> values, std::vector<Scalar> weights, Scalar q) {
    if (values.empty()) throw InputError("weighted_quantile: empty input");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Scalar total = 0;
    for (Scalar w : weights) total += w;
    Scalar acc = 0;
    for (std::size_t i : idx) {
        acc += weights[i];
        if (acc >= q * total) return values[i];
    }
    return values[idx.back()];
}

template <class Scalar>
Scalar median(std::vector<Scalar> values) {
    if (values.empty()) throw InputError("median: empty input");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    Scalar hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.end());
    return (values[mid - 1] + hi) / Scalar(2);
}

/// Histogram with explicit bin edges and weighted mass per bin.
template <class Scalar>
struct WeightedHistogram {
    std::vector<Scalar> edges;  // sorted, size = bins + 1
    std::vector<Scalar> mass;   // weighted count per bin
    Scalar total_weight = 0;    // includes out-of-range mass

    /// Normalized density value of bin i (integrates to <= 1 over the range).
    Scalar density(std::size_t i) const {
        const Scalar width = edges[i + 1] - edges[i];
        return mass[i] / (total_weight * width);
    }
};

template <class Scalar>
WeightedHistogram<Scalar> weighted_histogram(std::span<const Scalar> values,
                                             std::span<const Scalar> weights,
                                             std::vector<Scalar> edges) {
    if (values.empty() || values.size() != weights.size())
        throw InputError("weighted_histogram: empty or mismatched inputs");
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw InputError("weighted_histogram: edges must be sorted with >= 2 entries");
    WeightedHistogram<Scalar> h;
    h.edges = std::move(edges);
    h.mass.assign(h.edges.size() - 1, Scalar(0));
    for (std::size_t i = 0; i < values.size(); ++i) {
        h.total_weight += weights[i];
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), values[i]);
        if (it == h.edges.begin() || it == h.edges.end()) continue;  // out of range
        h.mass[std::size_t(it - h.edges.begin()) - 1] += weights[i];
    }
    if (!(h.total_weight > Scalar(0)))
        throw InputError("weighted_histogram: total weight must be positive");
    return h;
}

/// Freedman–Diaconis bin edges using weighted quantiles and the weighted ESS.
template <class Scalar>
std::vector<Scalar> auto_bin_edges(std::span<const Scalar> values, std::span<const Scalar> weights) {
    std::vector<Scalar> v(values.begin(), values.end());
    std::vector<Scalar> w(weights.begin(), weights.end());
    const Scalar lo = *std::min_element(v.begin(), v.end());
    const Scalar hi = *std::max_element(v.begin(), v.end());
    const Scalar iqr = weighted_quantile(v, w, Scalar(0.75)) - weighted_quantile(v, w, Scalar(0.25));
    const Scalar ess = effective_sample_size(std::span<const Scalar>(w));
    Scalar width = Scalar(2) * iqr / std::pow(std::max(ess, Scalar(1)), Scalar(1) / Scalar(3));
    std::size_t bins;
    if (!(width > Scalar(0)) || !(hi > lo)) {
        bins = 1;
        width = std::max(hi - lo, Scalar(1));
    } else {
        bins = std::max<std::size_t>(1, std::size_t(std::ceil((hi - lo) / width)));
        bins = std::min<std::size_t>(bins, 4096);
    }
    std::vector<Scalar> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = lo + (hi - lo) * Scalar(i) / Scalar(bins);
    edges.back() = std::nextafter(hi, std::numeric_limits<Scalar>::max());
    return edges;
}

/// Kolmogorov–Smirnov statistic of a weighted sample against a reference CDF.
template <class Scalar, class Cdf>
Scalar ks_statistic_vs_cdf(std::vector<Scalar> values, std::vector<Scalar> weights, Cdf cdf) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Scalar total = 0;
    for (Scalar w : weights) total += w;
    Scalar acc = 0, d = 0;
    for (std::size_t i : idx) {
        const Scalar f = Scalar(cdf(values[i]));
        d = std::max(d, std::abs(acc / total - f));  // left limit
        acc += weights[i];
        d = std::max(d, std::abs(acc / total - f));
    }
    return d;
}

/// Two-sample KS statistic between a weighted sample and an unweighted reference.
template <class Scalar>
Scalar ks_statistic_two_sample(std::vector<Scalar> values, std::vector<Scalar> weights,
                               std::vector<Scalar> reference) {
    std::sort(reference.begin(), reference.end());
    const auto ref_cdf = [&](Scalar x) {
        return double(std::upper_bound(reference.begin(), reference.end(), x) - reference.begin()) /
               double(reference.size());
    };
    return ks_statistic_vs_cdf<Scalar>(std::move(values), std::move(weights), ref_cdf);
}

/// Approximate p-value for a KS statistic given the (effective) sample size.
inline double ks_p_value(double d_stat, double n_eff) {
    const double sn = std::sqrt(n_eff);
    return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d_stat);
}

struct ChiSquareResult {
    double statistic = 0;
    double dof = 0;
    double p_value = 1;
};

/// Pearson chi-square test of observed counts against equal expected counts.
inline ChiSquareResult chi_square_uniform(std::span<const double> observed) {
    if (observed.size() < 2) throw InputError("chi_square_uniform: need >= 2 cells");
    double total = 0;
    for (double o : observed) total += o;
    if (!(total > 0)) throw InputError("chi_square_uniform: empty counts");
    const double expected = total / double(observed.size());
    ChiSquareResult r;
    for (double o : observed) r.statistic += (o - expected) * (o - expected) / expected;
    r.dof = double(observed.size() - 1);
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

}  // namespace igmc
