#pragma once

#include "igmc/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace igmc {

// All randomness in the library flows through the generators below.  They are
// implemented here rather than via <random> distributions so that a given
// master seed produces bit-identical streams on every platform and standard
// library (std::normal_distribution is implementation-defined).

inline constexpr std::uint64_t kSeedGamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kSeedGamma);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed; used to give every worker / iteration /
/// Monte Carlo draw its own stream regardless of thread scheduling.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t id) {
    std::uint64_t s = base ^ (0x6a09e667f3bcc909ULL + id * 0x2545f4914f6cdd1dULL);
    (void)splitmix64(s);
    return splitmix64(s);
}

/// xoshiro256++ (Blackman & Vigna).  Small state, fast, and good enough for
/// Monte Carlo work by a wide margin.
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

/// Seeded stream of the distributions the library needs.  substream(id) is a
/// function of the construction seed only, not of how much has been drawn, so
/// parallel code can hand out independent streams deterministically.
template <class Scalar = double>
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    std::uint64_t seed() const { return seed_; }

    RandomStream substream(std::uint64_t id) const {
        return RandomStream(derive_seed(seed_, id));
    }

    std::uint64_t raw() { return eng_(); }

    /// Uniform on [0, 1).
    Scalar uniform() {
        return Scalar(eng_() >> 11) * Scalar(1.0 / 9007199254740992.0);
    }

    Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the polar (Marsaglia) method.
    Scalar normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        Scalar u, v, s;
        do {
            u = Scalar(2) * uniform() - Scalar(1);
            v = Scalar(2) * uniform() - Scalar(1);
            s = u * u + v * v;
        } while (s >= Scalar(1) || s == Scalar(0));
        const Scalar f = std::sqrt(Scalar(-2) * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    Vec<Scalar> normal_vec(Index n) {
        Vec<Scalar> x(n);
        for (Index i = 0; i < n; ++i) x[i] = normal();
        return x;
    }

    Mat<Scalar> normal_mat(Index rows, Index cols) {
        Mat<Scalar> m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    /// Gamma(shape, 1) via Marsaglia–Tsang; shape < 1 handled by boosting.
    Scalar gamma(Scalar shape) {
        if (shape < Scalar(1)) {
            const Scalar u = uniform();
            return gamma(shape + Scalar(1)) * std::pow(u, Scalar(1) / shape);
        }
        const Scalar d = shape - Scalar(1) / Scalar(3);
        const Scalar c = Scalar(1) / std::sqrt(Scalar(9) * d);
        for (;;) {
            Scalar x, v;
            do {
                x = normal();
                v = Scalar(1) + c * x;
            } while (v <= Scalar(0));
            v = v * v * v;
            const Scalar u = uniform();
            if (u < Scalar(1) - Scalar(0.0331) * x * x * x * x) return d * v;
            if (std::log(u) < Scalar(0.5) * x * x + d * (Scalar(1) - v + std::log(v))) return d * v;
        }
    }

    /// chi distribution with `dof` degrees of freedom (dof need not be integral).
    Scalar chi(Scalar dof) { return std::sqrt(Scalar(2) * gamma(dof / Scalar(2))); }

    Scalar beta(Scalar a, Scalar b) {
        const Scalar x = gamma(a);
        const Scalar y = gamma(b);
        return x / (x + y);
    }

    /// Uniform direction on the unit sphere of R^dim.
    Vec<Scalar> unit_vector(Index dim) {
        for (;;) {
            Vec<Scalar> v = normal_vec(dim);
            const Scalar n = v.norm();
            if (n > Scalar(1e-300)) return v / n;
        }
    }

    /// Uniform point in the unit ball of R^dim.
    Vec<Scalar> uniform_ball(Index dim) {
        return unit_vector(dim) * std::pow(uniform(), Scalar(1) / Scalar(dim));
    }

    /// Index sampled with probability proportional to the (nonnegative) weights.
    Index categorical(std::span<const Scalar> weights) {
        Scalar total = 0;
        for (Scalar w : weights) total += w;
        if (!(total > Scalar(0)))
            throw InputError("categorical: total weight must be positive");
        Scalar u = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < Scalar(0)) return Index(i);
        }
        return Index(weights.size() - 1);
    }

    /// von Mises–Fisher draw on the unit sphere of R^dim with mean direction
    /// mu (unit) and concentration kappa >= 0 (Wood's rejection scheme).
    Vec<Scalar> vmf(const Vec<Scalar>& mu, Scalar kappa) {
        const Index dim = mu.size();
        if (dim < 2) throw InputError("vmf: dimension must be >= 2");
        if (kappa < Scalar(1e-12)) return unit_vector(dim);
        const Scalar dm1 = Scalar(dim - 1);
        const Scalar b = (-Scalar(2) * kappa + std::sqrt(Scalar(4) * kappa * kappa + dm1 * dm1)) / dm1;
        const Scalar x0 = (Scalar(1) - b) / (Scalar(1) + b);
        const Scalar c = kappa * x0 + dm1 * std::log(Scalar(1) - x0 * x0);
        Scalar w;
        for (;;) {
            const Scalar z = beta(dm1 / Scalar(2), dm1 / Scalar(2));
            w = (Scalar(1) - (Scalar(1) + b) * z) / (Scalar(1) - (Scalar(1) - b) * z);
            const Scalar u = uniform();
            if (kappa * w + dm1 * std::log(Scalar(1) - x0 * w) - c >= std::log(u + Scalar(1e-300))) break;
        }
        Vec<Scalar> tangent = normal_vec(dim);
        tangent -= mu * mu.dot(tangent);
        const Scalar tn = tangent.norm();
        if (tn < Scalar(1e-300)) return mu;  // kappa huge and tangent draw degenerate
        return mu * w + tangent * (std::sqrt(std::max(Scalar(0), Scalar(1) - w * w)) / tn);
    }

  private:
    std::uint64_t seed_;
    Xoshiro256pp eng_;
    bool has_spare_ = false;
    Scalar spare_ = 0;
};

}  // namespace igmc
