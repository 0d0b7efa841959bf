#pragma once

#include "igmc/manifold.hpp"
#include "igmc/rng.hpp"
#include "igmc/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace igmc {

/// Symmetric tridiagonal matrix (diagonal + one off-diagonal band).
template <class Scalar>
struct SymTridiag {
    Vec<Scalar> diag;
    Vec<Scalar> offdiag;  // size diag.size() - 1

    Index size() const { return diag.size(); }

    Mat<Scalar> dense() const {
        Mat<Scalar> A = Mat<Scalar>::Zero(size(), size());
        for (Index i = 0; i < size(); ++i) A(i, i) = diag[i];
        for (Index i = 0; i + 1 < size(); ++i) A(i, i + 1) = A(i + 1, i) = offdiag[i];
        return A;
    }

    /// Gershgorin bounds on the spectrum.
    std::pair<Scalar, Scalar> spectral_bounds() const {
        Scalar lo = std::numeric_limits<Scalar>::max(), hi = std::numeric_limits<Scalar>::lowest();
        for (Index i = 0; i < size(); ++i) {
            Scalar r = 0;
            if (i > 0) r += std::abs(offdiag[i - 1]);
            if (i + 1 < size()) r += std::abs(offdiag[i]);
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        return {lo, hi};
    }
};

/// Tridiagonal discretization of the stochastic Airy operator
/// d^2/dx^2 - x + (2/sqrt(beta)) dW on a grid of step h truncated at K points:
/// second-difference Laplacian over h^2, potential -h*j, and白 iid noise on
/// the diagonal scaled by 2/sqrt(beta h) (the white-noise cell variance).
template <class Scalar>
struct AiryModel {
    Scalar n_parameter = 0;  // ensemble size parameter (sets h and K)
    Scalar beta = 2;
    Scalar grid_step = 0;   // h = n^{-1/3}
    Index matrix_size = 0;  // K = ceil(10 n^{1/3})
    Vec<Scalar> noise;      // iid standard normals, the ambient Gaussian coordinates
};

template <class Scalar>
AiryModel<Scalar> make_airy_model(Scalar n_parameter, Scalar beta) {
    if (!(n_parameter > Scalar(1)) || !(beta > Scalar(0)))
        throw InputError("make_airy_model: need n_parameter > 1 and beta > 0");
    AiryModel<Scalar> m;
    m.n_parameter = n_parameter;
    m.beta = beta;
    m.grid_step = std::pow(n_parameter, Scalar(-1) / Scalar(3));
    m.matrix_size = Index(std::ceil(10.0 * std::pow(double(n_parameter), 1.0 / 3.0)));
    m.noise = Vec<Scalar>::Zero(m.matrix_size);
    return m;
}

/// Coefficient of the diagonal noise term, 2 / sqrt(beta h).
template <class Scalar>
Scalar noise_coefficient(const AiryModel<Scalar>& m) {
    return Scalar(2) / std::sqrt(m.beta * m.grid_step);
}

template <class Scalar>
SymTridiag<Scalar> build_matrix(const AiryModel<Scalar>& m) {
    if (m.matrix_size < 2) throw InputError("build_matrix: need K >= 2");
    if (m.noise.size() != m.matrix_size) throw InputError("build_matrix: noise length != K");
    const Scalar h = m.grid_step;
    const Scalar c = noise_coefficient(m);
    SymTridiag<Scalar> T;
    T.diag.resize(m.matrix_size);
    T.offdiag = Vec<Scalar>::Constant(m.matrix_size - 1, Scalar(1) / (h * h));
    for (Index j = 0; j < m.matrix_size; ++j)
        T.diag[j] = Scalar(-2) / (h * h) - h * Scalar(j + 1) + c * m.noise[j];
    return T;
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigensolver: Sturm bisection plus inverse iteration.

/// Number of eigenvalues of T strictly below `shift` (Sturm sequence count via
/// the LDL^T recurrence).
template <class Scalar>
Index count_eigenvalues_below(const SymTridiag<Scalar>& T, Scalar shift) {
    const Index K = T.size();
    Scalar max_off2 = Scalar(1);
    for (Index i = 0; i + 1 < K; ++i)
        max_off2 = std::max(max_off2, T.offdiag[i] * T.offdiag[i]);
    const Scalar pivmin = std::numeric_limits<Scalar>::min() * max_off2;
    Scalar q = T.diag[0] - shift;
    if (std::abs(q) < pivmin) q = -pivmin;
    Index count = q < Scalar(0) ? 1 : 0;
    for (Index i = 1; i < K; ++i) {
        q = (T.diag[i] - shift) - T.offdiag[i - 1] * T.offdiag[i - 1] / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < Scalar(0)) ++count;
    }
    return count;
}

/// Number of eigenvalues >= shift; one Sturm pass.
template <class Scalar>
Index count_eigenvalues_geq(const SymTridiag<Scalar>& T, Scalar shift) {
    return T.size() - count_eigenvalues_below(T, shift);
}

/// The i-th largest eigenvalue (1-based) by bisection on the Sturm count.
template <class Scalar>
Scalar eigenvalue_by_index(const SymTridiag<Scalar>& T, Index index_1based) {
    const Index K = T.size();
    if (index_1based < 1 || index_1based > K)
        throw InputError("eigenvalue_by_index: index out of range");
    auto [lo, hi] = T.spectral_bounds();
    const Index want = K - index_1based;  // count strictly below the i-th largest
    const Scalar scale = std::max(std::abs(lo), std::abs(hi)) + Scalar(1);
    for (int it = 0; it < 200 && hi - lo > Scalar(4) * std::numeric_limits<Scalar>::epsilon() * scale;
         ++it) {
        const Scalar mid = (lo + hi) / Scalar(2);
        if (count_eigenvalues_below(T, mid) <= want)
            lo = mid;
        else
            hi = mid;
    }
    return (lo + hi) / Scalar(2);
}

namespace detail {

/// Solves (T - shift I) x = b with partial pivoting (extra superdiagonal fill).
template <class Scalar>
Vec<Scalar> shifted_tridiag_solve(const SymTridiag<Scalar>& T, Scalar shift, Vec<Scalar> b) {
    const Index K = T.size();
    Vec<Scalar> d(K), e(K), f(K);  // main, first and second superdiagonal
    Vec<Scalar> sub(K);            // subdiagonal (mutating copy)
    for (Index i = 0; i < K; ++i) d[i] = T.diag[i] - shift;
    for (Index i = 0; i + 1 < K; ++i) {
        e[i] = T.offdiag[i];
        sub[i] = T.offdiag[i];
    }
    e[K - 1] = 0;
    f.setZero();
    const Scalar tiny = std::numeric_limits<Scalar>::min() * Scalar(1e4);
    for (Index i = 0; i + 1 < K; ++i) {
        if (std::abs(sub[i]) > std::abs(d[i])) {  // pivot: swap rows i, i+1
            std::swap(d[i], sub[i]);
            const Scalar ei = e[i];
            e[i] = d[i + 1];
            d[i + 1] = ei;
            if (i + 2 < K) {
                f[i] = e[i + 1];
                e[i + 1] = 0;
            }
            std::swap(b[i], b[i + 1]);
        }
        if (std::abs(d[i]) < tiny) d[i] = d[i] < Scalar(0) ? -tiny : tiny;
        const Scalar mult = sub[i] / d[i];
        d[i + 1] -= mult * e[i];
        if (i + 2 < K) e[i + 1] -= mult * f[i];
        b[i + 1] -= mult * b[i];
    }
    if (std::abs(d[K - 1]) < tiny) d[K - 1] = d[K - 1] < Scalar(0) ? -tiny : tiny;
    Vec<Scalar> x(K);
    x[K - 1] = b[K - 1] / d[K - 1];
    for (Index i = K - 2; i >= 0; --i) {
        Scalar s = b[i] - e[i] * x[i + 1];
        if (i + 2 < K) s -= f[i] * x[i + 2];
        x[i] = s / d[i];
    }
    return x;
}

}  // namespace detail

template <class Scalar>
struct EigenPairs {
    Vec<Scalar> values;  // p largest, descending
    Mat<Scalar> vectors; // K x p, orthonormal
};

/// The p largest eigenpairs: bisection for the values, inverse iteration for
/// the vectors (orthogonalized within near-degenerate clusters).  Residuals
/// are verified against 1e-10 * ||T||.
template <class Scalar>
EigenPairs<Scalar> eigen_top(const SymTridiag<Scalar>& T, Index p) {
    const Index K = T.size();
    if (p < 1 || p > K) throw InputError("eigen_top: need 1 <= p <= K");
    EigenPairs<Scalar> out;
    out.values.resize(p);
    out.vectors.resize(K, p);
    for (Index i = 0; i < p; ++i) out.values[i] = eigenvalue_by_index(T, i + 1);
    auto [blo, bhi] = T.spectral_bounds();
    const Scalar norm_bound = std::max(std::abs(blo), std::abs(bhi));
    const Scalar cluster_tol = Scalar(1e-7) * norm_bound;
    RandomStream<Scalar> start(0x5eedULL);  // fixed stream: deterministic vectors
    for (Index i = 0; i < p; ++i) {
        const Scalar shift =
            out.values[i] + norm_bound * std::numeric_limits<Scalar>::epsilon() * Scalar(8);
        Vec<Scalar> v = start.normal_vec(K);
        v /= v.norm();
        Scalar resid = std::numeric_limits<Scalar>::max();
        for (int sweep = 0; sweep < 8; ++sweep) {
            v = detail::shifted_tridiag_solve(T, shift, v);
            for (Index j = 0; j < i; ++j)  // deflate within clusters
                if (std::abs(out.values[j] - out.values[i]) < cluster_tol)
                    v -= out.vectors.col(j) * out.vectors.col(j).dot(v);
            const Scalar n = v.norm();
            if (!(n > Scalar(0)) || !v.allFinite())
                throw NumericalError("eigen_top: inverse iteration breakdown");
            v /= n;
            Vec<Scalar> Av(K);
            for (Index r = 0; r < K; ++r) {
                Scalar s = T.diag[r] * v[r];
                if (r > 0) s += T.offdiag[r - 1] * v[r - 1];
                if (r + 1 < K) s += T.offdiag[r] * v[r + 1];
                Av[r] = s;
            }
            resid = (Av - out.values[i] * v).norm();
            if (resid <= Scalar(1e-10) * norm_bound) break;
        }
        if (resid > Scalar(1e-10) * norm_bound)
            throw NumericalError("eigen_top: eigenvector residual did not converge");
        if (v[0] < Scalar(0)) v = -v;  // sign convention
        out.vectors.col(i) = v;
    }
    return out;
}

template <class Scalar>
EigenPairs<Scalar> eigen_top(const AiryModel<Scalar>& m, Index p) {
    return eigen_top(build_matrix(m), p);
}

inline constexpr double kEigenGapTolerance = 1e-8;

/// Gradient of the index-th largest eigenvalue with respect to the noise
/// vector: first-order perturbation gives d lambda_i / d N_j = c * v_j(i)^2
/// with c the diagonal noise coefficient.  Requires a simple eigenvalue.
template <class Scalar>
Vec<Scalar> eigen_gradient(const AiryModel<Scalar>& m, Index index_1based) {
    const SymTridiag<Scalar> T = build_matrix(m);
    const Index K = T.size();
    const Index p = std::min<Index>(index_1based + 1, K);
    const EigenPairs<Scalar> top = eigen_top(T, p);
    auto [blo, bhi] = T.spectral_bounds();
    const Scalar norm_bound = std::max(std::abs(blo), std::abs(bhi));
    const Scalar gap_tol = Scalar(kEigenGapTolerance) * norm_bound;
    const Index i = index_1based - 1;
    if (i > 0 && std::abs(top.values[i - 1] - top.values[i]) < gap_tol)
        throw DegenerateError("eigen_gradient: eigenvalue nearly degenerate (above)");
    if (i + 1 < p && std::abs(top.values[i] - top.values[i + 1]) < gap_tol)
        throw DegenerateError("eigen_gradient: eigenvalue nearly degenerate (below)");
    return noise_coefficient(m) * top.vectors.col(i).array().square().matrix();
}

/// Eigenvalue conditioning target: which eigenvalues (1-based, by descending
/// order) are pinned and to what values.
template <class Scalar>
struct EigenCondition {
    std::vector<int> indices;
    Vec<Scalar> values;

    void validate() const {
        if (indices.empty() || Index(indices.size()) != values.size())
            throw InputError("EigenCondition: indices/values size mismatch");
        for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
            if (indices[i + 1] <= indices[i])
                throw InputError("EigenCondition: indices must be strictly increasing");
            if (values[Index(i + 1)] >= values[Index(i)])
                throw InputError("EigenCondition: values must decrease with the index");
        }
        if (indices.front() < 1) throw InputError("EigenCondition: indices are 1-based");
    }
};

/// Constraint manifold over the noise coordinates N in R^K with
/// lambda(N) = (lambda_{i}(A(N)))_{i in condition}.  Jacobian rows come from
/// the analytic eigenvalue gradients; the Hessian falls back to finite
/// differences of the Jacobian.
template <class Scalar>
ConstraintManifold<Scalar> make_airy_manifold(AiryModel<Scalar> model,
                                              EigenCondition<Scalar> cond) {
    cond.validate();
    const Index K = model.matrix_size;
    const int max_index = cond.indices.back();
    if (Index(max_index) > K) throw InputError("make_airy_manifold: index exceeds matrix size");
    ConstraintManifold<Scalar> m;
    m.ambient_dim = K;
    m.codim = Index(cond.indices.size());
    m.constraint_value = cond.values;
    m.value_oracle = [model, cond, max_index](const Vec<Scalar>& noise) mutable {
        model.noise = noise;
        const EigenPairs<Scalar> top = eigen_top(model, Index(max_index));
        Vec<Scalar> v(Index(cond.indices.size()));
        for (std::size_t i = 0; i < cond.indices.size(); ++i)
            v[Index(i)] = top.values[cond.indices[i] - 1];
        return v;
    };
    m.jacobian_oracle = [model, cond, max_index, K](const Vec<Scalar>& noise) mutable {
        model.noise = noise;
        const SymTridiag<Scalar> T = build_matrix(model);
        const EigenPairs<Scalar> top = eigen_top(T, Index(max_index));
        const Scalar c = noise_coefficient(model);
        Mat<Scalar> J(Index(cond.indices.size()), K);
        for (std::size_t i = 0; i < cond.indices.size(); ++i)
            J.row(Index(i)) = c * top.vectors.col(cond.indices[i] - 1).array().square().matrix().transpose();
        return J;
    };
    return m;
}

}  // namespace igmc
