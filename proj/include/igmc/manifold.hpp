#pragma once

#include "igmc/types.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace igmc {

/// Implicit constraint manifold {x in R^n : lambda(x) = c} given by a value
/// oracle and optional analytic Jacobian / Hessian oracles.  All oracles must
/// be pure functions of x; instances are immutable after construction and safe
/// to share across threads.
template <class Scalar>
struct ConstraintManifold {
    using ValueFn = std::function<Vec<Scalar>(const Vec<Scalar>&)>;
    using JacobianFn = std::function<Mat<Scalar>(const Vec<Scalar>&)>;
    using HessianFn = std::function<std::vector<Mat<Scalar>>(const Vec<Scalar>&)>;

    Index ambient_dim = 0;
    Index codim = 0;
    Vec<Scalar> constraint_value;  // length codim
    ValueFn value_oracle;
    JacobianFn jacobian_oracle;  // may be empty: finite differences are used
    HessianFn hessian_oracle;    // may be empty: finite differences of the Jacobian
    bool homogeneous = false;    // constant local geometry (spheres, planes)

    void validate() const {
        if (ambient_dim < 1 || codim < 0 || codim > ambient_dim)
            throw InputError("ConstraintManifold: need 0 <= codim <= ambient_dim >= 1");
        if (codim > 0 && constraint_value.size() != codim)
            throw InputError("ConstraintManifold: constraint_value length != codim");
        if (codim > 0 && !value_oracle)
            throw InputError("ConstraintManifold: missing value oracle");
    }
};

enum class DensityKind { standard_gaussian, uniform_on_region, custom };

/// Ambient target density, known up to an additive constant in the log.
template <class Scalar>
struct TargetDensity {
    std::function<Scalar(const Vec<Scalar>&)> log_density;
    DensityKind kind = DensityKind::custom;
};

template <class Scalar>
TargetDensity<Scalar> make_standard_gaussian_density() {
    return {[](const Vec<Scalar>& x) { return Scalar(-0.5) * x.squaredNorm(); },
            DensityKind::standard_gaussian};
}

template <class Scalar>
TargetDensity<Scalar> make_uniform_density() {
    return {[](const Vec<Scalar>&) { return Scalar(0); }, DensityKind::uniform_on_region};
}

/// Central finite-difference step, balancing truncation against roundoff.
template <class Scalar>
Scalar fd_step(const Vec<Scalar>& x) {
    return std::max(Scalar(1e-6), Scalar(1e-7) * x.norm());
}

/// lambda(x) - c; the zero vector iff x lies on the manifold.
template <class Scalar>
Vec<Scalar> eval_constraint(const ConstraintManifold<Scalar>& m, const Vec<Scalar>& x) {
    if (x.size() != m.ambient_dim)
        throw InputError("eval_constraint: point has wrong dimension");
    if (m.codim == 0) return Vec<Scalar>::Zero(0);
    return m.value_oracle(x) - m.constraint_value;
}

/// Jacobian of lambda at x (k x n), analytic if available, otherwise central
/// finite differences with step fd_step(x).
template <class Scalar>
Mat<Scalar> jacobian(const ConstraintManifold<Scalar>& m, const Vec<Scalar>& x) {
    if (x.size() != m.ambient_dim) throw InputError("jacobian: point has wrong dimension");
    Mat<Scalar> J;
    if (m.jacobian_oracle) {
        J = m.jacobian_oracle(x);
    } else {
        const Scalar h = fd_step(x);
        J.resize(m.codim, m.ambient_dim);
        Vec<Scalar> xp = x, xm = x;
        for (Index j = 0; j < m.ambient_dim; ++j) {
            xp[j] += h;
            xm[j] -= h;
            J.col(j) = (m.value_oracle(xp) - m.value_oracle(xm)) / (Scalar(2) * h);
            xp[j] = x[j];
            xm[j] = x[j];
        }
    }
    if (!J.allFinite()) throw NumericalError("jacobian: non-finite entries");
    return J;
}

/// k stacked symmetric n x n matrices of second partials, one per constraint.
/// Fallback differentiates the Jacobian with central differences.
template <class Scalar>
std::vector<Mat<Scalar>> hessian(const ConstraintManifold<Scalar>& m, const Vec<Scalar>& x) {
    if (m.hessian_oracle) return m.hessian_oracle(x);
    const Scalar h = std::max(Scalar(1e-5), Scalar(1e-6) * x.norm());
    std::vector<Mat<Scalar>> H(std::size_t(m.codim),
                               Mat<Scalar>::Zero(m.ambient_dim, m.ambient_dim));
    Vec<Scalar> xp = x, xm = x;
    for (Index j = 0; j < m.ambient_dim; ++j) {
        xp[j] += h;
        xm[j] -= h;
        const Mat<Scalar> Jp = jacobian(m, xp);
        const Mat<Scalar> Jm = jacobian(m, xm);
        for (Index i = 0; i < m.codim; ++i)
            H[std::size_t(i)].col(j) = (Jp.row(i) - Jm.row(i)).transpose() / (Scalar(2) * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    for (auto& Hi : H) Hi = ((Hi + Hi.transpose()) / Scalar(2)).eval();  // symmetrize fd noise
    return H;
}

inline constexpr double kRankTolerance = 1e-10;

/// Product of the singular values of grad(lambda) * tangent_basis, i.e. the
/// generalized determinant |grad(lambda o T)| for T the embedding of the
/// subspace spanned by the (orthonormal) columns of tangent_basis.
/// Throws DegenerateError if the restriction loses rank.
template <class Scalar>
Scalar restricted_jacobian_det(const ConstraintManifold<Scalar>& m, const Vec<Scalar>& x,
                               const Mat<Scalar>& tangent_basis) {
    if (m.codim == 0) return Scalar(1);
    if (tangent_basis.rows() != m.ambient_dim || tangent_basis.cols() < m.codim)
        throw InputError("restricted_jacobian_det: tangent basis must be n x p with p >= k");
    const Mat<Scalar> A = jacobian(m, x) * tangent_basis;  // k x p
    Eigen::JacobiSVD<Mat<Scalar>> svd(A);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] <= Scalar(kRankTolerance) * sv[0])
        throw DegenerateError("restricted_jacobian_det: restriction is rank deficient");
    Scalar prod = 1;
    for (Index i = 0; i < sv.size(); ++i) prod *= sv[i];
    return prod;
}

/// |grad lambda(x)| over the whole ambient space.
template <class Scalar>
Scalar full_jacobian_det(const ConstraintManifold<Scalar>& m, const Vec<Scalar>& x) {
    return restricted_jacobian_det(m, x, Mat<Scalar>::Identity(m.ambient_dim, m.ambient_dim));
}

// ---------------------------------------------------------------------------
// Built-in manifolds

/// Sphere of given radius about `center`: lambda(x) = ||x - center||^2.
template <class Scalar>
ConstraintManifold<Scalar> make_sphere_manifold(Vec<Scalar> center, Scalar radius) {
    if (!(radius > Scalar(0))) throw InputError("make_sphere_manifold: radius must be positive");
    const Index n = center.size();
    ConstraintManifold<Scalar> m;
    m.ambient_dim = n;
    m.codim = 1;
    m.constraint_value = Vec<Scalar>::Constant(1, radius * radius);
    m.homogeneous = true;
    m.value_oracle = [center](const Vec<Scalar>& x) {
        return Vec<Scalar>::Constant(1, (x - center).squaredNorm());
    };
    m.jacobian_oracle = [center](const Vec<Scalar>& x) {
        Mat<Scalar> J(1, x.size());
        J.row(0) = Scalar(2) * (x - center).transpose();
        return J;
    };
    m.hessian_oracle = [n](const Vec<Scalar>&) {
        return std::vector<Mat<Scalar>>{Scalar(2) * Mat<Scalar>::Identity(n, n)};
    };
    return m;
}

/// Circle of given radius about `center` inside the coordinate plane spanned by
/// axes (0, 1): constraints ||x - center||^2 = r^2 and x_j = center_j, j >= 2.
template <class Scalar>
ConstraintManifold<Scalar> make_circle_manifold(Vec<Scalar> center, Scalar radius) {
    const Index n = center.size();
    if (n < 2) throw InputError("make_circle_manifold: need ambient dimension >= 2");
    if (!(radius > Scalar(0))) throw InputError("make_circle_manifold: radius must be positive");
    ConstraintManifold<Scalar> m;
    m.ambient_dim = n;
    m.codim = n - 1;
    m.constraint_value = Vec<Scalar>::Zero(n - 1);
    m.constraint_value[0] = radius * radius;
    m.homogeneous = true;
    m.value_oracle = [center, n](const Vec<Scalar>& x) {
        Vec<Scalar> v(n - 1);
        v[0] = (x - center).squaredNorm();
        for (Index j = 2; j < n; ++j) v[j - 1] = x[j] - center[j];
        return v;
    };
    m.jacobian_oracle = [center, n](const Vec<Scalar>& x) {
        Mat<Scalar> J = Mat<Scalar>::Zero(n - 1, n);
        J.row(0) = Scalar(2) * (x - center).transpose();
        for (Index j = 2; j < n; ++j) J(j - 1, j) = Scalar(1);
        return J;
    };
    m.hessian_oracle = [n](const Vec<Scalar>&) {
        std::vector<Mat<Scalar>> H(std::size_t(n - 1), Mat<Scalar>::Zero(n, n));
        H[0] = Scalar(2) * Mat<Scalar>::Identity(n, n);
        return H;
    };
    return m;
}

/// Affine subspace {x : A x = b} with A (k x n) of full row rank.
template <class Scalar>
ConstraintManifold<Scalar> make_affine_manifold(Mat<Scalar> A, Vec<Scalar> b) {
    ConstraintManifold<Scalar> m;
    m.ambient_dim = A.cols();
    m.codim = A.rows();
    m.constraint_value = std::move(b);
    m.homogeneous = true;
    m.value_oracle = [A](const Vec<Scalar>& x) { return (A * x).eval(); };
    m.jacobian_oracle = [A](const Vec<Scalar>&) { return A; };
    m.hessian_oracle = [A](const Vec<Scalar>&) {
        return std::vector<Mat<Scalar>>(std::size_t(A.rows()),
                                        Mat<Scalar>::Zero(A.cols(), A.cols()));
    };
    return m;
}

/// Full-dimensional "manifold" (k = 0): conditioning on nothing.
template <class Scalar>
ConstraintManifold<Scalar> make_full_space(Index n) {
    ConstraintManifold<Scalar> m;
    m.ambient_dim = n;
    m.codim = 0;
    m.constraint_value = Vec<Scalar>::Zero(0);
    m.homogeneous = true;
    return m;
}

/// Union of equal-radius sphere shells, as a piecewise-smooth value oracle:
/// the constraint of the nearest sphere is used.  The gradient is undefined on
/// the boundaries between cells (measure zero); oracles return the active
/// sphere's derivatives there.
template <class Scalar>
ConstraintManifold<Scalar> make_sphere_collection_manifold(std::vector<Vec<Scalar>> centers,
                                                           Scalar radius) {
    if (centers.empty()) throw InputError("make_sphere_collection_manifold: no centers");
    const Index n = centers[0].size();
    auto nearest = [centers](const Vec<Scalar>& x) {
        std::size_t best = 0;
        Scalar bd = std::numeric_limits<Scalar>::max();
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const Scalar d = (x - centers[i]).squaredNorm();
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        return best;
    };
    ConstraintManifold<Scalar> m;
    m.ambient_dim = n;
    m.codim = 1;
    m.constraint_value = Vec<Scalar>::Constant(1, radius * radius);
    m.homogeneous = true;
    m.value_oracle = [centers, nearest](const Vec<Scalar>& x) {
        return Vec<Scalar>::Constant(1, (x - centers[nearest(x)]).squaredNorm());
    };
    m.jacobian_oracle = [centers, nearest](const Vec<Scalar>& x) {
        Mat<Scalar> J(1, x.size());
        J.row(0) = Scalar(2) * (x - centers[nearest(x)]).transpose();
        return J;
    };
    m.hessian_oracle = [n](const Vec<Scalar>&) {
        return std::vector<Mat<Scalar>>{Scalar(2) * Mat<Scalar>::Identity(n, n)};
    };
    return m;
}

}  // namespace igmc
