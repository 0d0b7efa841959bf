#pragma once

#include "igmc/manifold.hpp"
#include "igmc/rng.hpp"
#include "igmc/special.hpp"
#include "igmc/types.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <optional>

namespace igmc {

/// Linear search-subspace: orthonormal basis of the span plus a center point.
template <class Scalar>
struct SearchSubspace {
    Mat<Scalar> basis;   // n x d, orthonormal columns
    Vec<Scalar> center;  // point the affine subspace passes through
    Index dim = 0;
};

template <class Scalar>
struct SphereRestriction {
    Vec<Scalar> center;
    Scalar radius;
};

enum class Space { spherical, euclidean };

struct CroftonConstant {
    int d = 0, k = 0, n = 0;
    Space space = Space::spherical;
    double value = 0;
    double std_error = 0;  // zero for the closed form
};

/// First d columns of a Haar-distributed orthogonal matrix: QR of a Gaussian
/// matrix with the sign convention diag(R) > 0, which makes the result a
/// deterministic function of the Gaussian draw.
template <class Scalar>
Mat<Scalar> haar_orthogonal_columns(Index n, Index d, RandomStream<Scalar>& rng) {
    if (d < 1 || d > n) throw InputError("haar_orthogonal_columns: need 1 <= d <= n");
    const Mat<Scalar> G = rng.normal_mat(n, d);
    Eigen::HouseholderQR<Mat<Scalar>> qr(G);
    Mat<Scalar> Q = qr.householderQ() * Mat<Scalar>::Identity(n, d);
    const Mat<Scalar> R = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j)
        if (R(j, j) < Scalar(0)) Q.col(j) = -Q.col(j);
    return Q;
}

/// Isotropic (rotation-invariant) random d-dimensional linear subspace through
/// `center`.
template <class Scalar>
SearchSubspace<Scalar> isotropic_subspace(Index n, Index d, Vec<Scalar> center,
                                          RandomStream<Scalar>& rng) {
    if (center.size() != n) throw InputError("isotropic_subspace: center has wrong dimension");
    return {haar_orthogonal_columns(n, d, rng), std::move(center), d};
}

/// Orthonormal basis of the orthogonal complement of a unit vector, built from
/// a Householder reflection (deterministic, no RNG).
template <class Scalar>
Mat<Scalar> complement_basis(const Vec<Scalar>& unit) {
    const Index n = unit.size();
    Mat<Scalar> M(n, 1);
    M.col(0) = unit;
    Eigen::HouseholderQR<Mat<Scalar>> qr(M);
    const Mat<Scalar> Q = qr.householderQ() * Mat<Scalar>::Identity(n, n);
    return Q.rightCols(n - 1);
}

/// Orthonormal basis of the tangent space of the sphere at x (the orthogonal
/// complement of the radial direction).
template <class Scalar>
Mat<Scalar> sphere_tangent_basis(const SphereRestriction<Scalar>& sph, const Vec<Scalar>& x) {
    const Vec<Scalar> radial = x - sph.center;
    const Scalar r = radial.norm();
    if (std::abs(r - sph.radius) > Scalar(1e-8) * sph.radius)
        throw InputError("sphere_tangent_basis: point is not on the sphere");
    return complement_basis<Scalar>((radial / r).eval());
}

/// Orthonormal basis of span(S) intersected with the sphere tangent space at x,
/// dimension d-1.  Throws DegenerateError on tangency.
template <class Scalar>
Mat<Scalar> subspace_sphere_tangent_basis(const SearchSubspace<Scalar>& S,
                                          const SphereRestriction<Scalar>& sph,
                                          const Vec<Scalar>& x) {
    const Vec<Scalar> radial = x - sph.center;
    const Scalar r = radial.norm();
    if (std::abs(r - sph.radius) > Scalar(1e-8) * sph.radius)
        throw InputError("subspace_sphere_tangent_basis: point is not on the sphere");
    const Vec<Scalar> resid = x - S.center - S.basis * (S.basis.transpose() * (x - S.center));
    if (resid.norm() > Scalar(1e-6) * std::max(Scalar(1), x.norm()))
        throw InputError("subspace_sphere_tangent_basis: point is not in the subspace");
    const Vec<Scalar> w = S.basis.transpose() * (radial / r);
    const Scalar wn = w.norm();
    if (wn < Scalar(1e-10))
        throw DegenerateError("subspace_sphere_tangent_basis: subspace tangent to the sphere");
    if (S.dim == 1) return Mat<Scalar>(S.basis.rows(), 0);
    return S.basis * complement_basis<Scalar>((w / wn).eval());
}

/// Cauchy–Crofton constant.  Spherical case in closed form,
/// Vol(S^{n-k}) Vol(S^d) / Vol(S^{d-k}); the Euclidean constant is only
/// available through Monte Carlo calibration (calibrate_crofton).
inline CroftonConstant crofton_constant(int d, int k, int n, Space space) {
    if (!(1 <= k && k <= d && d <= n)) throw InputError("crofton_constant: need 1 <= k <= d <= n");
    if (space != Space::spherical)
        throw InputError("crofton_constant: euclidean constant requires calibrate_crofton");
    CroftonConstant c;
    c.d = d;
    c.k = k;
    c.n = n;
    c.space = space;
    c.value = std::exp(log_sphere_volume(n - k) + log_sphere_volume(d) - log_sphere_volume(d - k));
    return c;
}

/// Dimension of the intersection of the spans of two orthonormal-column
/// matrices, counted through the principal angles (singular values of U^T V
/// equal to one).
template <class Scalar>
Index span_intersection_dim(const Mat<Scalar>& U, const Mat<Scalar>& V, Scalar tol = Scalar(1e-8)) {
    Eigen::JacobiSVD<Mat<Scalar>> svd(U.transpose() * V);
    const auto& sv = svd.singularValues();
    Index dim = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv[i] > Scalar(1) - tol) ++dim;
    return dim;
}

namespace detail {

/// Euclidean calibration reference: unit sphere in R^n (codimension 1).
/// Offsets drawn uniformly in the unit ball of the orthogonal complement make
/// every plane hit the sphere, and the intersection is a (d-1)-sphere of
/// radius sqrt(1 - s^2) whose volume is analytic.
inline double euclidean_reference_log_volume(int n) { return log_sphere_volume(n - 1); }

}  // namespace detail

/// Monte Carlo calibration of the Crofton constant: draw kinematic-measure
/// subspaces against a reference manifold of known volume and solve
///   Vol_{n-k}(M) = c / Vol_d(S) * E_S[Vol_{d-k}(S cap M)]
/// for c.  Also serves as an independent check of the spherical closed form.
template <class Scalar>
CroftonConstant calibrate_crofton(int d, int k, int n, Space space, std::size_t samples,
                                  RandomStream<Scalar>& rng) {
    if (!(1 <= k && k <= d && d <= n)) throw InputError("calibrate_crofton: need 1 <= k <= d <= n");
    if (samples < 2) throw InputError("calibrate_crofton: need at least 2 samples");
    CroftonConstant out;
    out.d = d;
    out.k = k;
    out.n = n;
    out.space = space;

    double sum = 0, sum2 = 0;
    std::size_t hits = 0;
    if (space == Space::spherical) {
        // Reference: great (n-k)-subsphere of S^n (span = first n-k+1 coordinates).
        // S cap M is a great subsphere whose dimension follows from the principal
        // angles between the two spans in R^{n+1}.
        Mat<Scalar> ref = Mat<Scalar>::Zero(n + 1, n - k + 1);
        for (Index i = 0; i < n - k + 1; ++i) ref(i, i) = Scalar(1);
        for (std::size_t s = 0; s < samples; ++s) {
            const Mat<Scalar> Q = haar_orthogonal_columns<Scalar>(n + 1, d + 1, rng);
            const Index idim = span_intersection_dim(ref, Q);
            double v = 0;
            if (idim >= 1) {
                v = sphere_volume(double(idim - 1));
                ++hits;
            }
            sum += v;
            sum2 += v * v;
        }
        if (hits == 0) throw EstimationError("calibrate_crofton: no intersections observed");
        const double mean = sum / double(samples);
        const double var = std::max(0.0, sum2 / double(samples) - mean * mean);
        const double vol_m = sphere_volume(double(n - k));
        const double vol_s = sphere_volume(double(d));
        out.value = vol_m * vol_s / mean;
        out.std_error = out.value / mean * std::sqrt(var / double(samples));
        return out;
    }

    // Euclidean case.  Only codimension-1 references are supported: the unit
    // sphere with offsets uniform in the unit ball of the (n-d)-dimensional
    // complement, so the kinematic measure mass of the plane window is
    // Vol(B^{n-d}) and the intersection volume is analytic.
    if (k != 1)
        throw InputError("calibrate_crofton: euclidean calibration implemented for k = 1 only");
    const int q = n - d;
    for (std::size_t s = 0; s < samples; ++s) {
        // The intersection volume depends only on the offset norm; the subspace
        // direction integrates out by isotropy, so draw the norm directly.
        const double off = std::pow(double(rng.uniform()), 1.0 / double(q));
        const double v = (d == k) ? 2.0  // points: counting measure, two antipodes
                                  : sphere_volume(double(d - 1)) *
                                        std::pow(1.0 - off * off, 0.5 * double(d - 1));
        ++hits;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / double(samples);
    const double var = std::max(0.0, sum2 / double(samples) - mean * mean);
    const double window = ball_volume(double(q));
    out.value = std::exp(detail::euclidean_reference_log_volume(n)) / (window * mean);
    out.std_error = out.value / mean * std::sqrt(var / double(samples));
    return out;
}

}  // namespace igmc
