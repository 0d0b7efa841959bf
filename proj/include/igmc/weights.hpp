#pragma once

#include "igmc/geometry.hpp"
#include "igmc/manifold.hpp"
#include "igmc/rng.hpp"
#include "igmc/special.hpp"
#include "igmc/stats.hpp"
#include "igmc/types.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace igmc {

enum class WeightScheme { traditional, first_order, curvature };

inline const char* to_string(WeightScheme s) {
    switch (s) {
        case WeightScheme::traditional: return "traditional";
        case WeightScheme::first_order: return "first_order";
        case WeightScheme::curvature: return "curvature";
    }
    return "?";
}

template <class Scalar>
struct WeightConfig {
    WeightScheme scheme = WeightScheme::first_order;
    Scalar cutoff_low = Scalar(1e-8);   // lower clamp a for the curvature pre-weight
    Scalar cutoff_high = Scalar(1e8);   // upper clamp b
    int normalization_mc_samples = 10000;

    void validate() const {
        if (!(cutoff_low < cutoff_high))
            throw InputError("WeightConfig: cutoff_low must be below cutoff_high");
        if (cutoff_low < Scalar(0)) throw InputError("WeightConfig: cutoff_low must be >= 0");
        if (scheme == WeightScheme::curvature && normalization_mc_samples < 100)
            throw InputError("WeightConfig: curvature scheme needs >= 100 normalization samples");
    }
};

/// Second fundamental form of the intersected manifold at a point, in an
/// orthonormal tangent basis, together with |Pf| computed as the Gauss-map
/// determinant (hypersurface case).
template <class Scalar>
struct CurvatureForm {
    Mat<Scalar> shape_matrix;
    Scalar pfaffian_abs = 0;
};

/// Density of steps of length r; pass step_density_one when the radius was
/// drawn from its own law and must not be double counted.
template <class Scalar>
using StepDensity = std::function<Scalar(Scalar)>;

template <class Scalar>
Scalar step_density_one(Scalar) {
    return Scalar(1);
}

namespace detail {

/// Value of the target density relative to its level on the sphere: for a
/// standard Gaussian the density is constant on each centered sphere and the
/// radial part is carried by the radius draw, so the on-sphere factor is 1.
/// (Using the raw ambient density here would double count the radius law; it
/// also breaks the k = 0 case where all weights must coincide.)
template <class Scalar>
Scalar on_slice_density(const TargetDensity<Scalar>& f, const SphereRestriction<Scalar>& sph,
                        const Vec<Scalar>& x) {
    if (f.kind == DensityKind::standard_gaussian && sph.center.isZero(Scalar(0)))
        return Scalar(1);
    const Scalar ref = f.log_density(x);
    if (!std::isfinite(ref)) return Scalar(0);
    Scalar base = Scalar(0);
    if (f.kind == DensityKind::standard_gaussian)
        base = Scalar(-0.5) * (sph.center.squaredNorm() + sph.radius * sph.radius);
    return std::exp(ref - base);
}

}  // namespace detail

/// Gibbs weight conditioned on the realized search-subspace: the target
/// density over the generalized determinant of grad(lambda) restricted to the
/// tangent space of S cap sphere at x (the 1/sin(theta) weight).
template <class Scalar>
Scalar traditional_weight(const ConstraintManifold<Scalar>& m, const TargetDensity<Scalar>& f,
                          const SearchSubspace<Scalar>& S, const SphereRestriction<Scalar>& sph,
                          const Vec<Scalar>& x,
                          const StepDensity<Scalar>& rho = step_density_one<Scalar>) {
    const Scalar fx = detail::on_slice_density(f, sph, x);
    const Scalar r = (x - sph.center).norm();
    if (m.codim == 0) return fx * rho(r);
    const Mat<Scalar> T = subspace_sphere_tangent_basis(S, sph, x);
    return fx * rho(r) / restricted_jacobian_det(m, x, T);
}

/// Orientation-independent weight: the restriction is to the full sphere
/// tangent space, so only the differential thickness of the level set at x
/// enters.  The optional Crofton constant supplies the global factor
/// c / Vol_d(S) needed by volume estimators; samplers omit it (it cancels in
/// self-normalized estimates).
template <class Scalar>
Scalar first_order_weight(const ConstraintManifold<Scalar>& m, const TargetDensity<Scalar>& f,
                          const SphereRestriction<Scalar>& sph, const Vec<Scalar>& x,
                          const std::optional<CroftonConstant>& crofton = std::nullopt,
                          const StepDensity<Scalar>& rho = step_density_one<Scalar>) {
    const Scalar fx = detail::on_slice_density(f, sph, x);
    const Scalar r = (x - sph.center).norm();
    Scalar prefactor = 1;
    if (crofton)
        prefactor = Scalar(crofton->value / sphere_volume(double(crofton->d)));
    if (m.codim == 0) return prefactor * fx * rho(r);
    const Mat<Scalar> T = sphere_tangent_basis(sph, x);
    return prefactor * fx * rho(r) / restricted_jacobian_det(m, x, T);
}

/// Shape matrix of N = {lambda = c} cap V at x, with V the containing slice
/// given by an orthonormal tangent basis (n x p).  N is treated as a
/// hypersurface of the slice (effective codimension 1):
///   H_ij = t_i^T Hess(lambda) t_j / ||P_V grad(lambda)||
/// over the tangent basis t of V cap ker(grad lambda), and |Pf| is the
/// Gauss-map determinant |det H|.
template <class Scalar>
CurvatureForm<Scalar> intersection_curvature(const ConstraintManifold<Scalar>& m,
                                             const Mat<Scalar>& container_basis,
                                             const Vec<Scalar>& x) {
    if (m.codim != 1)
        throw InputError("intersection_curvature: implemented for codimension-1 manifolds");
    if (!m.hessian_oracle && !m.value_oracle)
        throw InputError("intersection_curvature: manifold lacks oracles");
    const Index p = container_basis.cols();
    if (p < 1) throw InputError("intersection_curvature: empty container");
    const Mat<Scalar> J = jacobian(m, x);
    const Vec<Scalar> g = J.row(0).transpose();
    const Vec<Scalar> w = container_basis.transpose() * g;
    const Scalar wn = w.norm();
    if (wn <= Scalar(kRankTolerance) * g.norm())
        throw DegenerateError("intersection_curvature: slice tangent to the level set");
    CurvatureForm<Scalar> out;
    if (p == 1) {  // 0-dimensional intersection: empty form, unit pfaffian
        out.shape_matrix = Mat<Scalar>(0, 0);
        out.pfaffian_abs = Scalar(1);
        return out;
    }
    const Mat<Scalar> T = container_basis * complement_basis<Scalar>((w / wn).eval());
    const Mat<Scalar> Hfull = hessian(m, x)[0];
    Mat<Scalar> H = (T.transpose() * Hfull * T) / wn;
    H = ((H + H.transpose()) / Scalar(2)).eval();
    out.shape_matrix = H;
    out.pfaffian_abs = std::abs(Scalar(H.determinant()));
    return out;
}

/// Curvature of S cap M cap sphere at x (the form used by the curvature-aware
/// sampler): the containing slice is span(S) cap sphere-tangent.
template <class Scalar>
CurvatureForm<Scalar> intersection_curvature(const ConstraintManifold<Scalar>& m,
                                             const SearchSubspace<Scalar>& S,
                                             const SphereRestriction<Scalar>& sph,
                                             const Vec<Scalar>& x) {
    return intersection_curvature(m, subspace_sphere_tangent_basis(S, sph, x), x);
}

/// Curvature of S cap M at x for a flat (plane) search-subspace.
template <class Scalar>
CurvatureForm<Scalar> intersection_curvature(const ConstraintManifold<Scalar>& m,
                                             const SearchSubspace<Scalar>& S, const Vec<Scalar>& x) {
    return intersection_curvature(m, S.basis, x);
}

/// Conversion from the Gauss-map determinant of an m-dimensional hypersurface
/// to the Chern–Gauss–Bonnet integrand: Pf(Omega) = kappa_m det(shape) with
/// kappa_m = 2 (2 pi)^{m/2} / Vol(S^m)  (kappa_2 = 1, kappa_4 = 3, ...).
inline double chern_gauss_bonnet_factor(int m_dim) {
    return 2.0 * std::pow(2.0 * M_PI, 0.5 * double(m_dim)) / sphere_volume(double(m_dim));
}

template <class Scalar>
struct NormalizationEstimate {
    Scalar mean = 0;
    Scalar std_error = 0;
    int degenerate_draws = 0;
};

/// Monte Carlo estimate of E_Q[ clamp(|Pf|, a, b) * det(Proj_{normal} Q) ] over
/// Haar-random d-frames Q rotated about x.  The optional sphere restricts each
/// rotated slice to the sphere tangent space, matching the sampler's geometry.
template <class Scalar>
NormalizationEstimate<Scalar> curvature_normalization(
    const ConstraintManifold<Scalar>& m, const Vec<Scalar>& x, Index d, int mc_samples,
    RandomStream<Scalar>& rng, const WeightConfig<Scalar>& cfg,
    const std::optional<SphereRestriction<Scalar>>* sph = nullptr) {
    if (mc_samples < 100) throw InputError("curvature_normalization: need >= 100 draws");
    const Index n = m.ambient_dim;
    const Mat<Scalar> J = jacobian(m, x);
    Eigen::HouseholderQR<Mat<Scalar>> qr(J.transpose());
    const Mat<Scalar> normal_basis = qr.householderQ() * Mat<Scalar>::Identity(n, m.codim);

    double sum = 0, sum2 = 0;
    int degenerate = 0;
    std::optional<Vec<Scalar>> radial;
    if (sph && sph->has_value()) {
        Vec<Scalar> u = x - (*sph)->center;
        radial = (u / u.norm()).eval();
    }
    for (int i = 0; i < mc_samples; ++i) {
        const Mat<Scalar> Q = haar_orthogonal_columns<Scalar>(n, d, rng);
        try {
            Mat<Scalar> container = Q;
            if (radial) {
                const Vec<Scalar> w = Q.transpose() * *radial;
                const Scalar wn = w.norm();
                if (wn < Scalar(1e-10)) throw DegenerateError("rotated slice tangent to sphere");
                container = Q * complement_basis<Scalar>((w / wn).eval());
            }
            const CurvatureForm<Scalar> cf = intersection_curvature(m, container, x);
            const Scalar pre = std::clamp(cf.pfaffian_abs, cfg.cutoff_low, cfg.cutoff_high);
            Eigen::JacobiSVD<Mat<Scalar>> svd(normal_basis.transpose() * Q);
            Scalar gdet = 1;
            for (Index s = 0; s < svd.singularValues().size(); ++s)
                gdet *= svd.singularValues()[s];
            const double term = double(pre * gdet);
            sum += term;
            sum2 += term * term;
        } catch (const DegenerateError&) {
            ++degenerate;
        }
    }
    const int used = mc_samples - degenerate;
    if (used == 0) throw EstimationError("curvature_normalization: all draws degenerate");
    NormalizationEstimate<Scalar> est;
    est.mean = Scalar(sum / double(used));
    const double var = std::max(0.0, sum2 / double(used) - double(est.mean) * double(est.mean));
    est.std_error = Scalar(std::sqrt(var / double(used)));
    est.degenerate_draws = degenerate;
    if (!(est.mean > Scalar(0)))
        throw EstimationError("curvature_normalization: estimate is not positive");
    return est;
}

/// Second-order weight: first_order_weight times the clamped curvature
/// pre-weight over its Haar-rotation normalization.  A precomputed
/// normalization may be supplied (homogeneous manifolds: it is constant).
template <class Scalar>
Scalar curvature_weight(const ConstraintManifold<Scalar>& m, const TargetDensity<Scalar>& f,
                        const SearchSubspace<Scalar>& S, const SphereRestriction<Scalar>& sph,
                        const Vec<Scalar>& x, const WeightConfig<Scalar>& cfg,
                        RandomStream<Scalar>& rng,
                        const std::optional<CroftonConstant>& crofton = std::nullopt,
                        const StepDensity<Scalar>& rho = step_density_one<Scalar>,
                        std::optional<Scalar> precomputed_normalization = std::nullopt) {
    cfg.validate();
    const Scalar base = first_order_weight(m, f, sph, x, crofton, rho);
    const CurvatureForm<Scalar> cf = intersection_curvature(m, S, sph, x);
    const Scalar pre = std::clamp(cf.pfaffian_abs, cfg.cutoff_low, cfg.cutoff_high);
    Scalar norm;
    if (precomputed_normalization) {
        norm = *precomputed_normalization;
    } else {
        std::optional<SphereRestriction<Scalar>> so(sph);
        norm = curvature_normalization(m, x, S.dim, cfg.normalization_mc_samples, rng, cfg, &so).mean;
    }
    return base * pre / norm;
}

}  // namespace igmc
