#pragma once

#include "igmc/geometry.hpp"
#include "igmc/manifold.hpp"
#include "igmc/rng.hpp"
#include "igmc/types.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace igmc {

template <class Scalar>
struct SolverConfig {
    int max_iters = 60;
    Scalar residual_tol = Scalar(1e-10);
    Scalar step_damping = Scalar(1);    // initial Newton step fraction in (0, 1]
    int max_restarts = 8;               // fresh random starts before giving up
    int randomize_steps = 0;            // tangent-walk moves after convergence
    Scalar randomize_scale = Scalar(0.8);
    Scalar dedup_tol_factor = Scalar(1e-6);  // dedup tolerance = factor * radius

    void validate() const {
        if (max_iters < 1 || !(residual_tol > Scalar(0)))
            throw InputError("SolverConfig: max_iters >= 1 and residual_tol > 0 required");
        if (!(step_damping > Scalar(0)) || step_damping > Scalar(1))
            throw InputError("SolverConfig: step_damping must lie in (0, 1]");
        if (max_restarts < 0 || randomize_steps < 0)
            throw InputError("SolverConfig: counts must be nonnegative");
    }
};

template <class Scalar>
struct IntersectionPoint {
    Vec<Scalar> x;
    Scalar residual_norm = 0;
    int iterations = 0;
    std::uint64_t start_seed = 0;
};

namespace detail {

/// One damped Newton descent on the residual lambda(center + r B u) - c over
/// the unit sphere in subspace coordinates u.  Underdetermined linearizations
/// are resolved by minimum-norm steps.
template <class Scalar>
std::optional<Vec<Scalar>> newton_on_sphere(const ConstraintManifold<Scalar>& m,
                                            const SearchSubspace<Scalar>& S, Scalar r,
                                            Vec<Scalar> u, const SolverConfig<Scalar>& cfg,
                                            int* iterations_out = nullptr) {
    const auto embed = [&](const Vec<Scalar>& v) -> Vec<Scalar> { return S.center + r * (S.basis * v); };
    Vec<Scalar> F = eval_constraint(m, embed(u));
    Scalar fn = F.norm();
    for (int it = 0; it < cfg.max_iters; ++it) {
        if (iterations_out) *iterations_out = it;
        if (fn <= cfg.residual_tol) return u;
        const Mat<Scalar> Ju = jacobian(m, embed(u)) * (r * S.basis);  // k x d
        const Mat<Scalar> Jt = Ju - (Ju * u) * u.transpose();          // restrict to sphere tangent
        Eigen::CompleteOrthogonalDecomposition<Mat<Scalar>> cod(Jt);
        if (cod.rank() < 1) return std::nullopt;
        const Vec<Scalar> du = cod.solve((-F).eval());
        if (!du.allFinite()) return std::nullopt;
        Scalar step = cfg.step_damping;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            Vec<Scalar> u2 = u + step * du;
            const Scalar n2 = u2.norm();
            if (n2 < Scalar(1e-12)) {
                step /= Scalar(2);
                continue;
            }
            u2 /= n2;
            const Vec<Scalar> F2 = eval_constraint(m, embed(u2));
            const Scalar fn2 = F2.norm();
            if (fn2 <= cfg.residual_tol || fn2 < fn * (Scalar(1) - Scalar(0.25) * step)) {
                u = u2;
                F = F2;
                fn = fn2;
                accepted = true;
                break;
            }
            step /= Scalar(2);
        }
        if (!accepted) return std::nullopt;
    }
    return fn <= cfg.residual_tol ? std::optional<Vec<Scalar>>(u) : std::nullopt;
}

/// Random walk along the intersection manifold: a tangent step (orthogonal to
/// both the sphere normal and the constraint rows) followed by a Newton
/// re-projection.  Spreads the deterministic solver's selection over the
/// intersection instead of the start point's nearest-point basin.
template <class Scalar>
Vec<Scalar> tangent_walk(const ConstraintManifold<Scalar>& m, const SearchSubspace<Scalar>& S,
                         Scalar r, Vec<Scalar> u, const SolverConfig<Scalar>& cfg,
                         RandomStream<Scalar>& rng) {
    SolverConfig<Scalar> proj_cfg = cfg;
    proj_cfg.max_iters = std::max(20, cfg.max_iters / 2);
    const auto embed = [&](const Vec<Scalar>& v) -> Vec<Scalar> { return S.center + r * (S.basis * v); };
    for (int step = 0; step < cfg.randomize_steps; ++step) {
        const Mat<Scalar> Ju = jacobian(m, embed(u)) * (r * S.basis);
        Mat<Scalar> Jt = Ju - (Ju * u) * u.transpose();
        Vec<Scalar> z = rng.normal_vec(u.size());
        z -= u * u.dot(z);
        // remove the constraint-normal components within the sphere tangent
        Eigen::HouseholderQR<Mat<Scalar>> qr(Jt.transpose());
        const Mat<Scalar> Nb = qr.householderQ() * Mat<Scalar>::Identity(u.size(), m.codim);
        z -= Nb * (Nb.transpose() * z);
        const Scalar zn = z.norm();
        if (zn < Scalar(1e-12)) continue;
        Vec<Scalar> u2 = u + cfg.randomize_scale * (z / zn);
        u2 /= u2.norm();
        if (auto prj = newton_on_sphere(m, S, r, u2, proj_cfg)) u = *prj;
    }
    return u;
}

}  // namespace detail

/// Finds a point on S cap M cap sphere from random starting points on the
/// great subsphere.  Returns nullopt after max_restarts failed starts
/// (not-found is a value, not an error).
template <class Scalar>
std::optional<IntersectionPoint<Scalar>> solve_intersection(const ConstraintManifold<Scalar>& m,
                                                            const SearchSubspace<Scalar>& S,
                                                            const SphereRestriction<Scalar>& sph,
                                                            const SolverConfig<Scalar>& cfg,
                                                            RandomStream<Scalar>& rng) {
    cfg.validate();
    if (S.dim < m.codim + 1)
        throw InputError("solve_intersection: need subspace dimension >= codim + 1");
    if ((S.center - sph.center).norm() > Scalar(1e-8) * std::max(Scalar(1), sph.radius))
        throw InputError("solve_intersection: subspace must pass through the sphere center");
    const Scalar r = sph.radius;
    for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
        const std::uint64_t start_seed = rng.raw();
        RandomStream<Scalar> start_rng(start_seed);
        Vec<Scalar> u = start_rng.unit_vector(S.dim);
        int iters = 0;
        auto sol = detail::newton_on_sphere(m, S, r, u, cfg, &iters);
        if (!sol) continue;
        if (cfg.randomize_steps > 0) sol = detail::tangent_walk(m, S, r, *sol, cfg, start_rng);
        IntersectionPoint<Scalar> p;
        p.x = S.center + r * (S.basis * *sol);
        p.residual_norm = eval_constraint(m, p.x).norm();
        p.iterations = iters;
        p.start_seed = start_seed;
        if (p.residual_norm < cfg.residual_tol) return p;
    }
    return std::nullopt;
}

/// Multi-start intersection sampling: run the solver from n_starts independent
/// starts, deduplicate the solutions, and select one with probability
/// proportional to weight_fn.  Starts are aggregated in start order, so the
/// result is a deterministic function of the stream.
template <class Scalar>
std::optional<IntersectionPoint<Scalar>> sample_intersection_point(
    const ConstraintManifold<Scalar>& m, const SearchSubspace<Scalar>& S,
    const SphereRestriction<Scalar>& sph, const std::function<Scalar(const Vec<Scalar>&)>& weight_fn,
    int n_starts, const SolverConfig<Scalar>& cfg, RandomStream<Scalar>& rng) {
    if (n_starts < 1) throw InputError("sample_intersection_point: need n_starts >= 1");
    SolverConfig<Scalar> one = cfg;
    one.max_restarts = 0;
    // The caller's stream advances by exactly two draws no matter how many
    // starts succeed, keeping downstream consumers reproducible.
    const Scalar selector = rng.uniform();
    const std::uint64_t start_base = rng.raw();
    std::vector<IntersectionPoint<Scalar>> found;
    const Scalar dedup_tol = cfg.dedup_tol_factor * sph.radius;
    for (int s = 0; s < n_starts; ++s) {
        RandomStream<Scalar> start_rng(derive_seed(start_base, std::uint64_t(s)));
        auto p = solve_intersection(m, S, sph, one, start_rng);
        if (!p) continue;
        bool duplicate = false;
        for (const auto& q : found)
            if ((q.x - p->x).norm() < dedup_tol) {
                duplicate = true;
                break;
            }
        if (!duplicate) found.push_back(std::move(*p));
    }
    if (found.empty()) return std::nullopt;
    if (found.size() == 1) return found.front();
    std::vector<Scalar> weights;
    weights.reserve(found.size());
    for (const auto& p : found) {
        Scalar w;
        try {
            w = weight_fn(p.x);
        } catch (const DegenerateError&) {
            w = Scalar(0);
        }
        weights.push_back(std::max(w, Scalar(0)));
    }
    Scalar total = 0;
    for (Scalar w : weights) total += w;
    if (!(total > Scalar(0))) return found.front();
    Scalar acc = selector * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc -= weights[i];
        if (acc < Scalar(0)) return found[i];
    }
    return found.back();
}

}  // namespace igmc
