#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace igmc {

/// log Vol(S^m): surface measure of the unit m-sphere, 2 pi^{(m+1)/2} / Gamma((m+1)/2).
inline double log_sphere_volume(double m) {
    return std::log(2.0) + 0.5 * (m + 1.0) * std::log(M_PI) - std::lgamma(0.5 * (m + 1.0));
}

inline double sphere_volume(double m) { return std::exp(log_sphere_volume(m)); }

/// log Vol(B^q): Lebesgue volume of the unit ball in R^q.
inline double log_ball_volume(double q) {
    return 0.5 * q * std::log(M_PI) - std::lgamma(0.5 * q + 1.0);
}

inline double ball_volume(double q) { return std::exp(log_ball_volume(q)); }

/// log density of the chi distribution with `dof` degrees of freedom at r > 0.
inline double chi_log_pdf(double r, double dof) {
    if (r <= 0.0) return -std::numeric_limits<double>::infinity();
    return (1.0 - 0.5 * dof) * std::log(2.0) + (dof - 1.0) * std::log(r) - 0.5 * r * r -
           std::lgamma(0.5 * dof);
}

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
/// Series for x < a+1, Lentz continued fraction otherwise.
inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        // P(a,x) by series, return 1 - P
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - lg);
        return 1.0 - p;
    }
    // continued fraction for Q
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - lg);
}

/// Survival function of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

/// Kolmogorov distribution survival function Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * double(j) * double(j) * lambda * lambda);
        sum += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

/// log of the modified Bessel function I_nu(x) for nu >= 0, x >= 0.
/// Power series for moderate x, uniform asymptotic expansion for large x.
inline double log_bessel_i(double nu, double x) {
    if (x < 0.0 || nu < 0.0) throw std::invalid_argument("log_bessel_i: bad arguments");
    if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (x < 30.0 + nu) {
        // I_nu(x) = sum_m (x/2)^{2m+nu} / (m! Gamma(m+nu+1)), summed in log space
        const double lh = std::log(0.5 * x);
        double max_lt = -std::numeric_limits<double>::infinity();
        double lt0 = nu * lh - std::lgamma(nu + 1.0);
        // accumulate exp(lt - max) in two passes is overkill; one pass with rescaling
        double sum = 0.0;
        double lt = lt0;
        max_lt = lt;
        sum = 1.0;
        for (int m = 1; m <= 400; ++m) {
            lt += 2.0 * lh - std::log(double(m)) - std::log(nu + double(m));
            if (lt > max_lt) {
                sum = sum * std::exp(max_lt - lt) + 1.0;
                max_lt = lt;
            } else {
                const double t = std::exp(lt - max_lt);
                sum += t;
                if (t < 1e-18 * sum && m > 4) break;
            }
        }
        return max_lt + std::log(sum);
    }
    // asymptotic: I_nu(x) ~ e^x / sqrt(2 pi x) * (1 - (4nu^2-1)/(8x) + ...)
    const double mu = 4.0 * nu * nu;
    const double ix = 1.0 / (8.0 * x);
    double corr = 1.0 - (mu - 1.0) * ix + (mu - 1.0) * (mu - 9.0) * ix * ix / 2.0 -
                  (mu - 1.0) * (mu - 9.0) * (mu - 25.0) * ix * ix * ix / 6.0;
    return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(corr);
}

}  // namespace igmc
