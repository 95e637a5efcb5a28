#pragma once

#include "debm/data.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace debm {

template <typename Scalar>
Scalar gaussian_log_pdf(Scalar x, Scalar mu, Scalar sigma)
{
    using std::log;
    const Scalar z = (x - mu) / sigma;
    return Scalar(-0.5) * z * z - log(sigma) - Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

/// log(exp(a) + exp(b)) without overflow; -inf inputs are handled.
template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b)
{
    using std::exp;
    using std::log1p;
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<Scalar>::infinity()) return a;
    return a + log1p(exp(b - a));
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

struct MixtureBounds {
    Interval mu_pre, sigma_pre;
    Interval mu_post, sigma_post;
    Interval theta_post;
};

/// Two-Gaussian model of one biomarker: pre-event (normal) and post-event (abnormal) classes.
struct MixtureFit {
    double mu_pre = 0.0, sigma_pre = 1.0;
    double mu_post = 1.0, sigma_post = 1.0;
    double theta_pre = 0.5, theta_post = 0.5;
    MixtureBounds bounds;

    // diagnostics from fit_gmm
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; // log-likelihood after each outer iteration
    std::vector<std::string> warnings;

    /// +1 when abnormality raises the value, -1 when it lowers it.
    int direction() const { return mu_post > mu_pre ? 1 : -1; }
    double log_pdf_pre(double x) const { return gaussian_log_pdf(x, mu_pre, sigma_pre); }
    double log_pdf_post(double x) const { return gaussian_log_pdf(x, mu_post, sigma_post); }

    /// Throws FitError unless sigmas are positive, thetas sum to one and the means differ.
    void validate() const;
};

struct MixtureOptions {
    /// Mean bounds extend this many initial sigmas toward the other class.
    double mean_shift_sigmas = 1.0;
    /// Sigma bounds are [sigma_init, sigma_max_factor * sigma_init].
    double sigma_max_factor = 2.0;
    double theta_min = 0.01;
    double theta_max = 0.99;
    /// Outer loop stops once theta_post moves less than this.
    double theta_tolerance = 1e-3;
    int max_outer_iterations = 100;
    /// Coordinate sweeps over the Gaussian parameters per outer iteration.
    int max_inner_sweeps = 1;
    /// Responsibility-average updates of theta per outer iteration.
    int theta_steps = 1;
};

/// Bayes-classifier initialization from CN and AD values (MCI and missing values are ignored).
/// Misclassified training values are dropped before the per-class statistics are recomputed.
MixtureFit init_estimates(std::span<const double> values, std::span<const Diagnosis> labels,
                          const MixtureOptions& options = {});

/// Alternating bounded maximization of the mixture log-likelihood over all non-missing values.
MixtureFit fit_gmm(std::span<const double> values, const MixtureFit& init, const MixtureOptions& options = {});

/// Summed log-likelihood of the non-missing values under the mixture.
double mixture_log_likelihood(std::span<const double> values, const MixtureFit& fit);

/// p(abnormal | x) with the mixing fractions as priors. Missing x gives missing output.
double posterior(const MixtureFit& fit, double x);

} // namespace debm
