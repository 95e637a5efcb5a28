#include "debm/mixture.hpp"

#include "debm/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>

namespace debm {

namespace {

struct ClassStats {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

ClassStats stats_of(const std::vector<double>& v)
{
    ClassStats s;
    s.n = v.size();
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) return s;
    double sq = 0.0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(sq / static_cast<double>(v.size() - 1));
    return s;
}

std::vector<double> observed(std::span<const double> values)
{
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values)
        if (!is_missing(v)) out.push_back(v);
    return out;
}

// Parameter vector layout used by the inner optimizer.
enum Param { MuPre = 0, SigmaPre = 1, MuPost = 2, SigmaPost = 3 };

std::array<double, 4> params_of(const MixtureFit& f) { return {f.mu_pre, f.sigma_pre, f.mu_post, f.sigma_post}; }

std::array<Interval, 4> bounds_of(const MixtureFit& f)
{
    return {f.bounds.mu_pre, f.bounds.sigma_pre, f.bounds.mu_post, f.bounds.sigma_post};
}

double objective(const std::vector<double>& x, const std::array<double, 4>& p, double theta_post)
{
    const double log_post = std::log(theta_post);
    const double log_pre = std::log1p(-theta_post);
    double total = 0.0;
    for (double v : x) {
        total += log_add_exp(log_pre + gaussian_log_pdf(v, p[MuPre], p[SigmaPre]),
                             log_post + gaussian_log_pdf(v, p[MuPost], p[SigmaPost]));
    }
    return total;
}

double checked_objective(const std::vector<double>& x, const std::array<double, 4>& p, double theta_post)
{
    const double c = objective(x, p, theta_post);
    if (!std::isfinite(c)) throw FitError("mixture log-likelihood is not finite (zero-density values)");
    return c;
}

/// Mean responsibility of the post-event class.
double responsibility_mean(const std::vector<double>& x, const std::array<double, 4>& p, double theta_post)
{
    const double log_post = std::log(theta_post);
    const double log_pre = std::log1p(-theta_post);
    double sum = 0.0;
    for (double v : x) {
        const double a = log_post + gaussian_log_pdf(v, p[MuPost], p[SigmaPost]);
        const double b = log_pre + gaussian_log_pdf(v, p[MuPre], p[SigmaPre]);
        sum += 1.0 / (1.0 + std::exp(b - a));
    }
    return sum / static_cast<double>(x.size());
}

} // namespace

void MixtureFit::validate() const
{
    if (!(sigma_pre > 0.0) || !(sigma_post > 0.0)) throw FitError("mixture has non-positive standard deviation");
    if (std::abs(theta_pre + theta_post - 1.0) > 1e-9) throw FitError("mixing fractions do not sum to one");
    if (theta_post < 0.0 || theta_post > 1.0) throw FitError("mixing fraction outside [0,1]");
    if (mu_pre == mu_post) throw FitError("degenerate mixture: identical class means");
}

MixtureFit init_estimates(std::span<const double> values, std::span<const Diagnosis> labels,
                          const MixtureOptions& options)
{
    if (values.size() != labels.size()) throw InputError("init_estimates: values and labels differ in length");

    std::vector<double> cn, ad;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (is_missing(values[k])) continue;
        if (labels[k] == Diagnosis::CN) cn.push_back(values[k]);
        if (labels[k] == Diagnosis::AD) ad.push_back(values[k]);
    }
    if (cn.size() < 3 || ad.size() < 3)
        throw InputError("init_estimates: need at least 3 CN and 3 AD values");

    const ClassStats cn0 = stats_of(cn), ad0 = stats_of(ad);
    if (!(cn0.sd > 0.0) || !(ad0.sd > 0.0)) throw FitError("init_estimates: zero variance within a diagnosis group");

    // Equal-prior Bayes classifier on the per-group Gaussians; keep the correctly classified values.
    auto is_ad = [&](double x) {
        return gaussian_log_pdf(x, ad0.mean, ad0.sd) > gaussian_log_pdf(x, cn0.mean, cn0.sd);
    };
    std::vector<double> cn_easy, ad_easy;
    for (double x : cn)
        if (!is_ad(x)) cn_easy.push_back(x);
    for (double x : ad)
        if (is_ad(x)) ad_easy.push_back(x);
    if (cn_easy.empty() || ad_easy.empty())
        throw FitError("init_estimates: every value of one diagnosis group is misclassified; "
                       "exclude this biomarker");

    const ClassStats pre = stats_of(cn_easy), post = stats_of(ad_easy);
    if (!(pre.sd > 0.0) || !(post.sd > 0.0))
        throw FitError("init_estimates: fewer than two distinct correctly classified values in a group; "
                       "exclude this biomarker");

    MixtureFit fit;
    fit.mu_pre = pre.mean;
    fit.sigma_pre = pre.sd;
    fit.mu_post = post.mean;
    fit.sigma_post = post.sd;
    fit.theta_post = std::clamp(static_cast<double>(post.n) / static_cast<double>(pre.n + post.n),
                                options.theta_min, options.theta_max);
    fit.theta_pre = 1.0 - fit.theta_post;

    // Truncation biases the smaller-mean class downward and the larger-mean class upward,
    // and both sigmas downward, so each bound opens only in the direction of the bias.
    const double shift = options.mean_shift_sigmas;
    if (fit.mu_pre <= fit.mu_post) {
        fit.bounds.mu_pre = {fit.mu_pre, fit.mu_pre + shift * fit.sigma_pre};
        fit.bounds.mu_post = {fit.mu_post - shift * fit.sigma_post, fit.mu_post};
    } else {
        fit.bounds.mu_pre = {fit.mu_pre - shift * fit.sigma_pre, fit.mu_pre};
        fit.bounds.mu_post = {fit.mu_post, fit.mu_post + shift * fit.sigma_post};
    }
    fit.bounds.sigma_pre = {fit.sigma_pre, options.sigma_max_factor * fit.sigma_pre};
    fit.bounds.sigma_post = {fit.sigma_post, options.sigma_max_factor * fit.sigma_post};
    fit.bounds.theta_post = {options.theta_min, options.theta_max};
    return fit;
}

double mixture_log_likelihood(std::span<const double> values, const MixtureFit& fit)
{
    return objective(observed(values), params_of(fit), fit.theta_post);
}

MixtureFit fit_gmm(std::span<const double> values, const MixtureFit& init, const MixtureOptions& options)
{
    const std::vector<double> x = observed(values);
    if (x.size() < 10) throw InputError("fit_gmm: need at least 10 non-missing values");

    MixtureFit fit = init;
    fit.warnings.clear();
    fit.objective_trace.clear();

    std::array<double, 4> p = params_of(fit);
    const std::array<Interval, 4> box = bounds_of(fit);
    static constexpr std::array<const char*, 4> names = {"mu_pre", "sigma_pre", "mu_post", "sigma_post"};
    for (int k = 0; k < 4; ++k) {
        if (!box[k].contains(p[k])) {
            fit.warnings.push_back(std::string("initial ") + names[k] + " outside bounds; clamped");
            p[k] = box[k].clamp(p[k]);
        }
    }
    double theta = fit.theta_post;
    if (!fit.bounds.theta_post.contains(theta)) {
        fit.warnings.push_back("initial theta_post outside bounds; clamped");
        theta = fit.bounds.theta_post.clamp(theta);
    }

    double current = checked_objective(x, p, theta);
    fit.converged = false;
    fit.iterations = 0;

    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
        // (a) Gaussian parameters at fixed theta: cyclic coordinate ascent, one bounded
        // Brent search per coordinate. A coordinate only moves when it strictly improves.
        for (int sweep = 0; sweep < options.max_inner_sweeps; ++sweep) {
            const double before = current;
            for (int k = 0; k < 4; ++k) {
                if (box[k].hi <= box[k].lo) continue;
                auto neg = [&](double v) {
                    std::array<double, 4> q = p;
                    q[k] = v;
                    const double c = objective(x, q, theta);
                    return std::isfinite(c) ? -c : std::numeric_limits<double>::infinity();
                };
                std::uintmax_t max_iter = 200;
                const auto [arg, val] = boost::math::tools::brent_find_minima(neg, box[k].lo, box[k].hi, 40, max_iter);
                if (-val > current) {
                    p[k] = arg;
                    current = -val;
                }
            }
            if (current - before <= 1e-10 * (1.0 + std::abs(current))) break;
        }

        // (b) theta at fixed Gaussians. The log-likelihood is concave in theta, so clamped
        // responsibility-average updates never decrease it.
        const double theta_before = theta;
        for (int it = 0; it < options.theta_steps; ++it) {
            const double next = fit.bounds.theta_post.clamp(responsibility_mean(x, p, theta));
            const double delta = std::abs(next - theta);
            const double c = objective(x, p, next);
            if (!(c >= current)) break;
            theta = next;
            current = c;
            if (delta < 1e-10) break;
        }
        current = checked_objective(x, p, theta);
        fit.objective_trace.push_back(current);
        fit.iterations = outer + 1;
        if (std::abs(theta - theta_before) < options.theta_tolerance) {
            fit.converged = true;
            break;
        }
    }

    fit.mu_pre = p[MuPre];
    fit.sigma_pre = p[SigmaPre];
    fit.mu_post = p[MuPost];
    fit.sigma_post = p[SigmaPost];
    fit.theta_post = theta;
    fit.theta_pre = 1.0 - theta;
    if (!fit.converged) fit.warnings.push_back("mixing parameter did not converge within the iteration cap");
    fit.validate();
    return fit;
}

double posterior(const MixtureFit& fit, double x)
{
    if (is_missing(x)) return missing_value;
    const double a = std::log(fit.theta_post) + fit.log_pdf_post(x);
    const double b = std::log(fit.theta_pre) + fit.log_pdf_pre(x);
    return 1.0 / (1.0 + std::exp(b - a));
}

} // namespace debm
