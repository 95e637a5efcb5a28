#include "debm/errors.hpp"
#include "debm/mixture.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace debm;

namespace {

struct Sample {
    std::vector<double> values;
    std::vector<Diagnosis> labels;
};

Sample two_gaussians(std::uint64_t seed, int n, double mu0, double s0, double mu1, double s1, double frac1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Sample s;
    for (int i = 0; i < n; ++i) {
        const bool ab = u(rng) < frac1;
        s.values.push_back(ab ? mu1 + s1 * z(rng) : mu0 + s0 * z(rng));
        s.labels.push_back(ab ? Diagnosis::AD : Diagnosis::CN);
    }
    return s;
}

double mean(const std::vector<double>& v)
{
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v)
{
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

TEST_CASE("log_add_exp and gaussian_log_pdf")
{
    CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
    CHECK(log_add_exp(-std::numeric_limits<double>::infinity(), 1.5) == 1.5);
    CHECK(log_add_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(std::exp(gaussian_log_pdf(0.3, 1.0, 2.0)) == doctest::Approx(oracle::gauss_pdf(0.3, 1.0, 2.0)).epsilon(1e-14));
    CHECK(gaussian_log_pdf(0.3f, 1.0f, 2.0f) == doctest::Approx(std::log(oracle::gauss_pdf(0.3, 1.0, 2.0))).epsilon(1e-6));
}

TEST_CASE("init_estimates on perfectly separated classes equals per-class statistics")
{
    std::vector<double> v{-3, -2.5, -1, -0.5, -2, 11, 12, 15, 10.5};
    std::vector<Diagnosis> l{Diagnosis::CN, Diagnosis::CN, Diagnosis::CN, Diagnosis::CN, Diagnosis::CN,
                             Diagnosis::AD, Diagnosis::AD, Diagnosis::AD, Diagnosis::AD};
    const MixtureFit f = init_estimates(v, l);
    const std::vector<double> cn(v.begin(), v.begin() + 5), ad(v.begin() + 5, v.end());
    CHECK(f.mu_pre == doctest::Approx(mean(cn)));
    CHECK(f.sigma_pre == doctest::Approx(sd(cn)));
    CHECK(f.mu_post == doctest::Approx(mean(ad)));
    CHECK(f.sigma_post == doctest::Approx(sd(ad)));
    CHECK(f.theta_pre + f.theta_post == doctest::Approx(1.0).epsilon(1e-12));
    // bounds follow the bias directions: smaller-mean class may move up, larger-mean class down
    CHECK(f.bounds.mu_pre.lo == doctest::Approx(f.mu_pre));
    CHECK(f.bounds.mu_pre.hi == doctest::Approx(f.mu_pre + f.sigma_pre));
    CHECK(f.bounds.mu_post.lo == doctest::Approx(f.mu_post - f.sigma_post));
    CHECK(f.bounds.mu_post.hi == doctest::Approx(f.mu_post));
    CHECK(f.bounds.sigma_pre.lo == doctest::Approx(f.sigma_pre));
    CHECK(f.bounds.sigma_pre.hi == doctest::Approx(2 * f.sigma_pre));
    CHECK(f.bounds.theta_post.lo == 0.01);
    CHECK(f.bounds.theta_post.hi == 0.99);
}

TEST_CASE("init_estimates ignores MCI and missing values")
{
    std::vector<double> v{-3, -2.5, -1, 5.0, missing_value, 11, 12, 15};
    std::vector<Diagnosis> l{Diagnosis::CN, Diagnosis::CN, Diagnosis::CN, Diagnosis::MCI, Diagnosis::CN,
                             Diagnosis::AD, Diagnosis::AD, Diagnosis::AD};
    const MixtureFit f = init_estimates(v, l);
    CHECK(f.mu_pre == doctest::Approx(-6.5 / 3));
    CHECK(f.mu_post == doctest::Approx(38.0 / 3));
}

TEST_CASE("init_estimates on overlapping classes")
{
    // the removed misclassified values sit in the tails facing the other class
    const Sample s = two_gaussians(21, 20000, 0.0, 1.0, 1.5, 1.0, 0.5);
    std::vector<double> cn, ad;
    for (std::size_t i = 0; i < s.values.size(); ++i) (s.labels[i] == Diagnosis::CN ? cn : ad).push_back(s.values[i]);
    const MixtureFit f = init_estimates(s.values, s.labels);
    CHECK(f.sigma_pre <= sd(cn));
    CHECK(f.sigma_post <= sd(ad));
    CHECK(f.mu_pre <= mean(cn));
    CHECK(f.mu_post >= mean(ad));
}

TEST_CASE("init_estimates preconditions")
{
    std::vector<double> v{1, 2, 10, 11, 12};
    std::vector<Diagnosis> l{Diagnosis::CN, Diagnosis::CN, Diagnosis::AD, Diagnosis::AD, Diagnosis::AD};
    CHECK_THROWS_AS(init_estimates(v, l), InputError);
    std::vector<double> flat{1, 1, 1, 5, 6, 7};
    std::vector<Diagnosis> fl{Diagnosis::CN, Diagnosis::CN, Diagnosis::CN, Diagnosis::AD, Diagnosis::AD, Diagnosis::AD};
    CHECK_THROWS(init_estimates(flat, fl));
}

TEST_CASE("init_estimates asks for exclusion when a class has no usable values")
{
    // AD values near 0 fall inside the narrow CN class; only the value at 30 stays AD
    std::vector<double> v{-1, 0, 1, 0.05, -0.05, 0.0, 30};
    std::vector<Diagnosis> l{Diagnosis::CN, Diagnosis::CN, Diagnosis::CN, Diagnosis::AD,
                             Diagnosis::AD, Diagnosis::AD, Diagnosis::AD};
    bool failed = false;
    try {
        (void)init_estimates(v, l);
    } catch (const FitError& e) {
        failed = true;
        CHECK(std::string(e.what()).find("exclude this biomarker") != std::string::npos);
    }
    CHECK(failed);
}

TEST_CASE("fit_gmm recovers a balanced two-Gaussian mixture")
{
    const Sample s = two_gaussians(22, 2000, 0.0, 1.0, 4.0, 1.0, 0.5);
    const MixtureFit f = fit_gmm(s.values, init_estimates(s.values, s.labels));
    CHECK(std::abs(f.mu_pre - 0.0) < 0.1);
    CHECK(std::abs(f.mu_post - 4.0) < 0.1);
    CHECK(std::abs(f.theta_post - 0.5) < 0.05);
    CHECK(f.direction() == 1);
    f.validate();
}

TEST_CASE("fit_gmm objective never decreases and stays within bounds")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Sample s = two_gaussians(100 + seed, 800, 5.0, 1.0, 1.0, 0.7, 0.3);
        const MixtureFit init = init_estimates(s.values, s.labels);
        const MixtureFit f = fit_gmm(s.values, init);
        CHECK(f.direction() == -1);
        REQUIRE(!f.objective_trace.empty());
        for (std::size_t i = 1; i < f.objective_trace.size(); ++i)
            CHECK(f.objective_trace[i] >= f.objective_trace[i - 1] - 1e-9 * std::abs(f.objective_trace[i - 1]));
        CHECK(f.objective_trace.back() == doctest::Approx(mixture_log_likelihood(s.values, f)));
        CHECK(f.bounds.mu_pre.contains(f.mu_pre));
        CHECK(f.bounds.mu_post.contains(f.mu_post));
        CHECK(f.bounds.sigma_pre.contains(f.sigma_pre));
        CHECK(f.bounds.sigma_post.contains(f.sigma_post));
        CHECK(f.theta_post >= 0.01);
        CHECK(f.theta_post <= 0.99);
        CHECK(f.iterations <= 100);
        // deterministic
        const MixtureFit g = fit_gmm(s.values, init);
        CHECK(g.mu_pre == f.mu_pre);
        CHECK(g.theta_post == f.theta_post);
    }
}

TEST_CASE("fit_gmm preconditions and failures")
{
    std::vector<double> few{1, 2, 3};
    MixtureFit init;
    init.bounds = {{-1, 1}, {0.5, 2}, {0, 2}, {0.5, 2}, {0.01, 0.99}};
    CHECK_THROWS_AS(fit_gmm(few, init), InputError);

    // identical values collapse the likelihood
    std::vector<double> same(50, 3.0);
    MixtureFit deg;
    deg.mu_pre = 3.0;
    deg.sigma_pre = 1e-300;
    deg.mu_post = 3.0 + 1e-300;
    deg.sigma_post = 1e-300;
    deg.bounds = {{3.0, 3.0}, {1e-300, 1e-300}, {3.0, 3.0}, {1e-300, 1e-300}, {0.01, 0.99}};
    CHECK_THROWS(fit_gmm(same, deg));
}

TEST_CASE("fit_gmm clamps an out-of-bounds initialization with a warning")
{
    const Sample s = two_gaussians(23, 500, 0.0, 1.0, 4.0, 1.0, 0.5);
    MixtureFit init = init_estimates(s.values, s.labels);
    init.theta_post = 1.0;
    init.theta_pre = 0.0;
    const MixtureFit f = fit_gmm(s.values, init);
    CHECK(!f.warnings.empty());
    CHECK(f.theta_post <= 0.99);
}

TEST_CASE("posterior arithmetic")
{
    MixtureFit f;
    const double two_pi = 2.0 * 3.14159265358979323846;
    // g_post(x) = 0.2 at x = mu_post; g_pre(x) = 0.1 with sigma_pre = 1
    f.mu_post = 0.0;
    f.sigma_post = 1.0 / (0.2 * std::sqrt(two_pi));
    f.sigma_pre = 1.0;
    f.mu_pre = std::sqrt(-2.0 * std::log(0.1 * std::sqrt(two_pi)));
    f.theta_post = 0.3;
    f.theta_pre = 0.7;
    CHECK(posterior(f, 0.0) == doctest::Approx(0.06 / 0.13).epsilon(1e-12));
    CHECK(is_missing(posterior(f, missing_value)));

    MixtureFit g;
    g.mu_pre = 0.0;
    g.mu_post = 2.0;
    g.sigma_pre = g.sigma_post = 1.0;
    g.theta_pre = g.theta_post = 0.5;
    CHECK(posterior(g, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    g.mu_post = 50.0;
    CHECK(posterior(g, 50.0) > 0.999);
    // equal sigmas: monotone on the abnormal side
    g.mu_post = 2.0;
    double prev = posterior(g, 1.0);
    for (double x = 1.1; x < 30; x += 0.1) {
        const double p = posterior(g, x);
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("MixtureFit::validate")
{
    MixtureFit f;
    f.validate();
    f.theta_pre = 0.7;
    CHECK_THROWS_AS(f.validate(), FitError);
    f.theta_pre = 0.5;
    f.sigma_pre = 0.0;
    CHECK_THROWS_AS(f.validate(), FitError);
    f.sigma_pre = 1.0;
    f.mu_post = f.mu_pre;
    CHECK_THROWS_AS(f.validate(), FitError);
}
