#include "debm/febm.hpp"

#include "debm/errors.hpp"
#include "debm/parallel.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace debm {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double subject_log_likelihood(const std::vector<int>& s, const LogDensities& dens, Eigen::Index j,
                              std::vector<double>& log_w)
{
    // prefix of abnormal terms plus suffix of normal terms; no subtraction so -inf stays exact
    const std::size_t n = s.size();
    log_w.assign(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) log_w[k] = log_w[k + 1] + dens.normal(j, s[k]);
    double prefix = 0.0;
    double top = neg_inf;
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) prefix += dens.abnormal(j, s[k - 1]);
        log_w[k] += prefix;
        top = std::max(top, log_w[k]);
    }
    if (top == neg_inf) return neg_inf;
    double sum = 0.0;
    for (double v : log_w) sum += std::exp(v - top);
    return top + std::log(sum);
}

double total_log_likelihood(const std::vector<int>& s, const LogDensities& dens)
{
    std::vector<double> buffer;
    double total = 0.0;
    for (Eigen::Index j = 0; j < dens.abnormal.rows(); ++j) total += subject_log_likelihood(s, dens, j, buffer);
    return total - static_cast<double>(dens.abnormal.rows()) * std::log(static_cast<double>(s.size() + 1));
}

bool better(double candidate, double best) { return candidate > best + 1e-12 * std::max(1.0, std::abs(best)); }

std::pair<std::vector<int>, double> ascend(std::vector<int> s, const LogDensities& dens)
{
    const std::size_t n = s.size();
    double best = total_log_likelihood(s, dens);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                std::swap(s[a], s[b]);
                const double c = total_log_likelihood(s, dens);
                if (better(c, best)) {
                    best = c;
                    improved = true;
                } else {
                    std::swap(s[a], s[b]);
                }
            }
        }
        for (std::size_t from = 0; from < n; ++from) {
            for (std::size_t to = 0; to < n; ++to) {
                if (to == from) continue;
                std::vector<int> cand = s;
                const int e = cand[from];
                cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(from));
                cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(to), e);
                const double c = total_log_likelihood(cand, dens);
                if (better(c, best)) {
                    best = c;
                    s = std::move(cand);
                    improved = true;
                }
            }
        }
    }
    return {std::move(s), best};
}

} // namespace

LogDensities LogDensities::from(const Eigen::MatrixXd& values, std::span<const MixtureFit> fits)
{
    if (static_cast<Eigen::Index>(fits.size()) != values.cols())
        throw InputError("febm: one mixture fit per biomarker required");
    LogDensities d;
    d.abnormal.resize(values.rows(), values.cols());
    d.normal.resize(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
        const MixtureFit& f = fits[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < values.rows(); ++j) {
            const double v = values(j, i);
            d.abnormal(j, i) = is_missing(v) ? 0.0 : f.log_pdf_post(v);
            d.normal(j, i) = is_missing(v) ? 0.0 : f.log_pdf_pre(v);
        }
    }
    return d;
}

double febm_log_likelihood(const EventOrdering& ordering, const LogDensities& dens)
{
    ordering.validate_permutation(static_cast<int>(dens.abnormal.cols()));
    const double ll = total_log_likelihood(ordering.sequence, dens);
    if (!std::isfinite(ll)) throw FitError("febm: log-likelihood is not finite");
    return ll;
}

double febm_log_likelihood(const EventOrdering& ordering, const Eigen::MatrixXd& values,
                           std::span<const MixtureFit> fits)
{
    return febm_log_likelihood(ordering, LogDensities::from(values, fits));
}

FebmResult febm_optimize(const Eigen::MatrixXd& values, std::span<const MixtureFit> fits, const FebmOptions& options)
{
    const auto n = static_cast<int>(values.cols());
    if (n < 1) throw InputError("febm_optimize: no biomarkers");
    const LogDensities dens = LogDensities::from(values, fits);

    Eigen::VectorXd theta_pre(n);
    for (int i = 0; i < n; ++i) theta_pre(i) = fits[static_cast<std::size_t>(i)].theta_pre;

    std::vector<std::vector<int>> starts;
    starts.push_back(theta_pre_ascending(theta_pre).sequence);
    for (int r = 0; r < options.starts; ++r) {
        std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(r));
        std::vector<int> s = identity_ordering(n).sequence;
        std::shuffle(s.begin(), s.end(), rng);
        starts.push_back(std::move(s));
    }

    std::vector<std::pair<std::vector<int>, double>> outcomes(starts.size());
    std::vector<double> initial(starts.size());
    parallel_for(starts.size(), [&](std::size_t k) {
        initial[k] = total_log_likelihood(starts[k], dens);
        outcomes[k] = ascend(starts[k], dens);
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < outcomes.size(); ++k)
        if (better(outcomes[k].second, outcomes[best].second)) best = k;
    if (!std::isfinite(outcomes[best].second)) throw FitError("febm: log-likelihood is not finite");

    FebmResult r;
    r.ordering.sequence = outcomes[best].first;
    r.log_likelihood = outcomes[best].second;
    r.start_log_likelihoods = std::move(initial);
    return r;
}

int febm_stage(const EventOrdering& ordering, std::span<const MixtureFit> fits,
               const Eigen::Ref<const Eigen::VectorXd>& x)
{
    const auto n = static_cast<Eigen::Index>(ordering.size());
    if (x.size() != n || static_cast<Eigen::Index>(fits.size()) != n)
        throw InputError("febm_stage: ordering, fits and values differ in size");
    Eigen::MatrixXd values = x.transpose();
    const LogDensities dens = LogDensities::from(values, fits);
    std::vector<double> log_w;
    subject_log_likelihood(ordering.sequence, dens, 0, log_w);
    int best = 0;
    for (std::size_t k = 1; k < log_w.size(); ++k)
        if (log_w[k] > log_w[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
}

Timeline febm_event_centers(const EventOrdering& ordering, const Eigen::MatrixXd& values,
                            std::span<const MixtureFit> fits)
{
    const auto n = static_cast<int>(values.cols());
    ordering.validate_permutation(n);
    const LogDensities base = LogDensities::from(values, fits);

    LogDensities ext;
    ext.abnormal.resize(values.rows(), n + 2);
    ext.normal.resize(values.rows(), n + 2);
    ext.abnormal.leftCols(n) = base.abnormal;
    ext.normal.leftCols(n) = base.normal;
    ext.abnormal.col(n).setZero(); // start: always abnormal
    ext.normal.col(n).setConstant(neg_inf);
    ext.abnormal.col(n + 1).setConstant(neg_inf); // end: never abnormal
    ext.normal.col(n + 1).setZero();

    std::vector<int> s_ext;
    s_ext.push_back(n);
    s_ext.insert(s_ext.end(), ordering.sequence.begin(), ordering.sequence.end());
    s_ext.push_back(n + 1);

    const double ll = total_log_likelihood(s_ext, ext);
    if (!std::isfinite(ll)) throw FitError("febm: log-likelihood is not finite");
    Eigen::VectorXd gamma(n + 1);
    for (int i = 0; i <= n; ++i) {
        std::vector<int> swapped = s_ext;
        std::swap(swapped[static_cast<std::size_t>(i)], swapped[static_cast<std::size_t>(i) + 1]);
        gamma(i) = ll - total_log_likelihood(swapped, ext);
    }
    return timeline_from_swap_costs(ordering, gamma);
}

} // namespace debm
