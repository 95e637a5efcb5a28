#include "debm/staging.hpp"

#include "debm/errors.hpp"
#include "debm/parallel.hpp"

#include <algorithm>

namespace debm {

StageResult stage_subject(const Timeline& timeline, std::span<const MixtureFit> fits,
                          const Eigen::Ref<const Eigen::VectorXd>& x, const StagingOptions& options)
{
    const auto n = static_cast<Eigen::Index>(timeline.size());
    if (static_cast<Eigen::Index>(fits.size()) != n || x.size() != n)
        throw InputError("stage_subject: timeline, fits and values differ in size");

    // log w_k = sum_{i<=k} [log p(x|E) + a log theta_post] + sum_{i>k} [log p(x|~E) + a log theta_pre]
    Eigen::VectorXd post_term = Eigen::VectorXd::Zero(n), pre_term = Eigen::VectorXd::Zero(n);
    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
        const int b = timeline.ordering[static_cast<std::size_t>(k)];
        const double v = x(b);
        if (is_missing(v)) continue;
        any = true;
        const MixtureFit& f = fits[static_cast<std::size_t>(b)];
        post_term(k) = f.log_pdf_post(v) + options.prior_power * std::log(f.theta_post);
        pre_term(k) = f.log_pdf_pre(v) + options.prior_power * std::log(f.theta_pre);
    }
    if (!any) throw InputError("stage_subject: no observed biomarkers");

    Eigen::VectorXd log_w(n + 1);
    log_w(0) = pre_term.sum();
    for (Eigen::Index k = 1; k <= n; ++k) log_w(k) = log_w(k - 1) - pre_term(k - 1) + post_term(k - 1);

    const Eigen::Index first = options.include_stage_zero ? 0 : 1;
    const double top = log_w.segment(first, n + 1 - first).maxCoeff();
    if (!std::isfinite(top)) throw FitError("stage_subject: stage weights are not finite");

    StageResult r;
    r.weights = Eigen::VectorXd::Zero(n + 1);
    for (Eigen::Index k = first; k <= n; ++k) r.weights(k) = std::exp(log_w(k) - top);
    const double z = r.weights.sum();
    if (!(z > 0.0) || !std::isfinite(z)) throw FitError("stage_subject: stage weights are all zero");
    r.weights /= z;

    double stage = 0.0;
    for (Eigen::Index k = 1; k <= n; ++k) stage += r.weights(k) * timeline.centers(k - 1);
    r.stage = std::clamp(stage, 0.0, timeline.centers(n - 1));
    return r;
}

Eigen::MatrixXd aligned_values(const Dataset& ds, const std::vector<std::string>& biomarker_names)
{
    Eigen::MatrixXd out(ds.n_subjects(), static_cast<Eigen::Index>(biomarker_names.size()));
    for (std::size_t b = 0; b < biomarker_names.size(); ++b)
        out.col(static_cast<Eigen::Index>(b)) = ds.biomarkers.col(ds.biomarker_index(biomarker_names[b]));
    return out;
}

CohortStages stage_cohort(const Timeline& timeline, std::span<const MixtureFit> fits,
                          const std::vector<std::string>& biomarker_names, const Dataset& ds,
                          const StagingOptions& options, int bins)
{
    if (bins < 1) throw InputError("stage_cohort: bin count must be positive");
    const Eigen::MatrixXd values = aligned_values(ds, biomarker_names);
    const auto m = static_cast<std::size_t>(ds.n_subjects());

    CohortStages out;
    out.subjects.resize(m);
    std::vector<std::string> failure(m);
    parallel_for(m, [&](std::size_t j) {
        try {
            const Eigen::VectorXd x = values.row(static_cast<Eigen::Index>(j)).transpose();
            out.subjects[j] = stage_subject(timeline, fits, x, options);
        } catch (const std::exception& e) {
            failure[j] = e.what();
        }
    });

    out.histogram_edges = Eigen::VectorXd::LinSpaced(bins + 1, 0.0, 1.0);
    out.histogram_counts = Eigen::VectorXi::Zero(bins);
    for (std::size_t j = 0; j < m; ++j) {
        if (!out.subjects[j]) {
            out.errors.push_back("subject " + ds.subject_ids[j] + ": " + failure[j]);
            continue;
        }
        const double s = out.subjects[j]->stage;
        const int bin = std::min(bins - 1, std::max(0, static_cast<int>(s * bins)));
        ++out.histogram_counts(bin);
    }
    return out;
}

} // namespace debm
