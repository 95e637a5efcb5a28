#include "debm/model.hpp"

#include "debm/errors.hpp"
#include "debm/parallel.hpp"

namespace debm {

std::string_view to_string(Method m) { return m == Method::Debm ? "debm" : "febm"; }

Method parse_method(std::string_view s)
{
    if (s == "debm") return Method::Debm;
    if (s == "febm") return Method::Febm;
    throw InputError("unknown method '" + std::string(s) + "' (expected debm or febm)");
}

Eigen::VectorXd Model::theta_pre() const
{
    Eigen::VectorXd t(static_cast<Eigen::Index>(fits.size()));
    for (std::size_t i = 0; i < fits.size(); ++i) t(static_cast<Eigen::Index>(i)) = fits[i].theta_pre;
    return t;
}

CohortStages Model::stage(const Dataset& ds, const StagingOptions& options, int bins) const
{
    return stage_cohort(timeline, fits, biomarker_names, ds, options, bins);
}

std::vector<MixtureFit> fit_mixtures(const Dataset& ds, const MixtureOptions& options)
{
    ds.validate();
    if (ds.count(Diagnosis::CN) == 0 || ds.count(Diagnosis::AD) == 0)
        throw InputError("mixture fitting needs at least one CN and one AD subject");
    const auto n = static_cast<std::size_t>(ds.n_biomarkers());
    std::vector<MixtureFit> fits(n);
    parallel_for(n, [&](std::size_t i) {
        const auto col = static_cast<Eigen::Index>(i);
        const Eigen::VectorXd v = ds.biomarkers.col(col);
        const std::span<const double> values(v.data(), static_cast<std::size_t>(v.size()));
        try {
            fits[i] = fit_gmm(values, init_estimates(values, ds.diagnoses, options), options);
        } catch (const FitError& e) {
            throw FitError("biomarker '" + ds.biomarker_names[i] + "': " + e.what());
        } catch (const InputError& e) {
            throw InputError("biomarker '" + ds.biomarker_names[i] + "': " + e.what());
        }
    });
    return fits;
}

Eigen::MatrixXd posterior_matrix(const Eigen::MatrixXd& values, std::span<const MixtureFit> fits)
{
    if (static_cast<Eigen::Index>(fits.size()) != values.cols())
        throw InputError("posterior_matrix: one mixture fit per biomarker required");
    Eigen::MatrixXd p(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.cols(); ++i)
        for (Eigen::Index j = 0; j < values.rows(); ++j)
            p(j, i) = posterior(fits[static_cast<std::size_t>(i)], values(j, i));
    return p;
}

Model fit_with_mixtures(const Dataset& ds, std::vector<MixtureFit> fits, Method method, const FitOptions& options)
{
    if (static_cast<Eigen::Index>(fits.size()) != ds.n_biomarkers())
        throw InputError("fit: one mixture fit per biomarker required");
    Model model;
    model.method = method;
    model.biomarker_names = ds.biomarker_names;
    model.fits = std::move(fits);
    for (std::size_t i = 0; i < model.fits.size(); ++i)
        for (const auto& w : model.fits[i].warnings) model.warnings.push_back(model.biomarker_names[i] + ": " + w);

    if (method == Method::Debm) {
        const Eigen::MatrixXd p = posterior_matrix(ds.biomarkers, model.fits);
        const Eigen::VectorXd theta = model.theta_pre();
        const std::vector<int> prior_rank = theta_pre_ascending(theta).positions(static_cast<int>(theta.size()));

        std::vector<EventOrdering> subjects;
        Eigen::MatrixXd p_kept(p.rows(), p.cols());
        Eigen::Index kept = 0;
        for (Eigen::Index j = 0; j < p.rows(); ++j) {
            const Eigen::VectorXd row = p.row(j).transpose();
            if (row.array().isNaN().all()) continue; // no observed biomarkers: nothing to order
            subjects.push_back(subject_ordering(row, prior_rank));
            p_kept.row(kept++) = p.row(j);
        }
        p_kept.conservativeResize(kept, Eigen::NoChange);
        if (subjects.empty()) throw InputError("fit: no subject has an observed biomarker");

        const CentralOrderingResult central = central_ordering(subjects, p_kept, theta, options.central);
        model.timeline = event_centers(central.ordering, subjects, p_kept);
        model.objective = central.objective;
    } else {
        const FebmResult r = febm_optimize(ds.biomarkers, model.fits, options.febm);
        model.timeline = febm_event_centers(r.ordering, ds.biomarkers, model.fits);
        model.objective = r.log_likelihood;
    }
    return model;
}

Model fit_model(const Dataset& ds, Method method, const FitOptions& options)
{
    return fit_with_mixtures(ds, fit_mixtures(ds, options.mixture), method, options);
}

} // namespace debm
