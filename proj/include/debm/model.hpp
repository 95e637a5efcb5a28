#pragma once

#include "debm/data.hpp"
#include "debm/febm.hpp"
#include "debm/mixture.hpp"
#include "debm/ordering.hpp"
#include "debm/staging.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace debm {

enum class Method { Debm, Febm };

std::string_view to_string(Method m);
Method parse_method(std::string_view s); // InputError on anything but "debm" / "febm"

struct FitOptions {
    MixtureOptions mixture;
    CentralOrderingOptions central;
    FebmOptions febm;
};

/// A fitted disease-progression model: per-biomarker mixtures plus the timeline.
struct Model {
    Method method = Method::Debm;
    std::vector<std::string> biomarker_names;
    std::vector<MixtureFit> fits; // indexed like biomarker_names
    Timeline timeline;
    /// Summed probabilistic Kendall's Tau (DEBM) or log-likelihood (FEBM) at the returned ordering.
    double objective = 0.0;

    /// Preprocessing to replay on new data before staging.
    std::optional<Schema> schema;
    std::vector<ResidualFit> residualization;
    std::vector<std::string> warnings;

    Eigen::VectorXd theta_pre() const;
    /// Continuous stages for every subject of ds (columns matched by name).
    CohortStages stage(const Dataset& ds, const StagingOptions& options = {}, int bins = 20) const;
};

/// One mixture per biomarker column, fit independently (in parallel). Errors name the biomarker.
std::vector<MixtureFit> fit_mixtures(const Dataset& ds, const MixtureOptions& options = {});

/// Subjects x biomarkers posterior probabilities of abnormality; NaN where values are missing.
Eigen::MatrixXd posterior_matrix(const Eigen::MatrixXd& values, std::span<const MixtureFit> fits);

/// Orders events and places them on the timeline using precomputed mixtures.
Model fit_with_mixtures(const Dataset& ds, std::vector<MixtureFit> fits, Method method, const FitOptions& options = {});

/// Full pipeline: mixtures, then ordering and event centers for the chosen method.
Model fit_model(const Dataset& ds, Method method, const FitOptions& options = {});

} // namespace debm
