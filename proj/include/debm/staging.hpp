#pragma once

#include "debm/data.hpp"
#include "debm/mixture.hpp"
#include "debm/ordering.hpp"

#include <optional>
#include <string>
#include <vector>

namespace debm {

struct StagingOptions {
    /// Include the all-normal stage k = 0 at center 0.
    bool include_stage_zero = true;
    /// Exponent applied to the theta-based stage prior; 1 is the product form.
    double prior_power = 1.0;
};

struct StageResult {
    double stage = 0.0;
    Eigen::VectorXd weights; // normalized, index k = 0..N; weights(0) is 0 when stage zero is excluded
};

/// Continuous stage: expectation of the event center under p(k | S, x).
/// x and fits are indexed by biomarker; missing values are skipped.
StageResult stage_subject(const Timeline& timeline, std::span<const MixtureFit> fits,
                          const Eigen::Ref<const Eigen::VectorXd>& x, const StagingOptions& options = {});

struct CohortStages {
    std::vector<std::optional<StageResult>> subjects; // empty where staging failed
    std::vector<std::string> errors;                  // "subject <id>: <reason>" per failure
    Eigen::VectorXd histogram_edges;                  // bins + 1 edges on [0, 1]
    Eigen::VectorXi histogram_counts;
};

/// Stages every subject of ds. Model biomarkers are matched to ds columns by name;
/// a model biomarker absent from ds is an InputError.
CohortStages stage_cohort(const Timeline& timeline, std::span<const MixtureFit> fits,
                          const std::vector<std::string>& biomarker_names, const Dataset& ds,
                          const StagingOptions& options = {}, int bins = 20);

/// Reorders ds columns to match the model's biomarker names (InputError if any is missing).
Eigen::MatrixXd aligned_values(const Dataset& ds, const std::vector<std::string>& biomarker_names);

} // namespace debm
