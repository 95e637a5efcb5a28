#pragma once

#include "debm/model.hpp"
#include "debm/simulate.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace debm {

/// Kendall's Tau to the ground truth divided by N choose 2; 0 when N < 2.
double ordering_error(const EventOrdering& estimate, const EventOrdering& truth);

/// Affinely map estimated centers to the mean and standard deviation of the true centers,
/// then sum the absolute deviations. Both vectors indexed by biomarker.
double event_center_error(const Eigen::VectorXd& centers, const Eigen::VectorXd& truth);

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Mann-Whitney estimate of P(positive > negative), ties counted 1/2.
double auc(std::span<const double> positive, std::span<const double> negative);

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
    int resamples = 100;
    Method method = Method::Debm;
    std::uint64_t seed = 0;
    FitOptions fit;
    /// Reuse these mixtures in every resample instead of refitting them.
    std::optional<std::vector<MixtureFit>> fixed_mixtures;
};

struct BootstrapResult {
    Eigen::MatrixXd positional;  // biomarker x position frequency over successful resamples; rows sum to 1
    Eigen::VectorXd center_mean; // per biomarker
    Eigen::VectorXd center_se;   // standard deviation of the bootstrap replicates
    std::vector<Timeline> timelines;
    int failures = 0;
    std::vector<std::string> errors;
};

/// Resamples subjects with replacement and re-runs the pipeline on each resample.
/// Resample b uses seed + b, so results do not depend on the thread count.
BootstrapResult bootstrap(const Dataset& ds, const BootstrapOptions& options);

/// Positional variance diagram as SVG; rows follow display_order.
void write_positional_svg(std::ostream& out, const BootstrapResult& result, const std::vector<std::string>& names,
                          const EventOrdering& display_order);

// ---------------------------------------------------------------------------
// Cross-validation

struct CvOptions {
    int folds = 10;
    Method method = Method::Debm;
    std::uint64_t seed = 0;
    FitOptions fit;
    StagingOptions staging;
    /// FEBM models are scored with their discrete maximum-likelihood stage.
    bool febm_discrete_stage = true;
};

struct CvResult {
    double auc = 0.5;
    std::vector<int> fold;  // fold of each subject
    Eigen::VectorXd stage;  // held-out stage of each subject, NaN where staging failed
    std::vector<std::string> errors;
};

/// Stratified k-fold: fit on the training folds (all diagnoses), stage the held-out fold,
/// AUC of CN against AD over the pooled held-out stages.
CvResult cv_auc(const Dataset& ds, const CvOptions& options);

// ---------------------------------------------------------------------------
// Simulation experiment grid

/// Draws n biomarkers with replacement from the pool described by cfg's per-biomarker
/// vectors; duplicate names get a _2, _3 ... suffix and centers are re-spaced equidistantly.
SimConfig resample_biomarkers(const SimConfig& pool, int n, std::mt19937_64& rng);

struct GridPoint {
    std::string label;
    SimConfig config;
    /// When set, config is a biomarker pool and each repetition draws this many from it.
    std::optional<int> resampled_biomarkers;
};

struct GridConfig {
    std::vector<GridPoint> points;
    int repetitions = 10;
    std::vector<Method> methods{Method::Debm, Method::Febm};
    std::uint64_t seed = 0;
    FitOptions fit;
};

struct GridRow {
    std::size_t point = 0;
    std::string label;
    int repetition = 0;
    Method method = Method::Debm;
    std::uint64_t seed = 0;
    bool ok = false;
    double ordering_error = 0.0;
    double event_center_error = 0.0;
    std::string error;
};

struct GridSummary {
    std::size_t point = 0;
    std::string label;
    Method method = Method::Debm;
    int successes = 0;
    double ordering_error_mean = 0.0, ordering_error_sd = 0.0;
    double event_center_error_mean = 0.0, event_center_error_sd = 0.0;
};

struct GridResults {
    std::vector<GridRow> rows;         // point-major, then repetition, then method
    std::vector<GridSummary> summary;  // point-major, then method
};

/// Repetition r of every grid point is simulated with seed + r; methods share the simulated
/// cohort and its mixtures.
GridResults run_experiment_grid(const GridConfig& grid);

} // namespace debm
