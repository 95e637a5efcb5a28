#pragma once

#include "debm/mixture.hpp"
#include "debm/ordering.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace debm {

/// Per-subject log p(x | E) and log p(x | not E). Missing values contribute 0 to both.
struct LogDensities {
    Eigen::MatrixXd abnormal; // subjects x biomarkers
    Eigen::MatrixXd normal;

    static LogDensities from(const Eigen::MatrixXd& values, std::span<const MixtureFit> fits);
};

/// log p(X | S) under a uniform prior over the N + 1 stages.
double febm_log_likelihood(const EventOrdering& ordering, const LogDensities& dens);
double febm_log_likelihood(const EventOrdering& ordering, const Eigen::MatrixXd& values,
                           std::span<const MixtureFit> fits);

struct FebmOptions {
    int starts = 10; // seeded random starts in addition to the theta_pre start
    std::uint64_t seed = 0;
};

struct FebmResult {
    EventOrdering ordering;
    double log_likelihood = 0.0;
    std::vector<double> start_log_likelihoods; // likelihood of each start before ascent, theta_pre start first
};

/// Greedy ascent (pairwise swaps, then single-element moves) from every start; best result wins,
/// ties to the earliest start.
FebmResult febm_optimize(const Eigen::MatrixXd& values, std::span<const MixtureFit> fits,
                         const FebmOptions& options = {});

/// Maximum-likelihood discrete stage in 0..N; ties go to the smaller stage.
int febm_stage(const EventOrdering& ordering, std::span<const MixtureFit> fits,
               const Eigen::Ref<const Eigen::VectorXd>& x);

/// Event centers from log-likelihood drops under adjacent swaps, with an always-abnormal
/// start column and a never-abnormal end column appended.
Timeline febm_event_centers(const EventOrdering& ordering, const Eigen::MatrixXd& values,
                            std::span<const MixtureFit> fits);

} // namespace debm
