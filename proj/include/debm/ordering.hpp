#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace debm {

/// Sequence of biomarker indices, earliest event first.
struct EventOrdering {
    std::vector<int> sequence;

    std::size_t size() const { return sequence.size(); }
    int operator[](std::size_t i) const { return sequence[i]; }
    bool operator==(const EventOrdering&) const = default;

    /// Position of each of n biomarkers in this ordering, -1 where absent.
    std::vector<int> positions(int n) const;
    /// Throws InputError unless this is a permutation of 0..n-1.
    void validate_permutation(int n) const;
};

EventOrdering identity_ordering(int n);

/// Indices sorted by ascending key, ties by index.
EventOrdering ascending_ordering(const Eigen::VectorXd& key);

/// Biomarkers by ascending theta_pre (ties by index). Used as the central-ordering
/// start and as the tie-break rank for subject orderings.
EventOrdering theta_pre_ascending(const Eigen::VectorXd& theta_pre);

/// Observed biomarkers by descending posterior; ties by prior_rank position, then index.
/// prior_rank[i] is biomarker i's rank; an empty span means rank by index.
EventOrdering subject_ordering(const Eigen::Ref<const Eigen::VectorXd>& posteriors,
                               std::span<const int> prior_rank = {});

/// One ordering per row of a subjects x biomarkers posterior matrix (NaN = missing).
std::vector<EventOrdering> subject_orderings(const Eigen::MatrixXd& posteriors, std::span<const int> prior_rank = {});

/// Number of discordant pairs between two orderings of the same element set.
long long kendall_tau(const EventOrdering& a, const EventOrdering& b);

/// Probabilistic Kendall's Tau: swap cost weighted by the posterior gaps of the events moved
/// past. subject must be sorted by descending posterior. Elements of central that are missing
/// for this subject (NaN posterior) are skipped.
double prob_kendall_tau(const EventOrdering& central, const EventOrdering& subject,
                        const Eigen::Ref<const Eigen::VectorXd>& posteriors);

/// Summed probabilistic Kendall's Tau from a central ordering to every subject ordering.
double central_objective(const EventOrdering& central, std::span<const EventOrdering> subjects,
                         const Eigen::MatrixXd& posteriors);

struct CentralOrderingOptions {
    /// Additional seeded random starts besides the theta_pre start. 0 keeps the search single-start.
    int extra_starts = 0;
    std::uint64_t seed = 0;
};

struct CentralOrderingResult {
    EventOrdering ordering;
    double objective = 0.0;
    double initial_objective = 0.0;
    int sweeps = 0;
};

/// Local search over adjacent transpositions and single-element moves, starting from the
/// theta_pre-ascending ordering, accepting strict improvements until a full sweep finds none.
CentralOrderingResult central_ordering(std::span<const EventOrdering> subjects, const Eigen::MatrixXd& posteriors,
                                       const Eigen::VectorXd& theta_pre, const CentralOrderingOptions& options = {});

/// Central ordering plus the cumulative normalized swap costs that place each event on [0, 1].
struct Timeline {
    EventOrdering ordering;
    Eigen::VectorXd centers;    // centers(k) belongs to ordering[k]
    Eigen::VectorXd swap_costs; // raw costs of swapping positions i and i+1 of the pseudo-event-extended ordering

    std::size_t size() const { return ordering.size(); }
    /// Centers indexed by biomarker instead of by position.
    Eigen::VectorXd centers_by_biomarker() const;
    /// Throws FitError on non-monotone centers or centers outside [0, 1].
    void validate() const;
};

/// Turns swap costs (one per adjacent pair of the extended ordering) into a Timeline.
/// Costs in [-1e-9, 0) are treated as zero; lower costs or a near-zero total are errors.
Timeline timeline_from_swap_costs(const EventOrdering& central, const Eigen::VectorXd& swap_costs);

/// Event centers from probabilistic Kendall's Tau swap costs, with a start pseudo-event
/// (posterior 1) and an end pseudo-event (posterior 0) added for every subject.
Timeline event_centers(const EventOrdering& central, std::span<const EventOrdering> subjects,
                       const Eigen::MatrixXd& posteriors);

} // namespace debm
