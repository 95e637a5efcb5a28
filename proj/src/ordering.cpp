#include "debm/ordering.hpp"

#include "debm/data.hpp"
#include "debm/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace debm {

namespace {

/// Algorithm over raw arrays. work must hold a copy of the subject ordering; it is permuted in place.
double prob_tau_kernel(const int* central, std::size_t n, int* work, const double* p)
{
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const int target = central[i];
        std::size_t k = i;
        while (work[k] != target) ++k;
        if (k > i) {
            const double top = p[work[i]];
            for (std::size_t l = i + 1; l <= k; ++l) total += top - p[work[l]];
            std::rotate(work + i, work + k, work + k + 1);
        }
    }
    return total;
}

/// Subject-side data prepared once for repeated objective evaluations.
struct SubjectTable {
    int n_events = 0;
    std::vector<std::vector<int>> orderings;
    std::vector<std::vector<double>> posteriors; // by event index, NaN where missing
    std::vector<bool> complete;                  // subject observes every event

    SubjectTable(std::span<const EventOrdering> subjects, const Eigen::MatrixXd& p)
    {
        n_events = static_cast<int>(p.cols());
        if (static_cast<Eigen::Index>(subjects.size()) != p.rows())
            throw InputError("subject orderings and posterior rows differ in count");
        orderings.reserve(subjects.size());
        for (std::size_t j = 0; j < subjects.size(); ++j) {
            orderings.push_back(subjects[j].sequence);
            std::vector<double> row(static_cast<std::size_t>(n_events));
            for (int i = 0; i < n_events; ++i) row[static_cast<std::size_t>(i)] = p(static_cast<Eigen::Index>(j), i);
            posteriors.push_back(std::move(row));
            complete.push_back(subjects[j].size() == static_cast<std::size_t>(n_events));
        }
    }

    double evaluate(const std::vector<int>& central) const
    {
        std::vector<int> work, restricted;
        double total = 0.0;
        for (std::size_t j = 0; j < orderings.size(); ++j) {
            const auto& s = orderings[j];
            if (s.size() < 2) continue;
            work.assign(s.begin(), s.end());
            const double* pj = posteriors[j].data();
            if (complete[j]) {
                total += prob_tau_kernel(central.data(), central.size(), work.data(), pj);
            } else {
                restricted.clear();
                for (int e : central)
                    if (!is_missing(pj[e])) restricted.push_back(e);
                total += prob_tau_kernel(restricted.data(), restricted.size(), work.data(), pj);
            }
        }
        return total;
    }
};

bool improves(double candidate, double best) { return candidate < best - 1e-12 * std::max(1.0, std::abs(best)); }

struct SearchOutcome {
    std::vector<int> ordering;
    double objective;
    int sweeps;
};

SearchOutcome local_search(const SubjectTable& table, std::vector<int> s)
{
    const std::size_t n = s.size();
    double best = table.evaluate(s);
    int sweeps = 0;
    bool improved = true;
    while (improved) {
        improved = false;
        ++sweeps;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            std::swap(s[i], s[i + 1]);
            const double c = table.evaluate(s);
            if (improves(c, best)) {
                best = c;
                improved = true;
            } else {
                std::swap(s[i], s[i + 1]);
            }
        }
        for (std::size_t from = 0; from < n; ++from) {
            for (std::size_t to = 0; to < n; ++to) {
                if (to == from) continue;
                std::vector<int> cand = s;
                const int e = cand[from];
                cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(from));
                cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(to), e);
                const double c = table.evaluate(cand);
                if (improves(c, best)) {
                    best = c;
                    s = std::move(cand);
                    improved = true;
                }
            }
        }
    }
    return {std::move(s), best, sweeps};
}

} // namespace

std::vector<int> EventOrdering::positions(int n) const
{
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < sequence.size(); ++k) {
        const int e = sequence[k];
        if (e < 0 || e >= n) throw InputError("event index " + std::to_string(e) + " out of range");
        pos[static_cast<std::size_t>(e)] = static_cast<int>(k);
    }
    return pos;
}

void EventOrdering::validate_permutation(int n) const
{
    if (sequence.size() != static_cast<std::size_t>(n))
        throw InputError("ordering has " + std::to_string(sequence.size()) + " events, expected " + std::to_string(n));
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int e : sequence) {
        if (e < 0 || e >= n || seen[static_cast<std::size_t>(e)]) throw InputError("ordering is not a permutation");
        seen[static_cast<std::size_t>(e)] = true;
    }
}

EventOrdering identity_ordering(int n)
{
    EventOrdering o;
    o.sequence.resize(static_cast<std::size_t>(n));
    std::iota(o.sequence.begin(), o.sequence.end(), 0);
    return o;
}

EventOrdering ascending_ordering(const Eigen::VectorXd& key)
{
    EventOrdering o = identity_ordering(static_cast<int>(key.size()));
    std::stable_sort(o.sequence.begin(), o.sequence.end(), [&](int a, int b) { return key(a) < key(b); });
    return o;
}

EventOrdering theta_pre_ascending(const Eigen::VectorXd& theta_pre) { return ascending_ordering(theta_pre); }

EventOrdering subject_ordering(const Eigen::Ref<const Eigen::VectorXd>& posteriors, std::span<const int> prior_rank)
{
    const auto n = static_cast<int>(posteriors.size());
    if (!prior_rank.empty() && prior_rank.size() != static_cast<std::size_t>(n))
        throw InputError("prior rank length does not match posterior count");
    EventOrdering o;
    for (int i = 0; i < n; ++i)
        if (!is_missing(posteriors(i))) o.sequence.push_back(i);
    if (o.sequence.empty()) throw InputError("subject has no observed biomarkers");
    auto rank = [&](int i) { return prior_rank.empty() ? i : prior_rank[static_cast<std::size_t>(i)]; };
    std::sort(o.sequence.begin(), o.sequence.end(), [&](int a, int b) {
        if (posteriors(a) != posteriors(b)) return posteriors(a) > posteriors(b);
        if (rank(a) != rank(b)) return rank(a) < rank(b);
        return a < b;
    });
    return o;
}

std::vector<EventOrdering> subject_orderings(const Eigen::MatrixXd& posteriors, std::span<const int> prior_rank)
{
    std::vector<EventOrdering> out;
    out.reserve(static_cast<std::size_t>(posteriors.rows()));
    for (Eigen::Index j = 0; j < posteriors.rows(); ++j) {
        const Eigen::VectorXd row = posteriors.row(j).transpose();
        out.push_back(subject_ordering(row, prior_rank));
    }
    return out;
}

long long kendall_tau(const EventOrdering& a, const EventOrdering& b)
{
    if (a.size() != b.size()) throw InputError("kendall_tau: orderings differ in length");
    int n = 0;
    for (int e : a.sequence) n = std::max(n, e + 1);
    for (int e : b.sequence) n = std::max(n, e + 1);
    const std::vector<int> pa = a.positions(n), pb = b.positions(n);
    for (int e : a.sequence)
        if (pb[static_cast<std::size_t>(e)] < 0) throw InputError("kendall_tau: element sets differ");
    long long discordant = 0;
    for (std::size_t x = 0; x < a.size(); ++x)
        for (std::size_t y = x + 1; y < a.size(); ++y)
            if (pb[static_cast<std::size_t>(a[x])] > pb[static_cast<std::size_t>(a[y])]) ++discordant;
    return discordant;
}

double prob_kendall_tau(const EventOrdering& central, const EventOrdering& subject,
                        const Eigen::Ref<const Eigen::VectorXd>& posteriors)
{
    const auto n = static_cast<int>(posteriors.size());
    const std::vector<int> in_subject = subject.positions(n);
    const std::vector<int> in_central = central.positions(n);
    for (int e : subject.sequence)
        if (in_central[static_cast<std::size_t>(e)] < 0)
            throw InputError("prob_kendall_tau: subject event " + std::to_string(e) + " not in central ordering");

    std::vector<int> restricted;
    restricted.reserve(subject.size());
    for (int e : central.sequence) {
        if (in_subject[static_cast<std::size_t>(e)] >= 0)
            restricted.push_back(e);
        else if (!is_missing(posteriors(e)))
            throw InputError("prob_kendall_tau: central event " + std::to_string(e) + " not in subject ordering");
    }
    std::vector<double> p(posteriors.data(), posteriors.data() + n);
    std::vector<int> work = subject.sequence;
    return prob_tau_kernel(restricted.data(), restricted.size(), work.data(), p.data());
}

double central_objective(const EventOrdering& central, std::span<const EventOrdering> subjects,
                         const Eigen::MatrixXd& posteriors)
{
    return SubjectTable(subjects, posteriors).evaluate(central.sequence);
}

CentralOrderingResult central_ordering(std::span<const EventOrdering> subjects, const Eigen::MatrixXd& posteriors,
                                       const Eigen::VectorXd& theta_pre, const CentralOrderingOptions& options)
{
    if (subjects.empty()) throw InputError("central_ordering: no subject orderings");
    if (theta_pre.size() != posteriors.cols()) throw InputError("central_ordering: theta_pre size mismatch");
    const SubjectTable table(subjects, posteriors);

    CentralOrderingResult result;
    const EventOrdering start = theta_pre_ascending(theta_pre);
    result.initial_objective = table.evaluate(start.sequence);
    SearchOutcome best = local_search(table, start.sequence);

    for (int r = 0; r < options.extra_starts; ++r) {
        std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(r));
        std::vector<int> s = start.sequence;
        std::shuffle(s.begin(), s.end(), rng);
        SearchOutcome cand = local_search(table, std::move(s));
        if (improves(cand.objective, best.objective)) best = std::move(cand);
    }

    result.ordering.sequence = std::move(best.ordering);
    result.objective = best.objective;
    result.sweeps = best.sweeps;
    return result;
}

// ---------------------------------------------------------------------------
// Timeline

Eigen::VectorXd Timeline::centers_by_biomarker() const
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(ordering.size()));
    for (std::size_t k = 0; k < ordering.size(); ++k) out(ordering[k]) = centers(static_cast<Eigen::Index>(k));
    return out;
}

void Timeline::validate() const
{
    ordering.validate_permutation(static_cast<int>(ordering.size()));
    if (centers.size() != static_cast<Eigen::Index>(ordering.size()))
        throw FitError("timeline: center count does not match ordering");
    for (Eigen::Index k = 0; k < centers.size(); ++k) {
        if (!(centers(k) >= 0.0 && centers(k) <= 1.0)) throw FitError("timeline: event center outside [0, 1]");
        if (k > 0 && centers(k) < centers(k - 1)) throw FitError("timeline: event centers decrease");
    }
}

Timeline timeline_from_swap_costs(const EventOrdering& central, const Eigen::VectorXd& swap_costs)
{
    const auto n = static_cast<Eigen::Index>(central.size());
    if (swap_costs.size() != n + 1) throw InputError("timeline: expected one swap cost per adjacent pair");
    Eigen::VectorXd gamma = swap_costs;
    for (Eigen::Index i = 0; i <= n; ++i) {
        if (!std::isfinite(gamma(i))) throw FitError("timeline: non-finite swap cost");
        if (gamma(i) < -1e-9)
            throw FitError("timeline: negative swap cost at position " + std::to_string(i) +
                           "; the ordering is not locally optimal");
        if (gamma(i) < 0.0) gamma(i) = 0.0;
    }
    const double total = gamma.sum();
    if (std::abs(total) < 1e-12) throw FitError("timeline: swap costs sum to zero (degenerate timeline)");

    Timeline t;
    t.ordering = central;
    t.swap_costs = swap_costs;
    t.centers.resize(n);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        acc += gamma(k) / total;
        t.centers(k) = std::min(acc, 1.0);
    }
    return t;
}

Timeline event_centers(const EventOrdering& central, std::span<const EventOrdering> subjects,
                       const Eigen::MatrixXd& posteriors)
{
    const auto n = static_cast<int>(posteriors.cols());
    central.validate_permutation(n);
    if (static_cast<Eigen::Index>(subjects.size()) != posteriors.rows())
        throw InputError("event_centers: subject orderings and posterior rows differ in count");

    // Extended event space: n = start pseudo-event (always abnormal), n+1 = end pseudo-event (never).
    Eigen::MatrixXd p_ext(posteriors.rows(), n + 2);
    p_ext.leftCols(n) = posteriors;
    p_ext.col(n).setOnes();
    p_ext.col(n + 1).setZero();
    std::vector<EventOrdering> s_ext;
    s_ext.reserve(subjects.size());
    for (const auto& s : subjects) {
        EventOrdering e;
        e.sequence.reserve(s.size() + 2);
        e.sequence.push_back(n);
        e.sequence.insert(e.sequence.end(), s.sequence.begin(), s.sequence.end());
        e.sequence.push_back(n + 1);
        s_ext.push_back(std::move(e));
    }
    const SubjectTable table(s_ext, p_ext);

    std::vector<int> c_ext;
    c_ext.reserve(static_cast<std::size_t>(n) + 2);
    c_ext.push_back(n);
    c_ext.insert(c_ext.end(), central.sequence.begin(), central.sequence.end());
    c_ext.push_back(n + 1);

    const double base = table.evaluate(c_ext);
    Eigen::VectorXd gamma(n + 1);
    for (int i = 0; i <= n; ++i) {
        std::vector<int> swapped = c_ext;
        std::swap(swapped[static_cast<std::size_t>(i)], swapped[static_cast<std::size_t>(i) + 1]);
        gamma(i) = table.evaluate(swapped) - base;
    }
    return timeline_from_swap_costs(central, gamma);
}

} // namespace debm
