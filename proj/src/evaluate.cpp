#include "debm/evaluate.hpp"

#include "debm/errors.hpp"
#include "debm/parallel.hpp"
#include "format.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace debm {

double ordering_error(const EventOrdering& estimate, const EventOrdering& truth)
{
    const auto n = static_cast<long long>(truth.size());
    if (n < 2) {
        (void)kendall_tau(estimate, truth); // still validates the element sets
        return 0.0;
    }
    return static_cast<double>(kendall_tau(estimate, truth)) / static_cast<double>(n * (n - 1) / 2);
}

namespace {

double population_sd(const Eigen::VectorXd& v)
{
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().mean());
}

} // namespace

double event_center_error(const Eigen::VectorXd& centers, const Eigen::VectorXd& truth)
{
    if (centers.size() != truth.size() || centers.size() == 0)
        throw InputError("event_center_error: center vectors must be non-empty and of equal length");
    const double sd = population_sd(centers);
    if (!(sd > 0.0)) throw InputError("event_center_error: estimated centers have zero spread");
    const Eigen::VectorXd st = ((centers.array() - centers.mean()) / sd * population_sd(truth) + truth.mean()).matrix();
    return (st - truth).cwiseAbs().sum();
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size() || a.size() < 2) throw InputError("pearson_correlation: need two equal-length vectors");
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double denom = std::sqrt(da.square().sum() * db.square().sum());
    if (!(denom > 0.0)) throw InputError("pearson_correlation: zero variance");
    return (da * db).sum() / denom;
}

double auc(std::span<const double> positive, std::span<const double> negative)
{
    if (positive.empty() || negative.empty()) throw InputError("auc: both groups must be non-empty");
    // rank statistic over the pooled sample; tied values share their mean rank
    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(positive.size() + negative.size());
    for (double v : positive) pooled.emplace_back(v, 1);
    for (double v : negative) pooled.emplace_back(v, 0);
    for (const auto& [v, g] : pooled)
        if (std::isnan(v)) throw InputError("auc: NaN score");
    std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    // sums of doubled ranks stay integral, so ties give exactly 1/2
    long long doubled_rank_sum = 0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const auto doubled_mid = static_cast<long long>(i + 1 + j); // 2 * mean 1-based rank
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second == 1) doubled_rank_sum += doubled_mid;
        i = j;
    }
    const auto np = static_cast<long long>(positive.size());
    const auto nn = static_cast<long long>(negative.size());
    const long long doubled_u = doubled_rank_sum - np * (np + 1);
    const long long total = 2 * np * nn;
    // The smaller of u and its complement is rounded onto the 2^-53 grid, where 1 - x is
    // exact, so auc(p, q) + auc(q, p) == 1 and sign flips give exact complements.
    auto grid = [total](long long u) {
        return std::round(std::ldexp(static_cast<double>(u) / static_cast<double>(total), 53)) * std::ldexp(1.0, -53);
    };
    if (2 * doubled_u <= total) return grid(doubled_u);
    return 1.0 - grid(total - doubled_u);
}

// ---------------------------------------------------------------------------

namespace {

Model fit_pipeline(const Dataset& ds, Method method, const FitOptions& fit,
                   const std::optional<std::vector<MixtureFit>>& fixed)
{
    if (fixed) return fit_with_mixtures(ds, *fixed, method, fit);
    return fit_model(ds, method, fit);
}

} // namespace

BootstrapResult bootstrap(const Dataset& ds, const BootstrapOptions& options)
{
    if (options.resamples < 2) throw InputError("bootstrap: need at least 2 resamples");
    ds.validate();
    const Eigen::Index n = ds.n_biomarkers();
    const Eigen::Index m = ds.n_subjects();
    if (m == 0) throw InputError("bootstrap: empty dataset");

    const auto b_count = static_cast<std::size_t>(options.resamples);
    std::vector<std::optional<Timeline>> slots(b_count);
    std::vector<std::string> slot_errors(b_count);
    parallel_for(b_count, [&](std::size_t b) {
        std::mt19937_64 rng(options.seed + b);
        std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
        for (auto& i : idx) i = pick(rng);
        FitOptions fit = options.fit;
        fit.febm.seed = options.seed + b;
        fit.central.seed = options.seed + b;
        try {
            slots[b] = fit_pipeline(ds.rows(idx), options.method, fit, options.fixed_mixtures).timeline;
        } catch (const std::runtime_error& e) {
            slot_errors[b] = "resample " + std::to_string(b) + ": " + e.what();
        }
    });

    BootstrapResult out;
    out.positional = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t b = 0; b < b_count; ++b) {
        if (!slots[b]) {
            ++out.failures;
            out.errors.push_back(slot_errors[b]);
            continue;
        }
        out.timelines.push_back(std::move(*slots[b]));
    }
    const auto ok = static_cast<Eigen::Index>(out.timelines.size());
    if (ok < 2) throw FitError("bootstrap: fewer than 2 resamples could be fit" +
                               (out.errors.empty() ? std::string() : " (" + out.errors.front() + ")"));

    Eigen::MatrixXd centers(ok, n);
    for (Eigen::Index b = 0; b < ok; ++b) {
        const Timeline& t = out.timelines[static_cast<std::size_t>(b)];
        for (std::size_t pos = 0; pos < t.size(); ++pos) out.positional(t.ordering[pos], static_cast<Eigen::Index>(pos)) += 1.0;
        centers.row(b) = t.centers_by_biomarker().transpose();
    }
    out.positional /= static_cast<double>(ok);
    out.center_mean = centers.colwise().mean().transpose();
    out.center_se.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out.center_se(i) = std::sqrt((centers.col(i).array() - out.center_mean(i)).square().sum() / static_cast<double>(ok - 1));
    return out;
}

void write_positional_svg(std::ostream& out, const BootstrapResult& result, const std::vector<std::string>& names,
                          const EventOrdering& display_order)
{
    const auto n = static_cast<int>(result.positional.rows());
    display_order.validate_permutation(n);
    if (static_cast<int>(names.size()) != n) throw InputError("write_positional_svg: names length mismatch");
    const int cell = 32;
    const int label_w = 160;
    const int top = 24;
    const int width = label_w + n * cell + 8;
    const int height = top + n * cell + 8;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int pos = 0; pos < n; ++pos)
        out << "<text x=\"" << label_w + pos * cell + cell / 2 << "\" y=\"" << top - 6
            << "\" font-size=\"11\" text-anchor=\"middle\">" << pos + 1 << "</text>\n";
    for (int r = 0; r < n; ++r) {
        const int i = display_order[static_cast<std::size_t>(r)];
        const int y = top + r * cell;
        std::string label = names[static_cast<std::size_t>(i)];
        // minimal XML escaping
        std::string esc;
        for (char c : label) {
            if (c == '&') esc += "&amp;";
            else if (c == '<') esc += "&lt;";
            else if (c == '>') esc += "&gt;";
            else esc += c;
        }
        out << "<text x=\"" << label_w - 6 << "\" y=\"" << y + cell / 2 + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << esc << "</text>\n";
        for (int pos = 0; pos < n; ++pos) {
            const double f = result.positional(i, pos);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - f)));
            out << "<rect x=\"" << label_w + pos * cell << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
                << cell << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"#ccc\"><title>"
                << format_double(f) << "</title></rect>\n";
        }
    }
    out << "</svg>\n";
}

// ---------------------------------------------------------------------------

CvResult cv_auc(const Dataset& ds, const CvOptions& options)
{
    ds.validate();
    const int k = options.folds;
    if (k < 2) throw InputError("cv_auc: need at least 2 folds");
    if (ds.count(Diagnosis::CN) < static_cast<std::size_t>(k) || ds.count(Diagnosis::AD) < static_cast<std::size_t>(k))
        throw InputError("cv_auc: need at least as many CN and AD subjects as folds");

    const auto m = static_cast<std::size_t>(ds.n_subjects());
    CvResult out;
    out.fold.assign(m, 0);
    std::mt19937_64 rng(options.seed);
    for (Diagnosis dx : {Diagnosis::CN, Diagnosis::MCI, Diagnosis::AD}) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < m; ++j)
            if (ds.diagnoses[j] == dx) members.push_back(j);
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t r = 0; r < members.size(); ++r) out.fold[members[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
    }

    out.stage = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), missing_value);
    std::vector<std::vector<std::string>> fold_errors(static_cast<std::size_t>(k));
    std::vector<std::vector<std::pair<std::size_t, double>>> fold_stages(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t f) {
        std::vector<Eigen::Index> train, test;
        for (std::size_t j = 0; j < m; ++j)
            (out.fold[j] == static_cast<int>(f) ? test : train).push_back(static_cast<Eigen::Index>(j));
        FitOptions fit = options.fit;
        fit.febm.seed = options.seed + f;
        fit.central.seed = options.seed + f;
        Model model;
        try {
            model = fit_model(ds.rows(train), options.method, fit);
        } catch (const std::runtime_error& e) {
            fold_errors[f].push_back("fold " + std::to_string(f) + ": " + e.what());
            return;
        }
        const Dataset held_out = ds.rows(test);
        if (options.method == Method::Febm && options.febm_discrete_stage) {
            const Eigen::MatrixXd x = aligned_values(held_out, model.biomarker_names);
            for (Eigen::Index r = 0; r < x.rows(); ++r)
                fold_stages[f].emplace_back(static_cast<std::size_t>(test[static_cast<std::size_t>(r)]),
                                            febm_stage(model.timeline.ordering, model.fits, x.row(r).transpose()));
        } else {
            const CohortStages st = model.stage(held_out, options.staging);
            for (std::size_t r = 0; r < st.subjects.size(); ++r)
                if (st.subjects[r]) fold_stages[f].emplace_back(static_cast<std::size_t>(test[r]), st.subjects[r]->stage);
            for (const auto& e : st.errors) fold_errors[f].push_back("fold " + std::to_string(f) + ": " + e);
        }
    });
    for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
        for (const auto& [j, s] : fold_stages[f]) out.stage(static_cast<Eigen::Index>(j)) = s;
        out.errors.insert(out.errors.end(), fold_errors[f].begin(), fold_errors[f].end());
    }

    std::vector<double> ad, cn;
    for (std::size_t j = 0; j < m; ++j) {
        const double s = out.stage(static_cast<Eigen::Index>(j));
        if (is_missing(s)) continue;
        if (ds.diagnoses[j] == Diagnosis::AD) ad.push_back(s);
        else if (ds.diagnoses[j] == Diagnosis::CN) cn.push_back(s);
    }
    if (ad.empty() || cn.empty()) throw FitError("cv_auc: no held-out CN or AD subject could be staged");
    out.auc = auc(ad, cn);
    return out;
}

// ---------------------------------------------------------------------------

SimConfig resample_biomarkers(const SimConfig& pool, int n, std::mt19937_64& rng)
{
    pool.validate();
    if (n < 1) throw InputError("resample_biomarkers: need at least one biomarker");
    const int p = pool.n_biomarkers;
    std::uniform_int_distribution<int> pick(0, p - 1);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = pick(rng);

    auto take = [&](const std::vector<double>& per) {
        if (per.empty()) return per;
        std::vector<double> out;
        for (int i : idx) out.push_back(per[static_cast<std::size_t>(i)]);
        return out;
    };
    SimConfig cfg = pool;
    cfg.n_biomarkers = n;
    cfg.mu_xi.clear();
    cfg.sigma_xi_per = take(pool.sigma_xi_per);
    cfg.sigma_beta_per = take(pool.sigma_beta_per);
    cfg.rho_per = take(pool.rho_per);
    cfg.range = take(pool.range);
    cfg.mu_beta = take(pool.mu_beta);

    cfg.names.clear();
    std::map<std::string, int> seen;
    for (int i : idx) {
        const std::string base = pool.names.empty() ? "b" + std::to_string(i + 1) : pool.names[static_cast<std::size_t>(i)];
        const int c = ++seen[base];
        cfg.names.push_back(c == 1 ? base : base + "_" + std::to_string(c));
    }
    return cfg;
}

GridResults run_experiment_grid(const GridConfig& grid)
{
    if (grid.repetitions < 1) throw InputError("experiment grid: need at least one repetition");
    if (grid.methods.empty()) throw InputError("experiment grid: no methods requested");
    for (const auto& pt : grid.points) pt.config.validate();

    const std::size_t reps = static_cast<std::size_t>(grid.repetitions);
    const std::size_t nm = grid.methods.size();
    const std::size_t tasks = grid.points.size() * reps;
    GridResults out;
    out.rows.resize(tasks * nm);

    parallel_for(tasks, [&](std::size_t t) {
        const std::size_t p = t / reps;
        const int r = static_cast<int>(t % reps);
        const GridPoint& pt = grid.points[p];
        const std::uint64_t seed = grid.seed + static_cast<std::uint64_t>(r);
        for (std::size_t k = 0; k < nm; ++k) {
            GridRow& row = out.rows[t * nm + k];
            row.point = p;
            row.label = pt.label;
            row.repetition = r;
            row.method = grid.methods[k];
            row.seed = seed;
        }
        try {
            SimConfig cfg = pt.config;
            if (pt.resampled_biomarkers) {
                std::mt19937_64 rng(seed);
                cfg = resample_biomarkers(pt.config, *pt.resampled_biomarkers, rng);
            }
            cfg.seed = seed;
            const SimResult sim = simulate_cohort(cfg);
            const std::vector<MixtureFit> fits = fit_mixtures(sim.data, grid.fit.mixture);
            for (std::size_t k = 0; k < nm; ++k) {
                GridRow& row = out.rows[t * nm + k];
                try {
                    FitOptions fit = grid.fit;
                    fit.febm.seed = seed;
                    fit.central.seed = seed;
                    const Model model = fit_with_mixtures(sim.data, fits, row.method, fit);
                    row.ordering_error = ordering_error(model.timeline.ordering, sim.truth.ordering);
                    row.event_center_error = event_center_error(model.timeline.centers_by_biomarker(), sim.truth.centers);
                    row.ok = true;
                } catch (const std::runtime_error& e) {
                    row.error = e.what();
                }
            }
        } catch (const std::runtime_error& e) {
            for (std::size_t k = 0; k < nm; ++k) out.rows[t * nm + k].error = e.what();
        }
    });

    for (std::size_t p = 0; p < grid.points.size(); ++p) {
        for (std::size_t k = 0; k < nm; ++k) {
            GridSummary s;
            s.point = p;
            s.label = grid.points[p].label;
            s.method = grid.methods[k];
            std::vector<double> os, ec;
            for (std::size_t r = 0; r < reps; ++r) {
                const GridRow& row = out.rows[(p * reps + r) * nm + k];
                if (!row.ok) continue;
                os.push_back(row.ordering_error);
                ec.push_back(row.event_center_error);
            }
            s.successes = static_cast<int>(os.size());
            auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
                if (v.empty()) {
                    mean = sd = missing_value;
                    return;
                }
                mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                double ss = 0.0;
                for (double x : v) ss += (x - mean) * (x - mean);
                sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
            };
            mean_sd(os, s.ordering_error_mean, s.ordering_error_sd);
            mean_sd(ec, s.event_center_error_mean, s.event_center_error_sd);
            out.summary.push_back(s);
        }
    }
    return out;
}

} // namespace debm
