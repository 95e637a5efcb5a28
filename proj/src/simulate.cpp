#include "debm/simulate.hpp"

#include "debm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace debm {

namespace {

std::vector<double> resolve(const std::vector<double>& per, double fallback, int n, const char* what)
{
    if (per.empty()) return std::vector<double>(static_cast<std::size_t>(n), fallback);
    if (per.size() != static_cast<std::size_t>(n))
        throw InputError(std::string("simulate: ") + what + " has " + std::to_string(per.size()) +
                         " entries, expected " + std::to_string(n));
    return per;
}

} // namespace

void SimConfig::validate() const
{
    if (n_biomarkers < 1) throw InputError("simulate: need at least one biomarker");
    if (n_subjects < 1) throw InputError("simulate: need at least one subject");
    if (sigma_xi < 0.0 || sigma_beta < 0.0) throw InputError("simulate: spreads must be non-negative");
    if (!(rho > 0.0)) throw InputError("simulate: rho must be positive");
    for (double r : rho_per)
        if (!(r > 0.0)) throw InputError("simulate: rho must be positive");
    for (double s : sigma_xi_per)
        if (s < 0.0) throw InputError("simulate: spreads must be non-negative");
    for (double s : sigma_beta_per)
        if (s < 0.0) throw InputError("simulate: spreads must be non-negative");
    if (frac_cn < 0.0 || frac_mci < 0.0 || frac_ad < 0.0 || std::abs(frac_cn + frac_mci + frac_ad - 1.0) > 1e-9)
        throw InputError("simulate: cohort fractions must be non-negative and sum to 1");
    if (!(psi_max > psi_min)) throw InputError("simulate: empty disease-stage range");
    if (psi_thresholds && psi_thresholds->first > psi_thresholds->second)
        throw InputError("simulate: stage thresholds out of order");
    if (!names.empty() && names.size() != static_cast<std::size_t>(n_biomarkers))
        throw InputError("simulate: names length does not match biomarker count");
}

SimResult simulate_cohort(const SimConfig& cfg)
{
    cfg.validate();
    const int n = cfg.n_biomarkers;
    const int m = cfg.n_subjects;

    std::vector<double> mu_xi = cfg.mu_xi;
    if (mu_xi.empty())
        for (int i = 1; i <= n; ++i) mu_xi.push_back(static_cast<double>(i) / (n + 1));
    if (mu_xi.size() != static_cast<std::size_t>(n)) throw InputError("simulate: mu_xi length does not match N");
    const std::vector<double> range = resolve(cfg.range, 1.0, n, "range");
    const std::vector<double> mu_beta = resolve(cfg.mu_beta, 0.0, n, "mu_beta");
    const std::vector<double> sigma_xi = resolve(cfg.sigma_xi_per, cfg.sigma_xi, n, "sigma_xi_per");
    const std::vector<double> sigma_beta = resolve(cfg.sigma_beta_per, cfg.sigma_beta, n, "sigma_beta_per");
    std::vector<double> rho = resolve(cfg.rho_per, cfg.rho, n, "rho_per");

    // mean spacing of the sorted centers
    std::vector<double> sorted = mu_xi;
    std::sort(sorted.begin(), sorted.end());
    const double spacing = n > 1 ? (sorted.back() - sorted.front()) / (n - 1) : 1.0 / (n + 1);

    std::mt19937_64 rng(cfg.seed);
    if (cfg.unequal_rho && cfg.rho_per.empty()) {
        std::uniform_real_distribution<double> u(std::log(cfg.rho / 2.0), std::log(2.0 * cfg.rho));
        double mean = 0.0;
        for (auto& r : rho) {
            r = std::exp(u(rng));
            mean += r / n;
        }
        for (auto& r : rho) r *= cfg.rho / mean;
    }

    SimResult out;
    Dataset& ds = out.data;
    ds.biomarker_names = cfg.names;
    if (ds.biomarker_names.empty())
        for (int i = 1; i <= n; ++i) ds.biomarker_names.push_back("b" + std::to_string(i));
    ds.biomarkers.resize(m, n);
    ds.covariates.resize(m, 0);
    ds.unadjusted = BoolMatrix::Constant(m, n, false);

    std::uniform_real_distribution<double> stage(cfg.psi_min, cfg.psi_max);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd psi(m);
    for (int j = 0; j < m; ++j) {
        psi(j) = stage(rng);
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double xi = mu_xi[k] + sigma_xi[k] * spacing * gauss(rng);
            const double beta = mu_beta[k] + sigma_beta[k] * cfg.beta_unit * range[k] * gauss(rng);
            ds.biomarkers(j, i) = sigmoid_trajectory(psi(j), xi, rho[k], range[k], beta);
        }
    }

    ds.subject_ids.reserve(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) ds.subject_ids.push_back("S" + std::to_string(j));
    ds.diagnoses.assign(static_cast<std::size_t>(m), Diagnosis::MCI);
    if (cfg.psi_thresholds) {
        for (int j = 0; j < m; ++j) {
            if (psi(j) < cfg.psi_thresholds->first) ds.diagnoses[static_cast<std::size_t>(j)] = Diagnosis::CN;
            else if (psi(j) > cfg.psi_thresholds->second) ds.diagnoses[static_cast<std::size_t>(j)] = Diagnosis::AD;
        }
    } else {
        std::vector<int> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return psi(a) < psi(b); });
        const auto n_cn = static_cast<std::size_t>(std::llround(cfg.frac_cn * m));
        const auto n_ad = std::min(static_cast<std::size_t>(std::llround(cfg.frac_ad * m)),
                                   static_cast<std::size_t>(m) - std::min<std::size_t>(n_cn, static_cast<std::size_t>(m)));
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (r < n_cn) ds.diagnoses[static_cast<std::size_t>(order[r])] = Diagnosis::CN;
            else if (r >= order.size() - n_ad) ds.diagnoses[static_cast<std::size_t>(order[r])] = Diagnosis::AD;
        }
    }

    SimTruth& t = out.truth;
    t.centers = Eigen::Map<const Eigen::VectorXd>(mu_xi.data(), n);
    t.ordering = ascending_ordering(t.centers);
    t.rho = Eigen::Map<const Eigen::VectorXd>(rho.data(), n);
    t.psi = psi;
    t.seed = cfg.seed;
    return out;
}

} // namespace debm
