#pragma once

#include "debm/data.hpp"
#include "debm/ordering.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace debm {

/// Sigmoid-trajectory cohort generator. Per-biomarker vectors may be left empty, in which
/// case the scalar default applies to every biomarker.
struct SimConfig {
    int n_biomarkers = 7;
    int n_subjects = 1737;

    std::vector<double> mu_xi;        // event centers; default equidistant i / (N + 1)
    double sigma_xi = 2.0;            // std of xi in multiples of the mean center spacing
    std::vector<double> sigma_xi_per; // optional per-biomarker override

    double sigma_beta = 1.0;          // relative spread of the normal-state value
    std::vector<double> sigma_beta_per;
    double beta_unit = 0.2;           // sigma_beta = 1 means a beta std of beta_unit * R

    double rho = 30.0;                // progression rate
    std::vector<double> rho_per;
    bool unequal_rho = false;         // draw rates log-uniform in [rho/2, 2 rho], mean-normalized to rho

    std::vector<double> range;        // R_i, default 1
    std::vector<double> mu_beta;      // default 0

    double frac_cn = 417.0 / 1737.0;
    double frac_mci = 978.0 / 1737.0;
    double frac_ad = 342.0 / 1737.0;
    /// Explicit disease-stage cut points (CN below the first, AD above the second) instead of
    /// rank-based fractions.
    std::optional<std::pair<double, double>> psi_thresholds;

    double psi_min = -0.1;
    double psi_max = 1.1;

    std::vector<std::string> names;   // default b1..bN
    std::uint64_t seed = 0;

    /// Throws InputError on an inconsistent configuration.
    void validate() const;
};

struct SimTruth {
    EventOrdering ordering;     // biomarkers by ascending mu_xi
    Eigen::VectorXd centers;    // mu_xi, indexed by biomarker
    Eigen::VectorXd rho;        // rates actually used
    Eigen::VectorXd psi;        // per-subject disease stage
    std::uint64_t seed = 0;
};

struct SimResult {
    Dataset data;
    SimTruth truth;
};

/// Value of one trajectory: R / (1 + exp(-rho (psi - xi))) + beta.
inline double sigmoid_trajectory(double psi, double xi, double rho, double range, double beta)
{
    return range / (1.0 + std::exp(-rho * (psi - xi))) + beta;
}

SimResult simulate_cohort(const SimConfig& cfg);

} // namespace debm
