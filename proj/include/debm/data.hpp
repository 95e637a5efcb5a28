#pragma once

#include <Eigen/Core>

#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace debm {

enum class Diagnosis { CN, MCI, AD };

std::string_view to_string(Diagnosis dx);
/// Case-insensitive parse of "CN", "MCI", "AD".
std::optional<Diagnosis> parse_diagnosis(std::string_view label);

/// Missing entries are stored as quiet NaN; nothing else in a Dataset is NaN.
inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Cross-sectional table: one row per subject, biomarkers and covariates as columns.
struct Dataset {
    std::vector<std::string> subject_ids;
    std::vector<Diagnosis> diagnoses;

    std::vector<std::string> biomarker_names;
    Eigen::MatrixXd biomarkers; // subjects x biomarkers

    std::vector<std::string> covariate_names;
    Eigen::MatrixXd covariates; // subjects x covariates

    /// Set where residualization left the raw value in place because a covariate was missing.
    BoolMatrix unadjusted;

    Eigen::Index n_subjects() const { return static_cast<Eigen::Index>(subject_ids.size()); }
    Eigen::Index n_biomarkers() const { return static_cast<Eigen::Index>(biomarker_names.size()); }
    bool missing(Eigen::Index subject, Eigen::Index biomarker) const
    {
        return is_missing(biomarkers(subject, biomarker));
    }

    Eigen::Index biomarker_index(std::string_view name) const;
    Eigen::Index covariate_index(std::string_view name) const;
    std::size_t count(Diagnosis dx) const;

    /// Rows in the given order; indices may repeat (bootstrap).
    Dataset rows(const std::vector<Eigen::Index>& idx) const;
    /// Biomarker columns in the given order; covariates kept.
    Dataset columns(const std::vector<std::string>& names) const;

    /// Throws InputError if the shape invariants do not hold.
    void validate() const;
};

enum class ColumnRole { Id, Diagnosis, Biomarker, Covariate, Ignore };

std::optional<ColumnRole> parse_role(std::string_view s);
std::string_view to_string(ColumnRole role);

/// One covariate-correction step: each listed biomarker is regressed on the covariates.
struct ResidualizationStep {
    std::vector<std::string> biomarkers;
    std::vector<std::string> covariates;
};

/// Maps CSV columns to roles. Columns not listed take default_role.
struct Schema {
    std::vector<std::pair<std::string, ColumnRole>> columns;
    ColumnRole default_role = ColumnRole::Ignore;
    std::set<std::string> log_transform;
    std::vector<ResidualizationStep> residualize;
    /// Extra diagnosis spellings, e.g. {"NL", CN}.
    std::map<std::string, Diagnosis> label_aliases;

    ColumnRole role_of(const std::string& column) const;
    bool has_role(ColumnRole role) const;
};

/// Guesses roles from a header: "id"/"rid"/"subject" -> id, "dx"/"diagnosis" -> diagnosis,
/// everything else biomarker.
Schema infer_schema(const std::vector<std::string>& header);

/// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

Dataset read_dataset(std::istream& in, const Schema& schema, std::string_view source = "<stream>");
/// Parses only; residualization is a separate step so fitted coefficients can be stored.
Dataset load_dataset(const std::string& path, const Schema& schema);
/// Writes id, dx, biomarkers, covariates with round-trip precision; missing cells left empty.
void write_dataset(std::ostream& out, const Dataset& ds);

/// OLS correction for one biomarker, coefficients fit on CN subjects only.
struct ResidualFit {
    std::string biomarker;
    std::vector<std::string> covariates;
    Eigen::VectorXd coefficients; // intercept first, then one per covariate
};

ResidualFit fit_residualization(const Dataset& ds, const std::string& biomarker,
                                const std::vector<std::string>& covariates);
Dataset apply_residualization(Dataset ds, const ResidualFit& fit);
Dataset residualize(const Dataset& ds, const std::string& biomarker,
                    const std::vector<std::string>& covariates);

struct Residualized {
    Dataset data;
    std::vector<ResidualFit> fits;
};

/// Fits and applies every step of a schema's residualization list, in order.
Residualized residualize_steps(const Dataset& ds, const std::vector<ResidualizationStep>& steps);

struct BiomarkerTest {
    std::string name;
    double t_statistic = 0.0;
    double p_value = 1.0;
};

struct Selection {
    std::vector<std::string> selected; // ascending p-value, ties by column order
    std::vector<BiomarkerTest> tests;  // every biomarker that could be tested, column order
    std::vector<std::string> warnings;
};

/// Two-sample Student's t-test (pooled variance), CN against AD, per biomarker.
Selection select_biomarkers(const Dataset& ds, double alpha, bool bonferroni);

} // namespace debm
