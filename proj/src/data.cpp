#include "debm/data.hpp"

#include "debm/errors.hpp"
#include "format.hpp"

#include <Eigen/QR>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace debm {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view s)
{
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace

std::string_view to_string(Diagnosis dx)
{
    switch (dx) {
    case Diagnosis::CN: return "CN";
    case Diagnosis::MCI: return "MCI";
    case Diagnosis::AD: return "AD";
    }
    return "?";
}

std::optional<Diagnosis> parse_diagnosis(std::string_view label)
{
    const std::string l = lower(trim(label));
    if (l == "cn") return Diagnosis::CN;
    if (l == "mci") return Diagnosis::MCI;
    if (l == "ad") return Diagnosis::AD;
    return std::nullopt;
}

std::optional<ColumnRole> parse_role(std::string_view s)
{
    const std::string l = lower(trim(s));
    if (l == "id") return ColumnRole::Id;
    if (l == "diagnosis") return ColumnRole::Diagnosis;
    if (l == "biomarker") return ColumnRole::Biomarker;
    if (l == "covariate") return ColumnRole::Covariate;
    if (l == "ignore") return ColumnRole::Ignore;
    return std::nullopt;
}

std::string_view to_string(ColumnRole role)
{
    switch (role) {
    case ColumnRole::Id: return "id";
    case ColumnRole::Diagnosis: return "diagnosis";
    case ColumnRole::Biomarker: return "biomarker";
    case ColumnRole::Covariate: return "covariate";
    case ColumnRole::Ignore: return "ignore";
    }
    return "ignore";
}

// ---------------------------------------------------------------------------
// Dataset

Eigen::Index Dataset::biomarker_index(std::string_view name) const
{
    auto it = std::find(biomarker_names.begin(), biomarker_names.end(), name);
    if (it == biomarker_names.end())
        throw InputError("unknown biomarker '" + std::string(name) + "'");
    return static_cast<Eigen::Index>(it - biomarker_names.begin());
}

Eigen::Index Dataset::covariate_index(std::string_view name) const
{
    auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
    if (it == covariate_names.end())
        throw InputError("unknown covariate '" + std::string(name) + "'");
    return static_cast<Eigen::Index>(it - covariate_names.begin());
}

std::size_t Dataset::count(Diagnosis dx) const
{
    return static_cast<std::size_t>(std::count(diagnoses.begin(), diagnoses.end(), dx));
}

Dataset Dataset::rows(const std::vector<Eigen::Index>& idx) const
{
    Dataset out;
    out.biomarker_names = biomarker_names;
    out.covariate_names = covariate_names;
    const auto m = static_cast<Eigen::Index>(idx.size());
    out.biomarkers.resize(m, biomarkers.cols());
    out.covariates.resize(m, covariates.cols());
    out.unadjusted.resize(m, unadjusted.cols());
    out.subject_ids.reserve(idx.size());
    out.diagnoses.reserve(idx.size());
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index src = idx[static_cast<std::size_t>(r)];
        if (src < 0 || src >= n_subjects()) throw InputError("row index out of range");
        out.subject_ids.push_back(subject_ids[static_cast<std::size_t>(src)]);
        out.diagnoses.push_back(diagnoses[static_cast<std::size_t>(src)]);
        out.biomarkers.row(r) = biomarkers.row(src);
        out.covariates.row(r) = covariates.row(src);
        out.unadjusted.row(r) = unadjusted.row(src);
    }
    return out;
}

Dataset Dataset::columns(const std::vector<std::string>& names) const
{
    Dataset out;
    out.subject_ids = subject_ids;
    out.diagnoses = diagnoses;
    out.covariate_names = covariate_names;
    out.covariates = covariates;
    out.biomarker_names = names;
    out.biomarkers.resize(n_subjects(), static_cast<Eigen::Index>(names.size()));
    out.unadjusted.resize(n_subjects(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t c = 0; c < names.size(); ++c) {
        const Eigen::Index src = biomarker_index(names[c]);
        out.biomarkers.col(static_cast<Eigen::Index>(c)) = biomarkers.col(src);
        out.unadjusted.col(static_cast<Eigen::Index>(c)) = unadjusted.col(src);
    }
    return out;
}

void Dataset::validate() const
{
    const Eigen::Index m = n_subjects();
    if (static_cast<Eigen::Index>(diagnoses.size()) != m)
        throw InputError("diagnoses length does not match subject count");
    if (biomarkers.rows() != m || biomarkers.cols() != n_biomarkers())
        throw InputError("biomarker matrix shape does not match names");
    if (covariates.rows() != m || covariates.cols() != static_cast<Eigen::Index>(covariate_names.size()))
        throw InputError("covariate matrix shape does not match names");
    if (unadjusted.rows() != m || unadjusted.cols() != n_biomarkers())
        throw InputError("unadjusted mask shape does not match biomarkers");
}

// ---------------------------------------------------------------------------
// Schema and CSV

ColumnRole Schema::role_of(const std::string& column) const
{
    for (const auto& [name, role] : columns)
        if (name == column) return role;
    return default_role;
}

bool Schema::has_role(ColumnRole role) const
{
    return std::any_of(columns.begin(), columns.end(),
                       [role](const auto& c) { return c.second == role; });
}

Schema infer_schema(const std::vector<std::string>& header)
{
    Schema s;
    s.default_role = ColumnRole::Biomarker;
    for (const auto& h : header) {
        const std::string l = lower(trim(h));
        if (l == "id" || l == "rid" || l == "subject" || l == "subject_id")
            s.columns.emplace_back(h, ColumnRole::Id);
        else if (l == "dx" || l == "diagnosis")
            s.columns.emplace_back(h, ColumnRole::Diagnosis);
        else
            s.columns.emplace_back(h, ColumnRole::Biomarker);
    }
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

Dataset read_dataset(std::istream& in, const Schema& schema, std::string_view source)
{
    const std::string src(source);
    std::string line;
    if (!std::getline(in, line)) throw InputError(src + ": empty file (header row expected)");
    const std::vector<std::string> header = split_csv_line(line);

    for (const auto& [name, role] : schema.columns) {
        (void)role;
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw InputError(src + ": schema column '" + name + "' not in header");
    }

    int id_col = -1, dx_col = -1;
    std::vector<int> bio_cols, cov_cols;
    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const ColumnRole role = schema.role_of(header[c]);
        switch (role) {
        case ColumnRole::Id:
            if (id_col >= 0) throw InputError(src + ": more than one id column");
            id_col = static_cast<int>(c);
            break;
        case ColumnRole::Diagnosis:
            if (dx_col >= 0) throw InputError(src + ": more than one diagnosis column");
            dx_col = static_cast<int>(c);
            break;
        case ColumnRole::Biomarker:
            bio_cols.push_back(static_cast<int>(c));
            ds.biomarker_names.push_back(header[c]);
            break;
        case ColumnRole::Covariate:
            cov_cols.push_back(static_cast<int>(c));
            ds.covariate_names.push_back(header[c]);
            break;
        case ColumnRole::Ignore: break;
        }
    }
    if (dx_col < 0) throw InputError(src + ": no diagnosis column declared");
    if (bio_cols.empty()) throw InputError(src + ": no biomarker columns declared");

    std::vector<std::vector<double>> bio_rows, cov_rows;
    std::size_t row_no = 1; // header is row 1
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        const std::string where = src + ": row " + std::to_string(row_no);
        if (f.size() != header.size())
            throw InputError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));

        const std::string& dx_text = f[static_cast<std::size_t>(dx_col)];
        std::optional<Diagnosis> dx = parse_diagnosis(dx_text);
        if (!dx) {
            auto alias = schema.label_aliases.find(std::string(trim(dx_text)));
            if (alias != schema.label_aliases.end()) dx = alias->second;
        }
        if (!dx) throw InputError(where + ": unknown diagnosis label '" + dx_text + "'");

        std::vector<double> b;
        b.reserve(bio_cols.size());
        for (std::size_t k = 0; k < bio_cols.size(); ++k) {
            const std::string& cell = f[static_cast<std::size_t>(bio_cols[k])];
            if (trim(cell).empty()) {
                b.push_back(missing_value);
                continue;
            }
            auto v = parse_number(cell);
            if (!v)
                throw InputError(where + ", column '" + ds.biomarker_names[k] + "': non-numeric value '" +
                                 cell + "'");
            if (schema.log_transform.count(ds.biomarker_names[k])) {
                if (*v <= 0.0)
                    throw InputError(where + ", column '" + ds.biomarker_names[k] +
                                     "': log transform of non-positive value");
                *v = std::log(*v);
            }
            b.push_back(*v);
        }
        std::vector<double> cv;
        cv.reserve(cov_cols.size());
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            const std::string& cell = f[static_cast<std::size_t>(cov_cols[k])];
            if (trim(cell).empty()) {
                cv.push_back(missing_value);
                continue;
            }
            auto v = parse_number(cell);
            if (!v)
                throw InputError(where + ", column '" + ds.covariate_names[k] + "': non-numeric value '" +
                                 cell + "'");
            cv.push_back(*v);
        }

        ds.subject_ids.push_back(id_col >= 0 ? std::string(trim(f[static_cast<std::size_t>(id_col)]))
                                             : std::to_string(ds.subject_ids.size() + 1));
        ds.diagnoses.push_back(*dx);
        bio_rows.push_back(std::move(b));
        cov_rows.push_back(std::move(cv));
    }

    const auto m = static_cast<Eigen::Index>(bio_rows.size());
    ds.biomarkers.resize(m, static_cast<Eigen::Index>(bio_cols.size()));
    ds.covariates.resize(m, static_cast<Eigen::Index>(cov_cols.size()));
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < ds.biomarkers.cols(); ++c)
            ds.biomarkers(r, c) = bio_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        for (Eigen::Index c = 0; c < ds.covariates.cols(); ++c)
            ds.covariates(r, c) = cov_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    ds.unadjusted = BoolMatrix::Constant(m, ds.biomarkers.cols(), false);
    return ds;
}

Dataset load_dataset(const std::string& path, const Schema& schema)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_dataset(in, schema, path);
}

void write_dataset(std::ostream& out, const Dataset& ds)
{
    out << "id,dx";
    for (const auto& n : ds.biomarker_names) out << ',' << n;
    for (const auto& n : ds.covariate_names) out << ',' << n;
    out << '\n';
    for (Eigen::Index r = 0; r < ds.n_subjects(); ++r) {
        out << ds.subject_ids[static_cast<std::size_t>(r)] << ','
            << to_string(ds.diagnoses[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < ds.biomarkers.cols(); ++c) {
            out << ',';
            if (!ds.missing(r, c)) out << format_double(ds.biomarkers(r, c));
        }
        for (Eigen::Index c = 0; c < ds.covariates.cols(); ++c) {
            out << ',';
            if (!is_missing(ds.covariates(r, c))) out << format_double(ds.covariates(r, c));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Residualization

ResidualFit fit_residualization(const Dataset& ds, const std::string& biomarker,
                                const std::vector<std::string>& covariates)
{
    const Eigen::Index b = ds.biomarker_index(biomarker);
    std::vector<Eigen::Index> cov;
    for (const auto& c : covariates) cov.push_back(ds.covariate_index(c));
    const auto p = static_cast<Eigen::Index>(cov.size()) + 1;

    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < ds.n_subjects(); ++r) {
        if (ds.diagnoses[static_cast<std::size_t>(r)] != Diagnosis::CN || ds.missing(r, b)) continue;
        bool ok = true;
        for (auto c : cov) ok = ok && !is_missing(ds.covariates(r, c));
        if (ok) rows.push_back(r);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < p + 1)
        throw InputError("residualize '" + biomarker + "': need at least " + std::to_string(p + 1) +
                         " CN subjects with complete values, have " + std::to_string(n));

    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index r = rows[static_cast<std::size_t>(k)];
        design(k, 0) = 1.0;
        for (Eigen::Index c = 0; c < p - 1; ++c) design(k, c + 1) = ds.covariates(r, cov[static_cast<std::size_t>(c)]);
        y(k) = ds.biomarkers(r, b);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
        throw InputError("residualize '" + biomarker + "': covariate design matrix is rank deficient");

    ResidualFit fit;
    fit.biomarker = biomarker;
    fit.covariates = covariates;
    fit.coefficients = qr.solve(y);
    return fit;
}

Dataset apply_residualization(Dataset ds, const ResidualFit& fit)
{
    const Eigen::Index b = ds.biomarker_index(fit.biomarker);
    std::vector<Eigen::Index> cov;
    for (const auto& c : fit.covariates) cov.push_back(ds.covariate_index(c));
    if (fit.coefficients.size() != static_cast<Eigen::Index>(cov.size()) + 1)
        throw InputError("residualize '" + fit.biomarker + "': coefficient count does not match covariates");

    for (Eigen::Index r = 0; r < ds.n_subjects(); ++r) {
        if (ds.missing(r, b)) continue;
        double predicted = fit.coefficients(0);
        bool complete = true;
        for (std::size_t c = 0; c < cov.size(); ++c) {
            const double v = ds.covariates(r, cov[c]);
            if (is_missing(v)) {
                complete = false;
                break;
            }
            predicted += fit.coefficients(static_cast<Eigen::Index>(c) + 1) * v;
        }
        if (complete)
            ds.biomarkers(r, b) -= predicted;
        else
            ds.unadjusted(r, b) = true;
    }
    return ds;
}

Dataset residualize(const Dataset& ds, const std::string& biomarker, const std::vector<std::string>& covariates)
{
    return apply_residualization(ds, fit_residualization(ds, biomarker, covariates));
}

Residualized residualize_steps(const Dataset& ds, const std::vector<ResidualizationStep>& steps)
{
    Residualized out{ds, {}};
    for (const auto& step : steps)
        for (const auto& b : step.biomarkers) {
            out.fits.push_back(fit_residualization(out.data, b, step.covariates));
            out.data = apply_residualization(std::move(out.data), out.fits.back());
        }
    return out;
}

// ---------------------------------------------------------------------------
// Biomarker selection

Selection select_biomarkers(const Dataset& ds, double alpha, bool bonferroni)
{
    Selection out;
    const double threshold = bonferroni && ds.n_biomarkers() > 0 ? alpha / static_cast<double>(ds.n_biomarkers())
                                                                 : alpha;
    for (Eigen::Index b = 0; b < ds.n_biomarkers(); ++b) {
        const std::string& name = ds.biomarker_names[static_cast<std::size_t>(b)];
        double sum[2] = {0, 0}, sq[2] = {0, 0};
        double n[2] = {0, 0};
        for (Eigen::Index r = 0; r < ds.n_subjects(); ++r) {
            const Diagnosis dx = ds.diagnoses[static_cast<std::size_t>(r)];
            if (dx == Diagnosis::MCI || ds.missing(r, b)) continue;
            const int g = dx == Diagnosis::AD ? 1 : 0;
            sum[g] += ds.biomarkers(r, b);
            n[g] += 1;
        }
        if (n[0] < 2 || n[1] < 2) {
            out.warnings.push_back(name + ": fewer than 2 CN or AD values, not tested");
            continue;
        }
        const double mean[2] = {sum[0] / n[0], sum[1] / n[1]};
        for (Eigen::Index r = 0; r < ds.n_subjects(); ++r) {
            const Diagnosis dx = ds.diagnoses[static_cast<std::size_t>(r)];
            if (dx == Diagnosis::MCI || ds.missing(r, b)) continue;
            const int g = dx == Diagnosis::AD ? 1 : 0;
            const double d = ds.biomarkers(r, b) - mean[g];
            sq[g] += d * d;
        }
        const double dof = n[0] + n[1] - 2;
        const double pooled = (sq[0] + sq[1]) / dof;
        if (!(pooled > 0.0)) {
            out.warnings.push_back(name + ": zero pooled variance, skipped");
            continue;
        }
        const double t = (mean[1] - mean[0]) / std::sqrt(pooled * (1.0 / n[0] + 1.0 / n[1]));
        const boost::math::students_t dist(dof);
        const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
        out.tests.push_back({name, t, p});
    }

    std::vector<std::size_t> order(out.tests.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.tests[a].p_value < out.tests[b].p_value; });
    for (auto k : order)
        if (out.tests[k].p_value < threshold) out.selected.push_back(out.tests[k].name);
    return out;
}

} // namespace debm
