#include "debm/io.hpp"

#include "debm/errors.hpp"
#include "format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace debm {

using json = nlohmann::json;

namespace {

// JSON has no non-finite numbers; those are stored as strings.
json num(double v)
{
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double to_double(const json& j, const std::string& what)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw InputError(what + ": expected a number");
}

json vec(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

json vec(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

const json& field(const json& obj, const char* key, const std::string& ctx)
{
    if (!obj.is_object() || !obj.contains(key)) throw InputError(ctx + ": missing field '" + key + "'");
    return obj.at(key);
}

std::vector<double> to_vector(const json& j, const std::string& what)
{
    if (!j.is_array()) throw InputError(what + ": expected an array");
    std::vector<double> out;
    for (const auto& x : j) out.push_back(to_double(x, what));
    return out;
}

Eigen::VectorXd to_eigen(const json& j, const std::string& what)
{
    const auto v = to_vector(j, what);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> to_strings(const json& j, const std::string& what)
{
    if (!j.is_array()) throw InputError(what + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : j) {
        if (!x.is_string()) throw InputError(what + ": expected an array of strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

json parse_json(std::string_view text, std::string_view source)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw InputError(std::string(source) + ": invalid JSON: " + e.what());
    }
}

json interval(const Interval& i) { return json::array({num(i.lo), num(i.hi)}); }

Interval to_interval(const json& j, const std::string& what)
{
    const auto v = to_vector(j, what);
    if (v.size() != 2) throw InputError(what + ": expected [lo, hi]");
    return {v[0], v[1]};
}

json mixture_json(const std::string& name, const MixtureFit& f)
{
    json j;
    j["biomarker"] = name;
    j["mu_pre"] = num(f.mu_pre);
    j["sigma_pre"] = num(f.sigma_pre);
    j["mu_post"] = num(f.mu_post);
    j["sigma_post"] = num(f.sigma_post);
    j["theta_pre"] = num(f.theta_pre);
    j["theta_post"] = num(f.theta_post);
    j["bounds"] = {{"mu_pre", interval(f.bounds.mu_pre)},
                   {"sigma_pre", interval(f.bounds.sigma_pre)},
                   {"mu_post", interval(f.bounds.mu_post)},
                   {"sigma_post", interval(f.bounds.sigma_post)},
                   {"theta_post", interval(f.bounds.theta_post)}};
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    j["objective_trace"] = vec(f.objective_trace);
    j["warnings"] = f.warnings;
    return j;
}

MixtureFit mixture_from(const json& j, const std::string& ctx)
{
    MixtureFit f;
    f.mu_pre = to_double(field(j, "mu_pre", ctx), ctx + ".mu_pre");
    f.sigma_pre = to_double(field(j, "sigma_pre", ctx), ctx + ".sigma_pre");
    f.mu_post = to_double(field(j, "mu_post", ctx), ctx + ".mu_post");
    f.sigma_post = to_double(field(j, "sigma_post", ctx), ctx + ".sigma_post");
    f.theta_pre = to_double(field(j, "theta_pre", ctx), ctx + ".theta_pre");
    f.theta_post = to_double(field(j, "theta_post", ctx), ctx + ".theta_post");
    const json& b = field(j, "bounds", ctx);
    f.bounds.mu_pre = to_interval(field(b, "mu_pre", ctx), ctx + ".bounds.mu_pre");
    f.bounds.sigma_pre = to_interval(field(b, "sigma_pre", ctx), ctx + ".bounds.sigma_pre");
    f.bounds.mu_post = to_interval(field(b, "mu_post", ctx), ctx + ".bounds.mu_post");
    f.bounds.sigma_post = to_interval(field(b, "sigma_post", ctx), ctx + ".bounds.sigma_post");
    f.bounds.theta_post = to_interval(field(b, "theta_post", ctx), ctx + ".bounds.theta_post");
    if (j.contains("iterations")) f.iterations = j.at("iterations").get<int>();
    if (j.contains("converged")) f.converged = j.at("converged").get<bool>();
    if (j.contains("objective_trace")) f.objective_trace = to_vector(j.at("objective_trace"), ctx + ".objective_trace");
    if (j.contains("warnings")) f.warnings = to_strings(j.at("warnings"), ctx + ".warnings");
    try {
        f.validate();
    } catch (const FitError& e) {
        throw InputError(ctx + ": " + e.what());
    }
    return f;
}

json schema_json(const Schema& s)
{
    json cols = json::object();
    for (const auto& [name, role] : s.columns) cols[name] = std::string(to_string(role));
    json steps = json::array();
    for (const auto& st : s.residualize) steps.push_back({{"biomarkers", st.biomarkers}, {"covariates", st.covariates}});
    json aliases = json::object();
    for (const auto& [label, dx] : s.label_aliases) aliases[label] = std::string(to_string(dx));
    return {{"columns", cols},
            {"default_role", std::string(to_string(s.default_role))},
            {"log_transform", json(std::vector<std::string>(s.log_transform.begin(), s.log_transform.end()))},
            {"residualize", steps},
            {"label_aliases", aliases}};
}

ColumnRole role_from(const json& j, const std::string& ctx)
{
    if (!j.is_string()) throw InputError(ctx + ": role must be a string");
    const auto r = parse_role(j.get<std::string>());
    if (!r) throw InputError(ctx + ": unknown role '" + j.get<std::string>() + "'");
    return *r;
}

Schema schema_from(const json& j, const std::string& ctx)
{
    if (!j.is_object()) throw InputError(ctx + ": schema must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "columns" && key != "default_role" && key != "log_transform" && key != "residualize" &&
            key != "label_aliases")
            throw InputError(ctx + ": unknown key '" + key + "'");
    Schema s;
    const json& cols = field(j, "columns", ctx);
    if (cols.is_object()) {
        for (const auto& [name, role] : cols.items()) s.columns.emplace_back(name, role_from(role, ctx + ".columns." + name));
    } else if (cols.is_array()) {
        // [{"name": ..., "role": ...}, ...] keeps file order
        for (const auto& c : cols) {
            const auto name = field(c, "name", ctx + ".columns").get<std::string>();
            s.columns.emplace_back(name, role_from(field(c, "role", ctx + ".columns"), ctx + ".columns." + name));
        }
    } else {
        throw InputError(ctx + ": 'columns' must be an object or an array");
    }
    if (j.contains("default_role")) s.default_role = role_from(j.at("default_role"), ctx + ".default_role");
    if (j.contains("log_transform"))
        for (const auto& name : to_strings(j.at("log_transform"), ctx + ".log_transform")) s.log_transform.insert(name);
    if (j.contains("residualize")) {
        for (const auto& st : j.at("residualize")) {
            ResidualizationStep step;
            step.biomarkers = to_strings(field(st, "biomarkers", ctx + ".residualize"), ctx + ".residualize.biomarkers");
            step.covariates = to_strings(field(st, "covariates", ctx + ".residualize"), ctx + ".residualize.covariates");
            s.residualize.push_back(std::move(step));
        }
    }
    if (j.contains("label_aliases")) {
        for (const auto& [label, dx] : j.at("label_aliases").items()) {
            if (!dx.is_string()) throw InputError(ctx + ".label_aliases: values must be CN, MCI or AD");
            const auto d = parse_diagnosis(dx.get<std::string>());
            if (!d) throw InputError(ctx + ".label_aliases: unknown diagnosis '" + dx.get<std::string>() + "'");
            s.label_aliases[label] = *d;
        }
    }
    return s;
}

json sim_json(const SimConfig& c)
{
    json j;
    j["n_biomarkers"] = c.n_biomarkers;
    j["n_subjects"] = c.n_subjects;
    j["mu_xi"] = c.mu_xi;
    j["sigma_xi"] = c.sigma_xi;
    j["sigma_xi_per"] = c.sigma_xi_per;
    j["sigma_beta"] = c.sigma_beta;
    j["sigma_beta_per"] = c.sigma_beta_per;
    j["beta_unit"] = c.beta_unit;
    j["rho"] = c.rho;
    j["rho_per"] = c.rho_per;
    j["unequal_rho"] = c.unequal_rho;
    j["range"] = c.range;
    j["mu_beta"] = c.mu_beta;
    j["frac_cn"] = c.frac_cn;
    j["frac_mci"] = c.frac_mci;
    j["frac_ad"] = c.frac_ad;
    j["psi_thresholds"] = c.psi_thresholds ? json::array({c.psi_thresholds->first, c.psi_thresholds->second}) : json();
    j["psi_min"] = c.psi_min;
    j["psi_max"] = c.psi_max;
    j["names"] = c.names;
    j["seed"] = c.seed;
    return j;
}

SimConfig sim_from(const json& j, const std::string& ctx)
{
    if (!j.is_object()) throw InputError(ctx + ": simulation config must be an object");
    SimConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            const std::string what = ctx + "." + key;
            if (key == "n_biomarkers") c.n_biomarkers = v.get<int>();
            else if (key == "n_subjects") c.n_subjects = v.get<int>();
            else if (key == "mu_xi") c.mu_xi = to_vector(v, what);
            else if (key == "sigma_xi") c.sigma_xi = to_double(v, what);
            else if (key == "sigma_xi_per") c.sigma_xi_per = to_vector(v, what);
            else if (key == "sigma_beta") c.sigma_beta = to_double(v, what);
            else if (key == "sigma_beta_per") c.sigma_beta_per = to_vector(v, what);
            else if (key == "beta_unit") c.beta_unit = to_double(v, what);
            else if (key == "rho") c.rho = to_double(v, what);
            else if (key == "rho_per") c.rho_per = to_vector(v, what);
            else if (key == "unequal_rho") c.unequal_rho = v.get<bool>();
            else if (key == "range") c.range = to_vector(v, what);
            else if (key == "mu_beta") c.mu_beta = to_vector(v, what);
            else if (key == "frac_cn") c.frac_cn = to_double(v, what);
            else if (key == "frac_mci") c.frac_mci = to_double(v, what);
            else if (key == "frac_ad") c.frac_ad = to_double(v, what);
            else if (key == "psi_thresholds") {
                if (v.is_null()) c.psi_thresholds.reset();
                else {
                    const auto t = to_vector(v, what);
                    if (t.size() != 2) throw InputError(what + ": expected [cn_below, ad_above]");
                    c.psi_thresholds = std::make_pair(t[0], t[1]);
                }
            } else if (key == "psi_min") c.psi_min = to_double(v, what);
            else if (key == "psi_max") c.psi_max = to_double(v, what);
            else if (key == "names") c.names = to_strings(v, what);
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else throw InputError(ctx + ": unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw InputError(ctx + ": " + e.what());
    }
    c.validate();
    return c;
}

} // namespace

// ---------------------------------------------------------------------------

void save_model(std::ostream& out, const Model& m)
{
    json j;
    j["format"] = "debm-model";
    j["version"] = model_format_version;
    j["method"] = std::string(to_string(m.method));
    j["biomarkers"] = m.biomarker_names;
    json mix = json::array();
    for (std::size_t i = 0; i < m.fits.size(); ++i) mix.push_back(mixture_json(m.biomarker_names[i], m.fits[i]));
    j["mixtures"] = mix;

    json order = json::array();
    for (int i : m.timeline.ordering.sequence) order.push_back(m.biomarker_names[static_cast<std::size_t>(i)]);
    j["timeline"] = {{"ordering", order}, {"centers", vec(m.timeline.centers)}, {"swap_costs", vec(m.timeline.swap_costs)}};
    j["diagnostics"] = {{"objective", num(m.objective)}, {"warnings", m.warnings}};
    j["schema"] = m.schema ? schema_json(*m.schema) : json();
    json res = json::array();
    for (const auto& r : m.residualization)
        res.push_back({{"biomarker", r.biomarker}, {"covariates", r.covariates}, {"coefficients", vec(r.coefficients)}});
    j["residualization"] = res;
    out << j.dump(2) << '\n';
}

void save_model(const std::string& path, const Model& model)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write model file '" + path + "'");
    save_model(f, model);
    if (!f) throw InputError("error writing model file '" + path + "'");
}

Model load_model(std::istream& in, std::string_view source)
{
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string ctx(source);
    const json j = parse_json(ss.str(), source);
    try {
        if (!j.is_object() || j.value("format", "") != "debm-model")
            throw InputError(ctx + ": not a model file (format tag missing)");
        const int version = field(j, "version", ctx).get<int>();
        if (version > model_format_version)
            throw InputError(ctx + ": model format version " + std::to_string(version) +
                             " is newer than supported version " + std::to_string(model_format_version));
        if (version < 1) throw InputError(ctx + ": invalid model format version");

        Model m;
        m.method = parse_method(field(j, "method", ctx).get<std::string>());
        m.biomarker_names = to_strings(field(j, "biomarkers", ctx), ctx + ".biomarkers");
        const json& mix = field(j, "mixtures", ctx);
        if (!mix.is_array() || mix.size() != m.biomarker_names.size())
            throw InputError(ctx + ": one mixture per biomarker required");
        for (std::size_t i = 0; i < mix.size(); ++i) {
            const std::string c = ctx + ".mixtures[" + m.biomarker_names[i] + "]";
            if (mix[i].value("biomarker", "") != m.biomarker_names[i]) throw InputError(c + ": biomarker name mismatch");
            m.fits.push_back(mixture_from(mix[i], c));
        }

        const json& tl = field(j, "timeline", ctx);
        for (const auto& name : to_strings(field(tl, "ordering", ctx + ".timeline"), ctx + ".timeline.ordering")) {
            const auto it = std::find(m.biomarker_names.begin(), m.biomarker_names.end(), name);
            if (it == m.biomarker_names.end()) throw InputError(ctx + ".timeline: unknown biomarker '" + name + "'");
            m.timeline.ordering.sequence.push_back(static_cast<int>(it - m.biomarker_names.begin()));
        }
        m.timeline.ordering.validate_permutation(static_cast<int>(m.biomarker_names.size()));
        m.timeline.centers = to_eigen(field(tl, "centers", ctx + ".timeline"), ctx + ".timeline.centers");
        m.timeline.swap_costs = to_eigen(field(tl, "swap_costs", ctx + ".timeline"), ctx + ".timeline.swap_costs");
        if (static_cast<std::size_t>(m.timeline.centers.size()) != m.biomarker_names.size())
            throw InputError(ctx + ".timeline: one center per biomarker required");
        try {
            m.timeline.validate();
        } catch (const FitError& e) {
            throw InputError(ctx + ".timeline: " + e.what());
        }

        if (j.contains("diagnostics")) {
            const json& d = j.at("diagnostics");
            if (d.contains("objective")) m.objective = to_double(d.at("objective"), ctx + ".diagnostics.objective");
            if (d.contains("warnings")) m.warnings = to_strings(d.at("warnings"), ctx + ".diagnostics.warnings");
        }
        if (j.contains("schema") && !j.at("schema").is_null()) m.schema = schema_from(j.at("schema"), ctx + ".schema");
        if (j.contains("residualization")) {
            for (const auto& r : j.at("residualization")) {
                ResidualFit f;
                f.biomarker = field(r, "biomarker", ctx + ".residualization").get<std::string>();
                f.covariates = to_strings(field(r, "covariates", ctx + ".residualization"), ctx + ".residualization.covariates");
                f.coefficients = to_eigen(field(r, "coefficients", ctx + ".residualization"), ctx + ".residualization.coefficients");
                if (static_cast<std::size_t>(f.coefficients.size()) != f.covariates.size() + 1)
                    throw InputError(ctx + ".residualization: coefficient count does not match covariates");
                m.residualization.push_back(std::move(f));
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw InputError(ctx + ": " + e.what());
    }
}

Model load_model(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open model file '" + path + "'");
    return load_model(f, path);
}

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Schema schema_from_json(std::string_view text, std::string_view source)
{
    return schema_from(parse_json(text, source), std::string(source));
}

Schema load_schema(const std::string& path) { return schema_from_json(read_file(path), path); }

std::string schema_to_json(const Schema& schema) { return schema_json(schema).dump(2); }

SimConfig sim_config_from_json(std::string_view text, std::string_view source)
{
    return sim_from(parse_json(text, source), std::string(source));
}

std::string sim_config_to_json(const SimConfig& cfg) { return sim_json(cfg).dump(2); }

GridConfig grid_config_from_json(std::string_view text, std::string_view source)
{
    const std::string ctx(source);
    const json j = parse_json(text, source);
    if (!j.is_object()) throw InputError(ctx + ": grid must be an object");
    try {
        for (const auto& [key, v] : j.items())
            if (key != "base" && key != "points" && key != "sweep" && key != "repetitions" && key != "seed" &&
                key != "methods" && key != "fit")
                throw InputError(ctx + ": unknown key '" + key + "'");

        GridConfig g;
        const json base = j.value("base", json::object());
        if (j.contains("repetitions")) g.repetitions = j.at("repetitions").get<int>();
        if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("methods")) {
            g.methods.clear();
            for (const auto& m : to_strings(j.at("methods"), ctx + ".methods")) g.methods.push_back(parse_method(m));
        }
        if (j.contains("fit")) {
            for (const auto& [key, v] : j.at("fit").items()) {
                if (key == "febm_starts") g.fit.febm.starts = v.get<int>();
                else if (key == "central_extra_starts") g.fit.central.extra_starts = v.get<int>();
                else throw InputError(ctx + ".fit: unknown key '" + key + "'");
            }
        }

        auto make_point = [&](const json& patch, std::string label, std::optional<int> resampled) {
            json merged = base;
            merged.merge_patch(patch);
            GridPoint p;
            p.config = sim_from(merged, ctx + "[" + label + "]");
            p.label = std::move(label);
            p.resampled_biomarkers = resampled;
            if (resampled && *resampled < 1) throw InputError(ctx + ": resampled_biomarkers must be positive");
            return p;
        };

        if (j.contains("points")) {
            std::size_t k = 0;
            for (const auto& pt : j.at("points")) {
                std::string label = pt.value("label", "point" + std::to_string(k));
                std::optional<int> rs;
                if (pt.contains("resampled_biomarkers")) rs = pt.at("resampled_biomarkers").get<int>();
                g.points.push_back(make_point(pt.value("config", json::object()), std::move(label), rs));
                ++k;
            }
        }
        if (j.contains("sweep")) {
            const json& sw = j.at("sweep");
            const auto param = field(sw, "parameter", ctx + ".sweep").get<std::string>();
            const bool resample = sw.value("resample_biomarkers", false);
            for (const auto& v : field(sw, "values", ctx + ".sweep")) {
                std::string label = param + "=" + (v.is_number() ? format_double(v.get<double>()) : v.dump());
                if (resample && param == "n_biomarkers")
                    g.points.push_back(make_point(json::object(), std::move(label), v.get<int>()));
                else
                    g.points.push_back(make_point(json{{param, v}}, std::move(label), std::nullopt));
            }
        }
        if (g.points.empty()) g.points.push_back(make_point(json::object(), "base", std::nullopt));
        return g;
    } catch (const json::exception& e) {
        throw InputError(ctx + ": " + e.what());
    }
}

void write_truth(std::ostream& out, const SimTruth& truth, const Dataset& data)
{
    json order = json::array();
    for (int i : truth.ordering.sequence) order.push_back(data.biomarker_names[static_cast<std::size_t>(i)]);
    json j;
    j["format"] = "debm-truth";
    j["version"] = 1;
    j["seed"] = truth.seed;
    j["biomarkers"] = data.biomarker_names;
    j["ordering"] = order;
    j["centers"] = vec(truth.centers);
    j["rho"] = vec(truth.rho);
    j["subjects"] = data.subject_ids;
    j["psi"] = vec(truth.psi);
    out << j.dump(2) << '\n';
}

TruthFile truth_from_json(std::string_view text, std::string_view source)
{
    const std::string ctx(source);
    const json j = parse_json(text, source);
    try {
        if (!j.is_object() || j.value("format", "") != "debm-truth") throw InputError(ctx + ": not a truth file");
        if (field(j, "version", ctx).get<int>() > 1) throw InputError(ctx + ": truth file version is newer than supported");
        TruthFile t;
        t.biomarkers = to_strings(field(j, "biomarkers", ctx), ctx + ".biomarkers");
        t.truth.centers = to_eigen(field(j, "centers", ctx), ctx + ".centers");
        if (static_cast<std::size_t>(t.truth.centers.size()) != t.biomarkers.size())
            throw InputError(ctx + ": one center per biomarker required");
        for (const auto& name : to_strings(field(j, "ordering", ctx), ctx + ".ordering")) {
            const auto it = std::find(t.biomarkers.begin(), t.biomarkers.end(), name);
            if (it == t.biomarkers.end()) throw InputError(ctx + ".ordering: unknown biomarker '" + name + "'");
            t.truth.ordering.sequence.push_back(static_cast<int>(it - t.biomarkers.begin()));
        }
        t.truth.ordering.validate_permutation(static_cast<int>(t.biomarkers.size()));
        if (j.contains("rho")) t.truth.rho = to_eigen(j.at("rho"), ctx + ".rho");
        if (j.contains("psi")) t.truth.psi = to_eigen(j.at("psi"), ctx + ".psi");
        if (j.contains("subjects")) t.subjects = to_strings(j.at("subjects"), ctx + ".subjects");
        if (j.contains("seed")) t.truth.seed = j.at("seed").get<std::uint64_t>();
        return t;
    } catch (const json::exception& e) {
        throw InputError(ctx + ": " + e.what());
    }
}

void write_stages_csv(std::ostream& out, const Dataset& ds, const CohortStages& stages)
{
    out << "id,dx,stage,k1,w1,k2,w2,k3,w3\n";
    for (std::size_t j = 0; j < stages.subjects.size(); ++j) {
        out << ds.subject_ids[j] << ',' << to_string(ds.diagnoses[j]) << ',';
        const auto& s = stages.subjects[j];
        if (!s) {
            out << ",,,,,,\n";
            continue;
        }
        out << format_double(s->stage);
        // the three most probable event counts, ties to the smaller count
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(s->weights.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<Eigen::Index>(k);
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return s->weights(a) > s->weights(b); });
        for (std::size_t r = 0; r < 3; ++r) {
            if (r < idx.size()) out << ',' << idx[r] << ',' << format_double(s->weights(idx[r]));
            else out << ",,";
        }
        out << '\n';
    }
}

void write_grid_csv(std::ostream& out, const GridResults& results)
{
    out << "point,label,repetition,method,seed,ok,ordering_error,event_center_error,error\n";
    for (const auto& r : results.rows) {
        std::string err = r.error;
        for (auto& c : err)
            if (c == '"') c = '\'';
        out << r.point << ",\"" << r.label << "\"," << r.repetition << ',' << to_string(r.method) << ',' << r.seed << ','
            << (r.ok ? 1 : 0) << ',' << (r.ok ? format_double(r.ordering_error) : "") << ','
            << (r.ok ? format_double(r.event_center_error) : "") << ",\"" << err << "\"\n";
    }
}

void write_grid_summary(std::ostream& out, const GridResults& results)
{
    json a = json::array();
    for (const auto& s : results.summary)
        a.push_back({{"point", s.point},
                     {"label", s.label},
                     {"method", std::string(to_string(s.method))},
                     {"successes", s.successes},
                     {"ordering_error_mean", num(s.ordering_error_mean)},
                     {"ordering_error_sd", num(s.ordering_error_sd)},
                     {"event_center_error_mean", num(s.event_center_error_mean)},
                     {"event_center_error_sd", num(s.event_center_error_sd)}});
    out << json{{"summary", a}}.dump(2) << '\n';
}

} // namespace debm
