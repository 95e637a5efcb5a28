#include "debm/cli.hpp"

#include "debm/errors.hpp"
#include "debm/evaluate.hpp"
#include "debm/io.hpp"
#include "debm/parallel.hpp"
#include "format.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace debm {

namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    return f;
}

std::vector<std::string> read_header(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw InputError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split_csv_line(line);
}

Schema schema_for(const std::string& data_path, const std::string& schema_path)
{
    if (!schema_path.empty()) return load_schema(schema_path);
    return infer_schema(read_header(data_path));
}

/// Value of --config, falling back to DEBM_CONFIG.
std::string config_path(const std::string& flag)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("DEBM_CONFIG"); env && *env) return env;
    return {};
}

std::string num_text(double v) { return std::isfinite(v) ? format_double(v) : (std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")); }

json num(double v)
{
    if (std::isfinite(v)) return v;
    return num_text(v);
}

json vec(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

struct Common {
    int threads = 0;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data, schema, method = "debm", out;
    int febm_starts = 10;
    double select_alpha = 0.0;
};

int cmd_fit(const FitArgs& a, const Common& c, std::ostream& out, std::ostream& err)
{
    const Method method = parse_method(a.method);
    const Schema schema = schema_for(a.data, a.schema);
    Dataset ds = load_dataset(a.data, schema);
    Residualized res = residualize_steps(ds, schema.residualize);
    ds = std::move(res.data);
    for (Eigen::Index b = 0; b < ds.n_biomarkers(); ++b)
        if (const auto n = ds.unadjusted.col(b).count())
            err << "warning: " << ds.biomarker_names[static_cast<std::size_t>(b)] << ": " << n
                << " values left unadjusted (missing covariate)\n";
    if (a.select_alpha > 0.0) {
        const Selection sel = select_biomarkers(ds, a.select_alpha, true);
        for (const auto& w : sel.warnings) err << "warning: " << w << '\n';
        if (sel.selected.empty()) throw InputError("no biomarker passed the selection test");
        ds = ds.columns(sel.selected);
    }

    FitOptions opts;
    opts.febm.starts = a.febm_starts;
    opts.febm.seed = c.seed;
    opts.central.seed = c.seed;
    Model model = fit_model(ds, method, opts);
    model.schema = schema;
    model.residualization = std::move(res.fits);
    for (const auto& w : model.warnings) err << "warning: " << w << '\n';

    auto f = open_out(a.out);
    save_model(f, model);
    out << "fitted " << to_string(method) << " model with " << model.timeline.size() << " events -> " << a.out << '\n';
    for (std::size_t k = 0; k < model.timeline.size(); ++k)
        out << "  " << k + 1 << ". " << model.biomarker_names[static_cast<std::size_t>(model.timeline.ordering[k])] << "  "
            << num_text(model.timeline.centers(static_cast<Eigen::Index>(k))) << '\n';
    return 0;
}

struct StageArgs {
    std::string model, data, schema, out;
    std::string k0 = "on";
};

StagingOptions staging_options(const std::string& k0)
{
    if (k0 != "on" && k0 != "off") throw InputError("--staging-k0 must be 'on' or 'off'");
    StagingOptions o;
    o.include_stage_zero = k0 == "on";
    return o;
}

Dataset prepare_for_model(const Model& model, const std::string& data_path, const std::string& schema_path)
{
    Schema schema;
    if (!schema_path.empty()) schema = load_schema(schema_path);
    else if (model.schema) schema = *model.schema;
    else schema = infer_schema(read_header(data_path));
    Dataset ds = load_dataset(data_path, schema);
    for (const auto& r : model.residualization) ds = apply_residualization(std::move(ds), r);
    return ds;
}

int cmd_stage(const StageArgs& a, const Common&, std::ostream& out, std::ostream& err)
{
    const Model model = load_model(a.model);
    const Dataset ds = prepare_for_model(model, a.data, a.schema);
    const CohortStages st = model.stage(ds, staging_options(a.k0));
    for (const auto& e : st.errors) err << "warning: " << e << '\n';
    auto f = open_out(a.out);
    write_stages_csv(f, ds, st);
    out << "staged " << st.subjects.size() - st.errors.size() << " of " << st.subjects.size() << " subjects -> " << a.out
        << '\n';
    return 0;
}

struct SimulateArgs {
    std::string config, out_data, out_truth;
};

int cmd_simulate(const SimulateArgs& a, const Common& c, bool seed_given, std::ostream& out, std::ostream&)
{
    SimConfig cfg;
    if (const std::string path = config_path(a.config); !path.empty()) cfg = sim_config_from_json(read_file(path), path);
    if (seed_given) cfg.seed = c.seed;
    const SimResult sim = simulate_cohort(cfg);
    {
        auto f = open_out(a.out_data);
        write_dataset(f, sim.data);
    }
    if (!a.out_truth.empty()) {
        auto f = open_out(a.out_truth);
        write_truth(f, sim.truth, sim.data);
    }
    out << "simulated " << sim.data.n_subjects() << " subjects, " << sim.data.n_biomarkers() << " biomarkers -> "
        << a.out_data << '\n';
    return 0;
}

struct EvaluateArgs {
    std::string model, truth, data, schema, method = "debm", out, svg;
    std::string k0 = "on";
    int resamples = 0, folds = 0;
};

int cmd_evaluate(const EvaluateArgs& a, const Common& c, std::ostream& out, std::ostream& err)
{
    json result = json::object();
    if (!a.model.empty() || !a.truth.empty()) {
        if (a.model.empty() || a.truth.empty()) throw InputError("evaluate: --model and --truth go together");
        const Model model = load_model(a.model);
        const TruthFile truth = truth_from_json(read_file(a.truth), a.truth);
        // index the estimate by the truth file's biomarker order
        const int n = static_cast<int>(truth.biomarkers.size());
        if (model.biomarker_names.size() != truth.biomarkers.size())
            throw InputError("evaluate: model and truth have different biomarkers");
        std::vector<int> to_truth(model.biomarker_names.size());
        for (std::size_t i = 0; i < model.biomarker_names.size(); ++i) {
            const auto it = std::find(truth.biomarkers.begin(), truth.biomarkers.end(), model.biomarker_names[i]);
            if (it == truth.biomarkers.end())
                throw InputError("evaluate: biomarker '" + model.biomarker_names[i] + "' not in truth file");
            to_truth[i] = static_cast<int>(it - truth.biomarkers.begin());
        }
        EventOrdering est;
        for (int i : model.timeline.ordering.sequence) est.sequence.push_back(to_truth[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd by_model = model.timeline.centers_by_biomarker();
        Eigen::VectorXd centers(n);
        for (std::size_t i = 0; i < to_truth.size(); ++i) centers(to_truth[i]) = by_model(static_cast<Eigen::Index>(i));
        result["ordering_error"] = ordering_error(est, truth.truth.ordering);
        result["event_center_error"] = num(event_center_error(centers, truth.truth.centers));
        result["pearson"] = n > 1 ? num(pearson_correlation(centers, truth.truth.centers)) : json();
    }
    if (a.resamples > 0 || a.folds > 0) {
        if (a.data.empty()) throw InputError("evaluate: --resamples and --folds need --data");
        const Schema schema = schema_for(a.data, a.schema);
        const Dataset ds = residualize_steps(load_dataset(a.data, schema), schema.residualize).data;
        const Method method = parse_method(a.method);
        if (a.resamples > 0) {
            BootstrapOptions bo;
            bo.resamples = a.resamples;
            bo.method = method;
            bo.seed = c.seed;
            const BootstrapResult br = bootstrap(ds, bo);
            for (const auto& e : br.errors) err << "warning: " << e << '\n';
            json pv = json::array();
            for (Eigen::Index i = 0; i < br.positional.rows(); ++i) pv.push_back(vec(br.positional.row(i).transpose()));
            result["bootstrap"] = {{"method", std::string(to_string(method))},
                                   {"resamples", a.resamples},
                                   {"failures", br.failures},
                                   {"biomarkers", ds.biomarker_names},
                                   {"positional_variance", pv},
                                   {"center_mean", vec(br.center_mean)},
                                   {"center_se", vec(br.center_se)}};
            if (!a.svg.empty()) {
                auto f = open_out(a.svg);
                write_positional_svg(f, br, ds.biomarker_names, ascending_ordering(br.center_mean));
            }
        }
        if (a.folds > 0) {
            CvOptions co;
            co.folds = a.folds;
            co.method = method;
            co.seed = c.seed;
            co.staging = staging_options(a.k0);
            const CvResult cv = cv_auc(ds, co);
            for (const auto& e : cv.errors) err << "warning: " << e << '\n';
            result["cv"] = {{"method", std::string(to_string(method))},
                            {"folds", a.folds},
                            {"auc", num(cv.auc)},
                            {"subjects", ds.subject_ids},
                            {"fold", cv.fold},
                            {"stage", vec(cv.stage)}};
        }
    }
    if (result.empty()) throw InputError("evaluate: nothing to do (give --model/--truth, --resamples or --folds)");
    const std::string text = result.dump(2) + "\n";
    if (a.out.empty()) out << text;
    else open_out(a.out) << text;
    return 0;
}

struct ExperimentArgs {
    std::string grid, out, summary;
    int reps = 0;
};

int cmd_experiment(const ExperimentArgs& a, const Common& c, bool seed_given, std::ostream& out, std::ostream& err)
{
    const std::string path = config_path(a.grid);
    if (path.empty()) throw InputError("experiment: --grid (or DEBM_CONFIG) is required");
    GridConfig grid = grid_config_from_json(read_file(path), path);
    if (a.reps > 0) grid.repetitions = a.reps;
    if (seed_given) grid.seed = c.seed;
    const GridResults res = run_experiment_grid(grid);
    for (const auto& r : res.rows)
        if (!r.ok) err << "warning: " << r.label << " rep " << r.repetition << ' ' << to_string(r.method) << ": " << r.error << '\n';
    {
        auto f = open_out(a.out);
        write_grid_csv(f, res);
    }
    const std::string summary = a.summary.empty() ? a.out + ".summary.json" : a.summary;
    {
        auto f = open_out(summary);
        write_grid_summary(f, res);
    }
    for (const auto& s : res.summary)
        out << s.label << ' ' << to_string(s.method) << ": ordering error " << num_text(s.ordering_error_mean) << " +- "
            << num_text(s.ordering_error_sd) << ", event-center error " << num_text(s.event_center_error_mean) << " +- "
            << num_text(s.event_center_error_sd) << " (" << s.successes << '/' << grid.repetitions << ")\n";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Discriminative event-based disease progression modelling"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    auto* seed_opt = app.add_option("--seed", common.seed, "Random seed");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV table");
    fit_cmd->add_option("--data", fit.data, "Input CSV")->required();
    fit_cmd->add_option("--schema", fit.schema, "Column-role schema (JSON); inferred from the header if omitted");
    fit_cmd->add_option("--method", fit.method, "debm or febm");
    fit_cmd->add_option("--out", fit.out, "Model file to write")->required();
    fit_cmd->add_option("--febm-starts", fit.febm_starts, "Random starts for the FEBM search")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--select", fit.select_alpha, "Keep biomarkers passing a Bonferroni-corrected CN/AD t-test at this level");

    StageArgs stage;
    auto* stage_cmd = app.add_subcommand("stage", "Stage subjects with a fitted model");
    stage_cmd->add_option("--model", stage.model)->required();
    stage_cmd->add_option("--data", stage.data)->required();
    stage_cmd->add_option("--schema", stage.schema, "Override the schema stored in the model");
    stage_cmd->add_option("--out", stage.out)->required();
    stage_cmd->add_option("--staging-k0", stage.k0, "Include the all-normal stage (on|off)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate a cross-sectional cohort");
    sim_cmd->add_option("--config", sim.config, "Simulation config (JSON); falls back to DEBM_CONFIG, then defaults");
    sim_cmd->add_option("--out-data", sim.out_data)->required();
    sim_cmd->add_option("--out-truth", sim.out_truth);

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score a model against ground truth, bootstrap or cross-validate");
    ev_cmd->add_option("--model", ev.model);
    ev_cmd->add_option("--truth", ev.truth);
    ev_cmd->add_option("--data", ev.data);
    ev_cmd->add_option("--schema", ev.schema);
    ev_cmd->add_option("--method", ev.method);
    ev_cmd->add_option("--resamples", ev.resamples)->check(CLI::NonNegativeNumber);
    ev_cmd->add_option("--folds", ev.folds)->check(CLI::NonNegativeNumber);
    ev_cmd->add_option("--svg", ev.svg, "Positional variance diagram (with --resamples)");
    ev_cmd->add_option("--out", ev.out, "Metrics JSON (default stdout)");
    ev_cmd->add_option("--staging-k0", ev.k0, "Include the all-normal stage in cross-validation (on|off)");

    ExperimentArgs ex;
    auto* ex_cmd = app.add_subcommand("experiment", "Run a simulation grid");
    ex_cmd->add_option("--grid", ex.grid, "Grid config (JSON); falls back to DEBM_CONFIG");
    ex_cmd->add_option("--reps", ex.reps, "Override the repetition count")->check(CLI::PositiveNumber);
    ex_cmd->add_option("--out", ex.out, "Results CSV")->required();
    ex_cmd->add_option("--summary", ex.summary, "Summary JSON (default <out>.summary.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << e.what() << '\n';
            return 0;
        }
        err << "error: " << e.what() << '\n';
        return 2;
    }

    set_num_threads(common.threads);
    const bool seed_given = seed_opt->count() > 0;
    try {
        if (fit_cmd->parsed()) return cmd_fit(fit, common, out, err);
        if (stage_cmd->parsed()) return cmd_stage(stage, common, out, err);
        if (sim_cmd->parsed()) return cmd_simulate(sim, common, seed_given, out, err);
        if (ev_cmd->parsed()) return cmd_evaluate(ev, common, out, err);
        if (ex_cmd->parsed()) return cmd_experiment(ex, common, seed_given, out, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const FitError& e) {
        err << "fit error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "fit error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}

} // namespace debm
