#pragma once

#include "debm/evaluate.hpp"
#include "debm/model.hpp"
#include "debm/simulate.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace debm {

inline constexpr int model_format_version = 1;

/// Model files are JSON; see docs/formats.md. Doubles are written in shortest round-trip form.
void save_model(std::ostream& out, const Model& model);
void save_model(const std::string& path, const Model& model);
/// InputError on malformed files, a different "format" tag or a version newer than this build.
Model load_model(std::istream& in, std::string_view source = "<stream>");
Model load_model(const std::string& path);

Schema schema_from_json(std::string_view text, std::string_view source = "<schema>");
Schema load_schema(const std::string& path);
std::string schema_to_json(const Schema& schema);

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
SimConfig sim_config_from_json(std::string_view text, std::string_view source = "<config>");
std::string sim_config_to_json(const SimConfig& cfg);

/// Grid file: a base simulation config plus a list of points, each a partial config
/// merged over the base. A "sweep" entry expands one parameter over a list of values.
GridConfig grid_config_from_json(std::string_view text, std::string_view source = "<grid>");

void write_truth(std::ostream& out, const SimTruth& truth, const Dataset& data);

struct TruthFile {
    std::vector<std::string> biomarkers;
    std::vector<std::string> subjects;
    SimTruth truth;
};
TruthFile truth_from_json(std::string_view text, std::string_view source = "<truth>");
void write_stages_csv(std::ostream& out, const Dataset& ds, const CohortStages& stages);
void write_grid_csv(std::ostream& out, const GridResults& results);
void write_grid_summary(std::ostream& out, const GridResults& results);

std::string read_file(const std::string& path); // InputError if unreadable

} // namespace debm
