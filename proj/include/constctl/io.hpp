#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "constctl/flow.hpp"
#include "constctl/harness.hpp"
#include "constctl/model.hpp"

namespace constctl::io {

// Model document:
//   {"dim": d, "k": k, "decay": [..d], "W": [[..d]..d], "B": [[..k]..d],
//    "activation": {"kind": "linear" | "tanh" | "mindy", "alpha": [..d]}}
NetworkModel model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const NetworkModel& model);
NetworkModel load_model(const std::filesystem::path& path);
void save_model(const NetworkModel& model, const std::filesystem::path& path);

// Either inline comma-separated values or the path of a single-column file.
// Inline parsing is tried first.
Vector parse_vector(std::string_view text);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, std::string_view what);

nlohmann::json schedule_to_json(const StepSchedule& s);
StepSchedule schedule_from_json(const nlohmann::json& j);

// Sweep document:
//   {"experiment_1": {SweepConfig fields}, "experiment_2": {...}}
// Either section may be omitted. Unknown keys anywhere are rejected.
struct SweepDocument {
  std::optional<harness::SweepConfig> experiment_1;
  std::optional<harness::SweepConfig> experiment_2;
};

harness::SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json sweep_config_to_json(const harness::SweepConfig& cfg);
SweepDocument load_sweep_document(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Writes `doc` with a fixed indent and trailing newline.
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace constctl::io
