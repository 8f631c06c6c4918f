#include "constctl/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "constctl/errors.hpp"

namespace constctl::io {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    std::string_view where) {
  if (!obj.is_object()) {
    throw DimensionError(std::string(where) + " must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw DimensionError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

const json& require(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) {
    throw DimensionError(std::string(where) + " is missing '" + key + "'");
  }
  return obj.at(key);
}

double as_double(const json& j, std::string_view what) {
  if (!j.is_number()) {
    throw DimensionError(std::string(what) + " must be a number");
  }
  return j.get<double>();
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DimensionError(std::string(what) + " must have " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError(std::string(what) + " row " + std::to_string(i) +
                           " must have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = as_double(row[static_cast<std::size_t>(c)], what);
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::optional<Vector> parse_inline(std::string_view text) {
  std::vector<double> values;
  std::string_view rest = text;
  for (;;) {
    const auto comma = rest.find(',');
    std::string_view tok = rest.substr(0, comma);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      return std::nullopt;
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

static NetworkModel model_from_json_impl(const json& doc) {
  reject_unknown(doc, {"dim", "k", "decay", "W", "B", "activation"}, "model");
  const auto d = require(doc, "dim", "model").get<Eigen::Index>();
  const auto k = require(doc, "k", "model").get<Eigen::Index>();
  if (d < 1 || k < 1 || k > d) {
    throw InvalidModel("model needs dim >= 1 and 1 <= k <= dim");
  }
  const Vector decay = vector_from_json(require(doc, "decay", "model"), "decay");
  if (decay.size() != d) {
    throw InvalidModel("decay must have length " + std::to_string(d));
  }
  Matrix w = matrix_from_json(require(doc, "W", "model"), d, d, "W");
  Matrix b = matrix_from_json(require(doc, "B", "model"), d, k, "B");

  const json& act = require(doc, "activation", "model");
  reject_unknown(act, {"kind", "alpha"}, "activation");
  const auto kind = require(act, "kind", "activation").get<std::string>();
  Activation activation = Activation::linear();
  if (kind == "linear") {
    activation = Activation::linear();
  } else if (kind == "tanh") {
    activation = Activation::tanh();
  } else if (kind == "mindy") {
    activation = Activation::mindy(vector_from_json(require(act, "alpha", "activation"), "alpha"));
  } else {
    throw InvalidModel("unknown activation kind '" + kind + "'");
  }
  if (kind != "mindy" && act.contains("alpha")) {
    throw InvalidModel("alpha is only valid for the mindy activation");
  }
  return NetworkModel(decay, std::move(w), std::move(b), std::move(activation));
}

NetworkModel model_from_json(const json& doc) {
  try {
    return model_from_json_impl(doc);
  } catch (const json::exception& e) {
    throw DimensionError(std::string("model document: ") + e.what());
  }
}

json model_to_json(const NetworkModel& model) {
  json act{{"kind", std::string(to_string(model.activation().kind()))}};
  if (model.activation().kind() == ActivationKind::Mindy) {
    act["alpha"] = vector_to_json(model.activation().alpha());
  }
  return json{{"dim", model.dim()},
              {"k", model.inputs()},
              {"decay", vector_to_json(model.decay())},
              {"W", matrix_to_json(model.weights())},
              {"B", matrix_to_json(model.input())},
              {"activation", std::move(act)}};
}

NetworkModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  write_json_file(model_to_json(model), path);
}

Vector parse_vector(std::string_view text) {
  if (auto v = parse_inline(text)) return *v;
  const std::filesystem::path path{std::string(text)};
  std::ifstream in(path);
  if (!in) {
    throw DimensionError("'" + std::string(text) +
                         "' is neither a comma-separated vector nor a readable file");
  }
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto v = parse_inline(line);
    if (!v || v->size() != 1) {
      throw DimensionError(path.string() + ":" + std::to_string(lineno) +
                           ": expected a single number");
    }
    values.push_back((*v)(0));
  }
  if (values.empty()) {
    throw DimensionError(path.string() + " contains no values");
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j, std::string_view what) {
  if (!j.is_array() || j.empty()) {
    throw DimensionError(std::string(what) + " must be a non-empty array");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = as_double(j[i], what);
  }
  return v;
}

json schedule_to_json(const StepSchedule& s) {
  return json{{"horizon", s.horizon},
              {"switch_time", s.switch_time},
              {"before", vector_to_json(s.before)},
              {"active", vector_to_json(s.active)}};
}

StepSchedule schedule_from_json(const json& j) {
  reject_unknown(j, {"horizon", "switch_time", "before", "active"}, "schedule");
  StepSchedule s;
  s.horizon = as_double(require(j, "horizon", "schedule"), "horizon");
  s.switch_time = as_double(require(j, "switch_time", "schedule"), "switch_time");
  s.active = vector_from_json(require(j, "active", "schedule"), "active");
  s.before = j.contains("before") ? vector_from_json(j.at("before"), "before")
                                  : Vector::Zero(s.active.size());
  s.validate(s.active.size());
  return s;
}

harness::SweepConfig sweep_config_from_json(const json& j) {
  reject_unknown(j,
                 {"families", "dims", "horizons", "methods", "deviation_sigma2",
                  "n_models", "n_states", "tau", "k_values", "seed",
                  "record_timing", "rel_tol", "abs_tol", "max_steps"},
                 "sweep configuration");
  harness::SweepConfig c;
  for (const auto& f : require(j, "families", "sweep configuration")) {
    c.families.push_back(harness::parse_family(f.get<std::string>()));
  }
  c.dims = require(j, "dims", "sweep configuration").get<std::vector<Eigen::Index>>();
  c.horizons = require(j, "horizons", "sweep configuration").get<std::vector<double>>();
  for (const auto& m : require(j, "methods", "sweep configuration")) {
    c.methods.push_back(parse_method(m.get<std::string>()));
  }
  c.deviation_sigma2 =
      require(j, "deviation_sigma2", "sweep configuration").get<std::vector<double>>();
  if (j.contains("n_models")) c.n_models = j.at("n_models").get<std::size_t>();
  if (j.contains("n_states")) c.n_states = j.at("n_states").get<std::size_t>();
  if (j.contains("tau") && !j.at("tau").is_null()) c.tau = as_double(j.at("tau"), "tau");
  if (j.contains("k_values")) c.k_values = j.at("k_values").get<std::vector<Eigen::Index>>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("record_timing")) c.record_timing = j.at("record_timing").get<bool>();
  if (j.contains("rel_tol")) c.integrator.rel_tol = as_double(j.at("rel_tol"), "rel_tol");
  if (j.contains("abs_tol")) c.integrator.abs_tol = as_double(j.at("abs_tol"), "abs_tol");
  if (j.contains("max_steps")) c.integrator.max_steps = j.at("max_steps").get<std::size_t>();
  c.validate();
  return c;
}

json sweep_config_to_json(const harness::SweepConfig& c) {
  json families = json::array();
  for (auto f : c.families) families.push_back(std::string(harness::to_string(f)));
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  json out{{"families", families},
           {"dims", c.dims},
           {"horizons", c.horizons},
           {"methods", methods},
           {"deviation_sigma2", c.deviation_sigma2},
           {"n_models", c.n_models},
           {"n_states", c.n_states},
           {"seed", c.seed},
           {"record_timing", c.record_timing},
           {"rel_tol", c.integrator.rel_tol},
           {"abs_tol", c.integrator.abs_tol},
           {"max_steps", c.integrator.max_steps}};
  if (c.tau) out["tau"] = *c.tau;
  if (!c.k_values.empty()) out["k_values"] = c.k_values;
  return out;
}

SweepDocument load_sweep_document(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  reject_unknown(doc, {"experiment_1", "experiment_2"}, "sweep document");
  SweepDocument out;
  try {
    if (doc.contains("experiment_1")) {
      out.experiment_1 = sweep_config_from_json(doc.at("experiment_1"));
    }
    if (doc.contains("experiment_2")) {
      out.experiment_2 = sweep_config_from_json(doc.at("experiment_2"));
    }
  } catch (const json::exception& e) {
    throw DimensionError(path.string() + ": " + e.what());
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DimensionError("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DimensionError(path.string() + ": " + e.what());
  }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << doc.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

}  // namespace constctl::io
