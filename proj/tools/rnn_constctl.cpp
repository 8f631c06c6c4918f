// Command-line front end: synthesize, simulate, reachable, check-spectral,
// sweep.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure
// (singular system, divergence), 4 infeasible target (not in the image of B,
// off the reachable chart).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "constctl/errors.hpp"
#include "constctl/flow.hpp"
#include "constctl/harness.hpp"
#include "constctl/io.hpp"
#include "constctl/synthesis.hpp"

namespace {

using constctl::Matrix;
using constctl::Vector;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInfeasible = 4;

struct Tolerances {
  double rtol = 1e-13;
  double atol = 1e-14;

  constctl::IntegratorConfig config() const {
    constctl::IntegratorConfig cfg;
    cfg.rel_tol = rtol;
    cfg.abs_tol = atol;
    cfg.validate();
    return cfg;
  }
};

void add_tolerances(CLI::App* cmd, Tolerances& tol) {
  cmd->add_option("--rtol", tol.rtol, "integrator relative tolerance")
      ->capture_default_str();
  cmd->add_option("--atol", tol.atol, "integrator absolute tolerance")
      ->capture_default_str();
}

void emit(const json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    constctl::io::write_json_file(doc, out);
  }
}

// |x(T) − x1| / |x1 − x0|, falling back to the absolute error when x1 = x0.
double relative_error(const Vector& endpoint, const Vector& x0, const Vector& x1) {
  const double denom = (x1 - x0).norm();
  const double err = (endpoint - x1).norm();
  return denom > 0.0 ? err / denom : err;
}

json integrator_json(const constctl::IntegratorConfig& cfg) {
  return json{{"rel_tol", cfg.rel_tol}, {"abs_tol", cfg.abs_tol}};
}

struct SynthesizeArgs {
  std::string model, x0, x1, method = "forward", out;
  double T = 1.0;
  std::optional<double> tau;
  Tolerances tol;
};

int run_synthesize(const SynthesizeArgs& a) {
  const auto model = constctl::io::load_model(a.model);
  const auto cfg = a.tol.config();
  constctl::SynthesisRequest req;
  req.x0 = constctl::io::parse_vector(a.x0);
  req.x1 = constctl::io::parse_vector(a.x1);
  req.horizon = a.T;
  req.method = constctl::parse_method(a.method);
  req.tau = a.tau;

  const auto res = constctl::synthesize(model, req, cfg);
  const auto sim = constctl::simulate_controlled(model, req.x0, res.input, a.T, cfg);

  json doc{{"method", std::string(constctl::to_string(req.method))},
           {"T", a.T},
           {"tau", a.tau ? json(*a.tau) : json(nullptr)},
           {"not_in_image", res.not_in_image},
           {"image_residual", res.image_residual},
           {"spectral_margin", res.spectral_margin},
           {"rcond", res.rcond},
           {"predicted_rhs", constctl::io::vector_to_json(res.predicted_rhs)},
           {"predicted_endpoint", constctl::io::vector_to_json(sim.terminal_state)},
           {"rel_endpoint_error", relative_error(sim.terminal_state, req.x0, req.x1)},
           {"warnings", res.warnings},
           {"integrator", integrator_json(cfg)}};
  if (const auto* u = std::get_if<Vector>(&res.input)) {
    doc["u"] = constctl::io::vector_to_json(*u);
  } else {
    doc["schedule"] =
        constctl::io::schedule_to_json(std::get<constctl::StepSchedule>(res.input));
  }
  emit(doc, a.out);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  if (res.not_in_image) {
    std::cerr << "target infeasible: B u cannot match the synthesized right-hand "
                 "side (relative residual "
              << res.image_residual << ")\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string model, x0, u, schedule, out;
  double T = 1.0;
  Tolerances tol;
};

int run_simulate(const SimulateArgs& a) {
  const auto model = constctl::io::load_model(a.model);
  const auto cfg = a.tol.config();
  const Vector x0 = constctl::io::parse_vector(a.x0);
  constctl::ControlInput input = Vector(Vector::Zero(model.inputs()));
  if (!a.schedule.empty()) {
    const json doc = constctl::io::read_json_file(a.schedule);
    input = constctl::io::schedule_from_json(doc.contains("schedule") ? doc.at("schedule")
                                                                      : doc);
  } else if (!a.u.empty()) {
    input = constctl::io::parse_vector(a.u);
  }
  const auto sim = constctl::simulate_controlled(model, x0, input, a.T, cfg);
  emit(json{{"T", a.T},
            {"terminal_state", constctl::io::vector_to_json(sim.terminal_state)},
            {"steps_accepted", sim.steps_accepted},
            {"steps_rejected", sim.steps_rejected},
            {"rhs_evaluations", sim.rhs_evaluations},
            {"integrator", integrator_json(cfg)}},
       a.out);
  return kExitOk;
}

struct ReachableArgs {
  std::string model, x0, out, samples_csv;
  double T = 0.25;
  long k = 1;
  std::size_t samples = 0;
  double sigma2 = 0.01;
  std::uint64_t seed = 1;
  Tolerances tol;
};

int run_reachable(const ReachableArgs& a) {
  const auto base = constctl::io::load_model(a.model);
  const auto cfg = a.tol.config();
  const auto model = base.with_input(constctl::canonical_input(base.dim(), a.k));
  const Vector x0 = constctl::io::parse_vector(a.x0);
  const auto chart = constctl::reachable_chart(model, x0, a.T, cfg);

  json basis = json::array();
  for (Eigen::Index i = 0; i < chart.basis.basis.rows(); ++i) {
    basis.push_back(constctl::io::vector_to_json(chart.basis.basis.row(i).transpose()));
  }
  json doc{{"T", a.T},
           {"d", model.dim()},
           {"k", a.k},
           {"anchor", constctl::io::vector_to_json(chart.anchor)},
           {"basis", basis},
           {"spectral_margin", chart.spectral_margin},
           {"integrator", integrator_json(cfg)}};
  if (a.k == model.dim()) {
    doc["note"] = "fully actuated: the chart spans the whole state space";
  }

  json samples = json::array();
  std::vector<double> errors;
  std::ofstream csv;
  if (!a.samples_csv.empty()) {
    csv.open(a.samples_csv, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open " + a.samples_csv);
    csv << "sample,rel_endpoint_error";
    for (long i = 0; i < a.k; ++i) csv << ",xi_" << i;
    for (long i = 0; i < a.k; ++i) csv << ",u_" << i;
    csv << '\n';
  }
  for (std::size_t s = 0; s < a.samples; ++s) {
    constctl::harness::Rng rng(constctl::harness::derive_seed(
        a.seed, constctl::harness::Stream::Chart, {s}));
    std::normal_distribution<double> normal(0.0, std::sqrt(a.sigma2));
    Vector xi(a.k);
    for (long i = 0; i < a.k; ++i) xi(i) = normal(rng);
    const Vector x1 = chart.anchor + chart.basis.basis * xi;
    const Vector u = constctl::reachable_control(chart, x1);
    const auto sim = constctl::simulate_controlled(model, x0, u, a.T, cfg);
    const double err = relative_error(sim.terminal_state, x0, x1);
    errors.push_back(err);
    samples.push_back(json{{"xi", constctl::io::vector_to_json(xi)},
                           {"x1", constctl::io::vector_to_json(x1)},
                           {"u", constctl::io::vector_to_json(u)},
                           {"rel_endpoint_error", err}});
    if (csv.is_open()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", err);
      csv << s << ',' << buf;
      for (long i = 0; i < a.k; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", xi(i));
        csv << ',' << buf;
      }
      for (long i = 0; i < a.k; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", u(i));
        csv << ',' << buf;
      }
      csv << '\n';
    }
  }
  if (a.samples > 0) {
    doc["samples"] = samples;
    doc["median_rel_endpoint_error"] = constctl::harness::median(errors);
  }
  emit(doc, a.out);
  return kExitOk;
}

struct SpectralArgs {
  std::string model, at, at_flow, out;
  double T = 1.0;
  Tolerances tol;
};

int run_check_spectral(const SpectralArgs& a) {
  const auto model = constctl::io::load_model(a.model);
  Matrix jac;
  std::string which;
  if (!a.at.empty()) {
    jac = constctl::drift_jacobian(model, constctl::io::parse_vector(a.at));
    which = "DN(x)";
  } else if (!a.at_flow.empty()) {
    const Vector x0 = constctl::io::parse_vector(a.at_flow);
    const auto end = constctl::flow_forward(model, x0, a.T, a.tol.config());
    jac = constctl::drift_jacobian(model, end.terminal_state);
    which = "DN(phi_T(x0))";
  } else {
    jac = model.linear_part();
    which = "A";
  }
  const auto check = constctl::spectral_condition(jac, a.T);
  json eig = json::array();
  for (const auto& z : check.spectrum.values) eig.push_back({z.real(), z.imag()});
  emit(json{{"matrix", which},
            {"T", a.T},
            {"eigenvalues", eig},
            {"margin", check.margin},
            {"tolerance", check.tolerance},
            {"ok", check.ok},
            {"status", check.ok ? "ok" : "violated"}},
       a.out);
  return kExitOk;
}

struct SweepArgs {
  std::string config, out_dir;
  bool desk = false;
  bool full_scale = false;
  bool timing = false;
};

void print_summary(std::string_view title,
                   const std::vector<constctl::harness::TrialRecord>& records) {
  std::printf("%s\n", std::string(title).c_str());
  std::printf("  %-16s %5s %5s %8s %-16s %7s %5s %6s %14s %10s\n", "family", "d", "k", "T",
              "method", "sigma2", "ok", "failed", "median_error", "mean_log10");
  for (const auto& row : constctl::harness::summarize(records)) {
    std::printf("  %-16s %5ld %5ld %8g %-16s %7g %5zu %6zu %14.6e %10.3f\n",
                std::string(constctl::harness::to_string(row.family)).c_str(),
                static_cast<long>(row.d), static_cast<long>(row.k), row.T,
                std::string(constctl::to_string(row.method)).c_str(), row.sigma2,
                row.ok, row.failed, row.median_error, row.mean_log10_error);
  }
}

json sweep_metadata(const constctl::io::SweepDocument& doc) {
  using constctl::harness::Family;
  json notes = json::array();
  auto has = [](const std::optional<constctl::harness::SweepConfig>& c, Family f) {
    return c && std::find(c->families.begin(), c->families.end(), f) != c->families.end();
  };
  if (has(doc.experiment_1, Family::MindyLike) || has(doc.experiment_2, Family::MindyLike)) {
    notes.push_back(
        "MindyLike models are a surrogate: alpha ~ uniform[0.5, 1.5] per unit, b = 20/3, "
        "not fitted MINDy parameters");
  }
  if (doc.experiment_2 &&
      std::find(doc.experiment_2->methods.begin(), doc.experiment_2->methods.end(),
                constctl::Method::LinearizedAtX0) != doc.experiment_2->methods.end()) {
    notes.push_back(
        "experiment 2 LinearizedAtX0 for k < d: the B = Id linearized input restricted to "
        "the k actuated coordinates");
  }
  json out{{"csv_header", std::string(constctl::harness::kCsvHeader)}, {"notes", notes}};
  if (doc.experiment_1) out["experiment_1"] = constctl::io::sweep_config_to_json(*doc.experiment_1);
  if (doc.experiment_2) out["experiment_2"] = constctl::io::sweep_config_to_json(*doc.experiment_2);
  return out;
}

int run_sweep(const SweepArgs& a) {
  constctl::io::SweepDocument doc;
  if (!a.config.empty()) {
    doc = constctl::io::load_sweep_document(a.config);
  } else if (a.full_scale) {
    doc.experiment_1 = constctl::harness::full_scale_experiment_1();
    doc.experiment_2 = constctl::harness::full_scale_experiment_2();
  } else {
    doc.experiment_1 = constctl::harness::desk_experiment_1();
    doc.experiment_2 = constctl::harness::desk_experiment_2();
  }
  if (a.timing) {
    if (doc.experiment_1) doc.experiment_1->record_timing = true;
    if (doc.experiment_2) doc.experiment_2->record_timing = true;
  }
  fs::create_directories(a.out_dir);
  constctl::io::write_json_file(sweep_metadata(doc), fs::path(a.out_dir) / "metadata.json");
  const auto threads = constctl::harness::default_threads();
  if (doc.experiment_1) {
    const auto records = constctl::harness::run_experiment_1(*doc.experiment_1, threads);
    constctl::harness::write_csv(records, fs::path(a.out_dir) / "experiment_1.csv");
    print_summary("experiment 1 (error vs. horizon)", records);
  }
  if (doc.experiment_2) {
    const auto records = constctl::harness::run_experiment_2(*doc.experiment_2, threads);
    constctl::harness::write_csv(records, fs::path(a.out_dir) / "experiment_2.csv");
    print_summary("experiment 2 (error vs. actuation rank)", records);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant and step-function control synthesis for Hopfield-type RNNs"};
  app.require_subcommand(1);

  SynthesizeArgs syn;
  auto* c_syn = app.add_subcommand("synthesize", "synthesize a constant or step input");
  c_syn->add_option("--model", syn.model, "model JSON file")->required()->check(CLI::ExistingFile);
  c_syn->add_option("--x0", syn.x0, "initial state (inline CSV or file)")->required();
  c_syn->add_option("--x1", syn.x1, "target state (inline CSV or file)")->required();
  c_syn->add_option("--T", syn.T, "horizon")->required()->check(CLI::PositiveNumber);
  c_syn->add_option("--method", syn.method, "linear | forward | backward | linearized")
      ->capture_default_str();
  c_syn->add_option("--tau", syn.tau, "step-function window (0 < tau <= T)");
  c_syn->add_option("--out", syn.out, "result JSON path (stdout if omitted)");
  add_tolerances(c_syn, syn.tol);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate the controlled network");
  c_sim->add_option("--model", sim.model, "model JSON file")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--x0", sim.x0, "initial state")->required();
  c_sim->add_option("--T", sim.T, "horizon")->required()->check(CLI::NonNegativeNumber);
  auto* opt_u = c_sim->add_option("--u", sim.u, "constant input");
  auto* opt_sched = c_sim->add_option("--schedule", sim.schedule,
                                      "step schedule JSON (or a synthesize result)")
                        ->check(CLI::ExistingFile);
  opt_u->excludes(opt_sched);
  c_sim->add_option("--out", sim.out, "result JSON path (stdout if omitted)");
  add_tolerances(c_sim, sim.tol);

  ReachableArgs rch;
  auto* c_rch = app.add_subcommand("reachable", "first-order reachable-set chart for B = [e1..ek]");
  c_rch->add_option("--model", rch.model, "model JSON file")->required()->check(CLI::ExistingFile);
  c_rch->add_option("--x0", rch.x0, "initial state")->required();
  c_rch->add_option("--T", rch.T, "horizon")->required()->check(CLI::PositiveNumber);
  c_rch->add_option("--k", rch.k, "number of actuated coordinates")->required()->check(CLI::PositiveNumber);
  c_rch->add_option("--sample", rch.samples, "number of on-chart targets to sample");
  c_rch->add_option("--sigma2", rch.sigma2, "variance of the chart coordinates")
      ->capture_default_str()->check(CLI::PositiveNumber);
  c_rch->add_option("--seed", rch.seed, "sampling seed")->capture_default_str();
  c_rch->add_option("--out", rch.out, "result JSON path (stdout if omitted)");
  c_rch->add_option("--samples-csv", rch.samples_csv, "also write samples as CSV");
  add_tolerances(c_rch, rch.tol);

  SpectralArgs spc;
  auto* c_spc = app.add_subcommand("check-spectral", "check the spectral condition");
  c_spc->add_option("--model", spc.model, "model JSON file")->required()->check(CLI::ExistingFile);
  c_spc->add_option("--T", spc.T, "horizon")->required()->check(CLI::PositiveNumber);
  auto* opt_at = c_spc->add_option("--at", spc.at, "evaluate DN at this state");
  auto* opt_flow = c_spc->add_option("--at-flow", spc.at_flow, "evaluate DN at phi_T(x0)");
  opt_at->excludes(opt_flow);
  c_spc->add_option("--out", spc.out, "report JSON path (stdout if omitted)");
  add_tolerances(c_spc, spc.tol);

  SweepArgs swp;
  auto* c_swp = app.add_subcommand("sweep", "run the experiment sweeps");
  c_swp->add_option("--config", swp.config, "sweep JSON document")->check(CLI::ExistingFile);
  c_swp->add_option("--out-dir", swp.out_dir, "output directory")->required();
  auto* f_desk = c_swp->add_flag("--desk", swp.desk, "desk-scale defaults (default)");
  auto* f_full = c_swp->add_flag("--paper-scale", swp.full_scale, "full-scale defaults");
  f_desk->excludes(f_full);
  c_swp->add_flag("--timing", swp.timing, "record wall time per trial (breaks byte-identical output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c_syn) return run_synthesize(syn);
    if (*c_sim) return run_simulate(sim);
    if (*c_rch) return run_reachable(rch);
    if (*c_spc) return run_check_spectral(spc);
    if (*c_swp) return run_sweep(swp);
  } catch (const constctl::SingularSystem& e) {
    std::cerr << "error: SingularSystem: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const constctl::Divergence& e) {
    std::cerr << "error: Divergence: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const constctl::IntegrationBudgetExceeded& e) {
    std::cerr << "error: IntegrationBudgetExceeded: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const constctl::NumericalError& e) {
    std::cerr << "error: NumericalError: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const constctl::RankDeficient& e) {
    std::cerr << "error: RankDeficient: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const constctl::TargetOffChart& e) {
    std::cerr << "error: TargetOffChart: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const constctl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
