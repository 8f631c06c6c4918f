#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "constctl/flow.hpp"
#include "constctl/model.hpp"
#include "constctl/synthesis.hpp"

namespace constctl::harness {

enum class Family {
  StableLinear,
  UnstableLinear,
  SmallNormTanh,
  MonostableTanh,
  BistableTanh,
  MindyLike,
};

std::string_view to_string(Family family);
Family parse_family(std::string_view name);
bool is_linear(Family family);

// Random streams. Every draw in the harness comes from a generator seeded by
// derive_seed(base, stream, counters...), so a trial's randomness depends
// only on its coordinates, never on scheduling.
enum class Stream : std::uint64_t { Model = 1, State = 2, Noise = 3, Chart = 4 };

// SplitMix64 finalizer folded over the inputs.
std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                          std::initializer_list<std::uint64_t> counters);

using Rng = std::mt19937_64;

struct ModelSpec {
  Family family = Family::SmallNormTanh;
  Eigen::Index dim = 16;
  std::uint64_t seed = 0;
};

/// Deterministic in spec.seed; B = Id for every family.
NetworkModel generate_model(const ModelSpec& spec);

struct TrialPair {
  Vector x0;
  Vector x1;
};

/// x0 ~ N(0, Id) and x1 = φ_T(x0) + ε, ε ~ N(0, σ² Id). The noise direction
/// is drawn from the state seed alone so trials at different σ² are paired.
TrialPair sample_trial(const NetworkModel& model, std::uint64_t state_seed,
                       double T, double sigma2, const IntegratorConfig& cfg = {});

enum class Status { Ok, SingularSystem, Divergence, NotInImage, TargetOffChart };
std::string_view to_string(Status status);
Status parse_status(std::string_view name);

struct TrialRecord {
  Family family = Family::SmallNormTanh;
  Eigen::Index d = 0;
  Eigen::Index k = 0;
  double T = 0.0;
  std::optional<double> tau;
  Method method = Method::ForwardNominal;
  std::uint64_t model_seed = 0;
  std::uint64_t state_seed = 0;
  double sigma2 = 0.0;
  double rel_endpoint_error = 0.0;
  Status status = Status::Ok;
  double wall_time_ms = 0.0;
};

struct SweepConfig {
  std::vector<Family> families;
  std::vector<Eigen::Index> dims;
  std::vector<double> horizons;
  std::vector<Method> methods;
  std::vector<double> deviation_sigma2;
  std::size_t n_models = 3;
  std::size_t n_states = 10;
  std::optional<double> tau;
  std::vector<Eigen::Index> k_values;
  std::uint64_t seed = 1;
  // Wall time varies run to run; when false the column is written as 0 so
  // the CSV stays byte-identical across runs.
  bool record_timing = false;
  IntegratorConfig integrator;

  void validate() const;
};

SweepConfig desk_experiment_1();
SweepConfig desk_experiment_2();
SweepConfig full_scale_experiment_1();
SweepConfig full_scale_experiment_2();

// Worker count from RNN_CONSTCTL_THREADS, else hardware concurrency.
std::size_t default_threads();

/// Error vs. horizon with B = Id. LinearExact runs only on linear families.
std::vector<TrialRecord> run_experiment_1(const SweepConfig& cfg,
                                          std::size_t threads = default_threads());

/// Error vs. actuation rank on small-norm tanh RNNs with B = [e₁ … e_k] and
/// on-chart targets x1 = φ_T(x0) + Q₂ξ, ξ ~ N(0, σ² Id_k).
std::vector<TrialRecord> run_experiment_2(const SweepConfig& cfg,
                                          std::size_t threads = default_threads());

// Sorted by (family, d, k, T, method, model_seed, state_seed), ties broken by
// (sigma2, tau).
void sort_records(std::vector<TrialRecord>& records);

inline constexpr std::string_view kCsvHeader =
    "family,d,k,T,tau,method,model_seed,state_seed,sigma2,rel_endpoint_error,"
    "status,wall_time_ms";

/// Sorts a copy and writes it; floats use 17 significant digits.
void write_csv(std::vector<TrialRecord> records, std::ostream& out);
void write_csv(const std::vector<TrialRecord>& records,
               const std::filesystem::path& path);

/// Strict reader for the format above. Throws DimensionError on any
/// malformed row.
std::vector<TrialRecord> read_csv(std::istream& in);
std::vector<TrialRecord> read_csv(const std::filesystem::path& path);

struct SummaryRow {
  Family family;
  Eigen::Index d;
  Eigen::Index k;
  double T;
  Method method;
  double sigma2;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double median_error = 0.0;
  double mean_log10_error = 0.0;
};

/// Medians and mean log₁₀ errors of Ok trials per (family, d, k, T, method, σ²).
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

double median(std::vector<double> values);

}  // namespace constctl::harness
