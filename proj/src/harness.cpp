#include "constctl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "constctl/errors.hpp"

namespace constctl::harness {

namespace {

constexpr std::pair<Family, std::string_view> kFamilyNames[] = {
    {Family::StableLinear, "StableLinear"},
    {Family::UnstableLinear, "UnstableLinear"},
    {Family::SmallNormTanh, "SmallNormTanh"},
    {Family::MonostableTanh, "MonostableTanh"},
    {Family::BistableTanh, "BistableTanh"},
    {Family::MindyLike, "MindyLike"},
};

constexpr std::pair<Status, std::string_view> kStatusNames[] = {
    {Status::Ok, "Ok"},
    {Status::SingularSystem, "SingularSystem"},
    {Status::Divergence, "Divergence"},
    {Status::NotInImage, "NotInImage"},
    {Status::TargetOffChart, "TargetOffChart"},
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                       double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

Vector gaussian_vector(Rng& rng, Eigen::Index n, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

}  // namespace

std::string_view to_string(Family family) {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames) {
    if (n == name) return f;
  }
  throw DimensionError("unknown model family '" + std::string(name) + "'");
}

bool is_linear(Family family) {
  return family == Family::StableLinear || family == Family::UnstableLinear;
}

std::string_view to_string(Status status) {
  for (const auto& [s, name] : kStatusNames) {
    if (s == status) return name;
  }
  return "unknown";
}

Status parse_status(std::string_view name) {
  for (const auto& [s, n] : kStatusNames) {
    if (n == name) return s;
  }
  throw DimensionError("unknown trial status '" + std::string(name) + "'");
}

std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                          std::initializer_list<std::uint64_t> counters) {
  std::uint64_t h = splitmix(base ^ splitmix(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t c : counters) h = splitmix(h ^ splitmix(c + 0x632be59bd9b4e019ULL));
  return h;
}

NetworkModel generate_model(const ModelSpec& spec) {
  const Eigen::Index d = spec.dim;
  if (d < 2) {
    throw InvalidModel("generated models need d >= 2");
  }
  const auto dd = static_cast<double>(d);
  const Matrix ident = Matrix::Identity(d, d);

  switch (spec.family) {
    case Family::StableLinear:
    case Family::UnstableLinear: {
      const double target = spec.family == Family::StableLinear ? -0.1 : 0.1;
      // D = (max Re σ(W) − λ₀)·Id must be positive; redraw W otherwise.
      for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(spec.seed, Stream::Model, {attempt}));
        Matrix w = gaussian_matrix(rng, d, d, std::sqrt(1.0 / dd));
        const double decay = linalg::eigenvalues(w).max_real_part() - target;
        if (decay > 0.0) {
          return NetworkModel(Vector::Constant(d, decay), std::move(w), ident,
                              Activation::linear());
        }
      }
    }
    case Family::SmallNormTanh:
    case Family::MonostableTanh:
    case Family::BistableTanh:
    case Family::MindyLike: {
      Rng rng(derive_seed(spec.seed, Stream::Model, {0}));
      const double g =
          (spec.family == Family::MonostableTanh ||
           spec.family == Family::BistableTanh)
              ? 0.9
              : 0.5;
      Matrix w = gaussian_matrix(rng, d, d, g / std::sqrt(dd));
      if (spec.family == Family::MonostableTanh) {
        const Vector m = gaussian_vector(rng, d, 1.0);
        const Vector n = gaussian_vector(rng, d, 1.0 / dd);
        w += m * n.transpose();
      } else if (spec.family == Family::BistableTanh) {
        const Vector m = gaussian_vector(rng, d, 1.0);
        w += m * ((1.1 / dd) * m).transpose();
      }
      if (spec.family == Family::MindyLike) {
        std::uniform_real_distribution<double> unif(0.5, 1.5);
        Vector alpha(d);
        for (Eigen::Index i = 0; i < d; ++i) alpha(i) = unif(rng);
        return NetworkModel(Vector::Ones(d), std::move(w), ident,
                            Activation::mindy(std::move(alpha)));
      }
      return NetworkModel(Vector::Ones(d), std::move(w), ident, Activation::tanh());
    }
  }
  throw InvalidModel("unknown model family");
}

TrialPair sample_trial(const NetworkModel& model, std::uint64_t state_seed,
                       double T, double sigma2, const IntegratorConfig& cfg) {
  if (!(sigma2 > 0.0)) {
    throw DimensionError("sigma2 must be positive");
  }
  Rng state_rng(derive_seed(state_seed, Stream::State, {}));
  Rng noise_rng(derive_seed(state_seed, Stream::Noise, {}));
  TrialPair out;
  out.x0 = gaussian_vector(state_rng, model.dim(), 1.0);
  const Vector z = gaussian_vector(noise_rng, model.dim(), 1.0);
  out.x1 = flow_forward(model, out.x0, T, cfg).terminal_state + std::sqrt(sigma2) * z;
  return out;
}

void SweepConfig::validate() const {
  if (families.empty() || dims.empty() || horizons.empty() || methods.empty() ||
      deviation_sigma2.empty()) {
    throw DimensionError(
        "sweep lists (families, dims, horizons, methods, sigma2) must be non-empty");
  }
  for (double T : horizons) {
    if (!(T > 0.0 && std::isfinite(T))) throw DimensionError("horizons must be positive");
  }
  for (auto d : dims) {
    if (d < 2) throw DimensionError("dims must be >= 2");
  }
  for (double s : deviation_sigma2) {
    if (!(s > 0.0)) throw DimensionError("sigma2 values must be positive");
  }
  if (n_models == 0 || n_states == 0) {
    throw DimensionError("n_models and n_states must be positive");
  }
  if (tau) {
    for (double T : horizons) {
      if (!(*tau > 0.0 && *tau <= T)) {
        throw DimensionError("tau must satisfy 0 < tau <= T for every horizon");
      }
    }
  }
  integrator.validate();
}

SweepConfig desk_experiment_1() {
  SweepConfig c;
  c.families = {Family::StableLinear,   Family::UnstableLinear,
                Family::SmallNormTanh,  Family::MonostableTanh,
                Family::BistableTanh,   Family::MindyLike};
  c.dims = {16};
  c.horizons = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  c.methods = {Method::LinearExact, Method::ForwardNominal,
               Method::BackwardNominal, Method::LinearizedAtX0};
  c.deviation_sigma2 = {0.1, 0.5};
  c.n_models = 3;
  c.n_states = 10;
  c.seed = 1;
  return c;
}

SweepConfig desk_experiment_2() {
  SweepConfig c;
  c.families = {Family::SmallNormTanh};
  c.dims = {32};
  c.horizons = {0.25, 0.5, 1.0};
  c.methods = {Method::ForwardNominal, Method::LinearizedAtX0};
  c.deviation_sigma2 = {0.01};
  c.k_values = {8, 16, 31, 32};
  c.n_models = 3;
  c.n_states = 10;
  c.seed = 2;
  return c;
}

SweepConfig full_scale_experiment_1() {
  SweepConfig c = desk_experiment_1();
  c.dims = {100};
  c.horizons = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  c.n_models = 5;
  c.n_states = 40;
  return c;
}

SweepConfig full_scale_experiment_2() {
  SweepConfig c = desk_experiment_2();
  c.dims = {128};
  c.horizons = {0.25, 0.5, 1.0, 2.0, 4.0};
  c.k_values = {1, 64, 96, 120, 126, 128};
  c.n_models = 5;
  c.n_states = 20;
  return c;
}

std::size_t default_threads() {
  if (const char* env = std::getenv("RNN_CONSTCTL_THREADS")) {
    std::size_t n = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs jobs[i]() on a bounded pool, storing results by index so the output
// order never depends on scheduling.
template <typename Job>
std::vector<TrialRecord> run_pool(const std::vector<Job>& jobs, std::size_t threads) {
  std::vector<std::vector<TrialRecord>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = jobs[i]();
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs.size());
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::max<std::size_t>(1, std::min(threads, jobs.size()));
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TrialRecord> out;
  for (auto& r : results) {
    out.insert(out.end(), std::make_move_iterator(r.begin()),
               std::make_move_iterator(r.end()));
  }
  sort_records(out);
  return out;
}

// Runs one method attempt and classifies the outcome. `attempt` returns the
// simulated endpoint and whether the synthesis flagged image infeasibility.
template <typename Attempt>
void run_method(TrialRecord& rec, const Vector& x0, const Vector& x1,
                bool record_timing, const Attempt& attempt) {
  const auto start = std::chrono::steady_clock::now();
  rec.rel_endpoint_error = std::numeric_limits<double>::quiet_NaN();
  try {
    const auto [endpoint, not_in_image] = attempt();
    rec.rel_endpoint_error = (endpoint - x1).norm() / (x1 - x0).norm();
    rec.status = not_in_image ? Status::NotInImage : Status::Ok;
  } catch (const SingularSystem&) {
    rec.status = Status::SingularSystem;
  } catch (const RankDeficient&) {
    rec.status = Status::SingularSystem;
  } catch (const NumericalError&) {
    rec.status = Status::SingularSystem;
  } catch (const Divergence&) {
    rec.status = Status::Divergence;
  } catch (const IntegrationBudgetExceeded&) {
    rec.status = Status::Divergence;
  } catch (const TargetOffChart&) {
    rec.status = Status::TargetOffChart;
  }
  if (record_timing) {
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  }
}

std::uint64_t model_seed_for(const SweepConfig& cfg, Family family,
                             Eigen::Index d, std::size_t index) {
  return derive_seed(cfg.seed, Stream::Model,
                     {static_cast<std::uint64_t>(family),
                      static_cast<std::uint64_t>(d), index});
}

std::uint64_t state_seed_for(std::uint64_t model_seed, std::size_t index) {
  return derive_seed(model_seed, Stream::State, {index});
}

struct ModelEntry {
  Family family;
  std::uint64_t seed;
  NetworkModel model;
};

std::vector<ModelEntry> build_models(const SweepConfig& cfg) {
  std::vector<ModelEntry> models;
  for (Family family : cfg.families) {
    for (auto d : cfg.dims) {
      for (std::size_t m = 0; m < cfg.n_models; ++m) {
        const auto seed = model_seed_for(cfg, family, d, m);
        models.push_back({family, seed, generate_model({family, d, seed})});
      }
    }
  }
  return models;
}

}  // namespace

std::vector<TrialRecord> run_experiment_1(const SweepConfig& cfg,
                                          std::size_t threads) {
  cfg.validate();
  const auto models = build_models(cfg);

  struct Job {
    const ModelEntry* entry;
    const SweepConfig* cfg;
    std::uint64_t state_seed;
    double T;
    double sigma2;

    std::vector<TrialRecord> operator()() const {
      const NetworkModel& model = entry->model;
      const IntegratorConfig& icfg = cfg->integrator;
      TrialRecord base;
      base.family = entry->family;
      base.d = model.dim();
      base.k = model.inputs();
      base.T = T;
      base.tau = cfg->tau;
      base.model_seed = entry->seed;
      base.state_seed = state_seed;
      base.sigma2 = sigma2;

      std::vector<Method> methods;
      for (Method m : cfg->methods) {
        if (m == Method::LinearExact && !is_linear(entry->family)) continue;
        methods.push_back(m);
      }

      std::vector<TrialRecord> out;
      TrialPair pair;
      try {
        pair = sample_trial(model, state_seed, T, sigma2, icfg);
      } catch (const Divergence&) {
        for (Method m : methods) {
          TrialRecord rec = base;
          rec.method = m;
          rec.status = Status::Divergence;
          rec.rel_endpoint_error = std::numeric_limits<double>::quiet_NaN();
          out.push_back(rec);
        }
        return out;
      }

      for (Method m : methods) {
        TrialRecord rec = base;
        rec.method = m;
        SynthesisRequest req{pair.x0, pair.x1, T, m,
                             m == Method::LinearizedAtX0 ? std::nullopt : cfg->tau};
        run_method(rec, pair.x0, pair.x1, cfg->record_timing, [&] {
          const auto res = synthesize(model, req, icfg);
          const auto sim = simulate_controlled(model, pair.x0, res.input, T, icfg);
          return std::pair{sim.terminal_state, res.not_in_image};
        });
        out.push_back(rec);
      }
      return out;
    }
  };

  std::vector<Job> jobs;
  for (const auto& entry : models) {
    for (std::size_t s = 0; s < cfg.n_states; ++s) {
      const auto state_seed = state_seed_for(entry.seed, s);
      for (double T : cfg.horizons) {
        for (double sigma2 : cfg.deviation_sigma2) {
          jobs.push_back({&entry, &cfg, state_seed, T, sigma2});
        }
      }
    }
  }
  return run_pool(jobs, threads);
}

std::vector<TrialRecord> run_experiment_2(const SweepConfig& cfg,
                                          std::size_t threads) {
  cfg.validate();
  if (cfg.k_values.empty()) {
    throw DimensionError("experiment 2 needs k_values");
  }
  for (Family f : cfg.families) {
    if (is_linear(f)) {
      throw DimensionError("experiment 2 runs on nonlinear families only");
    }
  }
  for (auto d : cfg.dims) {
    for (auto k : cfg.k_values) {
      if (k < 1 || k > d) throw DimensionError("k_values must lie in [1, d]");
    }
  }
  const auto models = build_models(cfg);

  struct Job {
    const ModelEntry* entry;
    const SweepConfig* cfg;
    std::uint64_t state_seed;
    double T;
    Eigen::Index k;
    double sigma2;

    std::vector<TrialRecord> operator()() const {
      const IntegratorConfig& icfg = cfg->integrator;
      const Eigen::Index d = entry->model.dim();
      const NetworkModel model = entry->model.with_input(canonical_input(d, k));

      TrialRecord base;
      base.family = entry->family;
      base.d = d;
      base.k = k;
      base.T = T;
      base.model_seed = entry->seed;
      base.state_seed = state_seed;
      base.sigma2 = sigma2;

      Rng state_rng(derive_seed(state_seed, Stream::State, {}));
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector x0(d);
      for (Eigen::Index i = 0; i < d; ++i) x0(i) = normal(state_rng);

      std::vector<TrialRecord> out;
      std::optional<ReachableSetChart> chart;
      Vector x1;
      TrialRecord chart_failure = base;
      bool chart_ok = false;
      run_method(chart_failure, x0, x0, false, [&] {
        chart = reachable_chart(model, x0, T, icfg);
        Rng chart_rng(derive_seed(state_seed, Stream::Chart,
                                  {static_cast<std::uint64_t>(k)}));
        std::normal_distribution<double> xi_dist(0.0, std::sqrt(sigma2));
        Vector xi(k);
        for (Eigen::Index i = 0; i < k; ++i) xi(i) = xi_dist(chart_rng);
        x1 = chart->anchor + chart->basis.basis * xi;
        chart_ok = true;
        return std::pair{x0, false};
      });

      for (Method m : cfg->methods) {
        TrialRecord rec = base;
        rec.method = m;
        if (!chart_ok) {
          rec.status = chart_failure.status;
          rec.rel_endpoint_error = std::numeric_limits<double>::quiet_NaN();
          out.push_back(rec);
          continue;
        }
        run_method(rec, x0, x1, cfg->record_timing, [&] {
          ControlInput input;
          bool flagged = false;
          if (m == Method::ForwardNominal && k < d) {
            input = reachable_control(*chart, x1);
          } else if (m == Method::ForwardNominal) {
            const auto res = synthesize_forward(
                model, {x0, x1, T, Method::ForwardNominal, std::nullopt}, icfg);
            input = res.input;
            flagged = res.not_in_image;
          } else if (m == Method::LinearizedAtX0) {
            input = synthesize_linearized_actuated(
                        model, {x0, x1, T, Method::LinearizedAtX0, std::nullopt})
                        .input;
          } else {
            const auto res = synthesize(model, {x0, x1, T, m, std::nullopt}, icfg);
            input = res.input;
            flagged = res.not_in_image;
          }
          const auto sim = simulate_controlled(model, x0, input, T, icfg);
          return std::pair{sim.terminal_state, flagged};
        });
        out.push_back(rec);
      }
      return out;
    }
  };

  std::vector<Job> jobs;
  for (const auto& entry : models) {
    for (std::size_t s = 0; s < cfg.n_states; ++s) {
      const auto state_seed = state_seed_for(entry.seed, s);
      for (double T : cfg.horizons) {
        for (auto k : cfg.k_values) {
          if (k > entry.model.dim()) continue;
          for (double sigma2 : cfg.deviation_sigma2) {
            jobs.push_back({&entry, &cfg, state_seed, T, k, sigma2});
          }
        }
      }
    }
  }
  return run_pool(jobs, threads);
}

void sort_records(std::vector<TrialRecord>& records) {
  auto key = [](const TrialRecord& r) {
    return std::tuple(to_string(r.family), r.d, r.k, r.T, to_string(r.method),
                      r.model_seed, r.state_seed, r.sigma2,
                      r.tau.value_or(-1.0));
  };
  std::stable_sort(records.begin(), records.end(),
                   [&](const TrialRecord& a, const TrialRecord& b) {
                     return key(a) < key(b);
                   });
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view name) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw DimensionError("CSV line " + std::to_string(line) + ": malformed " +
                         std::string(name) + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

void write_csv(std::vector<TrialRecord> records, std::ostream& out) {
  sort_records(records);
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << to_string(r.family) << ',' << r.d << ',' << r.k << ','
        << format_double(r.T) << ',' << (r.tau ? format_double(*r.tau) : "")
        << ',' << to_string(r.method) << ',' << r.model_seed << ','
        << r.state_seed << ',' << format_double(r.sigma2) << ','
        << format_double(r.rel_endpoint_error) << ',' << to_string(r.status)
        << ',' << format_double(r.wall_time_ms) << '\n';
  }
}

void write_csv(const std::vector<TrialRecord>& records,
               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  write_csv(records, out);
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

std::vector<TrialRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw DimensionError("CSV header does not match the trial schema");
  }
  std::vector<TrialRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 12) {
      throw DimensionError("CSV line " + std::to_string(lineno) + ": expected 12 fields, got " +
                           std::to_string(fields.size()));
    }
    TrialRecord r;
    r.family = parse_family(fields[0]);
    r.d = parse_number<Eigen::Index>(fields[1], lineno, "d");
    r.k = parse_number<Eigen::Index>(fields[2], lineno, "k");
    r.T = parse_number<double>(fields[3], lineno, "T");
    if (!fields[4].empty()) r.tau = parse_number<double>(fields[4], lineno, "tau");
    r.method = parse_method(fields[5]);
    r.model_seed = parse_number<std::uint64_t>(fields[6], lineno, "model_seed");
    r.state_seed = parse_number<std::uint64_t>(fields[7], lineno, "state_seed");
    r.sigma2 = parse_number<double>(fields[8], lineno, "sigma2");
    r.rel_endpoint_error =
        parse_number<double>(fields[9], lineno, "rel_endpoint_error");
    r.status = parse_status(fields[10]);
    r.wall_time_ms = parse_number<double>(fields[11], lineno, "wall_time_ms");
    out.push_back(r);
  }
  return out;
}

std::vector<TrialRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return read_csv(in);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  using Key = std::tuple<std::string_view, Eigen::Index, Eigen::Index, double,
                         std::string_view, double>;
  std::map<Key, std::pair<SummaryRow, std::vector<double>>> groups;
  for (const auto& r : records) {
    const Key key{to_string(r.family), r.d, r.k, r.T, to_string(r.method), r.sigma2};
    auto [it, inserted] = groups.try_emplace(key);
    auto& [row, errors] = it->second;
    if (inserted) {
      row.family = r.family;
      row.d = r.d;
      row.k = r.k;
      row.T = r.T;
      row.method = r.method;
      row.sigma2 = r.sigma2;
    }
    if (r.status == Status::Ok) {
      ++row.ok;
      errors.push_back(r.rel_endpoint_error);
    } else {
      ++row.failed;
    }
  }
  std::vector<SummaryRow> out;
  for (auto& [key, group] : groups) {
    auto& [row, errors] = group;
    row.median_error = median(errors);
    double sum = 0.0;
    for (double e : errors) sum += std::log10(std::max(e, 1e-300));
    row.mean_log10_error = errors.empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : sum / static_cast<double>(errors.size());
    out.push_back(row);
  }
  return out;
}

}  // namespace constctl::harness
