// gbv command line: batch experiment runner over the gbv C API.
// Pipeline: simulate -> fit -> laplace -> sample -> diagnose -> report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gbv/gbv.h"
#include "config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using gbvcli::Config;
using gbvcli::ConfigError;

namespace {

struct StageError {
  int exit_code;
  std::string message;
};

template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  ~Handle() { reset(); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : p_(other.p_) { other.p_ = nullptr; }
  Handle& operator=(Handle&& other) noexcept {
    if (this != &other) {
      reset();
      p_ = other.p_;
      other.p_ = nullptr;
    }
    return *this;
  }
  T** out() {
    reset();
    return &p_;
  }
  T* get() const { return p_; }
  explicit operator bool() const { return p_ != nullptr; }
  void reset() {
    if (p_) Free(p_);
    p_ = nullptr;
  }

 private:
  T* p_ = nullptr;
};

using ModelH = Handle<gbv_model, gbv_model_free>;
using PriorH = Handle<gbv_prior, gbv_prior_free>;
using PosteriorH = Handle<gbv_posterior, gbv_posterior_free>;
using FitH = Handle<gbv_fit, gbv_fit_free>;
using LaplaceH = Handle<gbv_laplace, gbv_laplace_free>;
using DrawsH = Handle<gbv_draws, gbv_draws_free>;
using GridH = Handle<gbv_grid, gbv_grid_free>;
using SandwichH = Handle<gbv_sandwich, gbv_sandwich_free>;
using FieldH = Handle<gbv_field, gbv_field_free>;
using TableH = Handle<gbv_table, gbv_table_free>;

// keeps the sampler stream disjoint from the per-datum generator streams
std::uint64_t sampler_seed(std::uint64_t seed) { return seed ^ 0xa0761d6478bd642fULL; }

void check(gbv_status st, const std::string& stage) {
  if (st == GBV_OK) return;
  const int code = (st == GBV_ERR_IO) ? 4 : 3;
  throw StageError{code, "stage " + stage + ": " + gbv_last_error()};
}

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

int resolve_threads(const CommonArgs& args) {
  if (args.threads && *args.threads > 0) return *args.threads;
  if (const char* env = std::getenv("GBV_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::uint64_t resolve_seed(const CommonArgs& args, const Config& cfg) {
  return args.seed ? *args.seed : cfg.get_u64("seed", 0);
}

fs::path resolve_out(const CommonArgs& args, const Config& cfg) {
  const fs::path dir = args.out ? *args.out : cfg.get_string("out", "out");
  fs::create_directories(dir);
  return dir;
}

std::string model_kind(const Config& cfg) {
  cfg.expect_one_of("model.kind",
                    {"expfam", "glm", "gmrf", "ising", "boltzmann", "cox", "median"});
  return cfg.require_string("model.kind");
}

// ---------------------------------------------------------------------------
// model construction (optionally writing the data files it used)

struct ModelBundle {
  ModelH model;
  long n = 0;  // posterior sample size
  int dim = 0;
  std::string kind;
};

std::string glm_kind_for(const Config& cfg, const std::string& family) {
  const std::string kind = cfg.get_string("data.kind", "");
  if (!kind.empty()) return kind;
  if (family == "gaussian") return "linear";
  if (family == "bernoulli-logit") return "logistic";
  if (family == "poisson") return "poisson";
  throw ConfigError("cannot infer data.kind from model.family '" + family + "'");
}

std::vector<double> theta_true_of(const Config& cfg) {
  return cfg.get_doubles("data.theta_true", {});
}

// Builds the objective from config; when `save_dir` is set, generated or
// ingested data are also written there (the `simulate` stage).
ModelBundle build_model(const Config& cfg, std::uint64_t seed, const fs::path* save_dir) {
  ModelBundle out;
  out.kind = model_kind(cfg);
  cfg.expect_one_of("data.source", {"generate", "file", "matched"});
  const std::string source = cfg.get_string("data.source", "generate");
  const double sigma2 = cfg.get_double("model.sigma2", 1.0);
  const double power = cfg.get_double("model.power", 1.0);
  const std::string family = cfg.get_string("model.family", "gaussian");

  auto save_table = [&](const gbv_table* t) {
    if (save_dir) check(gbv_table_save_csv(t, (*save_dir / "data.csv").string().c_str()), "simulate");
  };

  if (out.kind == "expfam") {
    if (source == "matched") {
      const double s_n = cfg.get_double("data.s_n", 0.0);
      const long n = cfg.get_long("data.n", 100);
      check(gbv_model_iid_expfam_matched(family.c_str(), sigma2, s_n, n, power, out.model.out()),
            "build");
      out.n = n;
    } else {
      TableH data;
      if (source == "file") {
        check(gbv_table_load_csv(cfg.require_string("data.path").c_str(), data.out()), "build");
      } else {
        const auto theta = theta_true_of(cfg);
        if (theta.size() != 1) throw ConfigError("expfam generation needs scalar data.theta_true");
        const long n = cfg.get_long("data.n", 100);
        check(gbv_sim_glm(glm_kind_for(cfg, family).c_str(), theta.data(), 1, n, "constant(1)",
                          cfg.get_double("data.sigma", 1.0), seed, data.out()),
              "simulate");
        save_table(data.get());
      }
      const long rows = gbv_table_rows(data.get());
      const int cols = gbv_table_cols(data.get());
      std::vector<double> y(rows);
      const double* flat = gbv_table_data(data.get());
      for (long i = 0; i < rows; ++i) y[i] = flat[i * cols + (cols - 1)];  // last column
      check(gbv_model_iid_expfam(family.c_str(), sigma2, y.data(), rows, power, out.model.out()),
            "build");
      out.n = rows;
    }
  } else if (out.kind == "glm") {
    TableH data;
    if (source == "file") {
      check(gbv_table_load_csv(cfg.require_string("data.path").c_str(), data.out()), "build");
    } else {
      const auto theta = theta_true_of(cfg);
      if (theta.empty()) throw ConfigError("glm generation needs data.theta_true");
      check(gbv_sim_glm(glm_kind_for(cfg, family).c_str(), theta.data(),
                        static_cast<int>(theta.size()), cfg.get_long("data.n", 1000),
                        cfg.get_string("data.covariates", "gaussian(1.0)").c_str(),
                        cfg.get_double("data.sigma", 1.0), seed, data.out()),
            "simulate");
      save_table(data.get());
    }
    check(gbv_model_glm(family.c_str(), sigma2, data.get(), out.model.out()), "build");
    out.n = gbv_table_rows(data.get());
  } else if (out.kind == "gmrf" || out.kind == "ising") {
    FieldH field;
    if (source == "file") {
      check(gbv_field_load(cfg.require_string("data.path").c_str(), field.out()), "build");
    } else {
      const int L = static_cast<int>(cfg.get_long("data.L", 16));
      const int m = static_cast<int>(cfg.get_long("data.m", 2));
      if (out.kind == "ising") {
        const auto theta = theta_true_of(cfg);
        if (theta.size() != 2) throw ConfigError("ising generation needs data.theta_true = t1,t2");
        int warn = 0;
        check(gbv_sim_ising(L, m, theta[0], theta[1],
                            static_cast<int>(cfg.get_long("data.sweeps", 1000)),
                            static_cast<int>(cfg.get_long("data.burn_sweeps", 500)), seed, &warn,
                            field.out()),
              "simulate");
        if (warn) std::cerr << "warning: coupling at or beyond the 2-D critical value; long Gibbs"
                               " chains mix poorly there\n";
      } else {
        const auto axes = cfg.get_doubles("data.theta_axes", {});
        const int m_axes = static_cast<int>(axes.size());
        if (m_axes != m) throw ConfigError("gmrf generation needs data.theta_axes with one entry per axis");
        check(gbv_sim_gmrf(L, m, axes.data(), cfg.get_double("model.gamma", 1.0), seed, field.out()),
              "simulate");
      }
      if (save_dir) check(gbv_field_save(field.get(), (*save_dir / "field").string().c_str()), "simulate");
    }
    if (out.kind == "gmrf") {
      check(gbv_model_gmrf(field.get(), cfg.get_double("model.gamma", 1.0),
                           cfg.get_bool("model.isotropic", true) ? 1 : 0, out.model.out()),
            "build");
    } else {
      check(gbv_model_ising(field.get(), out.model.out()), "build");
    }
    out.n = gbv_field_sites(field.get());
  } else if (out.kind == "boltzmann") {
    TableH samples;
    if (source == "file") {
      check(gbv_table_load_csv(cfg.require_string("data.path").c_str(), samples.out()), "build");
    } else {
      const auto b = cfg.get_doubles("data.b", {});
      const auto a_upper = cfg.get_doubles("data.a_upper", {});
      const int d = static_cast<int>(b.size());
      if (d < 2) throw ConfigError("boltzmann generation needs data.b with d >= 2 entries");
      if (static_cast<int>(a_upper.size()) != d * (d - 1) / 2)
        throw ConfigError("boltzmann generation needs data.a_upper with d(d-1)/2 entries");
      std::vector<double> a(d * d, 0.0);
      int idx = 0;
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) a[i * d + j] = a_upper[idx++];
      check(gbv_sim_boltzmann(d, a.data(), b.data(), cfg.get_long("data.n", 10000), seed,
                              samples.out(), nullptr),
            "simulate");
      save_table(samples.get());
    }
    check(gbv_model_boltzmann(samples.get(), nullptr, out.model.out()), "build");
    out.n = gbv_table_rows(samples.get());
  } else if (out.kind == "cox") {
    TableH data;
    if (source == "file") {
      check(gbv_table_load_csv(cfg.require_string("data.path").c_str(), data.out()), "build");
    } else {
      const auto theta = theta_true_of(cfg);
      if (theta.empty()) throw ConfigError("cox generation needs data.theta_true");
      check(gbv_sim_cox(cfg.get_long("data.n", 1000), theta.data(), static_cast<int>(theta.size()),
                        cfg.get_string("data.baseline", "exponential(1.0)").c_str(),
                        cfg.get_string("data.censor", "none").c_str(),
                        cfg.get_string("data.covariates", "uniform(-1,1)").c_str(), seed,
                        data.out()),
            "simulate");
      save_table(data.get());
    }
    check(gbv_model_cox(data.get(), out.model.out()), "build");
    out.n = gbv_table_rows(data.get());
  } else if (out.kind == "median") {
    TableH data;
    if (source == "file") {
      check(gbv_table_load_csv(cfg.require_string("data.path").c_str(), data.out()), "build");
    } else {
      const auto theta = theta_true_of(cfg);
      check(gbv_sim_location(cfg.get_long("data.n", 200), theta.empty() ? 0.0 : theta[0],
                             cfg.get_string("data.noise", "gaussian(1.0)").c_str(), seed,
                             data.out()),
            "simulate");
      save_table(data.get());
    }
    const long rows = gbv_table_rows(data.get());
    const int cols = gbv_table_cols(data.get());
    std::vector<double> x(rows);
    const double* flat = gbv_table_data(data.get());
    for (long i = 0; i < rows; ++i) x[i] = flat[i * cols];  // first column
    check(gbv_model_median(cfg.get_string("model.cdf", "logistic").c_str(), x.data(), rows,
                           out.model.out()),
          "build");
    out.n = rows;
  }

  out.dim = gbv_model_dim(out.model.get());
  out.n = cfg.get_long("model.n", out.n);
  return out;
}

PriorH build_prior(const Config& cfg, int dim) {
  cfg.expect_one_of("prior.kind", {"uniform", "gaussian", "logit-uniform"});
  const std::string kind = cfg.get_string("prior.kind", "uniform");
  PriorH prior;
  if (kind == "logit-uniform") {
    if (dim != 1) throw ConfigError("prior.kind logit-uniform needs a one-dimensional model");
    check(gbv_prior_logit_uniform(prior.out()), "build");
    return prior;
  }
  if (kind == "gaussian") {
    auto mean = cfg.get_doubles("prior.mean", std::vector<double>(dim, 0.0));
    auto sd = cfg.get_doubles("prior.sd", std::vector<double>(dim, 10.0));
    if (mean.size() == 1 && dim > 1) mean.assign(dim, mean[0]);
    if (sd.size() == 1 && dim > 1) sd.assign(dim, sd[0]);
    if (static_cast<int>(mean.size()) != dim || static_cast<int>(sd.size()) != dim)
      throw ConfigError("prior.mean/prior.sd must have model dimension entries");
    check(gbv_prior_gaussian(dim, mean.data(), sd.data(), prior.out()), "build");
    return prior;
  }
  auto lo = cfg.get_doubles("prior.lower", std::vector<double>(dim, -20.0));
  auto hi = cfg.get_doubles("prior.upper", std::vector<double>(dim, 20.0));
  if (lo.size() == 1 && dim > 1) lo.assign(dim, lo[0]);
  if (hi.size() == 1 && dim > 1) hi.assign(dim, hi[0]);
  if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
    throw ConfigError("prior.lower/prior.upper must have model dimension entries");
  check(gbv_prior_uniform(dim, lo.data(), hi.data(), prior.out()), "build");
  return prior;
}

std::vector<double> init_theta(const Config& cfg, int dim) {
  auto init = cfg.get_doubles("init", std::vector<double>(dim, 0.0));
  if (init.size() == 1 && dim > 1) init.assign(dim, init[0]);
  if (static_cast<int>(init.size()) != dim)
    throw ConfigError("init must have model dimension entries");
  return init;
}

// ---------------------------------------------------------------------------
// stage artifacts

json fit_to_json(const gbv_fit* fit, int dim) {
  std::vector<double> theta(dim), hess(dim * dim);
  check(gbv_fit_theta(fit, theta.data()), "fit");
  check(gbv_fit_hessian(fit, hess.data()), "fit");
  json j;
  j["dim"] = dim;
  j["theta_n"] = theta;
  j["f_min"] = gbv_fit_min_value(fit);
  j["grad_norm"] = gbv_fit_grad_norm(fit);
  j["iterations"] = gbv_fit_iterations(fit);
  j["converged"] = gbv_fit_converged(fit) != 0;
  j["hessian"] = hess;
  return j;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw StageError{3, "cannot write " + path.string()};
  out << j.dump(2) << "\n";
}

json read_json_artifact(const fs::path& path, const std::string& producer) {
  std::ifstream in(path);
  if (!in)
    throw StageError{4, "missing upstream artifact: " + path.string() + " (run 'gbv " + producer +
                            "' first)"};
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw StageError{4, "malformed upstream artifact: " + path.string()};
  return j;
}

FitH load_fit_artifact(const fs::path& out_dir) {
  const json j = read_json_artifact(out_dir / "fit.json", "fit");
  const int dim = j.at("dim").get<int>();
  const std::vector<double> theta = j.at("theta_n").get<std::vector<double>>();
  const std::vector<double> hess = j.at("hessian").get<std::vector<double>>();
  FitH fit;
  check(gbv_fit_from_values(dim, theta.data(), j.at("f_min").get<double>(),
                            j.at("grad_norm").get<double>(), j.at("iterations").get<long>(),
                            j.at("converged").get<bool>() ? 1 : 0, hess.data(), fit.out()),
        "fit");
  return fit;
}

FitH run_fit(const ModelBundle& bundle, const Config& cfg) {
  const auto init = init_theta(cfg, bundle.dim);
  FitH fit;
  check(gbv_fit_run(bundle.model.get(), init.data(), cfg.get_double("optimizer.tol", 1e-8),
                    cfg.get_long("optimizer.max_iter", 200), fit.out()),
        "fit");
  return fit;
}

// grid box: explicit grid.lower/upper or Laplace mean +- 10 sd per axis
void grid_box(const Config& cfg, const gbv_laplace* lap, int dim, std::vector<double>* lo,
              std::vector<double>* hi) {
  *lo = cfg.get_doubles("grid.lower", {});
  *hi = cfg.get_doubles("grid.upper", {});
  if (lo->size() == 1 && dim > 1) lo->assign(dim, (*lo)[0]);
  if (hi->size() == 1 && dim > 1) hi->assign(dim, (*hi)[0]);
  if (!lo->empty() && !hi->empty()) {
    if (static_cast<int>(lo->size()) != dim || static_cast<int>(hi->size()) != dim)
      throw ConfigError("grid.lower/grid.upper must have model dimension entries");
    return;
  }
  std::vector<double> mean(dim), cov(dim * dim);
  check(gbv_laplace_mean(lap, mean.data()), "grid");
  check(gbv_laplace_covariance(lap, cov.data()), "grid");
  lo->resize(dim);
  hi->resize(dim);
  for (int j = 0; j < dim; ++j) {
    const double sd = std::sqrt(cov[j * dim + j]);
    (*lo)[j] = mean[j] - 10.0 * sd;
    (*hi)[j] = mean[j] + 10.0 * sd;
  }
}

DrawsH sample_chains(const Config& cfg, const gbv_posterior* gp, const double* theta,
                     std::uint64_t seed, const gbv_laplace* lap) {
  const long steps = cfg.get_long("sampler.steps", 20000);
  const long burn_in = cfg.get_long("sampler.burn_in", 4000);
  const long chains = cfg.get_long("sampler.chains", 1);
  if (chains < 1) throw ConfigError("sampler.chains must be >= 1");
  if (chains == 1) {
    DrawsH draws;
    check(gbv_sample_rwm(gp, theta, steps, burn_in, seed, lap, draws.out()), "sample");
    return draws;
  }

  // one substream per chain, stacked in chain order: the result does not
  // depend on scheduling
  std::vector<DrawsH> per_chain(chains);
  for (long c = 0; c < chains; ++c) {
    const std::uint64_t chain_seed = seed ^ (0x9e3779b97f4a7c15ULL * (c + 1));
    check(gbv_sample_rwm(gp, theta, steps, burn_in, chain_seed, lap, per_chain[c].out()),
          "sample");
  }
  const int d = gbv_draws_dim(per_chain[0].get());
  const long rows_per = gbv_draws_size(per_chain[0].get());
  std::vector<double> stacked;
  stacked.reserve(static_cast<size_t>(rows_per) * chains * d);
  double acceptance = 0.0;
  for (long c = 0; c < chains; ++c) {
    const double* data = gbv_draws_data(per_chain[c].get());
    stacked.insert(stacked.end(), data, data + static_cast<size_t>(rows_per) * d);
    acceptance += gbv_draws_acceptance_rate(per_chain[c].get()) / chains;
  }
  DrawsH merged;
  check(gbv_draws_from_data(d, stacked.data(), rows_per * chains, seed, acceptance, burn_in,
                            merged.out()),
        "sample");
  return merged;
}

json coverage_to_json(const gbv_coverage_result& r) {
  json j;
  j["replications"] = r.replications;
  j["hits"] = r.hits;
  j["failed"] = r.failed;
  j["coverage"] = r.coverage;
  j["wilson_lo"] = r.wilson_lo;
  j["wilson_hi"] = r.wilson_hi;
  return j;
}

json run_coverage(const Config& cfg, std::uint64_t seed, int threads,
                  std::optional<long> reps_override, std::optional<double> rho_override) {
  cfg.expect_one_of("coverage.family", {"normal-mean", "power-gaussian"});
  cfg.expect_one_of("coverage.calibrate", {"none", "sandwich", "both"});
  const std::string family = cfg.get_string("coverage.family", "normal-mean");
  const std::string calibrate = cfg.get_string("coverage.calibrate", "none");

  gbv_coverage_spec spec{};
  spec.family =
      family == "power-gaussian" ? GBV_COVERAGE_POWER_GAUSSIAN : GBV_COVERAGE_NORMAL_MEAN;
  spec.theta0 = cfg.get_double("coverage.theta0", 0.0);
  spec.sigma = cfg.get_double("coverage.sigma", 1.0);
  spec.n_per_rep = cfg.get_long("coverage.n", 100);
  spec.rho = rho_override ? *rho_override : cfg.get_double("coverage.rho", 0.9);
  spec.reps = reps_override ? *reps_override : cfg.get_long("coverage.reps", 2000);
  spec.seed = seed;
  spec.sampler_steps = cfg.get_long("sampler.steps", 0);
  spec.sampler_burn_in = cfg.get_long("sampler.burn_in", 0);
  spec.threads = threads;

  json out;
  out["family"] = family;
  out["rho"] = spec.rho;
  if (calibrate == "none" || calibrate == "both") {
    spec.calibrate = 0;
    gbv_coverage_result r{};
    check(gbv_coverage_run(&spec, &r), "coverage");
    out["raw"] = coverage_to_json(r);
  }
  if (calibrate == "sandwich" || calibrate == "both") {
    spec.calibrate = 1;
    gbv_coverage_result r{};
    check(gbv_coverage_run(&spec, &r), "coverage");
    out["calibrated"] = coverage_to_json(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_simulate(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  build_model(cfg, seed, &out_dir);
  std::cout << "simulated data written to " << out_dir.string() << "\n";
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const ModelBundle bundle = build_model(cfg, seed, nullptr);
  FitH fit = run_fit(bundle, cfg);

  std::vector<double> theta(bundle.dim);
  check(gbv_fit_theta(fit.get(), theta.data()), "fit");
  std::cout << "theta_n =";
  for (const double v : theta) std::cout << " " << v;
  std::cout << "\ngrad_norm = " << gbv_fit_grad_norm(fit.get())
            << "\nconverged = " << (gbv_fit_converged(fit.get()) ? "true" : "false") << "\n";
  write_json(fit_to_json(fit.get(), bundle.dim), out_dir / "fit.json");
  return 0;
}

int cmd_laplace(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const ModelBundle bundle = build_model(cfg, seed, nullptr);
  PriorH prior = build_prior(cfg, bundle.dim);
  PosteriorH gp;
  check(gbv_posterior_new(bundle.model.get(), prior.get(), bundle.n, gp.out()), "build");
  FitH fit = load_fit_artifact(out_dir);

  LaplaceH lap;
  check(gbv_laplace_run(gp.get(), fit.get(), lap.out()), "laplace");
  std::vector<double> mean(bundle.dim), cov(bundle.dim * bundle.dim);
  check(gbv_laplace_mean(lap.get(), mean.data()), "laplace");
  check(gbv_laplace_covariance(lap.get(), cov.data()), "laplace");

  json j;
  j["log_zhat"] = gbv_laplace_log_normalizer(lap.get());
  j["mean"] = mean;
  j["covariance"] = cov;
  write_json(j, out_dir / "laplace.json");
  std::cout << "log_zhat = " << gbv_laplace_log_normalizer(lap.get()) << "\n";
  return 0;
}

int cmd_sample(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const ModelBundle bundle = build_model(cfg, seed, nullptr);
  PriorH prior = build_prior(cfg, bundle.dim);
  PosteriorH gp;
  check(gbv_posterior_new(bundle.model.get(), prior.get(), bundle.n, gp.out()), "build");
  FitH fit = load_fit_artifact(out_dir);

  LaplaceH lap;
  const bool have_lap = gbv_laplace_run(gp.get(), fit.get(), lap.out()) == GBV_OK;
  std::vector<double> theta(bundle.dim);
  check(gbv_fit_theta(fit.get(), theta.data()), "sample");

  DrawsH draws =
      sample_chains(cfg, gp.get(), theta.data(), sampler_seed(seed), have_lap ? lap.get() : nullptr);
  check(gbv_draws_save_csv(draws.get(), (out_dir / "draws.csv").string().c_str()), "sample");
  std::cout << "draws = " << gbv_draws_size(draws.get())
            << "  acceptance = " << gbv_draws_acceptance_rate(draws.get()) << "\n";
  return 0;
}

int cmd_audit(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const ModelBundle bundle = build_model(cfg, seed, nullptr);
  FitH fit = load_fit_artifact(out_dir);

  std::vector<double> theta(bundle.dim);
  check(gbv_fit_theta(fit.get(), theta.data()), "audit");
  const double half = cfg.get_double("diagnostics.audit_halfwidth", 1.0);
  std::vector<double> lo(theta), hi(theta);
  for (auto& v : lo) v -= half;
  for (auto& v : hi) v += half;

  gbv_audit_result audit{};
  check(gbv_audit_run(bundle.model.get(), fit.get(), lo.data(), hi.data(), &audit), "audit");
  json j;
  j["fit_converged"] = audit.fit_converged != 0;
  j["min_eigenvalue_H0"] = audit.min_eigenvalue_H0;
  j["convexity_min_eig_over_probes"] = audit.convexity_min_eig_over_probes;
  j["third_bound_estimate"] = audit.third_bound_estimate;
  j["third_from_analytic"] = audit.third_from_analytic != 0;
  j["grad_residual"] = audit.grad_residual;
  j["pd_pass"] = audit.pd_pass != 0;
  j["convexity_pass"] = audit.convexity_pass != 0;
  j["third_bound_pass"] = audit.third_bound_pass != 0;
  j["stationary_pass"] = audit.stationary_pass != 0;
  j["overall_pass"] = audit.overall_pass != 0;
  write_json(j, out_dir / "audit.json");
  std::cout << "audit " << (audit.overall_pass ? "pass" : "fail") << "\n";
  return 0;
}

int cmd_tv(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const ModelBundle bundle = build_model(cfg, seed, nullptr);
  if (bundle.dim > 2) throw StageError{3, "stage tv: only D <= 2 supported"};
  PriorH prior = build_prior(cfg, bundle.dim);
  FitH fit = load_fit_artifact(out_dir);

  std::vector<double> theta(bundle.dim), hess(bundle.dim * bundle.dim);
  check(gbv_fit_theta(fit.get(), theta.data()), "tv");
  check(gbv_fit_hessian(fit.get(), hess.data()), "tv");

  std::vector<long> n_list = cfg.get_longs("diagnostics.n_list", {bundle.n});
  json curve = json::array();
  for (const long n : n_list) {
    PosteriorH gp;
    check(gbv_posterior_new(bundle.model.get(), prior.get(), n, gp.out()), "tv");
    LaplaceH lap;
    check(gbv_laplace_run(gp.get(), fit.get(), lap.out()), "tv");
    std::vector<double> lo, hi;
    grid_box(cfg, lap.get(), bundle.dim, &lo, &hi);
    GridH grid;
    check(gbv_grid_run(gp.get(), lo.data(), hi.data(),
                       static_cast<int>(cfg.get_long("grid.resolution", 1024)), grid.out()),
          "tv");
    double tv = 0.0;
    check(gbv_tv_to_normal(grid.get(), theta.data(), n, hess.data(), &tv), "tv");
    json point;
    point["n"] = n;
    point["tv"] = tv;
    point["log_z_grid"] = gbv_grid_log_normalizer(grid.get());
    curve.push_back(point);
    std::cout << "n = " << n << "  tv = " << tv << "\n";
  }
  json j;
  j["tv_curve"] = curve;
  write_json(j, out_dir / "tv.json");
  return 0;
}

int cmd_coverage(const CommonArgs& args, std::optional<long> reps, std::optional<double> rho) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const json j = run_coverage(cfg, seed, resolve_threads(args), reps, rho);
  write_json(j, out_dir / "coverage.json");
  if (j.contains("raw"))
    std::cout << "coverage raw = " << j["raw"]["coverage"].get<double>() << "\n";
  if (j.contains("calibrated"))
    std::cout << "coverage calibrated = " << j["calibrated"]["coverage"].get<double>() << "\n";
  return 0;
}

int cmd_run(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const fs::path out_dir = resolve_out(args, cfg);
  const std::uint64_t seed = resolve_seed(args, cfg);
  const int threads = resolve_threads(args);

  json result;
  result["experiment"] = cfg.get_string("experiment", "experiment");
  result["provenance"] = {{"config_hash", cfg.hash_hex()}, {"seed", seed},
                          {"version", gbv_version()}};

  const bool coverage_only = !cfg.has("model.kind") && cfg.has("coverage.family");
  if (!coverage_only) {
    const ModelBundle bundle = build_model(cfg, seed, nullptr);
    result["model"] = bundle.kind;
    result["n"] = bundle.n;
    PriorH prior = build_prior(cfg, bundle.dim);
    PosteriorH gp;
    check(gbv_posterior_new(bundle.model.get(), prior.get(), bundle.n, gp.out()), "build");

    FitH fit = run_fit(bundle, cfg);
    if (!gbv_fit_converged(fit.get()))
      throw StageError{3, "stage fit: optimizer did not converge"};
    result["fit"] = fit_to_json(fit.get(), bundle.dim);
    std::vector<double> theta(bundle.dim), hess(bundle.dim * bundle.dim);
    check(gbv_fit_theta(fit.get(), theta.data()), "fit");
    check(gbv_fit_hessian(fit.get(), hess.data()), "fit");

    LaplaceH lap;
    check(gbv_laplace_run(gp.get(), fit.get(), lap.out()), "laplace");
    result["logz_laplace"] = gbv_laplace_log_normalizer(lap.get());
    {
      std::vector<double> cov(bundle.dim * bundle.dim);
      check(gbv_laplace_covariance(lap.get(), cov.data()), "laplace");
      result["laplace_covariance"] = cov;
    }

    DrawsH draws = sample_chains(cfg, gp.get(), theta.data(), sampler_seed(seed), lap.get());
    check(gbv_draws_save_csv(draws.get(), (out_dir / "draws.csv").string().c_str()), "sample");
    result["acceptance_rate"] = gbv_draws_acceptance_rate(draws.get());
    {
      std::vector<double> ess(bundle.dim);
      if (gbv_draws_ess(draws.get(), ess.data()) == GBV_OK) result["ess"] = ess;
    }

    GridH grid;
    if (bundle.dim <= 2) {
      std::vector<double> lo, hi;
      grid_box(cfg, lap.get(), bundle.dim, &lo, &hi);
      check(gbv_grid_run(gp.get(), lo.data(), hi.data(),
                         static_cast<int>(cfg.get_long("grid.resolution", 1024)), grid.out()),
            "grid");
      check(gbv_grid_save_csv(grid.get(), (out_dir / "grid.csv").string().c_str()), "grid");
      result["log_z_grid"] = gbv_grid_log_normalizer(grid.get());
    }

    if (cfg.get_bool("diagnostics.tv", false)) {
      if (bundle.dim > 2) throw StageError{3, "stage tv: only D <= 2 supported"};
      const std::vector<long> n_list = cfg.get_longs("diagnostics.n_list", {bundle.n});
      json curve = json::array();
      for (const long n : n_list) {
        PosteriorH gp_n;
        check(gbv_posterior_new(bundle.model.get(), prior.get(), n, gp_n.out()), "tv");
        GridH grid_n;
        LaplaceH lap_n;
        check(gbv_laplace_run(gp_n.get(), fit.get(), lap_n.out()), "tv");
        std::vector<double> lo, hi;
        grid_box(cfg, lap_n.get(), bundle.dim, &lo, &hi);
        check(gbv_grid_run(gp_n.get(), lo.data(), hi.data(),
                           static_cast<int>(cfg.get_long("grid.resolution", 1024)), grid_n.out()),
              "tv");
        double tv = 0.0;
        check(gbv_tv_to_normal(grid_n.get(), theta.data(), n, hess.data(), &tv), "tv");
        curve.push_back({{"n", n}, {"tv", tv}});
      }
      result["tv_curve"] = curve;
      result["tv"] = curve.back()["tv"];
    }

    if (cfg.has("diagnostics.concentration_eps")) {
      const auto eps_list = cfg.get_doubles("diagnostics.concentration_eps", {});
      auto center = cfg.get_doubles("diagnostics.concentration_center",
                                    cfg.get_doubles("data.theta_true", theta));
      if (static_cast<int>(center.size()) != bundle.dim)
        throw ConfigError("diagnostics.concentration_center must have model dimension entries");
      json conc = json::array();
      for (const double eps : eps_list) {
        double mass = 0.0;
        if (grid) {
          check(gbv_concentration_grid(grid.get(), center.data(), eps, &mass), "concentration");
        } else {
          check(gbv_concentration_draws(draws.get(), center.data(), eps, &mass), "concentration");
        }
        conc.push_back({{"eps", eps}, {"mass", mass}});
      }
      result["concentration"] = conc;
    }

    if (cfg.get_bool("diagnostics.audit", true)) {
      const double half = cfg.get_double("diagnostics.audit_halfwidth", 1.0);
      std::vector<double> lo(theta), hi(theta);
      for (auto& v : lo) v -= half;
      for (auto& v : hi) v += half;
      gbv_audit_result audit{};
      check(gbv_audit_run(bundle.model.get(), fit.get(), lo.data(), hi.data(), &audit), "audit");
      result["audit"] = {{"fit_converged", audit.fit_converged != 0},
                         {"min_eigenvalue_H0", audit.min_eigenvalue_H0},
                         {"convexity_min_eig_over_probes", audit.convexity_min_eig_over_probes},
                         {"third_bound_estimate", audit.third_bound_estimate},
                         {"third_from_analytic", audit.third_from_analytic != 0},
                         {"grad_residual", audit.grad_residual},
                         {"overall_pass", audit.overall_pass != 0}};
    }

    if (cfg.get_bool("diagnostics.sandwich", false)) {
      SandwichH sw;
      check(gbv_sandwich_run(bundle.model.get(), fit.get(), sw.out()), "sandwich");
      std::vector<double> a(bundle.dim * bundle.dim), jm(bundle.dim * bundle.dim),
          cov(bundle.dim * bundle.dim);
      check(gbv_sandwich_A(sw.get(), a.data()), "sandwich");
      check(gbv_sandwich_J(sw.get(), jm.data()), "sandwich");
      check(gbv_sandwich_cov(sw.get(), cov.data()), "sandwich");
      result["sandwich"] = {{"A", a}, {"J", jm}, {"cov", cov},
                            {"components", gbv_sandwich_components(sw.get())}};
    }

    if (cfg.get_bool("diagnostics.moment_gap", false)) {
      double mean_gap = 0.0, cov_gap = 0.0;
      check(gbv_moment_gap(draws.get(), theta.data(), bundle.n, hess.data(), &mean_gap, &cov_gap),
            "moment_gap");
      result["moment_gap"] = {{"mean_gap", mean_gap}, {"cov_gap", cov_gap}};
    }
  }

  if (cfg.get_bool("coverage.enabled", cfg.has("coverage.family"))) {
    result["coverage"] = run_coverage(cfg, seed, threads, std::nullopt, std::nullopt);
  }

  write_json(result, out_dir / "result.json");
  std::cout << "result written to " << (out_dir / "result.json").string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path) {
  // one row per experiment, stable column order
  const std::vector<std::string> columns = {"experiment",   "n",
                                            "model",        "tv",
                                            "concentration", "logz_laplace",
                                            "coverage_raw", "coverage_cal"};
  std::ofstream out(out_path);
  if (!out) throw StageError{3, "cannot write report CSV: " + out_path};
  for (size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";

  for (const std::string& input : inputs) {
    fs::path path = input;
    if (fs::is_directory(path)) path /= "result.json";
    const json j = read_json_artifact(path, "run");

    auto cell = [&](const std::string& text) { return text; };
    std::vector<std::string> row(columns.size(), "");
    row[0] = j.value("experiment", std::string{});
    if (j.contains("n")) row[1] = std::to_string(j["n"].get<long>());
    row[2] = j.value("model", std::string{});
    if (j.contains("tv")) row[3] = json(j["tv"]).dump();
    if (j.contains("concentration") && !j["concentration"].empty())
      row[4] = json(j["concentration"][0]["mass"]).dump();
    if (j.contains("logz_laplace")) row[5] = json(j["logz_laplace"]).dump();
    if (j.contains("coverage")) {
      if (j["coverage"].contains("raw"))
        row[6] = json(j["coverage"]["raw"]["coverage"]).dump();
      if (j["coverage"].contains("calibrated"))
        row[7] = json(j["coverage"]["calibrated"]["coverage"]).dump();
    }
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell(row[i]);
    out << "\n";
  }
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gbv: generalized-posterior experiments (fit, Laplace, sampling, diagnostics)"};
  app.require_subcommand(1);

  CommonArgs common;
  std::optional<long> cov_reps;
  std::optional<double> cov_rho;
  std::vector<std::string> report_inputs;
  std::string report_out = "report.csv";

  auto add_common = [&common](CLI::App* cmd, bool config_required = true) {
    auto* opt = cmd->add_option("--config", common.config_path, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--seed", common.seed, "override the config seed");
    cmd->add_option("--out", common.out, "override the output directory");
    cmd->add_option("--threads", common.threads, "parallelism (overrides GBV_THREADS)");
  };

  auto* run = app.add_subcommand("run", "execute the full pipeline for a config");
  add_common(run);
  auto* simulate = app.add_subcommand("simulate", "generate data files for a config");
  add_common(simulate);
  auto* fit = app.add_subcommand("fit", "minimize f_n and write fit.json");
  add_common(fit);
  auto* laplace = app.add_subcommand("laplace", "Laplace normalizer from fit.json");
  add_common(laplace);
  auto* sample = app.add_subcommand("sample", "posterior draws from fit.json");
  add_common(sample);
  auto* audit = app.add_subcommand("audit", "curvature/smoothness audit from fit.json");
  add_common(audit);
  auto* tv = app.add_subcommand("tv", "grid TV distance to the normal limit");
  add_common(tv);
  auto* coverage = app.add_subcommand("coverage", "frequentist coverage experiment");
  add_common(coverage);
  coverage->add_option("--reps", cov_reps, "override coverage.reps");
  coverage->add_option("--rho", cov_rho, "override coverage.rho");
  auto* report = app.add_subcommand("report", "aggregate result.json files into a CSV table");
  report->add_option("inputs", report_inputs, "result.json files or run directories")->required();
  report->add_option("--out", report_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(common);
    if (simulate->parsed()) return cmd_simulate(common);
    if (fit->parsed()) return cmd_fit(common);
    if (laplace->parsed()) return cmd_laplace(common);
    if (sample->parsed()) return cmd_sample(common);
    if (audit->parsed()) return cmd_audit(common);
    if (tv->parsed()) return cmd_tv(common);
    if (coverage->parsed()) return cmd_coverage(common, cov_reps, cov_rho);
    if (report->parsed()) return cmd_report(report_inputs, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
