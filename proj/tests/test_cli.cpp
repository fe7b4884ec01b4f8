// Subprocess-level checks of the gbv executable (path via GBV_CLI env).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("GBV_CLI");
  REQUIRE(p != nullptr);
  return p;
}

std::string config_dir() {
  const char* p = std::getenv("GBV_CONFIG_DIR");
  REQUIRE(p != nullptr);
  return p;
}

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string out_file = "cli_test_output.txt";
  const std::string cmd = cli_path() + " " + args + " > " + out_file + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  fs::remove(out_file);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("unknown config keys are rejected with exit 2 naming the key") {
  write_file("cli_bad.cfg",
             "model.kind = expfam\n"
             "samplr.steps = 100\n");
  const RunResult r = run_cli("fit --config cli_bad.cfg --out cli_bad_out");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("samplr.steps") != std::string::npos);
  CHECK(r.output.find("error:") != std::string::npos);
  fs::remove("cli_bad.cfg");
  fs::remove_all("cli_bad_out");
}

TEST_CASE("flag errors use the error: prefix and a nonzero exit") {
  const RunResult r = run_cli("fit");
  CHECK(r.exit_code == 2);
  CHECK(r.output.rfind("error:", 0) == 0);
}

TEST_CASE("multiple chains stack deterministically") {
  write_file("cli_chains.cfg",
             "experiment = chains\n"
             "seed = 4\n"
             "model.kind = expfam\n"
             "model.family = gaussian\n"
             "data.source = matched\n"
             "data.s_n = 0.0\n"
             "data.n = 50\n"
             "prior.kind = uniform\n"
             "prior.lower = -5\n"
             "prior.upper = 5\n"
             "sampler.steps = 2000\n"
             "sampler.burn_in = 400\n"
             "sampler.chains = 3\n"
             "diagnostics.audit = false\n");
  REQUIRE(run_cli("run --config cli_chains.cfg --out cli_chains_a").exit_code == 0);
  REQUIRE(run_cli("run --config cli_chains.cfg --out cli_chains_b").exit_code == 0);
  const std::string a = slurp("cli_chains_a/draws.csv");
  CHECK(a == slurp("cli_chains_b/draws.csv"));
  // 3 chains x 1600 retained draws + header
  CHECK(std::count(a.begin(), a.end(), '\n') == 3 * 1600 + 1);
  fs::remove("cli_chains.cfg");
  fs::remove_all("cli_chains_a");
  fs::remove_all("cli_chains_b");
}

TEST_CASE("missing upstream artifacts exit with code 4 naming the file") {
  write_file("cli_nofit.cfg",
             "model.kind = expfam\n"
             "model.family = bernoulli-logit\n"
             "data.source = matched\n"
             "data.s_n = 0.3\n"
             "data.n = 100\n"
             "prior.kind = logit-uniform\n");
  const RunResult r = run_cli("laplace --config cli_nofit.cfg --out cli_nofit_out");
  CHECK(r.exit_code == 4);
  CHECK(r.output.find("fit.json") != std::string::npos);
  fs::remove("cli_nofit.cfg");
  fs::remove_all("cli_nofit_out");
}

TEST_CASE("bundled Bernoulli experiment: tv strictly decreasing, deterministic draws") {
  const std::string cfg = config_dir() + "/bernoulli_bvm.cfg";
  REQUIRE(fs::exists(cfg));

  const RunResult r = run_cli("run --config " + cfg + " --out cli_bvm_out");
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists("cli_bvm_out/result.json"));
  REQUIRE(fs::exists("cli_bvm_out/draws.csv"));
  REQUIRE(fs::exists("cli_bvm_out/grid.csv"));

  const std::string result = slurp("cli_bvm_out/result.json");
  CHECK(result.find("tv_curve") != std::string::npos);

  // extract the tv values from the tv_curve array, in order
  std::vector<double> tvs;
  const size_t curve_start = result.find("\"tv_curve\"");
  REQUIRE(curve_start != std::string::npos);
  const size_t curve_end = result.find("]", curve_start);
  size_t pos = curve_start;
  while ((pos = result.find("\"tv\":", pos)) != std::string::npos && pos < curve_end) {
    pos += 5;
    tvs.push_back(std::stod(result.substr(pos)));
  }
  REQUIRE(tvs.size() >= 3);
  CHECK(tvs[0] > tvs[1]);
  CHECK(tvs[1] > tvs[2]);

  const std::string draws_first = slurp("cli_bvm_out/draws.csv");
  const RunResult r2 = run_cli("run --config " + cfg + " --out cli_bvm_out2 --threads 3");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp("cli_bvm_out2/draws.csv") == draws_first);  // byte-identical rerun
  CHECK(slurp("cli_bvm_out2/result.json") == slurp("cli_bvm_out/result.json"));

  fs::remove_all("cli_bvm_out");
  fs::remove_all("cli_bvm_out2");
}

TEST_CASE("stage pipeline: simulate, fit on the saved CSV, laplace, sample, audit") {
  write_file("cli_glm.cfg",
             "experiment = glm-stagewise\n"
             "seed = 5\n"
             "model.kind = glm\n"
             "model.family = bernoulli-logit\n"
             "data.source = generate\n"
             "data.n = 400\n"
             "data.theta_true = 0.5,-0.25\n"
             "data.covariates = gaussian(1.0)\n"
             "prior.kind = gaussian\n"
             "prior.mean = 0\n"
             "prior.sd = 10\n"
             "sampler.steps = 4000\n"
             "sampler.burn_in = 800\n");

  REQUIRE(run_cli("simulate --config cli_glm.cfg --out cli_glm_out").exit_code == 0);
  REQUIRE(fs::exists("cli_glm_out/data.csv"));

  // re-point the config at the saved file and fit from it
  write_file("cli_glm_file.cfg",
             "experiment = glm-stagewise\n"
             "seed = 5\n"
             "model.kind = glm\n"
             "model.family = bernoulli-logit\n"
             "data.source = file\n"
             "data.path = cli_glm_out/data.csv\n"
             "prior.kind = gaussian\n"
             "prior.mean = 0\n"
             "prior.sd = 10\n"
             "sampler.steps = 4000\n"
             "sampler.burn_in = 800\n");

  const RunResult fit = run_cli("fit --config cli_glm_file.cfg --out cli_glm_out");
  REQUIRE(fit.exit_code == 0);
  CHECK(fit.output.find("theta_n =") != std::string::npos);
  CHECK(fit.output.find("grad_norm") != std::string::npos);
  REQUIRE(fs::exists("cli_glm_out/fit.json"));

  CHECK(run_cli("laplace --config cli_glm_file.cfg --out cli_glm_out").exit_code == 0);
  CHECK(run_cli("sample --config cli_glm_file.cfg --out cli_glm_out").exit_code == 0);
  CHECK(fs::exists("cli_glm_out/draws.csv"));
  CHECK(run_cli("audit --config cli_glm_file.cfg --out cli_glm_out").exit_code == 0);
  CHECK(fs::exists("cli_glm_out/audit.json"));

  fs::remove("cli_glm.cfg");
  fs::remove("cli_glm_file.cfg");
  fs::remove_all("cli_glm_out");
}

TEST_CASE("report aggregates runs into a stable CSV") {
  write_file("cli_rep.cfg",
             "experiment = report-check\n"
             "seed = 9\n"
             "model.kind = expfam\n"
             "model.family = bernoulli-logit\n"
             "data.source = matched\n"
             "data.s_n = 0.4\n"
             "data.n = 60\n"
             "prior.kind = logit-uniform\n"
             "sampler.steps = 3000\n"
             "sampler.burn_in = 600\n"
             "grid.lower = -4\n"
             "grid.upper = 3\n"
             "grid.resolution = 256\n"
             "diagnostics.tv = true\n");

  for (const std::string out : {"cli_rep_a", "cli_rep_b", "cli_rep_c"})
    REQUIRE(run_cli("run --config cli_rep.cfg --out " + out).exit_code == 0);

  const RunResult rep = run_cli("report cli_rep_a cli_rep_b cli_rep_c --out cli_report.csv");
  REQUIRE(rep.exit_code == 0);
  const std::string csv = slurp("cli_report.csv");
  CHECK(csv.rfind("experiment,n,model,tv,concentration,logz_laplace,coverage_raw,coverage_cal",
                  0) == 0);
  // header + three rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  fs::remove("cli_rep.cfg");
  fs::remove("cli_report.csv");
  for (const std::string out : {"cli_rep_a", "cli_rep_b", "cli_rep_c"}) fs::remove_all(out);
}

TEST_CASE("coverage subcommand honors --reps and --rho") {
  write_file("cli_cov.cfg",
             "experiment = cov-check\n"
             "seed = 3\n"
             "coverage.family = normal-mean\n"
             "coverage.theta0 = 0.0\n"
             "coverage.n = 40\n"
             "coverage.reps = 5000\n"
             "coverage.calibrate = none\n"
             "sampler.steps = 2000\n"
             "sampler.burn_in = 400\n");
  const RunResult r =
      run_cli("coverage --config cli_cov.cfg --out cli_cov_out --reps 120 --rho 0.8");
  REQUIRE(r.exit_code == 0);
  const std::string cov = slurp("cli_cov_out/coverage.json");
  CHECK(cov.find("\"rho\": 0.8") != std::string::npos);
  CHECK(cov.find("\"raw\"") != std::string::npos);
  fs::remove("cli_cov.cfg");
  fs::remove_all("cli_cov_out");
}
