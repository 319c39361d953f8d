#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "egm/cone_program.hpp"
#include "egm/egm.hpp"
#include "egm/evar.hpp"
#include "egm/json_io.hpp"
#include "egm/oracle.hpp"
#include "fixtures.hpp"

using namespace egm;
using testfx::two_point_model;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir() {
  static std::atomic<int> counter{0};
  const fs::path dir =
      fs::temp_directory_path() /
      ("egmtool_test_" + std::to_string(::getpid()) + "_" +
       std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spill(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << content;
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CommandResult run_tool(const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string command = std::string("\"") + EGMTOOL_PATH + "\" " + args +
                              " > " + out_file.string() + " 2> " +
                              err_file.string();
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  return result;
}

nlohmann::json parse_json(const std::string& text) {
  return nlohmann::json::parse(text);
}

double stderr_log_likelihood(const std::string& err) {
  std::istringstream in(err);
  std::string line;
  while (std::getline(in, line)) {
    const std::string prefix = "log_likelihood ";
    if (line.rfind(prefix, 0) == 0) {
      return std::stod(line.substr(prefix.size()));
    }
  }
  FAIL("no log_likelihood line in stderr: " << err);
  return 0.0;
}

GmModel single_gaussian_model() {
  GmModel model;
  model.n = 2;
  model.k = 1;
  model.weights = Vector::Ones(1);
  Vector mu(2);
  mu << 0.08, 0.02;
  Matrix S(2, 2);
  S << 0.04, 0.01, 0.01, 0.02;
  model.means = {mu};
  model.covariances = {S};
  return validate(model);
}

GmModel riskless_model() {
  GmModel model;
  model.n = 2;
  model.k = 1;
  model.weights = Vector::Ones(1);
  Vector mu(2);
  mu << 0.05, 0.02;
  model.means = {mu};
  model.covariances = {Matrix::Zero(2, 2)};
  return validate(model);
}

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("model JSON round-trips exactly") {
  GmModel model;
  model.n = 2;
  model.k = 2;
  model.weights = Vector(2);
  model.weights << 0.3, 0.7;
  Vector mu1(2), mu2(2);
  mu1 << 0.05, -0.02;
  mu2 << 1.0 / 3.0, 0.03;
  Matrix S1(2, 2), S2(2, 2);
  S1 << 0.04, 0.01, 0.01, 0.09;
  S2 << 0.0225, -0.005, -0.005, 0.01;
  model.means = {mu1, mu2};
  model.covariances = {S1, S2};
  validate(model);

  const GmModel parsed = model_from_json_text(model_to_json_text(model));
  CHECK(parsed.n == model.n);
  CHECK(parsed.k == model.k);
  CHECK((parsed.weights - model.weights).norm() == 0.0);
  for (int i = 0; i < model.k; ++i) {
    CHECK((parsed.means[i] - model.means[i]).norm() == 0.0);
    CHECK((parsed.covariances[i] - model.covariances[i]).norm() == 0.0);
  }
}

TEST_CASE("model JSON reports parse and structure errors") {
  CHECK_THROWS_WITH_AS(model_from_json_text("{ not json"),
                       doctest::Contains("parse error"), std::runtime_error);
  CHECK_THROWS_WITH_AS(model_from_json_text("{\"n\": 2}"),
                       doctest::Contains("structure error"),
                       std::runtime_error);
  // Structurally valid JSON with an invalid model (weights sum to 0.5).
  const std::string text =
      "{\"n\":1,\"k\":1,\"weights\":[0.5],\"means\":[[0.0]],"
      "\"covariances\":[[[1.0]]]}";
  CHECK_THROWS_AS(model_from_json_text(text), std::invalid_argument);
}

TEST_CASE("returns CSV round-trips and reports line numbers") {
  const fs::path dir = make_temp_dir();
  ReturnsTable table;
  table.asset_names = {"a", "b"};
  table.returns = Matrix(3, 2);
  table.returns << 0.01, -0.02, 1.0 / 3.0, 0.004, -0.015, 0.025;
  const fs::path csv = dir / "returns.csv";
  write_returns_csv(csv.string(), table);

  const ReturnsTable parsed = read_returns_csv(csv.string());
  CHECK(parsed.asset_names == table.asset_names);
  CHECK((parsed.returns - table.returns).norm() == 0.0);

  const fs::path bad = dir / "bad.csv";
  spill(bad, "a,b\n0.01,0.02\n0.03,0.04\noops,0.05\n");
  CHECK_THROWS_WITH_AS(read_returns_csv(bad.string()),
                       doctest::Contains(":4: cannot parse value 'oops'"),
                       std::runtime_error);

  const fs::path ragged = dir / "ragged.csv";
  spill(ragged, "a,b\n0.01,0.02,0.03\n");
  CHECK_THROWS_WITH_AS(read_returns_csv(ragged.string()),
                       doctest::Contains(":2: expected 2 fields, found 3"),
                       std::runtime_error);

  const fs::path empty = dir / "empty.csv";
  spill(empty, "a,b\n");
  CHECK_THROWS_WITH_AS(read_returns_csv(empty.string()),
                       doctest::Contains("no data rows"), std::runtime_error);
}

TEST_CASE("fit recovers the sample mean and reports the log-likelihood") {
  const fs::path dir = make_temp_dir();
  std::ostringstream csv;
  csv << "x,y\n";
  double sum0 = 0.0, sum1 = 0.0;
  const int rows = 24;
  for (int t = 0; t < rows; ++t) {
    const double r0 = 0.01 * (t % 5) - 0.02;
    const double r1 = 0.004 * (t % 7) - 0.01;
    sum0 += r0;
    sum1 += r1;
    csv << r0 << ',' << r1 << '\n';
  }
  spill(dir / "returns.csv", csv.str());

  const CommandResult result = run_tool(
      "fit --returns=" + (dir / "returns.csv").string() + " --k=1 --out=" +
          (dir / "model.json").string(),
      dir);
  REQUIRE(result.exit_code == 0);
  CHECK(result.err.find("log_likelihood ") != std::string::npos);

  const GmModel model = read_model_json((dir / "model.json").string());
  CHECK(model.k == 1);
  CHECK(model.n == 2);
  CHECK(model.means[0][0] == doctest::Approx(sum0 / rows).epsilon(1e-9));
  CHECK(model.means[0][1] == doctest::Approx(sum1 / rows).epsilon(1e-9));
}

TEST_CASE("fit with more components does not lose likelihood") {
  const fs::path dir = make_temp_dir();
  std::ostringstream csv;
  csv << "x,y\n";
  for (int t = 0; t < 200; ++t) {
    const double base = (t % 2 == 0) ? 0.5 : -0.5;
    csv << base + 0.01 * std::sin(0.7 * t) << ','
        << -0.3 * base + 0.01 * std::cos(0.3 * t) << '\n';
  }
  spill(dir / "returns.csv", csv.str());
  const std::string input = " --returns=" + (dir / "returns.csv").string() +
                            " --seed=7 --out=" + (dir / "m.json").string();

  const CommandResult one = run_tool("fit --k=1" + input, dir);
  REQUIRE(one.exit_code == 0);
  const CommandResult three = run_tool("fit --k=3" + input, dir);
  REQUIRE(three.exit_code == 0);
  CHECK(stderr_log_likelihood(three.err) >=
        stderr_log_likelihood(one.err) - 1e-9);
}

TEST_CASE("fit rejects malformed data with the offending line") {
  const fs::path dir = make_temp_dir();
  spill(dir / "returns.csv", "a,b\n0.01,0.02\n0.03,0.04\nbogus,0.05\n");
  const CommandResult result = run_tool(
      "fit --returns=" + (dir / "returns.csv").string() + " --k=1", dir);
  CHECK(result.exit_code == 2);
  CHECK(result.err.find(":4:") != std::string::npos);
  CHECK(result.err.find("cannot parse value") != std::string::npos);
}

TEST_CASE("solve-egm reproduces the two-point golden weights") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), two_point_model(0.05));
  const CommandResult result = run_tool(
      "solve-egm --model=" + (dir / "model.json").string() +
          " --gamma=1 --out=" + (dir / "report.json").string(),
      dir);
  REQUIRE(result.exit_code == 0);

  const nlohmann::json report = parse_json(slurp(dir / "report.json"));
  const double w1 = report["weights"][0].get<double>();
  CHECK(std::abs(w1 - 1.47) < 0.005);
  CHECK(w1 == doctest::Approx(std::log(19.0) / 2.0).epsilon(1e-6));
  CHECK(report["diagnostics"]["converged"].get<bool>());
  CHECK(report["diagnostics"]["gamma"].get<double>() == 1.0);
  CHECK(std::isfinite(report["diagnostics"]["limit_objective_high"]
                          .get<double>()));
  CHECK(std::isfinite(report["diagnostics"]["limit_objective_low"]
                          .get<double>()));
}

TEST_CASE("solve-egm honors long-only bounds") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), two_point_model(0.8));
  const CommandResult result = run_tool(
      "solve-egm --model=" + (dir / "model.json").string() +
          " --gamma=1 --bounds=0:1 --out=" + (dir / "report.json").string(),
      dir);
  REQUIRE(result.exit_code == 0);
  const nlohmann::json report = parse_json(slurp(dir / "report.json"));
  CHECK(std::abs(report["weights"][0].get<double>()) < 1e-6);
  CHECK(report["weights"][1].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solve-egm limit diagnostics bracket the scaled objective") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), two_point_model(0.05));

  const CommandResult high = run_tool(
      "solve-egm --model=" + (dir / "model.json").string() +
          " --gamma=100 --out=" + (dir / "high.json").string(),
      dir);
  REQUIRE(high.exit_code == 0);
  const nlohmann::json hrep = parse_json(slurp(dir / "high.json"));
  const double scaled = hrep["objective"].get<double>() / 100.0;
  const double limit_high =
      hrep["diagnostics"]["limit_objective_high"].get<double>();
  CHECK(std::abs(scaled - limit_high) <=
        (std::log(2.0) + std::log(1.0 / 0.05)) / 100.0 + 1e-9);

  const CommandResult low = run_tool(
      "solve-egm --model=" + (dir / "model.json").string() +
          " --gamma=0.001 --bounds=-2:3 --out=" + (dir / "low.json").string(),
      dir);
  REQUIRE(low.exit_code == 0);
  const nlohmann::json lrep = parse_json(slurp(dir / "low.json"));
  const double scaled_low = lrep["objective"].get<double>() / 0.001;
  const double limit_low =
      lrep["diagnostics"]["limit_objective_low"].get<double>();
  CHECK(std::abs(scaled_low - limit_low) < 1e-4);
}

TEST_CASE("solve-markowitz reproduces the two-point golden weights") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), two_point_model(0.05));
  const CommandResult result = run_tool(
      "solve-markowitz --model=" + (dir / "model.json").string() +
          " --gamma=1 --out=" + (dir / "report.json").string(),
      dir);
  REQUIRE(result.exit_code == 0);
  const nlohmann::json report = parse_json(slurp(dir / "report.json"));
  CHECK(report["weights"][0].get<double>() ==
        doctest::Approx(0.9 / 0.19).epsilon(1e-6));
}

TEST_CASE("solve-markowitz exits with the non-convergence code when unbounded") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), riskless_model());
  const CommandResult result = run_tool(
      "solve-markowitz --model=" + (dir / "model.json").string() +
          " --gamma=1 --out=" + (dir / "report.json").string(),
      dir);
  CHECK(result.exit_code == 3);
  CHECK(result.err.find("did not converge") != std::string::npos);
  const nlohmann::json report = parse_json(slurp(dir / "report.json"));
  CHECK(!report["diagnostics"]["converged"].get<bool>());
}

TEST_CASE("solve-evar weights sit at the implied risk aversion") {
  const fs::path dir = make_temp_dir();
  const GmModel model = single_gaussian_model();
  write_model_json((dir / "model.json").string(), model);
  const CommandResult result = run_tool(
      "solve-evar --model=" + (dir / "model.json").string() +
          " --alpha=0.1 --out=" + (dir / "report.json").string(),
      dir);
  REQUIRE(result.exit_code == 0);
  const nlohmann::json report = parse_json(slurp(dir / "report.json"));
  CHECK(report["method"].get<std::string>() == "alternating");
  REQUIRE(report["diagnostics"]["converged"].get<bool>());

  const double lambda = report["lambda"].get<double>();
  const SolveReport markowitz = markowitz_solve(
      model.means[0], model.covariances[0], lambda, FeasibleSet::unbounded());
  REQUIRE(markowitz.converged);
  Vector w(2);
  w << report["weights"][0].get<double>(), report["weights"][1].get<double>();
  CHECK((w - markowitz.weights).norm() < 1e-5);
}

TEST_CASE("solve-evar approx stays within the mixture gap of alternating") {
  const fs::path dir = make_temp_dir();
  GmModel model;
  model.n = 2;
  model.k = 2;
  model.weights = Vector(2);
  model.weights << 0.3, 0.7;
  Vector mu1(2), mu2(2);
  mu1 << 0.05, -0.02;
  mu2 << 0.01, 0.03;
  Matrix S1(2, 2), S2(2, 2);
  S1 << 0.04, 0.01, 0.01, 0.09;
  S2 << 0.0225, -0.005, -0.005, 0.01;
  model.means = {mu1, mu2};
  model.covariances = {S1, S2};
  write_model_json((dir / "model.json").string(), validate(model));

  const std::string base = "solve-evar --model=" +
                           (dir / "model.json").string() +
                           " --alpha=0.1 --bounds=-2:2";
  const CommandResult alt = run_tool(
      base + " --method=alternating --out=" + (dir / "alt.json").string(),
      dir);
  REQUIRE(alt.exit_code == 0);
  const CommandResult approx = run_tool(
      base + " --method=approx --out=" + (dir / "approx.json").string(), dir);
  REQUIRE(approx.exit_code == 0);

  const nlohmann::json alt_report = parse_json(slurp(dir / "alt.json"));
  const nlohmann::json approx_report = parse_json(slurp(dir / "approx.json"));
  const double gap = approx_report["evar_value"].get<double>() -
                     alt_report["evar_value"].get<double>();
  CHECK(gap >= -1e-9);
  CHECK(gap <=
        approx_report["delta"].get<double>() * std::log(2.0) + 1e-3);
}

TEST_CASE("solve-evar agrees with the grid oracle on the boxed two-point model") {
  const fs::path dir = make_temp_dir();
  const GmModel model = two_point_model(0.05);
  write_model_json((dir / "model.json").string(), model);

  const CommandResult mid = run_tool(
      "solve-evar --model=" + (dir / "model.json").string() +
          " --alpha=0.5 --bounds=-2:2 --out=" + (dir / "mid.json").string(),
      dir);
  REQUIRE(mid.exit_code == 0);
  const nlohmann::json mid_report = parse_json(slurp(dir / "mid.json"));
  EvarProblem problem{model, 0.5,
                      FeasibleSet::box(Vector::Constant(2, -2.0),
                                       Vector::Constant(2, 2.0))};
  const GridEvarResult grid = grid_search_evar(problem, 1e-3);
  const double value = mid_report["evar_value"].get<double>();
  CHECK(value <= grid.objective + 1e-9);
  CHECK(std::abs(value - grid.objective) < 1e-3);
  CHECK(mid_report["weights"][0].get<double>() ==
        doctest::Approx(2.0).epsilon(1e-6));

  const CommandResult tight = run_tool(
      "solve-evar --model=" + (dir / "model.json").string() +
          " --alpha=0.05 --bounds=-2:2 --out=" + (dir / "tight.json").string(),
      dir);
  REQUIRE(tight.exit_code == 0);
  const nlohmann::json tight_report = parse_json(slurp(dir / "tight.json"));
  CHECK(std::abs(tight_report["evar_value"].get<double>()) <= 1e-3);
}

TEST_CASE("cdf emits the exact normal curve for one component") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), single_gaussian_model());
  const CommandResult result = run_tool(
      "cdf --model=" + (dir / "model.json").string() +
          " --weights=0.5,0.5 --grid=0.05:1:5",
      dir);
  REQUIRE(result.exit_code == 0);

  std::istringstream out(result.out);
  std::string line;
  REQUIRE(std::getline(out, line));
  CHECK(line == "a,cdf");
  double prev_cdf = -1.0;
  int rows = 0;
  double first_cdf = -1.0;
  while (std::getline(out, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    const double value = std::stod(line.substr(comma + 1));
    if (rows == 0) first_cdf = value;
    CHECK(value >= prev_cdf);
    prev_cdf = value;
    ++rows;
  }
  CHECK(rows == 5);
  // The grid starts exactly at the portfolio mean of 0.05.
  CHECK(first_cdf == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("evar-export writes a deterministic parseable fixture") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "finite.json").string(), two_point_model(0.05));
  const std::string finite_cmd =
      "evar-export --model=" + (dir / "finite.json").string() + " --alpha=0.5";
  const CommandResult first = run_tool(finite_cmd, dir);
  REQUIRE(first.exit_code == 0);
  CHECK(first.out.rfind("CONEPROGRAM version 1", 0) == 0);
  const CommandResult second = run_tool(finite_cmd, dir);
  CHECK(second.out == first.out);

  const ConeProgram finite_prog = cone_program_from_text(first.out);
  REQUIRE(finite_prog.cones.size() == 3);
  CHECK(finite_prog.cones[0].kind == ConeKind::nonpositive);
  CHECK(finite_prog.cones[1].kind == ConeKind::exponential);
  CHECK(finite_prog.cones[2].kind == ConeKind::exponential);

  write_model_json((dir / "full.json").string(), single_gaussian_model());
  const CommandResult full = run_tool(
      "evar-export --model=" + (dir / "full.json").string() + " --alpha=0.1",
      dir);
  REQUIRE(full.exit_code == 0);
  const ConeProgram full_prog = cone_program_from_text(full.out);
  REQUIRE(full_prog.cones.size() == 3);
  CHECK(full_prog.cones[0].dim == 1);
  CHECK(full_prog.cones[1].kind == ConeKind::exponential);
  CHECK(full_prog.cones[1].dim == 3);
  CHECK(full_prog.cones[2].kind == ConeKind::second_order);
  CHECK(full_prog.cones[2].dim == 4);
}

TEST_CASE("usage and data errors map to distinct exit codes") {
  const fs::path dir = make_temp_dir();
  write_model_json((dir / "model.json").string(), two_point_model(0.05));

  CHECK(run_tool("", dir).exit_code == 1);
  CHECK(run_tool("no-such-command", dir).exit_code == 1);
  CHECK(run_tool("solve-egm --model=" + (dir / "model.json").string(),
                 dir).exit_code == 1);

  const CommandResult bad_method = run_tool(
      "solve-evar --model=" + (dir / "model.json").string() +
          " --alpha=0.1 --method=simplex",
      dir);
  CHECK(bad_method.exit_code == 1);
  CHECK(bad_method.err.find("--method") != std::string::npos);

  const CommandResult bad_grid = run_tool(
      "cdf --model=" + (dir / "model.json").string() +
          " --weights=0.5,0.5 --grid=1:0:5",
      dir);
  CHECK(bad_grid.exit_code == 1);

  const CommandResult bad_bounds = run_tool(
      "solve-egm --model=" + (dir / "model.json").string() +
          " --gamma=1 --bounds=0.6:0.7,0.6",
      dir);
  CHECK(bad_bounds.exit_code == 1);

  const CommandResult missing = run_tool(
      "solve-egm --model=" + (dir / "missing.json").string() + " --gamma=1",
      dir);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("cannot open file") != std::string::npos);

  const CommandResult infeasible = run_tool(
      "solve-egm --model=" + (dir / "model.json").string() +
          " --gamma=1 --bounds=0.6:0.7",
      dir);
  CHECK(infeasible.exit_code == 2);
  CHECK(infeasible.err.find("infeasible") != std::string::npos);
}

}  // TEST_SUITE
