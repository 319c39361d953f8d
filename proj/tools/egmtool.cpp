#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "egm/cone_program.hpp"
#include "egm/egm.hpp"
#include "egm/evar.hpp"
#include "egm/gm_model.hpp"
#include "egm/json_io.hpp"

namespace {

using egm::FeasibleSet;
using egm::GmModel;
using egm::Matrix;
using egm::Vector;

/// Command-line value that failed to parse; mapped to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  if (text == "inf" || text == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " value '" + text + "'");
  }
}

/// "lo:hi" broadcast to every asset, or a comma list of per-asset pairs.
FeasibleSet parse_bounds(const std::string& spec, int n) {
  if (spec.empty()) return FeasibleSet::unbounded();
  const std::vector<std::string> pairs = split(spec, ',');
  if (pairs.size() != 1 && static_cast<int>(pairs.size()) != n) {
    throw UsageError("--bounds needs one pair or one pair per asset");
  }
  Vector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const std::string& pair = pairs[pairs.size() == 1 ? 0 : i];
    const std::vector<std::string> sides = split(pair, ':');
    if (sides.size() != 2) {
      throw UsageError("--bounds pair '" + pair + "' is not lower:upper");
    }
    lo[i] = parse_double(sides[0], "--bounds");
    hi[i] = parse_double(sides[1], "--bounds");
  }
  return FeasibleSet::box(lo, hi);
}

Vector parse_weights(const std::string& spec, int n) {
  const std::vector<std::string> parts = split(spec, ',');
  if (static_cast<int>(parts.size()) != n) {
    throw UsageError("--weights needs exactly " + std::to_string(n) +
                     " comma-separated values");
  }
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = parse_double(parts[i], "--weights");
  return w;
}

struct GridSpec {
  double start = 0;
  double stop = 0;
  int steps = 0;
};

GridSpec parse_grid(const std::string& spec) {
  const std::vector<std::string> parts = split(spec, ':');
  if (parts.size() != 3) {
    throw UsageError("--grid must be start:stop:steps");
  }
  GridSpec grid;
  grid.start = parse_double(parts[0], "--grid");
  grid.stop = parse_double(parts[1], "--grid");
  try {
    grid.steps = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("cannot parse --grid step count '" + parts[2] + "'");
  }
  if (grid.steps < 2 || !(grid.stop > grid.start)) {
    throw UsageError("--grid needs stop > start and steps >= 2");
  }
  return grid;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

int run_fit(const std::string& returns_path, int k, std::uint64_t seed,
            const std::string& out_path) {
  const egm::ReturnsTable table = egm::read_returns_csv(returns_path);
  const egm::FitResult fit = egm::fit_em(table.returns, k, seed, {});
  for (const std::string& warning : fit.warnings) {
    std::cerr << "warning: " << warning << '\n';
  }
  std::cerr << "log_likelihood " << fit.log_likelihood << '\n';
  for (int i = 0; i < fit.model.k; ++i) {
    std::cerr << "component " << i << ": weight " << fit.model.weights[i]
              << ", mean [" << fit.model.means[i].transpose() << "]\n";
  }
  emit(out_path, egm::model_to_json_text(fit.model));
  return 0;
}

int run_solve_egm(const std::string& model_path, double gamma,
                  const std::string& bounds, const std::string& out_path) {
  const GmModel model = egm::read_model_json(model_path);
  egm::EgmProblem problem{model, gamma, parse_bounds(bounds, model.n)};
  const egm::SolveReport report = egm::solve_egm(problem);
  const double limit_high =
      egm::egm_limit_objective(problem, report.weights, egm::LimitMode::high);
  const double limit_low =
      egm::egm_limit_objective(problem, report.weights, egm::LimitMode::low);
  emit(out_path,
       egm::solve_report_to_json(report, gamma, limit_high, limit_low));
  if (!report.converged) {
    std::cerr << "solver did not converge\n";
    return 3;
  }
  return 0;
}

int run_solve_markowitz(const std::string& model_path, double gamma,
                        const std::string& bounds,
                        const std::string& out_path) {
  const GmModel model = egm::read_model_json(model_path);
  const auto [mu, Sigma] = egm::mixture_moments(model);
  const egm::SolveReport report = egm::markowitz_solve(
      mu, Sigma, gamma, parse_bounds(bounds, model.n));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  emit(out_path, egm::solve_report_to_json(report, gamma, nan, nan));
  if (!report.converged) {
    std::cerr << "solver did not converge\n";
    return 3;
  }
  return 0;
}

int run_solve_evar(const std::string& model_path, double alpha,
                   const std::string& bounds, const std::string& method,
                   const std::string& out_path) {
  const GmModel model = egm::read_model_json(model_path);
  egm::EvarProblem problem{model, alpha, parse_bounds(bounds, model.n)};
  egm::EvarReport report;
  if (method == "alternating") {
    report = egm::solve_evar_alternating(problem);
  } else if (method == "approx") {
    report = egm::solve_evar_approx(problem);
  } else {
    throw UsageError("--method must be alternating or approx");
  }
  emit(out_path, egm::evar_report_to_json(report));
  if (!report.converged) {
    std::cerr << "solver did not converge\n";
    return 3;
  }
  return 0;
}

int run_cdf(const std::string& model_path, const std::string& weights,
            const std::string& grid_spec, const std::string& out_path) {
  const GmModel model = egm::read_model_json(model_path);
  const Vector w = parse_weights(weights, model.n);
  const GridSpec grid = parse_grid(grid_spec);
  std::ostringstream out;
  out.precision(17);
  out << "a,cdf\n";
  for (int j = 0; j < grid.steps; ++j) {
    const double a =
        grid.start + (grid.stop - grid.start) * j / (grid.steps - 1);
    out << a << ',' << egm::cdf(model, w, a) << '\n';
  }
  emit(out_path, out.str());
  return 0;
}

int run_evar_export(const std::string& model_path, double alpha,
                    const std::string& bounds, const std::string& out_path) {
  const GmModel model = egm::read_model_json(model_path);
  const egm::ConeProgram program =
      egm::export_cone_program(model, alpha, parse_bounds(bounds, model.n));
  emit(out_path, egm::cone_program_to_text(program));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Portfolio construction under Gaussian mixture returns"};
  app.require_subcommand(1);

  std::string model_path, returns_path, bounds, out_path, weights, grid_spec;
  std::string method = "alternating";
  double gamma = 1.0;
  double alpha = 0.05;
  int k = 1;
  std::uint64_t seed = 0;

  CLI::App* fit = app.add_subcommand("fit", "Fit a Gaussian mixture model");
  fit->add_option("--returns", returns_path, "Returns CSV")->required();
  fit->add_option("--k", k, "Number of mixture components");
  fit->add_option("--seed", seed, "RNG seed");
  fit->add_option("--out", out_path, "Output model JSON (default stdout)");

  CLI::App* segm = app.add_subcommand("solve-egm",
                                      "Maximize expected exponential utility");
  segm->add_option("--model", model_path, "Model JSON")->required();
  segm->add_option("--gamma", gamma, "Risk aversion (> 0)")->required();
  segm->add_option("--bounds", bounds, "Weight bounds lower:upper[,...]");
  segm->add_option("--out", out_path, "Output report JSON (default stdout)");

  CLI::App* smark = app.add_subcommand(
      "solve-markowitz", "Mean-variance baseline at the mixture moments");
  smark->add_option("--model", model_path, "Model JSON")->required();
  smark->add_option("--gamma", gamma, "Risk aversion (> 0)")->required();
  smark->add_option("--bounds", bounds, "Weight bounds lower:upper[,...]");
  smark->add_option("--out", out_path, "Output report JSON (default stdout)");

  CLI::App* sevar = app.add_subcommand("solve-evar",
                                       "Minimize entropic value at risk");
  sevar->add_option("--model", model_path, "Model JSON")->required();
  sevar->add_option("--alpha", alpha, "Risk level in (0, 1)")->required();
  sevar->add_option("--bounds", bounds, "Weight bounds lower:upper[,...]");
  sevar->add_option("--method", method, "alternating | approx");
  sevar->add_option("--out", out_path, "Output report JSON (default stdout)");

  CLI::App* cdf = app.add_subcommand("cdf", "Portfolio return CDF curve");
  cdf->add_option("--model", model_path, "Model JSON")->required();
  cdf->add_option("--weights", weights, "Comma-separated weights")->required();
  cdf->add_option("--grid", grid_spec, "start:stop:steps")->required();
  cdf->add_option("--out", out_path, "Output CSV (default stdout)");

  CLI::App* sexport = app.add_subcommand(
      "evar-export", "Write the EVaR cone program fixture");
  sexport->add_option("--model", model_path, "Model JSON")->required();
  sexport->add_option("--alpha", alpha, "Risk level in (0, 1)")->required();
  sexport->add_option("--bounds", bounds, "Weight bounds lower:upper[,...]");
  sexport->add_option("--out", out_path, "Output fixture (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 1;
  }

  try {
    if (fit->parsed()) return run_fit(returns_path, k, seed, out_path);
    if (segm->parsed()) {
      return run_solve_egm(model_path, gamma, bounds, out_path);
    }
    if (smark->parsed()) {
      return run_solve_markowitz(model_path, gamma, bounds, out_path);
    }
    if (sevar->parsed()) {
      return run_solve_evar(model_path, alpha, bounds, method, out_path);
    }
    if (cdf->parsed()) {
      return run_cdf(model_path, weights, grid_spec, out_path);
    }
    if (sexport->parsed()) {
      return run_evar_export(model_path, alpha, bounds, out_path);
    }
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 1;
}
