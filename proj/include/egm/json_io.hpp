#pragma once

#include <string>
#include <vector>

#include "egm/egm.hpp"
#include "egm/evar.hpp"
#include "egm/gm_model.hpp"

namespace egm {

/// Model JSON: {"n", "k", "weights", "means" (k x n), "covariances"
/// (k x n x n, row-major)}. Readers validate the result.
GmModel read_model_json(const std::string& path);
void write_model_json(const std::string& path, const GmModel& model);
GmModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const GmModel& model);

/// Returns CSV: header row of asset names, one row of fractional returns
/// per period. Parse errors carry 1-based line numbers.
struct ReturnsTable {
  std::vector<std::string> asset_names;
  Matrix returns;
};
ReturnsTable read_returns_csv(const std::string& path);
void write_returns_csv(const std::string& path, const ReturnsTable& table);

std::string solve_report_to_json(const SolveReport& report, double gamma,
                                 double limit_high, double limit_low);
std::string evar_report_to_json(const EvarReport& report);

}  // namespace egm
