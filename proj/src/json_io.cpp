#include "egm/json_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace egm {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << content;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json diagnostics_json(int iterations, bool converged, double kkt_residual) {
  return json{{"iterations", iterations},
              {"converged", converged},
              {"kkt_residual", kkt_residual}};
}

}  // namespace

GmModel model_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::runtime_error(std::string("model JSON parse error: ") +
                             err.what());
  }
  GmModel model;
  try {
    model.n = doc.at("n").get<int>();
    model.k = doc.at("k").get<int>();
    const auto& weights = doc.at("weights");
    const auto& means = doc.at("means");
    const auto& covariances = doc.at("covariances");
    model.weights.resize(model.k);
    for (int i = 0; i < model.k; ++i) {
      model.weights[i] = weights.at(i).get<double>();
    }
    for (int i = 0; i < model.k; ++i) {
      Vector mu(model.n);
      for (int a = 0; a < model.n; ++a) {
        mu[a] = means.at(i).at(a).get<double>();
      }
      model.means.push_back(mu);
      Matrix Sigma(model.n, model.n);
      for (int a = 0; a < model.n; ++a) {
        for (int b = 0; b < model.n; ++b) {
          Sigma(a, b) = covariances.at(i).at(a).at(b).get<double>();
        }
      }
      model.covariances.push_back(Sigma);
    }
  } catch (const json::exception& err) {
    throw std::runtime_error(std::string("model JSON structure error: ") +
                             err.what());
  }
  validate(model);
  return model;
}

std::string model_to_json_text(const GmModel& model) {
  json doc;
  doc["n"] = model.n;
  doc["k"] = model.k;
  doc["weights"] = vector_to_json(model.weights);
  json means = json::array();
  json covariances = json::array();
  for (int i = 0; i < model.k; ++i) {
    means.push_back(vector_to_json(model.means[i]));
    json rows = json::array();
    for (int a = 0; a < model.n; ++a) {
      rows.push_back(vector_to_json(model.covariances[i].row(a).transpose()));
    }
    covariances.push_back(rows);
  }
  doc["means"] = means;
  doc["covariances"] = covariances;
  return doc.dump(2) + "\n";
}

GmModel read_model_json(const std::string& path) {
  return model_from_json_text(read_file(path));
}

void write_model_json(const std::string& path, const GmModel& model) {
  write_file(path, model_to_json_text(model));
}

ReturnsTable read_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  ReturnsTable table;
  std::string line;
  int line_number = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    if (line_number == 1) {
      while (std::getline(fields, field, ',')) {
        table.asset_names.push_back(field);
      }
      if (table.asset_names.empty()) {
        throw std::runtime_error(path + ":1: empty header row");
      }
      continue;
    }
    std::vector<double> row;
    while (std::getline(fields, field, ',')) {
      try {
        size_t used = 0;
        const double value = std::stod(field, &used);
        while (used < field.size() &&
               std::isspace(static_cast<unsigned char>(field[used]))) {
          ++used;
        }
        if (used != field.size()) throw std::invalid_argument(field);
        row.push_back(value);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                 ": cannot parse value '" + field + "'");
      }
    }
    if (row.size() != table.asset_names.size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_number) +
                               ": expected " +
                               std::to_string(table.asset_names.size()) +
                               " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }
  table.returns.resize(static_cast<int>(rows.size()),
                       static_cast<int>(table.asset_names.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) {
      table.returns(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    }
  }
  return table;
}

void write_returns_csv(const std::string& path, const ReturnsTable& table) {
  std::ostringstream out;
  out.precision(17);
  for (size_t i = 0; i < table.asset_names.size(); ++i) {
    if (i > 0) out << ',';
    out << table.asset_names[i];
  }
  out << '\n';
  for (int r = 0; r < table.returns.rows(); ++r) {
    for (int c = 0; c < table.returns.cols(); ++c) {
      if (c > 0) out << ',';
      out << table.returns(r, c);
    }
    out << '\n';
  }
  write_file(path, out.str());
}

std::string solve_report_to_json(const SolveReport& report, double gamma,
                                 double limit_high, double limit_low) {
  json doc;
  doc["weights"] = vector_to_json(report.weights);
  doc["objective"] = report.objective;
  doc["per_component"] = vector_to_json(report.per_component);
  json diag = diagnostics_json(report.iterations, report.converged,
                               report.kkt_residual);
  diag["gamma"] = gamma;
  diag["limit_objective_high"] = limit_high;
  diag["limit_objective_low"] = limit_low;
  doc["diagnostics"] = diag;
  return doc.dump(2) + "\n";
}

std::string evar_report_to_json(const EvarReport& report) {
  json doc;
  doc["weights"] = vector_to_json(report.weights);
  doc["evar_value"] = report.evar_value;
  doc["delta"] = report.delta;
  doc["lambda"] = report.lambda;
  doc["alpha"] = report.alpha;
  doc["method"] = to_string(report.method);
  json diag = diagnostics_json(report.iterations, report.converged,
                               report.kkt_residual);
  diag["degenerate"] = report.degenerate;
  doc["diagnostics"] = diag;
  return doc.dump(2) + "\n";
}

}  // namespace egm
