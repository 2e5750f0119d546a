#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincoh/errors.hpp"
#include "spincoh/fit.hpp"
#include "spincoh/tomography.hpp"
#include "spincoh/units.hpp"

// File formats at the library boundary.
//   DecayCurve          CSV  time_us,probability,stderr   ('#' provenance lines first)
//   MeasurementRecord   CSV  basis,shots,plus,minus,outside
//   FitResult           JSON (SI values with unit labels)
//   Spin1Density        JSON row-major [re, im] pairs, basis (|1,+1>, |1,0>, |1,-1>)

namespace spincoh {

using json = nlohmann::json;

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, int lineno, const char* column) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ConfigError("line " + std::to_string(lineno) + ": bad " + column + " value '" + s + "'");
  return v;
}

inline void write_provenance(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) {
    std::istringstream ss(l);
    std::string part;
    while (std::getline(ss, part)) os << "# " << part << '\n';
  }
}
}  // namespace detail

inline void write_curve_csv(std::ostream& os, const DecayCurve& curve, const std::vector<std::string>& provenance = {}) {
  detail::write_provenance(os, provenance);
  if (!curve.meta.empty()) os << "# generator: " << curve.meta << '\n';
  os << "time_us,probability,stderr\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < curve.size(); ++j)
    os << units::s_to_us(curve.grid[j]) << ',' << curve.probabilities[j] << ',' << curve.stderrs[j] << '\n';
}

inline DecayCurve read_curve_csv(std::istream& is) {
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<double> t, p, s;
  std::string meta;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# generator: ", 0) == 0) meta = line.substr(13);
      continue;
    }
    const auto cells = detail::split_csv(line);
    if (!header) {
      if (cells != std::vector<std::string>{"time_us", "probability", "stderr"})
        throw ConfigError("line " + std::to_string(lineno) + ": expected header time_us,probability,stderr");
      header = true;
      continue;
    }
    if (cells.size() != 3) throw ConfigError("line " + std::to_string(lineno) + ": expected 3 columns");
    t.push_back(units::us_to_s(detail::parse_number(cells[0], lineno, "time_us")));
    p.push_back(detail::parse_number(cells[1], lineno, "probability"));
    s.push_back(detail::parse_number(cells[2], lineno, "stderr"));
  }
  if (!header) throw ConfigError("curve CSV has no header");
  // Times were written in us; snap the first to exactly 0.
  if (!t.empty() && std::abs(t.front()) < 1e-15) t.front() = 0.0;
  DecayCurve c;
  try {
    c = DecayCurve{TimeGrid(std::move(t)), std::move(p), std::move(s), meta};
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("curve CSV: ") + e.what());
  }
  return c;
}

inline void write_records_csv(std::ostream& os, const std::vector<MeasurementRecord>& recs,
                              const std::vector<std::string>& provenance = {}) {
  detail::write_provenance(os, provenance);
  os << "basis,shots,plus,minus,outside\n";
  for (const auto& r : recs)
    os << to_string(r.basis) << ',' << r.shots << ',' << r.countPlus << ',' << r.countMinus << ',' << r.countOutside
       << '\n';
}

inline std::vector<MeasurementRecord> read_records_csv(std::istream& is) {
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<MeasurementRecord> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_csv(line);
    if (!header) {
      if (cells != std::vector<std::string>{"basis", "shots", "plus", "minus", "outside"})
        throw ConfigError("line " + std::to_string(lineno) + ": expected header basis,shots,plus,minus,outside");
      header = true;
      continue;
    }
    if (cells.size() != 5) throw ConfigError("line " + std::to_string(lineno) + ": expected 5 columns");
    MeasurementRecord r;
    try {
      r.basis = pauli_basis_from_string(cells[0]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
    auto count = [&](int i, const char* col) {
      const double v = detail::parse_number(cells[i], lineno, col);
      if (v != std::floor(v)) throw ConfigError("line " + std::to_string(lineno) + ": " + col + " must be an integer");
      return static_cast<long>(v);
    };
    r.shots = count(1, "shots");
    r.countPlus = count(2, "plus");
    r.countMinus = count(3, "minus");
    r.countOutside = count(4, "outside");
    try {
      r.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(r);
  }
  if (!header) throw ConfigError("records CSV has no header");
  return out;
}

inline json density_to_json(const Spin1Density& rho) {
  json m = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m.push_back({rho(r, c).real(), rho(r, c).imag()});
  return m;
}

inline Spin1Density density_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) throw ConfigError("density matrix must be 9 [re, im] pairs");
  Mat3c m;
  for (int i = 0; i < 9; ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ConfigError("density matrix entry " + std::to_string(i) + " must be [re, im]");
    m(i / 3, i % 3) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  try {
    return Spin1Density(m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("density matrix: ") + e.what());
  }
}

inline const char* kBasisOrderNote = "rows/cols ordered |1,+1>, |1,0>, |1,-1>; entries row-major as [re, im]";

inline const char* parameter_unit(const std::string& name) {
  if (name == "meanBz" || name == "widthBz" || name == "widthBx" || name == "bSigma0" || name == "totalStdBz" ||
      name == "totalWidthBz")
    return "T";
  if (name == "timeConstant" || name == "T2star") return "s";
  if (name == "temperature") return "K";
  return "1";
}

inline json fit_result_to_json(const FitResult& r) {
  json j;
  j["family"] = to_string(r.family);
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["residual_norm"] = r.residualNorm;
  j["weighted"] = r.weighted;
  j["condition_number"] = std::isfinite(r.conditionNumber) ? json(r.conditionNumber) : json(nullptr);
  if (!r.message.empty()) j["message"] = r.message;
  for (const auto& [name, v] : r.params) {
    const bool free = std::find(r.freeNames.begin(), r.freeNames.end(), name) != r.freeNames.end();
    j["parameters"][name] = {{"value", v}, {"error", r.errors.at(name)}, {"free", free}, {"unit", parameter_unit(name)}};
  }
  for (const auto& [name, v] : r.derived) j["derived"][name] = {{"value", v}, {"unit", parameter_unit(name)}};
  json cov = json::array();
  for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < r.covariance.cols(); ++b) row.push_back(r.covariance(a, b));
    cov.push_back(row);
  }
  j["covariance"] = {{"names", r.freeNames}, {"matrix", cov}};
  return j;
}

}  // namespace spincoh
