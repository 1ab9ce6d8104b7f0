#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace gg {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// One estimate per row; pass is "pass", "fail", or "na" (no contract).
struct ReportRow {
  std::string check;
  std::string model;
  int n_sites = 0;
  double beta = 0.0;
  double gamma = 0.0;
  double h = 0.0;
  int arity = 0;
  std::string functional;
  double estimate = 0.0;
  double std_error = 0.0;
  std::string contract;  // human-readable contract, empty if none
  std::string pass = "na";
};

struct Report {
  std::string config_hash;       // full config
  std::string config_hash_base;  // config with N_list removed (for merging)
  std::string timestamp;
  std::string version = "1.0";
  std::vector<ReportRow> rows;
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline constexpr const char* kCsvHeader =
    "check,model,N,beta,gamma,h,n,functional,estimate,std_error,contract,pass";

inline std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const auto& row : r.rows) {
    os << row.check << ',' << row.model << ',' << row.n_sites << ','
       << format_double(row.beta) << ',' << format_double(row.gamma) << ','
       << format_double(row.h) << ',' << row.arity << ',' << row.functional
       << ',' << format_double(row.estimate) << ','
       << format_double(row.std_error) << ',' << row.contract << ','
       << row.pass << "\n";
  }
  return os.str();
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["metadata"] = {{"config_hash", r.config_hash},
                   {"config_hash_base", r.config_hash_base},
                   {"timestamp", r.timestamp},
                   {"version", r.version}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"check", row.check},
                         {"model", row.model},
                         {"N", row.n_sites},
                         {"beta", row.beta},
                         {"gamma", row.gamma},
                         {"h", row.h},
                         {"n", row.arity},
                         {"functional", row.functional},
                         {"estimate", row.estimate},
                         {"std_error", row.std_error},
                         {"contract", row.contract},
                         {"pass", row.pass}});
  return j;
}

inline Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.config_hash = j.at("metadata").at("config_hash");
  r.config_hash_base = j.at("metadata").at("config_hash_base");
  r.timestamp = j.at("metadata").value("timestamp", "");
  r.version = j.at("metadata").value("version", "");
  for (const auto& row : j.at("rows")) {
    ReportRow x;
    x.check = row.at("check");
    x.model = row.at("model");
    x.n_sites = row.at("N");
    x.beta = row.at("beta");
    x.gamma = row.at("gamma");
    x.h = row.at("h");
    x.arity = row.at("n");
    x.functional = row.at("functional");
    x.estimate = row.at("estimate");
    x.std_error = row.at("std_error");
    x.contract = row.at("contract");
    x.pass = row.at("pass");
    r.rows.push_back(std::move(x));
  }
  return r;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

// Long-format convergence table merged across reports (typically one per N).
// Reports from different configs (ignoring N_list) are rejected.
inline std::string convergence_table(const std::vector<Report>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports given");
  for (const auto& r : reports)
    if (r.config_hash_base != reports.front().config_hash_base)
      throw std::invalid_argument(
          "convergence_table: reports come from different configs");
  std::ostringstream os;
  os << "N,quantity,estimate,std_error\n";
  // stable column order: group by quantity, then by N in input order
  std::vector<std::string> quantities;
  for (const auto& r : reports)
    for (const auto& row : r.rows) {
      std::string q = row.check;
      if (!row.functional.empty()) q += "." + row.functional;
      bool seen = false;
      for (const auto& have : quantities) seen = seen || have == q;
      if (!seen) quantities.push_back(q);
    }
  for (const auto& q : quantities)
    for (const auto& r : reports)
      for (const auto& row : r.rows) {
        std::string rq = row.check;
        if (!row.functional.empty()) rq += "." + row.functional;
        if (rq != q) continue;
        os << row.n_sites << ',' << q << ',' << format_double(row.estimate)
           << ',' << format_double(row.std_error) << "\n";
      }
  return os.str();
}

}  // namespace gg
