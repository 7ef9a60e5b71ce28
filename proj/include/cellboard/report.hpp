#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace cellboard {

enum class Verdict { Pass, Fail, Vacuous };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Vacuous: return "vacuous";
  }
  return "fail";
}

// One certified (in)equality. `relation` is "<=", ">=" or "==", read as
// lhs relation rhs within `tolerance`. Vacuous marks a bound whose
// hypothesis does not hold (e.g. c_P <= 0); it is not a failure.
struct VerificationReport {
  std::string name;
  nlohmann::json inputs = nlohmann::json::object();
  std::string relation = "<=";
  double lhs = 0;
  double rhs = 0;
  double tolerance = 0;
  Verdict verdict = Verdict::Fail;
  double seconds = 0;
  nlohmann::json detail = nlohmann::json::object();

  bool ok() const { return verdict != Verdict::Fail; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["inputs"] = inputs;
    j["relation"] = relation;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["tolerance"] = tolerance;
    j["verdict"] = to_string(verdict);
    j["seconds"] = seconds;
    if (!detail.empty()) j["detail"] = detail;
    return j;
  }
};

// Relative comparisons used across the verifiers.
inline bool holds_le(double lhs, double rhs, double rel_tol) { return lhs <= rhs + rel_tol * std::abs(rhs); }
inline bool holds_ge(double lhs, double rhs, double rel_tol) { return lhs >= rhs - rel_tol * std::abs(rhs); }
inline bool holds_eq(double lhs, double rhs, double rel_tol) {
  return std::abs(lhs - rhs) <= rel_tol * std::max(std::abs(lhs), std::abs(rhs));
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string reports_csv(const std::vector<VerificationReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "name,verdict,relation,lhs,rhs,tolerance,seconds\n";
  for (const auto& r : reports) {
    os << csv_escape(r.name) << ',' << to_string(r.verdict) << ',' << csv_escape(r.relation) << ',' << r.lhs << ','
       << r.rhs << ',' << r.tolerance << ',' << r.seconds << '\n';
  }
  return os.str();
}

// Writes via a sibling temporary and rename, so a failed run never leaves a
// truncated file behind.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cellboard
