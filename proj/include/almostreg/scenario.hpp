#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "almostreg/scenario_ops.hpp"
#include "almostreg/scenario_schema.hpp"

namespace almostreg {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Malformed scenario file text, with 1-based line and column.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(const std::string& file, std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Scenario {
  std::string id;
  std::string kind;
  std::string op;
  std::string source;
  json payload;
  /// Path-keyed expected values; see `match_expectation`.
  json expect = json::object();
  /// Substring of the error message a scenario is expected to raise.
  std::optional<std::string> expect_error;
  /// Default absolute tolerance for numeric expectations.
  double tolerance = 1e-9;
  Runner runner;
  /// Set when the file could not be loaded; the scenario then reports an error.
  std::optional<std::string> load_error;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw ScenarioParseError(source, line, col, msg);
  }
}

inline Scenario build_scenario(const json& j, const std::string& path, const std::string& source) {
  const Field root(j, path);
  if (!j.is_object()) root.fail("expected a scenario object");
  Scenario s;
  s.source = source;
  s.id = root["id"].string();
  if (s.id.empty()) root["id"].fail("id must be nonempty");
  s.kind = root["kind"].string();
  const auto& reg = operation_registry();
  const auto kit = reg.find(s.kind);
  if (kit == reg.end()) root["kind"].fail("unknown kind '" + s.kind + "'");
  const Field payload = root["payload"];
  s.op = payload["op"].string();
  const auto oit = kit->second.find(s.op);
  if (oit == kit->second.end()) payload["op"].fail("unknown operation '" + s.op + "' for kind " + s.kind);
  s.payload = payload.raw();
  if (const auto e = root.opt("expect")) {
    if (!e->raw().is_object()) e->fail("expected an object of path: value entries");
    s.expect = e->raw();
  }
  if (const auto e = root.opt("expect_error")) s.expect_error = e->string();
  if (const auto t = root.opt("tolerance")) s.tolerance = t->positive();
  s.runner = oit->second(payload);
  return s;
}

}  // namespace detail

/// Scenarios from JSON text holding one scenario object or an array of them.
inline std::vector<Scenario> parse_scenarios(const std::string& text, const std::string& source = "<text>") {
  const json j = detail::parse_text(text, source);
  std::vector<Scenario> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(detail::build_scenario(j[i], "[" + std::to_string(i) + "]", source));
  } else {
    out.push_back(detail::build_scenario(j, "", source));
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  return parse_scenarios(read_file(path), path.string());
}

/// The single scenario in a file.
inline Scenario load_scenario(const std::filesystem::path& path) {
  auto all = load_scenarios(path);
  if (all.size() != 1) throw std::runtime_error(path.string() + ": expected exactly one scenario");
  return std::move(all.front());
}

/**
 * Scenarios from files and directories (the *.json files directly inside,
 * sorted by name). Files that fail to load become error scenarios named
 * after the file so the rest of the suite still runs.
 */
inline std::vector<Scenario> load_paths(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::filesystem::path> files;
  for (const auto& p : paths) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& e : std::filesystem::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  std::vector<Scenario> out;
  for (const auto& f : files) {
    try {
      auto batch = load_scenarios(f);
      for (auto& s : batch) out.push_back(std::move(s));
    } catch (const std::exception& e) {
      Scenario s;
      s.id = f.filename().string();
      s.source = f.string();
      s.load_error = e.what();
      out.push_back(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expectations

struct ExpectationResult {
  std::string path;
  json expected;
  json actual;
  bool ok = false;
};

namespace detail {

inline const json* resolve(const json& root, const std::string& path) {
  const json* cur = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string seg = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (cur->is_object()) {
      const auto it = cur->find(seg);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      if (seg.empty() || !std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return nullptr;
      const std::size_t i = std::stoul(seg);
      if (i >= cur->size()) return nullptr;
      cur = &(*cur)[i];
    } else {
      return nullptr;
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

inline std::optional<double> as_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return std::nullopt;
}

inline bool is_constraint(const json& e) {
  if (!e.is_object() || e.empty()) return false;
  for (const auto& [k, v] : e.items())
    if (k != "value" && k != "tol" && k != "min" && k != "max") return false;
  return true;
}

inline bool numbers_match(double a, double e, double tol) {
  if (std::isinf(e) || std::isinf(a)) return a == e;
  return std::abs(a - e) <= tol;
}

}  // namespace detail

/**
 * Expected-value grammar: a number matches within `tol`; "inf" matches
 * infinity; {"value", "tol"} overrides the tolerance; {"min"} / {"max"} bound
 * a number (inclusive); arrays match elementwise; other objects match the
 * listed keys; strings, booleans and null match exactly.
 */
inline bool match_expectation(const json& expected, const json& actual, double tol) {
  if (detail::is_constraint(expected)) {
    const auto a = detail::as_number(actual);
    if (!a) return false;
    const double t = expected.contains("tol") ? expected["tol"].get<double>() : tol;
    if (expected.contains("value")) {
      const auto e = detail::as_number(expected["value"]);
      if (!e || !detail::numbers_match(*a, *e, t)) return false;
    }
    if (expected.contains("min") && !(*a >= *detail::as_number(expected["min"]))) return false;
    if (expected.contains("max") && !(*a <= *detail::as_number(expected["max"]))) return false;
    return true;
  }
  if (const auto e = detail::as_number(expected)) {
    const auto a = detail::as_number(actual);
    return a && detail::numbers_match(*a, *e, tol);
  }
  if (expected.is_array()) {
    if (!actual.is_array() || actual.size() != expected.size()) return false;
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (!match_expectation(expected[i], actual[i], tol)) return false;
    return true;
  }
  if (expected.is_object()) {
    if (!actual.is_object()) return false;
    for (const auto& [k, v] : expected.items())
      if (!actual.contains(k) || !match_expectation(v, actual[k], tol)) return false;
    return true;
  }
  return expected == actual;
}

// ---------------------------------------------------------------------------
// Runs and reports

enum class RunStatus { pass, fail, error };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::pass: return "pass";
    case RunStatus::fail: return "fail";
    default: return "error";
  }
}

inline RunStatus run_status_from_string(const std::string& s) {
  if (s == "pass") return RunStatus::pass;
  if (s == "fail") return RunStatus::fail;
  if (s == "error") return RunStatus::error;
  throw std::invalid_argument("unknown run status '" + s + "'");
}

struct RunReport {
  std::string id;
  std::string kind;
  std::string op;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::pass;
  json result;
  std::vector<ExpectationResult> expectations;
  std::string error;
  /// Text output only; kept out of machine output so it stays deterministic.
  double wall_ms = 0.0;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::string version = kToolkitVersion;
  std::vector<RunReport> reports;

  bool all_passed() const {
    return std::all_of(reports.begin(), reports.end(), [](const RunReport& r) { return r.status == RunStatus::pass; });
  }
};

struct RunOptions {
  std::uint64_t seed = 0;
  /// 0 means ALMOSTREG_JOBS, else the hardware concurrency.
  unsigned jobs = 0;
  /// Multiplies every expectation tolerance.
  double tolerance_scale = 1.0;
};

/// splitmix64 of the suite seed mixed with an FNV-1a hash of the id.
inline std::uint64_t scenario_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline unsigned default_jobs() {
  if (const char* env = std::getenv("ALMOSTREG_JOBS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline RunReport run_scenario(const Scenario& s, const RunOptions& opt) {
  RunReport r;
  r.id = s.id;
  r.kind = s.kind;
  r.op = s.op;
  r.seed = scenario_seed(opt.seed, s.id);
  if (s.load_error) {
    r.status = RunStatus::error;
    r.error = *s.load_error;
    return r;
  }
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.result = s.runner(r.seed);
    if (s.expect_error) {
      r.status = RunStatus::fail;
      r.error = "expected an error containing '" + *s.expect_error + "'";
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    r.status = s.expect_error && r.error.find(*s.expect_error) != std::string::npos ? RunStatus::pass
                                                                                   : RunStatus::error;
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (r.status == RunStatus::pass && !s.expect_error) {
    const double tol = s.tolerance * opt.tolerance_scale;
    for (const auto& [path, expected] : s.expect.items()) {
      ExpectationResult e;
      e.path = path;
      e.expected = expected;
      const json* actual = detail::resolve(r.result, path);
      e.actual = actual ? *actual : json(nullptr);
      json scaled = expected;
      if (detail::is_constraint(scaled) && scaled.contains("tol"))
        scaled["tol"] = scaled["tol"].get<double>() * opt.tolerance_scale;
      e.ok = actual && match_expectation(scaled, *actual, tol);
      if (!e.ok) r.status = RunStatus::fail;
      r.expectations.push_back(std::move(e));
    }
  }
  return r;
}

/// Runs scenarios on a thread pool; reports are ordered by id whatever the completion order.
inline SuiteReport run_suite(const std::vector<Scenario>& scenarios, const RunOptions& opt = {}) {
  SuiteReport suite;
  suite.seed = opt.seed;
  suite.reports.resize(scenarios.size());
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs ? opt.jobs : default_jobs(),
                                                        static_cast<unsigned>(std::max<std::size_t>(1, scenarios.size()))));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) suite.reports[i] = run_scenario(scenarios[i], opt);
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::stable_sort(suite.reports.begin(), suite.reports.end(),
                   [](const RunReport& a, const RunReport& b) { return a.id < b.id; });
  return suite;
}

enum class ReportFormat { text, machine };

namespace detail {

inline json report_json(const RunReport& r) {
  json j;
  j["id"] = r.id;
  j["kind"] = r.kind;
  j["op"] = r.op;
  j["seed"] = r.seed;
  j["status"] = to_string(r.status);
  j["result"] = r.result;
  json ex = json::array();
  for (const ExpectationResult& e : r.expectations)
    ex.push_back({{"path", e.path}, {"expected", e.expected}, {"actual", e.actual}, {"ok", e.ok}});
  j["expectations"] = std::move(ex);
  j["error"] = r.error;
  return j;
}

}  // namespace detail

/// Text tables for people, or machine JSON with a stable field order and no timings.
inline std::string emit_report(const SuiteReport& suite, ReportFormat format) {
  if (format == ReportFormat::machine) {
    json j;
    j["toolkit"] = "almostreg";
    j["version"] = suite.version;
    j["seed"] = suite.seed;
    json reps = json::array();
    for (const RunReport& r : suite.reports) reps.push_back(detail::report_json(r));
    j["reports"] = std::move(reps);
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  std::size_t pass = 0, fail = 0, err = 0;
  os << "almostreg " << suite.version << "  seed " << suite.seed << "\n";
  for (const RunReport& r : suite.reports) {
    const char* tag = r.status == RunStatus::pass ? "PASS " : r.status == RunStatus::fail ? "FAIL " : "ERROR";
    (r.status == RunStatus::pass ? pass : r.status == RunStatus::fail ? fail : err)++;
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.1f ms", r.wall_ms);
    os << tag << "  " << r.id << "  [" << r.kind << "/" << r.op << "]  " << ms << "\n";
    for (const ExpectationResult& e : r.expectations)
      os << "       " << (e.ok ? "ok    " : "MISS  ") << e.path << " = " << e.actual.dump()
         << (e.ok ? "" : "  (expected " + e.expected.dump() + ")") << "\n";
    if (!r.error.empty()) os << "       " << r.error << "\n";
    if (r.status == RunStatus::fail && !r.result.is_null()) os << "       result: " << r.result.dump() << "\n";
  }
  os << "summary: " << suite.reports.size() << " scenarios, " << pass << " passed, " << fail << " failed, " << err
     << " errors\n";
  return os.str();
}

/// Inverse of the machine format.
inline SuiteReport parse_reports(const std::string& text) {
  const json j = json::parse(text);
  SuiteReport s;
  s.version = j.at("version").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const json& r : j.at("reports")) {
    RunReport rep;
    rep.id = r.at("id").get<std::string>();
    rep.kind = r.at("kind").get<std::string>();
    rep.op = r.at("op").get<std::string>();
    rep.seed = r.at("seed").get<std::uint64_t>();
    rep.status = run_status_from_string(r.at("status").get<std::string>());
    rep.result = r.at("result");
    for (const json& e : r.at("expectations"))
      rep.expectations.push_back({e.at("path").get<std::string>(), e.at("expected"), e.at("actual"), e.at("ok").get<bool>()});
    rep.error = r.at("error").get<std::string>();
    s.reports.push_back(std::move(rep));
  }
  return s;
}

}  // namespace almostreg
