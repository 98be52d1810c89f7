#include "nathijack/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace nathijack {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

template <class T>
T parse_int(std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_double(std::string_view v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- CSV with RFC 4180 quoting.

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

const std::vector<std::string> kMatrixColumns = {
    "profile", "vendor", "strategy", "rp_filter", "window_mode",
    "timeout_ms", "predicted", "simulated", "agreement"};

const std::vector<std::string> kSweepColumns = {
    "interval_ms", "timeout_ms", "payload", "success_rate", "mean_infer_ms",
    "mean_steal_ms", "mean_total_ms", "failures_by_reason"};

std::string join_header(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

std::string encode_failures(const std::map<std::string, int>& f) {
  std::string s;
  for (const auto& [reason, n] : f) {
    if (!s.empty()) s += ';';
    s += reason + ":" + std::to_string(n);
  }
  return s;
}

std::map<std::string, int> decode_failures(std::string_view s) {
  std::map<std::string, int> out;
  while (!s.empty()) {
    const auto semi = s.find(';');
    const std::string_view item = s.substr(0, semi);
    const auto colon = item.rfind(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("bad failure entry");
    out[std::string(item.substr(0, colon))] = parse_int<int>(item.substr(colon + 1));
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  return out;
}

void expect_header(std::istream& in, const std::vector<std::string>& cols) {
  std::string line;
  if (!std::getline(in, line) || csv_split(line) != cols) {
    throw std::invalid_argument("unexpected report header");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- profiles

const ProfileEntry* ProfileSet::find(std::string_view name) const {
  for (const auto& e : profiles) {
    if (e.profile.name == name) return &e;
  }
  return nullptr;
}

std::size_t ProfileSet::vulnerable_count() const {
  return static_cast<std::size_t>(std::count_if(profiles.begin(), profiles.end(),
                                                [](const ProfileEntry& e) { return e.expected_vulnerable; }));
}

ProfileSet parse_profiles(std::istream& in) {
  ProfileSet set;
  std::set<std::string> seen_keys;
  std::set<std::string> names;
  bool in_block = false;
  int lineno = 0;
  int block_line = 0;

  const auto close_block = [&] {
    if (!in_block) return;
    if (seen_keys.count("name") == 0) throw ProfileParseError(block_line, "profile without a name");
    if (!names.insert(set.profiles.back().profile.name).second) {
      throw ProfileParseError(block_line, "duplicate profile " + set.profiles.back().profile.name);
    }
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line == "[profile]") {
      close_block();
      set.profiles.emplace_back();
      seen_keys.clear();
      in_block = true;
      block_line = lineno;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ProfileParseError(lineno, "expected key = value");
    if (!in_block) throw ProfileParseError(lineno, "key outside a [profile] block");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen_keys.insert(key).second) throw ProfileParseError(lineno, "duplicate key " + key);

    ProfileEntry& e = set.profiles.back();
    RouterProfile& p = e.profile;
    try {
      if (key == "name") {
        if (value.empty()) throw std::invalid_argument("empty name");
        p.name = value;
      } else if (key == "vendor") {
        p.vendor = value;
      } else if (key == "strategy") {
        p.strategy = parse_port_strategy(value);
      } else if (key == "rp_filter") {
        p.rp_filter = parse_rp_filter(value);
      } else if (key == "window_mode") {
        p.window_mode = parse_window_mode(value);
      } else if (key == "close_timeout_ms") {
        p.close_timeout_ms = parse_int<TimeMs>(value);
        if (p.close_timeout_ms <= 0) throw std::invalid_argument("close timeout must be positive");
      } else if (key == "ap_isolation") {
        p.ap_isolation = parse_bool(value);
      } else if (key == "external_ip") {
        p.external_ip = IpAddr::parse(value);
      } else if (key == "lan_subnet") {
        p.lan_subnet = Subnet::parse(value);
      } else if (key == "record_route_supported") {
        p.record_route_supported = parse_bool(value);
      } else if (key == "rr_scan_fallback_supported") {
        p.rr_scan_fallback_supported = parse_bool(value);
      } else if (key == "expected_vulnerable") {
        e.expected_vulnerable = parse_bool(value);
      } else {
        throw ProfileParseError(lineno, "unknown key " + key);
      }
    } catch (const ProfileParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ProfileParseError(lineno, key + ": " + ex.what());
    }
  }
  close_block();
  return set;
}

ProfileSet load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  return parse_profiles(in);
}

void write_profiles(std::ostream& out, const ProfileSet& set) {
  bool first = true;
  for (const auto& e : set.profiles) {
    const RouterProfile& p = e.profile;
    if (!first) out << '\n';
    first = false;
    out << "[profile]\n"
        << "name = " << p.name << '\n'
        << "vendor = " << p.vendor << '\n'
        << "strategy = " << to_string(p.strategy) << '\n'
        << "rp_filter = " << to_string(p.rp_filter) << '\n'
        << "window_mode = " << to_string(p.window_mode) << '\n'
        << "close_timeout_ms = " << p.close_timeout_ms << '\n'
        << "ap_isolation = " << bool_str(p.ap_isolation) << '\n'
        << "external_ip = " << p.external_ip.to_string() << '\n'
        << "lan_subnet = " << p.lan_subnet.to_string() << '\n'
        << "record_route_supported = " << bool_str(p.record_route_supported) << '\n'
        << "rr_scan_fallback_supported = " << bool_str(p.rr_scan_fallback_supported) << '\n'
        << "expected_vulnerable = " << bool_str(e.expected_vulnerable) << '\n';
  }
}

ReportFormat parse_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "jsonl") return ReportFormat::Jsonl;
  throw std::invalid_argument("unknown format: " + std::string(text));
}

// ---------------------------------------------------------------- matrix

std::vector<MatrixRun> run_matrix(const ProfileSet& set, PayloadKind payload, std::uint64_t seed,
                                  int threads) {
  std::vector<MatrixRun> runs(set.profiles.size());
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    const ProfileEntry& e = set.profiles[i];
    ScenarioConfig cfg;
    cfg.profile = e.profile;
    cfg.payload = payload;
    cfg.victim_traffic = TrafficModel::fixed(4 * e.profile.close_timeout_ms);
    cfg.seed = seed + i;
    MatrixRun& run = runs[i];
    run.result = run_scenario(cfg);
    MatrixRow& r = run.row;
    r.profile = e.profile.name;
    r.vendor = e.profile.vendor;
    r.strategy = std::string(to_string(e.profile.strategy));
    r.rp_filter = std::string(to_string(e.profile.rp_filter));
    r.window_mode = std::string(to_string(e.profile.window_mode));
    r.timeout_ms = e.profile.close_timeout_ms;
    r.predicted = e.expected_vulnerable;
    r.simulated = run.result.success();
    r.agreement = r.predicted == r.simulated;
  });
  return runs;
}

void emit_matrix(std::ostream& out, const std::vector<MatrixRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    out << join_header(kMatrixColumns) << '\n';
    for (const auto& r : rows) {
      out << csv_field(r.profile) << ',' << csv_field(r.vendor) << ',' << r.strategy << ','
          << r.rp_filter << ',' << r.window_mode << ',' << r.timeout_ms << ','
          << bool_str(r.predicted) << ',' << bool_str(r.simulated) << ',' << bool_str(r.agreement)
          << '\n';
    }
    return;
  }
  for (const auto& r : rows) {
    json j = json::object();
    j["profile"] = r.profile;
    j["vendor"] = r.vendor;
    j["strategy"] = r.strategy;
    j["rp_filter"] = r.rp_filter;
    j["window_mode"] = r.window_mode;
    j["timeout_ms"] = r.timeout_ms;
    j["predicted"] = r.predicted;
    j["simulated"] = r.simulated;
    j["agreement"] = r.agreement;
    out << j.dump() << '\n';
  }
}

std::vector<MatrixRow> parse_matrix(std::istream& in, ReportFormat format) {
  std::vector<MatrixRow> rows;
  std::string line;
  if (format == ReportFormat::Csv) {
    expect_header(in, kMatrixColumns);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = csv_split(line);
      if (f.size() != kMatrixColumns.size()) throw std::invalid_argument("bad matrix row");
      rows.push_back(MatrixRow{f[0], f[1], f[2], f[3], f[4], parse_int<TimeMs>(f[5]),
                               parse_bool(f[6]), parse_bool(f[7]), parse_bool(f[8])});
    }
    return rows;
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    rows.push_back(MatrixRow{j.at("profile"), j.at("vendor"), j.at("strategy"), j.at("rp_filter"),
                             j.at("window_mode"), j.at("timeout_ms"), j.at("predicted"),
                             j.at("simulated"), j.at("agreement")});
  }
  return rows;
}

// ---------------------------------------------------------------- sweep

RouterProfile default_sweep_profile() {
  RouterProfile p;
  p.name = "sweep-base";
  p.vendor = "generic";
  return p;
}

SweepSpec parse_sweep_spec(std::istream& in, const std::string& base_dir) {
  static const std::set<std::string> known = {"intervals_ms", "close_timeouts_ms", "payload",
                                              "repetitions",  "base_seed",         "profile",
                                              "profiles",     "format",            "threads"};
  const json j = json::parse(in);
  if (!j.is_object()) throw std::invalid_argument("sweep spec must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (known.count(k) == 0) throw std::invalid_argument("unknown sweep spec key: " + k);
  }
  SweepSpec s;
  s.intervals_ms = j.at("intervals_ms").get<std::vector<TimeMs>>();
  s.close_timeouts_ms = j.at("close_timeouts_ms").get<std::vector<TimeMs>>();
  s.payload = parse_payload(j.at("payload").get<std::string>());
  s.repetitions = j.at("repetitions").get<int>();
  s.base_seed = j.value("base_seed", std::uint64_t{0});
  if (j.contains("format")) s.format = parse_format(j.at("format").get<std::string>());
  s.threads = j.value("threads", 0);
  if (s.repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  if (s.intervals_ms.empty() || s.close_timeouts_ms.empty()) {
    throw std::invalid_argument("intervals_ms and close_timeouts_ms must be non-empty");
  }
  for (TimeMs v : s.intervals_ms) {
    if (v <= 0) throw std::invalid_argument("intervals must be positive");
  }
  for (TimeMs v : s.close_timeouts_ms) {
    if (v <= 0) throw std::invalid_argument("timeouts must be positive");
  }
  if (j.contains("profile")) {
    if (!j.contains("profiles")) throw std::invalid_argument("profile needs a profiles file");
    std::string path = j.at("profiles").get<std::string>();
    if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
    const ProfileSet set = load_profiles(path);
    const std::string name = j.at("profile").get<std::string>();
    const ProfileEntry* e = set.find(name);
    if (!e) throw std::invalid_argument("no profile named " + name);
    s.profile = e->profile;
  }
  return s;
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  const auto slash = path.rfind('/');
  return parse_sweep_spec(in, slash == std::string::npos ? "." : path.substr(0, slash));
}

ScenarioConfig sweep_scenario(const SweepSpec& spec, TimeMs interval_ms, TimeMs timeout_ms, int rep) {
  ScenarioConfig cfg;
  cfg.profile = spec.profile.value_or(default_sweep_profile());
  cfg.profile.close_timeout_ms = timeout_ms;
  cfg.payload = spec.payload;
  cfg.victim_traffic = TrafficModel::fixed(interval_ms);
  cfg.seed = spec.base_seed + static_cast<std::uint64_t>(rep);
  return cfg;
}

std::vector<RunStats> run_sweep(const SweepSpec& spec) {
  struct Cell {
    TimeMs interval, timeout;
  };
  std::vector<Cell> cells;
  for (TimeMs t : spec.close_timeouts_ms) {
    for (TimeMs i : spec.intervals_ms) cells.push_back({i, t});
  }
  const auto reps = static_cast<std::size_t>(spec.repetitions);
  struct Sample {
    bool success = false;
    std::string label;
    TimeMs infer = 0, steal = 0, total = 0;
  };
  std::vector<Sample> samples(cells.size() * reps);
  parallel_for(samples.size(), spec.threads, [&](std::size_t k) {
    const Cell& c = cells[k / reps];
    const ScenarioResult r = run_scenario(sweep_scenario(spec, c.interval, c.timeout, static_cast<int>(k % reps)));
    const auto phase = [&](AttackPhase p) {
      auto it = r.report.phase_times.find(p);
      return it == r.report.phase_times.end() ? TimeMs{0} : it->second;
    };
    Sample& s = samples[k];
    s.success = r.success();
    s.label = r.label();
    s.infer = phase(AttackPhase::InferPort);
    s.steal = phase(AttackPhase::Evict) + phase(AttackPhase::Steal);
    s.total = r.report.total_ms();
  });

  std::vector<RunStats> out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    RunStats st;
    st.interval_ms = cells[ci].interval;
    st.timeout_ms = cells[ci].timeout;
    st.payload = std::string(to_string(spec.payload));
    st.repetitions = spec.repetitions;
    double infer = 0, steal = 0, total = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const Sample& s = samples[ci * reps + r];
      if (s.success) {
        ++st.successes;
        infer += static_cast<double>(s.infer);
        steal += static_cast<double>(s.steal);
        total += static_cast<double>(s.total);
      } else {
        ++st.failures[s.label];
      }
    }
    st.success_rate = static_cast<double>(st.successes) / spec.repetitions;
    if (st.successes > 0) {
      st.mean_infer_ms = infer / st.successes;
      st.mean_steal_ms = steal / st.successes;
      st.mean_total_ms = total / st.successes;
    }
    out.push_back(std::move(st));
  }
  return out;
}

void emit_sweep(std::ostream& out, const std::vector<RunStats>& rows, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    out << join_header(kSweepColumns) << '\n';
    for (const auto& r : rows) {
      out << r.interval_ms << ',' << r.timeout_ms << ',' << r.payload << ','
          << format_double(r.success_rate) << ',' << format_double(r.mean_infer_ms) << ','
          << format_double(r.mean_steal_ms) << ',' << format_double(r.mean_total_ms) << ','
          << csv_field(encode_failures(r.failures)) << '\n';
    }
    return;
  }
  for (const auto& r : rows) {
    json j = json::object();
    j["interval_ms"] = r.interval_ms;
    j["timeout_ms"] = r.timeout_ms;
    j["payload"] = r.payload;
    j["repetitions"] = r.repetitions;
    j["successes"] = r.successes;
    j["success_rate"] = r.success_rate;
    j["mean_infer_ms"] = r.mean_infer_ms;
    j["mean_steal_ms"] = r.mean_steal_ms;
    j["mean_total_ms"] = r.mean_total_ms;
    j["failures_by_reason"] = r.failures;
    out << j.dump() << '\n';
  }
}

std::vector<RunStats> parse_sweep(std::istream& in, ReportFormat format) {
  std::vector<RunStats> rows;
  std::string line;
  if (format == ReportFormat::Csv) {
    expect_header(in, kSweepColumns);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = csv_split(line);
      if (f.size() != kSweepColumns.size()) throw std::invalid_argument("bad sweep row");
      RunStats r;
      r.interval_ms = parse_int<TimeMs>(f[0]);
      r.timeout_ms = parse_int<TimeMs>(f[1]);
      r.payload = f[2];
      r.success_rate = parse_double(f[3]);
      r.mean_infer_ms = parse_double(f[4]);
      r.mean_steal_ms = parse_double(f[5]);
      r.mean_total_ms = parse_double(f[6]);
      r.failures = decode_failures(f[7]);
      rows.push_back(std::move(r));
    }
    return rows;
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    RunStats r;
    r.interval_ms = j.at("interval_ms");
    r.timeout_ms = j.at("timeout_ms");
    r.payload = j.at("payload");
    r.repetitions = j.at("repetitions");
    r.successes = j.at("successes");
    r.success_rate = j.at("success_rate");
    r.mean_infer_ms = j.at("mean_infer_ms");
    r.mean_steal_ms = j.at("mean_steal_ms");
    r.mean_total_ms = j.at("mean_total_ms");
    r.failures = j.at("failures_by_reason").get<std::map<std::string, int>>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace nathijack
