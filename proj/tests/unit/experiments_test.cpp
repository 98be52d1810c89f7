#include <doctest.h>

#include <sstream>

#include "nathijack/experiments.hpp"

using namespace nathijack;

namespace {

ProfileSet table1() { return load_profiles(NATHIJACK_DATA_DIR "/profiles_table1.txt"); }

ProfileSet parse(const std::string& text) {
  std::istringstream in(text);
  return parse_profiles(in);
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ProfileParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("profile files") {
  const ProfileSet set = parse(
      "# two routers\n"
      "[profile]\n"
      "name = A\n"
      "strategy = RandomSelection\n"
      "close_timeout_ms = 500  # short\n"
      "\n"
      "[profile]\n"
      "name = B\n"
      "window_mode = Liberal2G\n"
      "lan_subnet = 10.0.0.0/16\n"
      "expected_vulnerable = true\n");
  REQUIRE(set.profiles.size() == 2);
  CHECK(set.profiles[0].profile.strategy == PortStrategy::RandomSelection);
  CHECK(set.profiles[0].profile.close_timeout_ms == 500);
  CHECK(set.profiles[1].profile.lan_subnet == Subnet::parse("10.0.0.0/16"));
  CHECK(set.vulnerable_count() == 1);
  CHECK(set.find("B") == &set.profiles[1]);
  CHECK(set.find("C") == nullptr);
}

TEST_CASE("profile parse errors carry the line") {
  CHECK(error_line("[profile]\nname = A\ncolour = red\n") == 3);
  CHECK(error_line("name = A\n") == 1);
  CHECK(error_line("[profile]\nname = A\nname = B\n") == 3);
  CHECK(error_line("[profile]\nname = A\nstrategy = Sticky\n") == 3);
  CHECK(error_line("[profile]\nname = A\nclose_timeout_ms = -1\n") == 3);
  CHECK(error_line("[profile]\nname = A\n[profile]\nname = A\n") == 3);
  CHECK(error_line("[profile]\nvendor = X\n") == 1);
  CHECK(error_line("[profile]\nname A\n") == 2);
  CHECK_THROWS_AS(load_profiles("/nonexistent/profiles.txt"), IoFailure);
}

TEST_CASE("profiles survive a write and re-read") {
  for (const char* file : {"/profiles_table1.txt", "/profiles_appendix.txt"}) {
    const ProfileSet set = load_profiles(std::string(NATHIJACK_DATA_DIR) + file);
    std::stringstream buf;
    write_profiles(buf, set);
    const ProfileSet back = parse_profiles(buf);
    REQUIRE(back.profiles.size() == set.profiles.size());
    for (std::size_t i = 0; i < set.profiles.size(); ++i) {
      const RouterProfile& a = set.profiles[i].profile;
      const RouterProfile& b = back.profiles[i].profile;
      CHECK(a.name == b.name);
      CHECK(a.vendor == b.vendor);
      CHECK(a.strategy == b.strategy);
      CHECK(a.rp_filter == b.rp_filter);
      CHECK(a.window_mode == b.window_mode);
      CHECK(a.close_timeout_ms == b.close_timeout_ms);
      CHECK(a.ap_isolation == b.ap_isolation);
      CHECK(a.external_ip == b.external_ip);
      CHECK(a.lan_subnet == b.lan_subnet);
      CHECK(a.record_route_supported == b.record_route_supported);
      CHECK(a.rr_scan_fallback_supported == b.rr_scan_fallback_supported);
      CHECK(set.profiles[i].expected_vulnerable == back.profiles[i].expected_vulnerable);
    }
  }
}

TEST_CASE("bundled profiles") {
  const ProfileSet t = table1();
  CHECK(t.profiles.size() == 33);
  CHECK(t.vulnerable_count() == 24);
  const ProfileSet all = load_profiles(NATHIJACK_DATA_DIR "/profiles_appendix.txt");
  CHECK(all.profiles.size() == 67);
  CHECK(all.vulnerable_count() == 52);
  for (const auto& e : all.profiles) {
    CAPTURE(e.profile.name);
    CHECK(e.profile.satisfies_attack_conditions() == e.expected_vulnerable);
  }
}

TEST_CASE("matrix reports round-trip") {
  std::vector<MatrixRow> rows{
      {"TL-XDR6020", "TP-Link", "Preservation", "Disabled", "NoCheck", 10000, true, true, true},
      {"Router, \"quoted\"", "V", "RandomSelection", "Strict", "Strict", 120000, false, false, true},
  };
  for (auto format : {ReportFormat::Csv, ReportFormat::Jsonl}) {
    std::stringstream buf;
    emit_matrix(buf, rows, format);
    CHECK(parse_matrix(buf, format) == rows);
  }
  std::stringstream empty;
  emit_matrix(empty, {}, ReportFormat::Csv);
  CHECK(empty.str() ==
        "profile,vendor,strategy,rp_filter,window_mode,timeout_ms,predicted,simulated,agreement\n");
  std::stringstream none;
  emit_matrix(none, {}, ReportFormat::Jsonl);
  CHECK(none.str().empty());
}

TEST_CASE("the matrix over the bundled table agrees everywhere") {
  const auto runs = run_matrix(table1());
  std::vector<MatrixRow> rows;
  for (const auto& r : runs) {
    CAPTURE(r.row.profile);
    CHECK(r.row.agreement);
    rows.push_back(r.row);
  }
  std::stringstream csv;
  emit_matrix(csv, rows, ReportFormat::Csv);
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 34);
}

TEST_CASE("sweep specs") {
  std::istringstream ok(R"({"intervals_ms": [500, 2000], "close_timeouts_ms": [1000],
                            "payload": "hijack", "repetitions": 3, "base_seed": 9})");
  const SweepSpec s = parse_sweep_spec(ok);
  CHECK(s.intervals_ms == std::vector<TimeMs>{500, 2000});
  CHECK(s.payload == PayloadKind::Hijack);
  CHECK(s.repetitions == 3);
  CHECK(s.base_seed == 9);

  for (const char* bad : {R"({"intervals_ms": [1], "close_timeouts_ms": [1], "colour": 1})",
                          R"({"intervals_ms": [], "close_timeouts_ms": [1]})",
                          R"({"intervals_ms": [-5], "close_timeouts_ms": [1]})",
                          R"({"intervals_ms": [1], "close_timeouts_ms": [1], "repetitions": 0})",
                          R"([1, 2])", R"({"intervals_ms": [1)"}) {
    CAPTURE(bad);
    std::istringstream in(bad);
    CHECK_THROWS(parse_sweep_spec(in));
  }
}

TEST_CASE("sweep reports round-trip") {
  RunStats a;
  a.interval_ms = 2000;
  a.timeout_ms = 1000;
  a.payload = "dos";
  a.repetitions = 4;
  a.successes = 3;
  a.success_rate = 0.75;
  a.mean_infer_ms = 1234.5;
  a.mean_steal_ms = 1.0 / 3.0;
  a.mean_total_ms = 9999.25;
  a.failures = {{"Timeout", 1}};
  RunStats b = a;
  b.interval_ms = 500;
  b.successes = 0;
  b.success_rate = 0;
  b.mean_infer_ms = b.mean_steal_ms = b.mean_total_ms = 0;
  b.failures = {{"NotVulnerable(RpFilter)", 2}, {"Timeout", 2}};

  std::stringstream jl;
  emit_sweep(jl, {a, b}, ReportFormat::Jsonl);
  CHECK(parse_sweep(jl, ReportFormat::Jsonl) == std::vector<RunStats>{a, b});

  // CSV has no repetition counts; everything else comes back.
  std::stringstream csv;
  emit_sweep(csv, {a, b}, ReportFormat::Csv);
  const auto back = parse_sweep(csv, ReportFormat::Csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].mean_steal_ms == a.mean_steal_ms);
  CHECK(back[1].failures == b.failures);
  CHECK(back[0].success_rate == 0.75);

  std::stringstream empty;
  emit_sweep(empty, {}, ReportFormat::Csv);
  CHECK(empty.str() == "interval_ms,timeout_ms,payload,success_rate,mean_infer_ms,"
                       "mean_steal_ms,mean_total_ms,failures_by_reason\n");
}

TEST_CASE("a small sweep is ordered, deterministic and thread-independent") {
  SweepSpec s;
  s.intervals_ms = {500, 3000};
  s.close_timeouts_ms = {1000};
  s.repetitions = 3;
  s.base_seed = 4;
  s.threads = 1;
  const auto one = run_sweep(s);
  s.threads = 2;
  const auto two = run_sweep(s);
  CHECK(one == two);
  REQUIRE(one.size() == 2);
  CHECK(one[0].interval_ms == 500);
  CHECK(one[0].success_rate == 0.0);
  CHECK(one[1].success_rate == 1.0);
  CHECK(one[1].mean_total_ms >= one[1].mean_infer_ms);
}

TEST_CASE("double formatting is shortest round-trip") {
  CHECK(format_double(0.75) == "0.75");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
