#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "nathijack/experiments.hpp"

using namespace nathijack;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ProfileSet table1() { return load_profiles(NATHIJACK_DATA_DIR "/profiles_table1.txt"); }
ProfileSet appendix() { return load_profiles(NATHIJACK_DATA_DIR "/profiles_appendix.txt"); }

RouterProfile profile(const ProfileSet& set, const char* name) {
  const ProfileEntry* e = set.find(name);
  if (!e) {
    std::fprintf(stderr, "missing profile %s\n", name);
    std::exit(3);
  }
  return e->profile;
}

void matrix() {
  const auto t0 = Clock::now();
  const auto a = run_matrix(table1());
  const auto b = run_matrix(appendix());
  const double secs = seconds_since(t0);
  std::size_t agree_a = 0, agree_b = 0, vuln_b = 0;
  for (const auto& r : a) agree_a += r.row.agreement;
  for (const auto& r : b) {
    agree_b += r.row.agreement;
    vuln_b += r.row.simulated;
  }
  const bool pass = a.size() == 33 && agree_a == 33 && b.size() == 67 && agree_b == 67 &&
                    vuln_b == 52 && secs < 10.0;
  verdict(1, "vulnerability matrix", pass,
          fmt("table %zu/%zu agree; extended %zu/%zu agree, %zu vulnerable; %.2fs", agree_a, a.size(),
              agree_b, b.size(), vuln_b, secs));
}

void ablation() {
  const RouterProfile base = profile(table1(), "TL-XDR6020");
  const auto run = [](const RouterProfile& p) {
    ScenarioConfig cfg;
    cfg.profile = p;
    cfg.victim_traffic = TrafficModel::fixed(4 * p.close_timeout_ms);
    cfg.seed = 11;
    return run_scenario(cfg);
  };
  RouterProfile random = base, rp = base, window = base;
  random.strategy = PortStrategy::RandomSelection;
  rp.rp_filter = RpFilterMode::Strict;
  window.window_mode = WindowTrackingMode::Strict;
  const auto r0 = run(base), r1 = run(random), r2 = run(rp), r3 = run(window);
  const auto is = [](const ScenarioResult& r, NotVulnerableReason why) {
    return r.outcome == Outcome::NotVulnerable && r.reason == why;
  };
  const bool pass = r0.success() && is(r1, NotVulnerableReason::PortStrategy) &&
                    is(r2, NotVulnerableReason::RpFilter) && is(r3, NotVulnerableReason::WindowTracking);
  verdict(2, "condition ablation", pass,
          "base " + r0.label() + "; strategy " + r1.label() + "; rp_filter " + r2.label() +
              "; window " + r3.label());
}

// Router-level: a live mapping with a known inbound sequence number, then
// the blind reset plan, then one close timeout.
bool evicts(WindowTrackingMode mode, std::uint32_t current_seq, std::uint32_t x) {
  RouterProfile p;
  p.window_mode = mode;
  p.close_timeout_ms = 1000;
  Router router(p, x);
  const SockAddr victim{IpAddr{192, 168, 1, 10}, 40000};
  const SockAddr server{IpAddr{198, 51, 100, 20}, 22};
  TcpSegment syn{victim, server, kSyn};
  if (router.ingress_lan(syn, 0).kind != ForwardDecision::Kind::DeliverWan) return false;
  TcpSegment synack{server, SockAddr{p.external_ip, 40000}, TcpFlags(kSyn | kAck)};
  synack.seq = current_seq - 1;
  router.ingress_wan(synack, 10);
  TcpSegment data{server, SockAddr{p.external_ip, 40000}, TcpFlags(kPsh | kAck)};
  data.seq = current_seq;
  data.payload_len = 1;
  router.ingress_wan(data, 20);
  for (std::uint32_t seq : EvictionPlan::make(mode, x, 1000).rst_seqs) {
    TcpSegment rst{server, SockAddr{p.external_ip, 40000}, kRst};
    rst.seq = seq;
    router.ingress_wan(rst, 30);
  }
  router.conntrack().purge_expired(30 + 1000);
  return router.conntrack().lookup_outbound(syn, 30 + 1000) == nullptr;
}

void eviction() {
  std::mt19937_64 rng(20240501);
  int nocheck = 0, liberal = 0;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    const auto cur = static_cast<std::uint32_t>(rng());
    const auto x = static_cast<std::uint32_t>(rng());
    nocheck += evicts(WindowTrackingMode::NoCheck, cur, x);
    liberal += evicts(WindowTrackingMode::Liberal2G, cur, x);
  }
  verdict(3, "eviction property", nocheck == n && liberal == n,
          fmt("single RST under NoCheck %d/%d; pair under Liberal2G %d/%d", nocheck, n, liberal, n));
}

void theft() {
  const ProfileSet set = appendix();
  std::vector<ProfileEntry> vulnerable;
  for (const auto& e : set.profiles) {
    if (e.expected_vulnerable) vulnerable.push_back(e);
  }
  int successes = 0, exact = 0;
  const int runs = 1000;
  for (int i = 0; i < runs; ++i) {
    const RouterProfile& p = vulnerable[static_cast<std::size_t>(i) % vulnerable.size()].profile;
    ScenarioConfig cfg;
    cfg.profile = p;
    cfg.payload = i % 2 == 0 ? PayloadKind::Dos : PayloadKind::Hijack;
    cfg.victim_traffic = TrafficModel::fixed(4 * p.close_timeout_ms);
    cfg.seed = 5000 + static_cast<std::uint64_t>(i);
    const ScenarioResult r = run_scenario(cfg);
    if (r.report.credentials) {
      ++successes;
      exact += r.credentials_exact;
    }
  }
  verdict(4, "theft exactness", successes > 0 && exact == successes,
          fmt("%d/%d stolen credentials match the server endpoint (%d/%d runs reached theft)", exact,
              successes, successes, runs));
}

void interval_law() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool pass = true;
  const auto row = [&](TimeMs timeout, std::vector<TimeMs> intervals) {
    SweepSpec spec;
    spec.intervals_ms = std::move(intervals);
    spec.close_timeouts_ms = {timeout};
    spec.payload = PayloadKind::Dos;
    spec.repetitions = 20;
    spec.base_seed = 900;
    spec.threads = 0;
    const auto stats = run_sweep(spec);
    double prev = -1.0;
    detail << "T=" << timeout << ":";
    for (const auto& s : stats) {
      detail << ' ' << s.interval_ms << "->" << format_double(s.success_rate);
      if (s.success_rate < prev) pass = false;
      prev = s.success_rate;
      if (s.interval_ms <= timeout && s.success_rate != 0.0) pass = false;
      if (s.interval_ms >= timeout + std::max<TimeMs>(1000, timeout / 5) && s.success_rate < 0.95) pass = false;
    }
    detail << "; ";
  };
  row(1000, {250, 500, 1000, 2000, 3000, 4000});
  row(10000, {5000, 8000, 10000, 12000, 16000, 20000});
  const double secs = seconds_since(t0);
  if (secs >= 60.0) pass = false;
  detail << fmt("%.1fs", secs);
  verdict(5, "interval/timeout law", pass, detail.str());
}

void port_inference() {
  const RouterProfile p = profile(table1(), "TL-XDR6020");
  std::mt19937_64 rng(777);
  int exact = 0, absent = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    ScenarioConfig cfg;
    cfg.profile = p;
    cfg.stop_after_inference = true;
    cfg.prioritize_ephemeral = false;
    cfg.victim_traffic = TrafficModel::fixed(600'000);
    cfg.victim_port = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1024, 65535)(rng));
    cfg.seed = 30'000 + static_cast<std::uint64_t>(i);
    const ScenarioResult r = run_scenario(cfg);
    exact += r.mapped_victim_port && r.report.inference.confirmed == r.mapped_victim_port;

    ScenarioConfig control = cfg;
    control.victim_connects = false;
    const ScenarioResult c = run_scenario(control);
    absent += !c.report.inference.confirmed && c.outcome == Outcome::NoConnectionFound;
  }
  verdict(6, "port inference oracle", exact == n && absent == n,
          fmt("%d/%d inferred ports equal the conntrack entry; %d/%d controls absent", exact, n, absent, n));
}

void ap_isolation() {
  RouterProfile p = profile(table1(), "TL-XDR6020");
  p.ap_isolation = true;
  int ok[3] = {0, 0, 0};
  const PayloadKind kinds[3] = {PayloadKind::Dos, PayloadKind::Hijack, PayloadKind::Inject};
  const int n = 100;
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < n; ++i) {
      ScenarioConfig cfg;
      cfg.profile = p;
      cfg.payload = kinds[k];
      cfg.victim_traffic = TrafficModel::fixed(60'000);
      cfg.seed = 40'000 + static_cast<std::uint64_t>(i);
      const ScenarioResult r = run_scenario(cfg);
      if (kinds[k] == PayloadKind::Inject) {
        ok[k] += r.outcome == Outcome::NotVulnerable && r.reason == NotVulnerableReason::ApIsolation;
      } else {
        ok[k] += r.success();
      }
    }
  }
  verdict(7, "AP isolation split", ok[0] >= 95 && ok[1] >= 95 && ok[2] == n,
          fmt("dos %d/%d, hijack %d/%d succeed; inject NotVulnerable(ApIsolation) %d/%d", ok[0], n,
              ok[1], n, ok[2], n));
}

void remote_dos() {
  const ProfileSet set = table1();
  const auto rate = [](const RouterProfile& p) {
    int ok = 0;
    for (int i = 0; i < 100; ++i) {
      ScenarioConfig cfg;
      cfg.profile = p;
      cfg.payload = PayloadKind::RemoteDos;
      cfg.victim_traffic = TrafficModel::fixed(120'000);
      cfg.seed = 50'000 + static_cast<std::uint64_t>(i);
      ok += run_scenario(cfg).success();
    }
    return ok;
  };
  const int open = rate(profile(set, "TL-XDR6020"));
  const int strict = rate(profile(set, "Cisco Meraki 64"));
  verdict(8, "remote DoS", open == 100 && strict == 0,
          fmt("NoCheck %d/100 terminated; Strict %d/100", open, strict));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void determinism() {
  const std::string dir = NATHIJACK_WORK_DIR;
  const std::string cli = NATHIJACK_CLI;
  {
    std::ofstream spec(dir + "/acc_sweep.json");
    spec << R"({"intervals_ms":[500,2000],"close_timeouts_ms":[1000],"payload":"hijack","repetitions":3,"base_seed":7})";
  }
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"matrix --profiles " NATHIJACK_DATA_DIR "/profiles_table1.txt --format csv --out ", ".csv"},
      {"matrix --profiles " NATHIJACK_DATA_DIR "/profiles_appendix.txt --format jsonl --out ", ".jsonl"},
      {"sweep --spec " + dir + "/acc_sweep.json --out ", ".csv"},
      {"attack --profile TL-XDR6020 --payload inject --interval-ms 8000 --seed 4 --trace ", ".tsv"},
  };
  int same = 0;
  std::string notes;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    std::string outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const std::string file = dir + "/acc_det_" + std::to_string(i) + "_" + std::to_string(rep) + cmds[i].second;
      const std::string log = file + ".stdout";
      const std::string line = cli + " " + cmds[i].first + file + " > " + log + " 2>&1";
      const int rc = std::system(line.c_str());
      outputs[rep] = std::to_string(rc) + "\n" + slurp(file) + slurp(log);
    }
    const bool eq = outputs[0] == outputs[1] && outputs[0].size() > 40;
    same += eq;
    if (!eq) notes += " differs:" + std::to_string(i);
  }
  verdict(9, "determinism", same == static_cast<int>(cmds.size()),
          fmt("%d/%zu CLI commands byte-identical across two executions", same, cmds.size()) + notes);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const auto want = [&](const char* id) { return only.empty() || only == id; };
  if (want("1")) matrix();
  if (want("2")) ablation();
  if (want("3")) eviction();
  if (want("4")) theft();
  if (want("5")) interval_law();
  if (want("6")) port_inference();
  if (want("7")) ap_isolation();
  if (want("8")) remote_dos();
  if (want("9")) determinism();
  return failures == 0 ? 0 : 1;
}
