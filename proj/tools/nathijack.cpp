#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nathijack/experiments.hpp"

using namespace nathijack;

namespace {

#ifndef NATHIJACK_DATA_DIR
#define NATHIJACK_DATA_DIR "data"
#endif

constexpr int kUsage = 2;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path);
  return out;
}

int cmd_matrix(const std::string& profiles, const std::string& out_path, const std::string& format,
               PayloadKind payload, std::uint64_t seed, int threads) {
  const ProfileSet set = load_profiles(profiles);
  const auto runs = run_matrix(set, payload, seed, threads);
  std::vector<MatrixRow> rows;
  std::size_t agree = 0, simulated = 0;
  for (const auto& r : runs) {
    rows.push_back(r.row);
    agree += r.row.agreement;
    simulated += r.row.simulated;
    if (!r.row.agreement) {
      std::cerr << "mismatch: " << r.row.profile << " expected "
                << (r.row.predicted ? "vulnerable" : "immune") << ", got " << r.result.label() << '\n';
    }
  }
  auto out = open_out(out_path);
  emit_matrix(out, rows, parse_format(format));
  std::cout << rows.size() << " profiles, " << simulated << " vulnerable, " << agree
            << " agree\n";
  return agree == rows.size() ? 0 : 1;
}

int cmd_attack(const std::string& profiles, const std::string& name, const std::string& payload,
               TimeMs interval, std::uint64_t seed, const std::string& trace_path) {
  const ProfileSet set = load_profiles(profiles);
  const ProfileEntry* e = set.find(name);
  if (!e) {
    std::cerr << "no profile named '" << name << "' in " << profiles << '\n';
    return kUsage;
  }
  ScenarioConfig cfg;
  cfg.profile = e->profile;
  cfg.payload = parse_payload(payload);
  cfg.victim_traffic = TrafficModel::fixed(interval);
  cfg.seed = seed;
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace = open_out(trace_path);
    cfg.trace = &trace;
  }
  const ScenarioResult r = run_scenario(cfg);
  const AttackReport& rep = r.report;
  std::cout << "profile " << name << '\n'
            << "payload " << payload << '\n'
            << "outcome " << r.label() << '\n';
  if (rep.inference.confirmed) std::cout << "victim_port " << *rep.inference.confirmed << '\n';
  if (rep.credentials) {
    std::cout << "credentials seq=" << rep.credentials->seq << " ack=" << rep.credentials->ack
              << " at=" << rep.credentials->obtained_at << '\n';
  }
  for (const auto& [phase, ms] : rep.phase_times) std::cout << "phase " << to_string(phase) << ' ' << ms << '\n';
  std::cout << "evict_attempts " << rep.evict_attempts << '\n'
            << "packets_sent " << rep.packets_sent << '\n'
            << "ended_at_ms " << r.ended_at << '\n';
  return r.success() ? 0 : 1;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_path, const std::string& format) {
  SweepSpec spec = load_sweep_spec(spec_path);
  if (!format.empty()) spec.format = parse_format(format);
  const auto rows = run_sweep(spec);
  auto out = open_out(out_path);
  emit_sweep(out, rows, spec.format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NAT Wi-Fi TCP hijacking simulator"};
  app.require_subcommand(1);

  std::string profiles = std::string(NATHIJACK_DATA_DIR) + "/profiles_table1.txt";
  std::string out_path, format = "csv", payload = "dos", name, trace, spec, sweep_format;
  std::uint64_t seed = 1;
  int threads = 1;
  TimeMs interval = 60'000;

  auto* matrix = app.add_subcommand("matrix", "run every profile and compare with its expected verdict");
  matrix->add_option("--profiles", profiles, "profile file")->required()->check(CLI::ExistingFile);
  matrix->add_option("--out", out_path, "report file")->required();
  matrix->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  matrix->add_option("--payload", payload)->check(CLI::IsMember({"dos", "hijack", "inject", "remote-dos"}));
  matrix->add_option("--seed", seed);
  matrix->add_option("--threads", threads)->check(CLI::Range(1, 256));

  auto* attack = app.add_subcommand("attack", "one end-to-end attack");
  attack->add_option("--profiles", profiles, "profile file")->check(CLI::ExistingFile);
  attack->add_option("--profile", name, "profile name")->required();
  attack->add_option("--payload", payload)->required()->check(CLI::IsMember({"dos", "hijack", "inject", "remote-dos"}));
  attack->add_option("--interval-ms", interval, "victim request interval")->required()->check(CLI::PositiveNumber);
  attack->add_option("--seed", seed)->required();
  attack->add_option("--trace", trace, "write a packet trace (TSV)");

  auto* sweep = app.add_subcommand("sweep", "interval x close-timeout grid");
  sweep->add_option("--spec", spec, "JSON sweep spec")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_path, "report file")->required();
  sweep->add_option("--format", sweep_format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*matrix) return cmd_matrix(profiles, out_path, format, parse_payload(payload), seed, threads);
    if (*attack) return cmd_attack(profiles, name, payload, interval, seed, trace);
    if (*sweep) return cmd_sweep(spec, out_path, sweep_format);
  } catch (const ProfileParseError& e) {
    std::cerr << "profile file: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
