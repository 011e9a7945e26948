#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dapper/all.hpp"

using namespace dapper;
namespace fs = std::filesystem;

namespace {

// "12us", "1.5ms", "2500ps", "48ns", bare numbers are ns.
Time parse_duration(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
  if (i == 0) throw CLI::ValidationError("duration", "bad duration '" + s + "'");
  double v = std::stod(s.substr(0, i));
  std::string unit = s.substr(i);
  if (unit.empty() || unit == "ns") return from_ns(v);
  if (unit == "ps") return Time(std::llround(v));
  if (unit == "us") return from_ns(v * 1e3);
  if (unit == "ms") return from_ns(v * 1e6);
  throw CLI::ValidationError("duration", "unknown unit in '" + s + "'");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string x; std::getline(ss, x, ',');)
    if (!x.empty()) out.push_back(x);
  return out;
}

struct Common {
  std::string config, preset;
  std::vector<std::string> sets;
  std::string tracker, workload;
  std::uint32_t n_rh = 0, windows = 0;
  std::uint64_t seed = 0, activations = 0;

  void add(CLI::App* app, bool single) {
    app->add_option("-c,--config", config, "key = value config file");
    app->add_option("--preset", preset, "desk | full")->check(CLI::IsMember({"desk", "full"}));
    app->add_option("-s,--set", sets, "override any config key (key=value), repeatable");
    if (single) {
      app->add_option("--tracker", tracker, "tracker kind");
      app->add_option("--workload", workload, "workload kind");
      app->add_option("--n-rh", n_rh, "RowHammer threshold");
      app->add_option("--seed", seed, "experiment seed");
    }
    app->add_option("--windows", windows, "refresh windows to simulate");
    app->add_option("--activations", activations, "bound the run by activation count instead");
  }

  // Preset, then file, then --set, then dedicated flags.
  ExperimentConfig build(const CLI::App* app) const {
    ExperimentConfig c;
    if (!preset.empty()) apply_preset(c, preset);
    if (!config.empty()) c = load_config(config, c);
    for (auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_key(c, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    if (!tracker.empty()) set_config_key(c, "tracker", tracker);
    if (!workload.empty()) set_config_key(c, "workload", workload);
    if (n_rh) c.n_rh = n_rh;
    if (auto* opt = app->get_option_no_throw("--seed"); opt && opt->count()) c.seed = seed;
    if (windows) c.duration_windows = windows;
    if (activations) c.activations = activations;
    c.validate();
    return c;
  }
};

std::string out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* e = std::getenv("DAPPER_OUT_DIR"); e && *e) return e;
  return "";
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << text;
}

int cmd_run(const Common& o, const CLI::App* app, const std::string& dir, const std::string& csv, bool quiet,
            const std::string& log) {
  ExperimentConfig c = o.build(app);
  if (!log.empty()) c.command_log = log;
  RunResult r = run_experiment(c);
  if (!quiet) write_text(r, std::cout);
  std::ostringstream table;
  write_csv({r}, table);
  std::string d = out_dir(dir);
  if (!csv.empty()) write_file(csv, table.str());
  else if (!d.empty()) write_file(fs::path(d) / (hex64(config_hash(c)) + ".csv"), table.str());
  if (quiet || !csv.empty() || !d.empty()) std::cout << table.str();
  if (!r.error.empty()) {
    std::cerr << "run failed: " << r.error << '\n';
    return 1;
  }
  return r.report.security_violation ? 2 : 0;
}

int cmd_sweep(const Common& o, const CLI::App* app, const std::string& trackers, const std::string& workloads,
              const std::string& n_rhs, const std::string& seeds, unsigned jobs, const std::string& dir,
              const std::string& csv) {
  ExperimentConfig base = o.build(app);
  std::vector<std::string> ts = trackers.empty() ? std::vector<std::string>{std::string(to_string(base.tracker))}
                                                 : split(trackers);
  std::vector<std::string> ws = workloads.empty() ? std::vector<std::string>{std::string(to_string(base.wp.kind))}
                                                  : split(workloads);
  std::vector<std::string> ns = n_rhs.empty() ? std::vector<std::string>{std::to_string(base.n_rh)} : split(n_rhs);
  std::vector<std::string> ss = seeds.empty() ? std::vector<std::string>{std::to_string(base.seed)} : split(seeds);
  std::vector<ExperimentConfig> plan;
  for (auto& t : ts)
    for (auto& w : ws)
      for (auto& n : ns)
        for (auto& s : ss) {
          ExperimentConfig c = base;
          set_config_key(c, "tracker", t);
          set_config_key(c, "workload", w);
          set_config_key(c, "n_rh", n);
          set_config_key(c, "seed", s);
          c.command_log.clear();
          c.validate();
          plan.push_back(c);
        }
  auto results = sweep(plan, jobs ? jobs : std::max(1u, std::thread::hardware_concurrency()));
  std::ostringstream table;
  write_csv(results, table);
  std::string d = out_dir(dir);
  if (!csv.empty()) write_file(csv, table.str());
  else if (!d.empty()) {
    for (auto& r : results) {
      std::ostringstream one;
      write_csv({r}, one);
      write_file(fs::path(d) / (hex64(config_hash(r.config)) + ".csv"), one.str());
    }
    write_file(fs::path(d) / "sweep.csv", table.str());
  }
  std::cout << table.str();
  bool violated = false;
  for (auto& r : results) {
    if (!r.error.empty()) std::cerr << "config " << hex64(config_hash(r.config)) << " failed: " << r.error << '\n';
    violated |= r.report.security_violation;
  }
  return violated ? 2 : 0;
}

int cmd_analyze(const std::string& table, const std::string& t_resets, const std::string& t_rrd_s, bool fit,
                std::uint32_t n_m, std::uint64_t groups, std::uint64_t trials) {
  if (table == "dapper-s-vuln") {
    std::vector<Time> rs;
    for (auto& s : split(t_resets)) rs.push_back(parse_duration(s));
    AttackModelParams p;
    p.n_m = n_m;
    p.n_rg = groups;
    p.t_rrd_s = parse_duration(t_rrd_s);
    write_vuln_table(vulnerability_table(rs, p), p.t_rrd_s, std::cout);
    if (fit) {
      TrrdFit f = fit_t_rrd_s(rs, p, from_ns(2.5), from_ns(4.0), 10);
      std::cout << "\nbest t_rrd_s in [2.5, 4.0] ns: " << format_ns(f.t_rrd_s) << " (worst ratio "
                << f.worst_ratio << ")\n";
      p.t_rrd_s = f.t_rrd_s;
      write_vuln_table(vulnerability_table(rs, p), p.t_rrd_s, std::cout);
    }
    return 0;
  }
  if (table == "dapper-h-capture") {
    CaptureHResult r = capture_success_h(groups, trials);
    std::cout << "groups_per_table   " << groups << "\ntrials             " << trials << "\np_trial            "
              << r.p_trial << "\np_success          " << r.p_s << "\nprevention         " << (1 - r.p_s) << '\n';
    return 0;
  }
  if (table == "storage") {
    ExperimentConfig c;
    StorageOverhead s = storage_overhead(c.geometry, c.tp.group_size);
    std::cout << "groups_per_table   " << s.groups << "\ntable_bytes        " << s.table_bytes
              << "\nbitvector_bytes    " << s.bitvector_bytes << "\nper_rank_bytes     " << s.per_rank
              << "\nper_32gb_bytes     " << s.per_32gb << " (" << s.per_32gb / 1024 << " KiB)\n";
    return 0;
  }
  if (table == "streaming") {
    ExperimentConfig c;
    std::cout << "streaming_bound    " << streaming_bound(c.geometry, c.timing, c.tp.group_size) << '\n';
    return 0;
  }
  std::cerr << "unknown table '" << table << "'\n";
  return 1;
}

int cmd_audit(const Common& o, const CLI::App* app, const std::string& log, bool no_refresh) {
  ExperimentConfig c = o.build(app);
  AuditOptions opt;
  opt.check_refresh = !no_refresh && c.auto_refresh;
  AuditResult r = audit_log_file(log, c.geometry, c.timing, opt);
  std::cout << "acts " << r.acts << " refs " << r.refs << " blocks " << r.blocks << " windows_checked "
            << r.windows_checked << '\n';
  for (auto& e : r.errors) std::cout << "  " << e << '\n';
  std::cout << (r.ok ? "PASS" : "FAIL") << '\n';
  return r.ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRAM RowHammer tracker simulator"};
  app.require_subcommand(1);

  Common run_o, sweep_o, audit_o, cfg_o;
  std::string run_dir, run_csv, run_log;
  bool run_quiet = false;
  auto* run = app.add_subcommand("run", "simulate one experiment");
  run_o.add(run, true);
  run->add_option("-o,--out-dir", run_dir, "directory for <config_hash>.csv (default $DAPPER_OUT_DIR)");
  run->add_option("--csv", run_csv, "write the CSV row here");
  run->add_option("--command-log", run_log, "write the command log here");
  run->add_flag("-q,--quiet", run_quiet, "CSV only");

  std::string sw_trackers, sw_workloads, sw_nrh, sw_seeds, sw_dir, sw_csv;
  unsigned sw_jobs = 0;
  auto* sw = app.add_subcommand("sweep", "cross product of trackers x workloads x n_rh x seeds");
  sweep_o.add(sw, false);
  sw->add_option("--trackers", sw_trackers, "comma list");
  sw->add_option("--workloads", sw_workloads, "comma list");
  sw->add_option("--n-rh", sw_nrh, "comma list");
  sw->add_option("--seeds", sw_seeds, "comma list");
  sw->add_option("-j,--jobs", sw_jobs, "parallel runs (default: hardware threads)");
  sw->add_option("-o,--out-dir", sw_dir, "directory for per-config CSVs and sweep.csv");
  sw->add_option("--csv", sw_csv, "write the combined CSV here");

  std::string an_table, an_resets = "12us,24us,36us", an_trrd = "2.5ns";
  bool an_fit = false;
  std::uint32_t an_nm = 250;
  std::uint64_t an_groups = 8192, an_trials = 2500;
  auto* an = app.add_subcommand("analyze", "closed-form tables");
  an->add_option("--table", an_table, "dapper-s-vuln | dapper-h-capture | storage | streaming")->required();
  an->add_option("--t-reset", an_resets, "comma list of reset periods");
  an->add_option("--t-rrd-s", an_trrd, "tRRD_S for the vulnerability table");
  an->add_flag("--fit", an_fit, "also search tRRD_S in [2.5, 4.0] ns");
  an->add_option("--n-m", an_nm, "mitigation threshold");
  an->add_option("--groups", an_groups, "groups per table (N)");
  an->add_option("--trials", an_trials, "trials (T)");

  std::string au_log;
  bool au_norefresh = false;
  auto* au = app.add_subcommand("audit", "check a command log for timing legality");
  audit_o.add(au, false);
  au->add_option("log", au_log, "command log")->required();
  au->add_flag("--no-refresh-check", au_norefresh, "skip REF completeness");

  auto* cf = app.add_subcommand("config", "print the effective config");
  cfg_o.add(cf, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_o, run, run_dir, run_csv, run_quiet, run_log);
    if (*sw) return cmd_sweep(sweep_o, sw, sw_trackers, sw_workloads, sw_nrh, sw_seeds, sw_jobs, sw_dir, sw_csv);
    if (*an) return cmd_analyze(an_table, an_resets, an_trrd, an_fit, an_nm, an_groups, an_trials);
    if (*au) return cmd_audit(audit_o, au, au_log, au_norefresh);
    if (*cf) {
      std::cout << serialize_config(cfg_o.build(cf));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
