// Command-line front end: fitting, benchmarking and truncation studies on top
// of the C engine API. Outputs are CSV files plus a JSON metadata sidecar.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pymix.h"

using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct Options {
  std::string command;
  std::string algorithm = "ics";
  double sigma = 0.0;
  double theta = 1.0;
  double z = 0.5;
  int m = 10;
  long iterations = 1500;
  long burnin = 500;
  std::uint64_t seed = 42;
  int threads = 1;
  long jump_cap = 100000;
  double band = 0.90;
  double grid_min = std::nan("");
  double grid_max = std::nan("");
  int grid_points = 0;  // 0: default per dimension
  std::string input;
  std::string output = "run";
  std::string synthetic;
  int synthetic_n = 200;
  bool standardize = true;
  bool literal_deviance = false;
  // benchmark
  std::vector<std::string> algorithms;
  std::vector<double> sigmas;
  std::vector<double> thetas;
  std::vector<int> ns;
  int replicates = 1;
  int workers = 1;
  // truncation
  int trunc_n = 100;
  int reps = 1000;
  std::uint64_t cap = 100000000ULL;
  std::vector<std::uint64_t> thresholds;
};

struct Dataset {
  std::vector<double> flat;  // row-major n x dim
  std::vector<int> group;    // empty unless a group column was read
  int n = 0;
  int dim = 1;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

Dataset read_csv(const std::string& path, bool with_group) {
  std::ifstream in(path);
  if (!in) throw CliError(PYM_ERR_DATA, "cannot open input file: " + path);
  Dataset ds;
  std::string line;
  int row = 0;
  int cols = -1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (cols < 0) {
      cols = static_cast<int>(cells.size());
      const int data_cols = with_group ? cols - 1 : cols;
      if (with_group && cols < 2)
        throw CliError(PYM_ERR_DATA,
                       "gmddp-ics input needs a leading group column");
      if (data_cols < 1 || data_cols > 2)
        throw CliError(PYM_ERR_DATA,
                       "expected 1 or 2 numeric columns, got " +
                           std::to_string(data_cols));
      ds.dim = data_cols;
    }
    if (static_cast<int>(cells.size()) != cols)
      throw CliError(PYM_ERR_DATA, "row " + std::to_string(row) + ": expected " +
                                       std::to_string(cols) + " columns, got " +
                                       std::to_string(cells.size()));
    int col = 0;
    if (with_group) {
      ++col;
      try {
        std::size_t used = 0;
        ds.group.push_back(std::stoi(cells[0], &used));
        if (used != cells[0].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw CliError(PYM_ERR_DATA, "row " + std::to_string(row) +
                                         ", column 1: '" + cells[0] +
                                         "' is not an integer group label");
      }
    }
    for (; col < cols; ++col) {
      try {
        std::size_t used = 0;
        ds.flat.push_back(std::stod(cells[col], &used));
        if (used != cells[col].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw CliError(PYM_ERR_DATA, "row " + std::to_string(row) +
                                         ", column " + std::to_string(col + 1) +
                                         ": '" + cells[col] + "' is not numeric");
      }
    }
    ++ds.n;
  }
  if (ds.n == 0) throw CliError(PYM_ERR_DATA, "empty input file: " + path);
  return ds;
}

Dataset synthetic_dataset(const Options& opt) {
  if (opt.synthetic != "two-gaussian")
    throw CliError(PYM_ERR_USAGE,
                   "unknown synthetic dataset: " + opt.synthetic);
  Dataset ds;
  ds.n = opt.synthetic_n;
  ds.dim = 1;
  ds.flat.resize(ds.n);
  if (pym_synthetic_two_gaussian(opt.seed, ds.n, ds.flat.data()) != PYM_OK)
    throw CliError(PYM_ERR_USAGE, pym_last_error());
  return ds;
}

struct Standardization {
  std::vector<double> mean;  // per coordinate
  std::vector<double> sd;
};

Standardization standardize(Dataset& ds, bool enabled) {
  Standardization st;
  st.mean.assign(ds.dim, 0.0);
  st.sd.assign(ds.dim, 1.0);
  if (!enabled) return st;
  for (int d = 0; d < ds.dim; ++d) {
    double m = 0.0;
    for (int i = 0; i < ds.n; ++i) m += ds.flat[i * ds.dim + d];
    m /= ds.n;
    double ss = 0.0;
    for (int i = 0; i < ds.n; ++i) {
      const double c = ds.flat[i * ds.dim + d] - m;
      ss += c * c;
    }
    double s = ds.n > 1 ? std::sqrt(ss / (ds.n - 1)) : 1.0;
    if (!(s > 0.0)) s = 1.0;
    st.mean[d] = m;
    st.sd[d] = s;
    for (int i = 0; i < ds.n; ++i)
      ds.flat[i * ds.dim + d] = (ds.flat[i * ds.dim + d] - m) / s;
  }
  return st;
}

// Per-axis grid on the original scale: data range +/- 3 sd by default.
std::vector<double> axis_grid(const Options& opt, const Dataset& ds,
                              const Standardization& st, int d, int points) {
  double lo = opt.grid_min, hi = opt.grid_max;
  if (std::isnan(lo) || std::isnan(hi)) {
    double dmin = 1e300, dmax = -1e300;
    for (int i = 0; i < ds.n; ++i) {
      const double x = ds.flat[i * ds.dim + d] * st.sd[d] + st.mean[d];
      dmin = std::min(dmin, x);
      dmax = std::max(dmax, x);
    }
    // sd on the original scale
    if (std::isnan(lo)) lo = dmin - 3.0 * st.sd[d];
    if (std::isnan(hi)) hi = dmax + 3.0 * st.sd[d];
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
  }
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * i / static_cast<double>(points - 1);
  return g;
}

pym_config make_config(const Options& opt) {
  pym_config cfg;
  pym_config_default(&cfg);
  cfg.algorithm = opt.algorithm.c_str();
  cfg.sigma = opt.sigma;
  cfg.theta = opt.theta;
  cfg.z = opt.z;
  cfg.m = opt.m;
  cfg.iterations = opt.iterations;
  cfg.burnin = opt.burnin;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  cfg.jump_cap = opt.jump_cap;
  cfg.literal_deviance = opt.literal_deviance ? 1 : 0;
  return cfg;
}

json config_json(const Options& opt) {
  return json{{"command", opt.command},
              {"algorithm", opt.algorithm},
              {"sigma", opt.sigma},
              {"theta", opt.theta},
              {"z", opt.z},
              {"m", opt.m},
              {"iterations", opt.iterations},
              {"burnin", opt.burnin},
              {"seed", opt.seed},
              {"threads", opt.threads},
              {"jump_cap", opt.jump_cap},
              {"band_level", opt.band},
              {"standardize", opt.standardize},
              {"deviance", opt.literal_deviance ? "literal" : "log"},
              {"input", opt.input},
              {"synthetic", opt.synthetic},
              {"output", opt.output}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CliError(PYM_ERR_DATA, "cannot write output file: " + path);
  out.precision(17);
  return out;
}

void write_meta(const std::string& path, json meta) {
  auto out = open_out(path);
  meta["version"] = pym_version();
  out << meta.dump(2) << "\n";
}

Dataset load_data(const Options& opt, bool with_group) {
  if (!opt.synthetic.empty()) return synthetic_dataset(opt);
  if (opt.input.empty())
    throw CliError(PYM_ERR_USAGE, "no input file given (use --input or --synthetic)");
  return read_csv(opt.input, with_group);
}

int cmd_fit(const Options& opt) {
  const bool gmddp = opt.algorithm == "gmddp-ics";
  Dataset ds = load_data(opt, gmddp);
  const Standardization st = standardize(ds, opt.standardize);

  const int points = opt.grid_points > 0 ? opt.grid_points
                                         : (ds.dim == 1 ? 512 : 48);
  std::vector<std::vector<double>> axes(ds.dim);
  for (int d = 0; d < ds.dim; ++d) axes[d] = axis_grid(opt, ds, st, d, points);
  // grid rows on the standardized scale fed to the engine
  std::vector<double> grid;
  int grid_n = 0;
  if (ds.dim == 1) {
    grid_n = points;
    for (double x : axes[0]) grid.push_back((x - st.mean[0]) / st.sd[0]);
  } else {
    grid_n = points * points;
    for (int a = 0; a < points; ++a)
      for (int b = 0; b < points; ++b) {
        grid.push_back((axes[0][a] - st.mean[0]) / st.sd[0]);
        grid.push_back((axes[1][b] - st.mean[1]) / st.sd[1]);
      }
  }

  pym_config cfg = make_config(opt);
  int err = PYM_OK;
  pym_fit* fit =
      pym_fit_run(&cfg, ds.flat.data(), ds.n, ds.dim,
                  ds.group.empty() ? nullptr : ds.group.data(), grid.data(),
                  grid_n, &err);
  if (!fit) throw CliError(err, pym_last_error());

  const int retained = pym_fit_retained(fit);
  const int groups = pym_fit_groups(fit);
  double jacobian = 1.0;
  for (int d = 0; d < ds.dim; ++d) jacobian /= st.sd[d];

  // density summary CSV
  {
    auto out = open_out(opt.output + "_density.csv");
    out << (ds.dim == 1 ? "group,x,mean,lower,upper\n"
                        : "group,x1,x2,mean,lower,upper\n");
    std::vector<double> mean(grid_n), lower(grid_n), upper(grid_n);
    for (int l = 0; l < groups; ++l) {
      if (pym_fit_density_summary(fit, l, opt.band, mean.data(), lower.data(),
                                  upper.data()) != PYM_OK) {
        pym_fit_free(fit);
        throw CliError(PYM_ERR_NUMERICAL, pym_last_error());
      }
      for (int g = 0; g < grid_n; ++g) {
        out << l << ',';
        if (ds.dim == 1)
          out << axes[0][g];
        else
          out << axes[0][g / points] << ',' << axes[1][g % points];
        out << ',' << mean[g] * jacobian << ',' << lower[g] * jacobian << ','
            << upper[g] * jacobian << "\n";
      }
    }
  }

  // trace CSV
  {
    auto out = open_out(opt.output + "_trace.csv");
    out << "iteration,k,deviance,seconds\n";
    const int* k = pym_fit_k_trace(fit);
    const double* dev = pym_fit_deviance_trace(fit);
    const double* sec = pym_fit_seconds_trace(fit);
    for (int i = 0; i < retained; ++i)
      out << (opt.burnin + i + 1) << ',' << k[i] << ',' << dev[i] << ','
          << sec[i] << "\n";
  }

  json meta;
  meta["config"] = config_json(opt);
  meta["n"] = ds.n;
  meta["dim"] = ds.dim;
  meta["groups"] = groups;
  meta["retained"] = retained;
  meta["grid_points"] = grid_n;
  meta["cap_hits"] = pym_fit_cap_hits(fit);
  meta["cap_hit_frequency"] =
      retained > 0 ? static_cast<double>(pym_fit_cap_hits(fit)) / retained : 0.0;
  meta["standardize_mean"] = st.mean;
  meta["standardize_sd"] = st.sd;
  const double acc = pym_fit_mh_acceptance(fit);
  if (!std::isnan(acc)) meta["w_mh_acceptance"] = acc;
  write_meta(opt.output + "_meta.json", meta);

  pym_fit_free(fit);
  return 0;
}

struct BenchTask {
  std::string algorithm;
  double sigma = 0.0;
  double theta = 1.0;
  int n = 0;
  int replicate = 0;
};

struct BenchRow {
  BenchTask task;
  double ess_k = std::nan("");
  double ess_dev = std::nan("");
  double seconds = 0.0;
  double time_per_ess = std::nan("");
  double cap_hit_freq = 0.0;
  bool failed = false;
  std::string message;
};

BenchRow run_bench_task(const Options& opt, const BenchTask& task) {
  BenchRow row;
  row.task = task;
  std::vector<double> data(task.n);
  // per-replicate data stream, deterministic in (seed, replicate)
  const std::uint64_t data_seed =
      opt.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(task.replicate);
  if (pym_synthetic_two_gaussian(data_seed, task.n, data.data()) != PYM_OK) {
    row.failed = true;
    row.message = pym_last_error();
    return row;
  }
  pym_config cfg = make_config(opt);
  cfg.algorithm = task.algorithm.c_str();
  cfg.sigma = task.sigma;
  cfg.theta = task.theta;
  cfg.stream_id = static_cast<std::uint64_t>(task.replicate);
  int err = PYM_OK;
  pym_fit* fit = pym_fit_run(&cfg, data.data(), task.n, 1, nullptr, nullptr, 0,
                             &err);
  if (!fit) {
    row.failed = true;
    row.message = pym_last_error();
    return row;
  }
  const int retained = pym_fit_retained(fit);
  const int* k = pym_fit_k_trace(fit);
  std::vector<double> kd(k, k + retained);
  const double* sec = pym_fit_seconds_trace(fit);
  for (int i = 0; i < retained; ++i) row.seconds += sec[i];
  int e1 = PYM_OK, e2 = PYM_OK;
  row.ess_k = pym_ess(kd.data(), retained, &e1);
  row.ess_dev = pym_ess(pym_fit_deviance_trace(fit), retained, &e2);
  if (!std::isnan(row.ess_dev) && row.ess_dev > 0.0)
    row.time_per_ess = row.seconds / row.ess_dev;
  row.cap_hit_freq =
      retained > 0 ? static_cast<double>(pym_fit_cap_hits(fit)) / retained : 0.0;
  pym_fit_free(fit);
  return row;
}

int cmd_benchmark(const Options& opt) {
  if (opt.replicates < 1)
    throw CliError(PYM_ERR_USAGE, "benchmark needs >= 1 replicate");
  auto algorithms = opt.algorithms;
  if (algorithms.empty()) algorithms = {opt.algorithm};
  auto sigmas = opt.sigmas;
  if (sigmas.empty()) sigmas = {opt.sigma};
  auto thetas = opt.thetas;
  if (thetas.empty()) thetas = {opt.theta};
  auto ns = opt.ns;
  if (ns.empty()) ns = {opt.synthetic_n};

  std::vector<BenchTask> tasks;
  for (const auto& a : algorithms)
    for (double s : sigmas)
      for (double t : thetas)
        for (int n : ns)
          for (int r = 0; r < opt.replicates; ++r)
            tasks.push_back({a, s, t, n, r});

  std::vector<BenchRow> rows(tasks.size());
  std::atomic<std::size_t> cursor{0};
  const int workers = std::max(1, opt.workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= tasks.size()) return;
        rows[i] = run_bench_task(opt, tasks[i]);
      }
    });
  for (auto& th : pool) th.join();

  for (const auto& row : rows)
    if (row.failed) throw CliError(PYM_ERR_NUMERICAL, row.message);

  auto out = open_out(opt.output + "_benchmark.csv");
  out << "kind,algorithm,sigma,theta,n,replicate,ess_k,ess_deviance,seconds,"
         "time_per_ess,cap_hit_frequency\n";
  for (const auto& r : rows)
    out << "data," << r.task.algorithm << ',' << r.task.sigma << ','
        << r.task.theta << ',' << r.task.n << ',' << r.task.replicate << ','
        << r.ess_k << ',' << r.ess_dev << ',' << r.seconds << ','
        << r.time_per_ess << ',' << r.cap_hit_freq << "\n";
  // averaged summary block per configuration
  for (const auto& a : algorithms)
    for (double s : sigmas)
      for (double t : thetas)
        for (int n : ns) {
          double ek = 0.0, ed = 0.0, sec = 0.0, tpe = 0.0, chf = 0.0;
          int count = 0;
          for (const auto& r : rows) {
            if (r.task.algorithm != a || r.task.sigma != s ||
                r.task.theta != t || r.task.n != n)
              continue;
            ek += r.ess_k;
            ed += r.ess_dev;
            sec += r.seconds;
            tpe += r.time_per_ess;
            chf += r.cap_hit_freq;
            ++count;
          }
          out << "summary," << a << ',' << s << ',' << t << ',' << n << ','
              << count << ',' << ek / count << ',' << ed / count << ','
              << sec / count << ',' << tpe / count << ',' << chf / count
              << "\n";
        }

  json meta;
  meta["config"] = config_json(opt);
  meta["replicates"] = opt.replicates;
  meta["tasks"] = tasks.size();
  meta["workers"] = workers;
  write_meta(opt.output + "_meta.json", meta);
  return 0;
}

int cmd_truncation(const Options& opt) {
  std::vector<std::uint64_t> thresholds = opt.thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  int err = PYM_OK;
  pym_trunc* t = pym_trunc_run(opt.sigma, opt.theta, opt.trunc_n, opt.reps,
                               thresholds.data(),
                               static_cast<int>(thresholds.size()), opt.cap,
                               opt.seed, &err);
  if (!t) throw CliError(err, pym_last_error());

  {
    auto out = open_out(opt.output + "_draws.csv");
    const bool has_ln = pym_trunc_has_ln(t) != 0;
    out << (has_ln ? "replicate,mn,capped,ln\n" : "replicate,mn,capped\n");
    const double* mn = pym_trunc_mn_draws(t);
    const uint8_t* capped = pym_trunc_mn_capped(t);
    const double* ln = pym_trunc_ln_draws(t);
    for (int i = 0; i < pym_trunc_reps(t); ++i) {
      out << i << ',' << mn[i] << ',' << static_cast<int>(capped[i]);
      if (has_ln) out << ',' << ln[i];
      out << "\n";
    }
  }
  {
    auto out = open_out(opt.output + "_exceedance.csv");
    out << "threshold,mn_exceedance,ln_exceedance,via_proxy\n";
    for (int i = 0; i < pym_trunc_thresholds(t); ++i)
      out << pym_trunc_threshold(t, i) << ',' << pym_trunc_mn_exceedance(t, i)
          << ',' << pym_trunc_ln_exceedance(t, i) << ','
          << pym_trunc_via_proxy(t, i) << "\n";
  }

  json meta;
  meta["config"] = config_json(opt);
  meta["n"] = opt.trunc_n;
  meta["reps"] = opt.reps;
  meta["cap"] = opt.cap;
  meta["thresholds"] = thresholds;
  int el_err = PYM_OK;
  const double el = pym_expected_ln(opt.trunc_n, opt.sigma, opt.theta, &el_err);
  if (el_err == PYM_OK) meta["expected_ln"] = el;
  write_meta(opt.output + "_meta.json", meta);
  pym_trunc_free(t);
  return 0;
}

// flat key=value file; '#' starts a comment
std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(PYM_ERR_USAGE, "cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(PYM_ERR_USAGE, "config file line " + std::to_string(row) +
                                        ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

template <class T>
void from_string(const std::string& key, const std::string& value, T& out) {
  std::stringstream ss(value);
  if constexpr (std::is_same_v<T, bool>) {
    if (value == "true" || value == "1") {
      out = true;
      return;
    }
    if (value == "false" || value == "0") {
      out = false;
      return;
    }
    throw CliError(PYM_ERR_USAGE, "config key " + key + ": expected a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = value;
  } else {
    ss >> out;
    if (ss.fail() || !ss.eof())
      throw CliError(PYM_ERR_USAGE,
                     "config key " + key + ": cannot parse '" + value + "'");
  }
}

void apply_config_file(const std::string& path, Options& opt) {
  auto kv = load_config_file(path);
  auto take = [&](const char* key, auto& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    from_string(key, it->second, field);
    kv.erase(it);
  };
  take("algorithm", opt.algorithm);
  take("sigma", opt.sigma);
  take("theta", opt.theta);
  take("z", opt.z);
  take("m", opt.m);
  take("iterations", opt.iterations);
  take("burnin", opt.burnin);
  take("seed", opt.seed);
  take("threads", opt.threads);
  take("jump_cap", opt.jump_cap);
  take("band", opt.band);
  take("grid_min", opt.grid_min);
  take("grid_max", opt.grid_max);
  take("grid_points", opt.grid_points);
  take("input", opt.input);
  take("output", opt.output);
  take("standardize", opt.standardize);
  take("synthetic", opt.synthetic);
  take("n", opt.synthetic_n);
  if (!kv.empty())
    throw CliError(PYM_ERR_USAGE, "config file: unknown key '" +
                                      kv.begin()->first + "'");
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;

  // the config file provides defaults that explicit flags then override
  std::string config_path;
  for (int i = 1; i < argc - 1; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  try {
    if (!config_path.empty()) apply_config_file(config_path, opt);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  }

  CLI::App app{"Pitman-Yor mixture sampling engine"};
  app.require_subcommand(1);
  std::string ignored;
  app.add_option("--config", ignored, "flat key=value config file");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--algorithm", opt.algorithm,
                    "ics | marginal | slice-dep | slice-indep | gmddp-ics");
    sub->add_option("--sigma", opt.sigma, "discount parameter in [0,1)");
    sub->add_option("--theta", opt.theta, "strength parameter");
    sub->add_option("--z", opt.z, "gmddp idiosyncratic share");
    sub->add_option("--m", opt.m, "auxiliary sample size");
    sub->add_option("--iterations", opt.iterations, "total iterations");
    sub->add_option("--burnin", opt.burnin, "burn-in iterations");
    sub->add_option("--seed", opt.seed, "rng seed");
    sub->add_option("--threads", opt.threads, "threads for the ics sampler");
    sub->add_option("--jump-cap", opt.jump_cap,
                    "per-iteration stick budget for slice samplers");
    sub->add_option("--band", opt.band, "pointwise credible band level");
    sub->add_option("--grid-min", opt.grid_min, "density grid lower edge");
    sub->add_option("--grid-max", opt.grid_max, "density grid upper edge");
    sub->add_option("--grid-points", opt.grid_points, "grid points per axis");
    sub->add_option("--input", opt.input, "input CSV path");
    sub->add_option("--output", opt.output, "output file prefix");
    sub->add_option("--synthetic", opt.synthetic,
                    "built-in dataset name (two-gaussian)");
    sub->add_option("--n", opt.synthetic_n, "synthetic sample size");
    sub->add_flag("--standardize,!--no-standardize", opt.standardize,
                  "standardize data before fitting");
    sub->add_flag("--literal-deviance", opt.literal_deviance,
                  "use the no-log deviance variant");
    sub->add_option("--config", ignored, "flat key=value config file");
  };

  auto* fit = app.add_subcommand("fit", "fit one chain and write summaries");
  add_common(fit);

  auto* bench = app.add_subcommand("benchmark", "replicate timing/ESS study");
  add_common(bench);
  bench->add_option("--algorithms", opt.algorithms, "algorithm list");
  bench->add_option("--sigmas", opt.sigmas, "sigma grid");
  bench->add_option("--thetas", opt.thetas, "theta grid");
  bench->add_option("--ns", opt.ns, "sample-size grid");
  bench->add_option("--replicates", opt.replicates, "replicates per cell");
  bench->add_option("--workers", opt.workers, "parallel worker count");

  auto* trunc = app.add_subcommand("truncation", "stick truncation study");
  add_common(trunc);
  trunc->add_option("--trunc-n", opt.trunc_n, "sample size n");
  trunc->add_option("--reps", opt.reps, "Monte-Carlo replicates");
  trunc->add_option("--cap", opt.cap, "hard cap on stick draws");
  trunc->add_option("--thresholds", opt.thresholds, "exceedance thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : PYM_ERR_USAGE;
  }

  try {
    if (fit->parsed()) {
      opt.command = "fit";
      return cmd_fit(opt);
    }
    if (bench->parsed()) {
      opt.command = "benchmark";
      return cmd_benchmark(opt);
    }
    opt.command = "truncation";
    return cmd_truncation(opt);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return PYM_ERR_NUMERICAL;
  }
}
