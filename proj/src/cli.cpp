#include "amh/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "amh/calibrate.hpp"
#include "amh/diagnostics.hpp"
#include "amh/errors.hpp"
#include "amh/ingest.hpp"
#include "amh/io.hpp"
#include "amh/models.hpp"
#include "amh/simulate.hpp"

namespace amh {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Raised for bad flags or values after CLI11 has accepted the syntax.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string input;
  int window = 80;
  int lag = 1;
  double alpha = 0.01;
  std::string model;
  int ar_order = 1;
  std::string theta;
  long long length = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string out_dir = ".";
  std::string format = "json";
};

bool debug_logging() {
  const char* v = std::getenv("AMH_LOG");
  return v != nullptr && std::string(v) == "debug";
}

ReturnSeries load_returns(const std::string& path, std::ostream& err) {
  std::vector<std::string> warnings;
  const PriceSeries prices = load_prices(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return log_returns(prices);
}

fs::path output_path(const RunConfig& cfg, const std::string& suffix) {
  return fs::path(cfg.out_dir) / (fs::path(cfg.input).stem().string() + suffix);
}

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ReturnSeries r = load_returns(cfg.input, err);
  const SummaryStats stats = summary_stats(r);
  const Index n = r.size();

  json acf = json::array();
  for (int lag : {1, 5, 10, 15}) {
    if (lag < n) acf.push_back({{"lag", lag}, {"rho", sample_acf(r, lag).rho}});
  }
  json q = json::array();
  bool reject1 = false;
  bool reject5 = false;
  for (int lag = 1; lag <= 20 && lag < n; ++lag) {
    const LjungBoxResult lb = ljung_box(r, lag);
    reject1 = reject1 || lb.p_value < 0.01;
    reject5 = reject5 || lb.p_value < 0.05;
    q.push_back({{"lag", lag}, {"q", lb.q}, {"p_value", lb.p_value}});
  }

  if (cfg.format == "table") {
    const auto fixed = [](double v, int digits) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(digits) << v;
      return s.str();
    };
    const auto opt = [&](const std::optional<double>& v) { return v ? fixed(*v, 5) : std::string("undefined"); };
    out << "Sample size, N  " << stats.n << '\n'
        << "Mean            " << fixed(stats.mean, 5) << '\n'
        << "Median          " << fixed(stats.median, 5) << '\n'
        << "Std             " << fixed(stats.std, 5) << '\n'
        << "Skewness        " << opt(stats.skewness) << '\n'
        << "Kurtosis        " << opt(stats.kurtosis) << '\n';
    for (const auto& a : acf) out << "rho_" << std::left << std::setw(11) << a["lag"].get<int>() << fixed(a["rho"], 4) << '\n';
    for (const auto& row : q) {
      const int lag = row["lag"];
      if (lag == 1 || lag == 5 || lag == 10 || lag == 15) {
        out << "Q(" << lag << ")" << std::string(lag < 10 ? 10 : 9, ' ') << fixed(row["q"], 4) << '\n'
            << "p-value         " << fixed(row["p_value"], 4) << '\n';
      }
    }
    out << "Q-tests up to lag 20: H0 " << (reject5 ? "is rejected for some l" : "is not rejected") << '\n';
    return kExitOk;
  }

  json j = summary_to_json(stats);
  j["acf"] = acf;
  j["ljung_box"] = q;
  j["q_tests_up_to_20"] = {{"rejected_at_1pct", reject1}, {"rejected_at_5pct", reject5}};
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_rolling(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.window < 2) throw UsageError("--window must be >= 2");
  if (cfg.lag < 1 || cfg.lag >= cfg.window) throw UsageError("--lag must satisfy 1 <= lag < window");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  const ReturnSeries r = load_returns(cfg.input, err);
  if (cfg.window > r.size()) {
    throw UsageError("--window " + std::to_string(cfg.window) + " exceeds the " +
                     std::to_string(r.size()) + " available returns");
  }
  const RollingSeries acf = rolling_acf(r, cfg.window, cfg.lag, cfg.alpha);
  const RollingSeries lb = rolling_ljung_box(r, cfg.window, cfg.lag);
  const fs::path acf_path = output_path(cfg, "_rolling_acf.csv");
  const fs::path lb_path = output_path(cfg, "_rolling_lb.csv");
  write_file_atomic(acf_path, render([&](std::ostream& s) { write_rolling_csv(s, acf); }));
  write_file_atomic(lb_path, render([&](std::ostream& s) { write_rolling_csv(s, lb); }));
  out << acf_path.string() << '\n' << lb_path.string() << '\n';
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ModelSpec spec = parse_model_name(cfg.model, cfg.ar_order);
  const ReturnSeries r = mean_adjust(load_returns(cfg.input, err));
  if (r.size() < 30) throw DataError("fit needs at least 30 returns, got " + std::to_string(r.size()));

  FitOptions options;
  if (debug_logging()) options.trace = &err;
  const FitResult res = fit(spec, r, options);
  if (!res.converged) err << "warning: optimizer stopped after " << res.iterations << " iterations\n";
  if (res.floor_hits > 0) err << "warning: variance floor hit " << res.floor_hits << " times\n";

  write_file_atomic(output_path(cfg, "_beta.csv"), render([&](std::ostream& s) { write_beta_csv(s, res); }));
  write_file_atomic(output_path(cfg, "_filter.csv"),
                    render([&](std::ostream& s) { write_filter_csv(s, res.filter, r.dates); }));
  write_file_atomic(output_path(cfg, "_smoothed.csv"),
                    render([&](std::ostream& s) { write_smoothed_csv(s, res.smoothed, res.filter, r.dates); }));
  out << fit_to_json(res).dump(2) << '\n';
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ReturnSeries r = mean_adjust(load_returns(cfg.input, err));
  if (r.size() < 30) throw DataError("compare needs at least 30 returns, got " + std::to_string(r.size()));
  FitOptions options;
  if (debug_logging()) options.trace = &err;
  const std::vector<RankingRow> rows = compare_models(r, standard_specs(), options);
  const std::string csv = render([&](std::ostream& s) { write_ranking_csv(s, rows); });
  if (cfg.out.empty()) {
    out << csv;
  } else {
    write_file_atomic(cfg.out, csv);
  }
  const bool any = std::any_of(rows.begin(), rows.end(), [](const RankingRow& row) { return row.fit.has_value(); });
  for (const auto& row : rows) {
    if (!row.fit) err << model_name(row.spec) << ": " << row.error << '\n';
  }
  return any ? kExitOk : kExitNumerical;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (!cfg.seed) throw UsageError("--seed is required");
  if (cfg.length < 2) throw UsageError("--length must be >= 2");
  const ModelSpec spec = parse_model_name(cfg.model, cfg.ar_order);
  json j;
  try {
    j = json::parse(cfg.theta);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("malformed --theta JSON: ") + e.what());
  }
  const Theta theta = theta_from_json(spec, j);
  const SimOutput sim = simulate(spec, theta, static_cast<Index>(cfg.length), *cfg.seed);
  write_file_atomic(cfg.out, render([&](std::ostream& s) { write_simulation_csv(s, sim); }));
  out << cfg.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-varying weak-form market efficiency: diagnostics and state-space model fits", "amh"};
  app.require_subcommand(1);
  RunConfig cfg;
  const std::string models = "{tvar|garch|garchm|tgarch|agarch}";

  auto* stats = app.add_subcommand("stats", "Summary statistics, autocorrelations and Ljung-Box tests");
  stats->add_option("file", cfg.input, "CSV with header date,close")->required();
  stats->add_option("--format", cfg.format, "json or table")->check(CLI::IsMember({"json", "table"}));

  auto* rolling = app.add_subcommand("rolling", "Rolling-window autocorrelation and Q-test p-values");
  rolling->add_option("file", cfg.input, "CSV with header date,close")->required();
  rolling->add_option("--window", cfg.window, "window length w")->capture_default_str();
  rolling->add_option("--lag", cfg.lag, "autocorrelation lag")->capture_default_str();
  rolling->add_option("--alpha", cfg.alpha, "significance level of the bounds")->capture_default_str();
  rolling->add_option("--out-dir", cfg.out_dir, "directory for the output CSVs")->capture_default_str();

  auto* fitcmd = app.add_subcommand("fit", "Maximum-likelihood fit of one model");
  fitcmd->add_option("file", cfg.input, "CSV with header date,close")->required();
  fitcmd->add_option("--model", cfg.model, "model " + models)->required();
  fitcmd->add_option("--ar-order", cfg.ar_order, "AR order (tvar only)")->capture_default_str();
  fitcmd->add_option("--out-dir", cfg.out_dir, "directory for the output CSVs")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Fit all five models and rank them by AIC");
  compare->add_option("file", cfg.input, "CSV with header date,close")->required();
  compare->add_option("--out", cfg.out, "write the ranking CSV here instead of stdout");

  auto* sim = app.add_subcommand("simulate", "Simulate returns from a model at given parameters");
  sim->add_option("--model", cfg.model, "model " + models)->required();
  sim->add_option("--theta", cfg.theta, "parameters as JSON")->required();
  sim->add_option("--length", cfg.length, "number of returns")->required();
  sim->add_option("--seed", cfg.seed, "generator seed");
  sim->add_option("--ar-order", cfg.ar_order, "AR order (tvar only)")->capture_default_str();
  sim->add_option("--out", cfg.out, "output CSV")->required();

  // CLI11 consumes a vector from the back, without the program name.
  std::vector<std::string> rev;
  if (args.size() > 1) rev.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (stats->parsed()) return cmd_stats(cfg, out, err);
    if (rolling->parsed()) return cmd_rolling(cfg, out, err);
    if (fitcmd->parsed()) return cmd_fit(cfg, out, err);
    if (compare->parsed()) return cmd_compare(cfg, out, err);
    if (sim->parsed()) return cmd_simulate(cfg, out, err);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DegenerateWindow& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FitFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace amh
