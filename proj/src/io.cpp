#include "amh/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "amh/errors.hpp"

namespace amh {

namespace {

using nlohmann::json;

double number_field(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_number()) {
    throw std::invalid_argument(std::string("theta JSON needs numeric field '") + name + "'");
  }
  return j.at(name).get<double>();
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

json theta_to_json(const ModelSpec& spec, const Theta& theta) {
  json j;
  switch (spec.kind) {
    case ModelKind::TVAR:
      if (theta.sigma2_w.size() == 1) {
        j["sigma2_w"] = theta.sigma2_w[0];
      } else {
        j["sigma2_w"] = theta.sigma2_w;
      }
      j["sigma2_eps"] = theta.sigma2_eps;
      return j;
    case ModelKind::GARCH_M: j["delta"] = theta.delta; [[fallthrough]];
    case ModelKind::GARCH11: j["a1"] = theta.a1; break;
    case ModelKind::T_GARCH:
      j["a1_plus"] = theta.a1_plus;
      j["a1_minus"] = theta.a1_minus;
      break;
    case ModelKind::A_GARCH:
      j["a1"] = theta.a1;
      j["a1_plus"] = theta.a1_plus;
      break;
  }
  j["omega"] = theta.omega;
  j["b1"] = theta.b1;
  j["sigma2_w"] = theta.sigma2_w.empty() ? 0.0 : theta.sigma2_w[0];
  return j;
}

Theta theta_from_json(const ModelSpec& spec, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("theta JSON must be an object");
  Theta th;
  if (!j.contains("sigma2_w")) throw std::invalid_argument("theta JSON needs field 'sigma2_w'");
  const json& w = j.at("sigma2_w");
  if (w.is_array()) {
    for (const auto& x : w) {
      if (!x.is_number()) throw std::invalid_argument("sigma2_w entries must be numeric");
      th.sigma2_w.push_back(x.get<double>());
    }
  } else {
    th.sigma2_w = {number_field(j, "sigma2_w")};
  }

  switch (spec.kind) {
    case ModelKind::TVAR: th.sigma2_eps = number_field(j, "sigma2_eps"); return th;
    case ModelKind::GARCH_M: th.delta = number_field(j, "delta"); [[fallthrough]];
    case ModelKind::GARCH11: th.a1 = number_field(j, "a1"); break;
    case ModelKind::T_GARCH:
      th.a1_plus = number_field(j, "a1_plus");
      th.a1_minus = number_field(j, "a1_minus");
      break;
    case ModelKind::A_GARCH:
      th.a1 = number_field(j, "a1");
      th.a1_plus = number_field(j, "a1_plus");
      break;
  }
  th.omega = number_field(j, "omega");
  th.b1 = number_field(j, "b1");
  return th;
}

json summary_to_json(const SummaryStats& s) {
  return json{{"n", s.n},
              {"mean", s.mean},
              {"median", s.median},
              {"std", s.std},
              {"skewness", optional_number(s.skewness)},
              {"kurtosis", optional_number(s.kurtosis)}};
}

json fit_to_json(const FitResult& fit) {
  json se = json::object();
  const auto names = parameter_names(fit.spec);
  for (std::size_t i = 0; i < names.size(); ++i) {
    se[names[i]] = i < fit.std_errors.size() ? optional_number(fit.std_errors[i]) : json(nullptr);
  }
  json beta = json::array();
  for (std::size_t k = 0; k < fit.beta_dates.size(); ++k) {
    beta.push_back({{"date", fit.beta_dates[k].to_string()},
                    {"value", fit.smoothed_beta[static_cast<Eigen::Index>(k)]}});
  }
  return json{{"spec", {{"model", model_name(fit.spec)},
                        {"label", model_label(fit.spec)},
                        {"ar_order", fit.spec.ar_order}}},
              {"theta", theta_to_json(fit.spec, fit.theta)},
              {"log_lf", fit.log_lf},
              {"aic", fit.aic},
              {"std_errors", se},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"floor_hits", fit.floor_hits},
              {"smoothed_beta", beta}};
}

void write_rolling_csv(std::ostream& out, const RollingSeries& series) {
  out << "end_date,stat,lower,upper\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.end_dates[i].to_string() << ',' << cell(series.values[i]) << ','
        << cell(series.lower_bound) << ',' << cell(series.upper_bound) << '\n';
  }
}

namespace {

void write_state_row(std::ostream& out, Index t, const Date& date, const Vector<double>& x,
                     const Matrix<double>& P, double e, double r_e) {
  const Index n = x.size();
  out << t << ',' << date.to_string() << ',' << format_number(x[0]) << ','
      << (n > 1 ? format_number(x[1]) : std::string{}) << ',' << format_number(P(0, 0)) << ','
      << (n > 1 ? format_number(P(1, 1)) : std::string{}) << ',' << format_number(e) << ','
      << format_number(r_e) << '\n';
}

}  // namespace

void write_filter_csv(std::ostream& out, const FilterOutput<double>& fo, const std::vector<Date>& dates) {
  out << "t,end_date,state_0,state_1,p00,p11,e,r_e\n";
  for (const auto& s : fo.steps) {
    write_state_row(out, s.t, dates.at(static_cast<std::size_t>(s.t)), s.x_filt, s.P_filt, s.e, s.r_e);
  }
}

void write_smoothed_csv(std::ostream& out, const SmoothedOutput<double>& so,
                        const FilterOutput<double>& fo, const std::vector<Date>& dates) {
  if (so.x.size() != fo.steps.size()) throw std::invalid_argument("smoothed and filter runs differ in length");
  out << "t,end_date,state_0,state_1,p00,p11,e,r_e\n";
  for (std::size_t k = 0; k < so.x.size(); ++k) {
    const auto& s = fo.steps[k];
    write_state_row(out, so.t[k], dates.at(static_cast<std::size_t>(so.t[k])), so.x[k], so.P[k], s.e, s.r_e);
  }
}

void write_beta_csv(std::ostream& out, const FitResult& fit) {
  out << "date,beta\n";
  for (std::size_t k = 0; k < fit.beta_dates.size(); ++k) {
    out << fit.beta_dates[k].to_string() << ','
        << format_number(fit.smoothed_beta[static_cast<Eigen::Index>(k)]) << '\n';
  }
}

void write_ranking_csv(std::ostream& out, const std::vector<RankingRow>& rows) {
  out << "model,k,log_lf,aic,preferred,error\n";
  for (const auto& row : rows) {
    out << model_name(row.spec) << ',' << row.k << ',';
    if (row.fit) {
      out << format_number(row.fit->log_lf) << ',' << format_number(row.fit->aic);
    } else {
      out << ',';
    }
    std::string error = row.error;
    for (char& c : error) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    out << ',' << (row.preferred ? "true" : "false") << ',' << error << '\n';
  }
}

void write_simulation_csv(std::ostream& out, const SimOutput& sim) {
  out << "t,y,true_beta,true_h\n";
  for (Eigen::Index t = 0; t < sim.returns.size(); ++t) {
    out << t << ',' << format_number(sim.returns.values[t]) << ',' << format_number(sim.true_beta[t])
        << ',' << format_number(sim.true_h[t]) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write '" + tmp.string() + "'");
    f << contents;
    f.flush();
    if (!f) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace amh
