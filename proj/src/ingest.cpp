#include "amh/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "amh/errors.hpp"

namespace amh {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_close(std::string_view field, std::size_t row) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    throw DataError("parse failure at row " + std::to_string(row) + ": bad close '" +
                    std::string(field) + "'");
  }
  return value;
}

}  // namespace

void PriceSeries::validate() const {
  if (static_cast<Eigen::Index>(dates.size()) != closes.size()) {
    throw DataError("dates and closes differ in length");
  }
  if (closes.size() < 2) throw DataError("price series needs at least 2 rows");
  for (Eigen::Index i = 0; i < closes.size(); ++i) {
    if (!(closes[i] > 0.0) || !std::isfinite(closes[i])) {
      throw DataError("non-positive price at row " + std::to_string(i + 1));
    }
    if (i > 0 && !(dates[i - 1] < dates[i])) throw DataError("non-monotone dates");
  }
}

PriceSeries parse_prices(std::istream& in, std::vector<std::string>* warnings) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty input: missing header");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  if (trim(line) != "date,close") {
    throw DataError("expected header 'date,close', got '" + std::string(trim(line)) + "'");
  }

  std::vector<Date> dates;
  std::vector<double> closes;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    auto view = trim(line);
    if (view.empty()) continue;
    ++row;
    const auto comma = view.find(',');
    if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
      throw DataError("parse failure at row " + std::to_string(row) + ": expected 2 fields");
    }
    Date date;
    try {
      date = Date::parse(trim(view.substr(0, comma)));
    } catch (const std::invalid_argument& e) {
      throw DataError("parse failure at row " + std::to_string(row) + ": " + e.what());
    }
    const double close = parse_close(trim(view.substr(comma + 1)), row);
    if (!(close > 0.0)) throw DataError("non-positive price at row " + std::to_string(row));
    if (!dates.empty()) {
      if (!(dates.back() < date)) throw DataError("non-monotone dates at row " + std::to_string(row));
      const long gap = date.serial() - dates.back().serial();
      if (warnings && (gap < 20 || gap > 45)) {
        warnings->push_back("irregular spacing of " + std::to_string(gap) + " days before row " +
                            std::to_string(row));
      }
    }
    dates.push_back(date);
    closes.push_back(close);
  }

  PriceSeries series;
  series.dates = std::move(dates);
  series.closes = Eigen::Map<const Eigen::VectorXd>(closes.data(), static_cast<Eigen::Index>(closes.size()));
  series.validate();
  return series;
}

PriceSeries load_prices(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_prices(in, warnings);
}

ReturnSeries log_returns(const PriceSeries& prices) {
  prices.validate();
  const Eigen::Index n = prices.size() - 1;
  ReturnSeries r;
  r.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  // Scalar std::log: the vectorized path can differ by an ulp between lanes,
  // which would turn equal prices into non-zero returns.
  Eigen::VectorXd logs(prices.size());
  for (Eigen::Index i = 0; i < logs.size(); ++i) logs[i] = std::log(prices.closes[i]);
  r.values = logs.tail(n) - logs.head(n);
  return r;
}

ReturnSeries mean_adjust(const ReturnSeries& returns) {
  if (returns.mean_adjusted) throw std::invalid_argument("returns are already mean-adjusted");
  if (returns.size() == 0) throw std::invalid_argument("cannot mean-adjust an empty series");
  ReturnSeries out = returns;
  out.values.array() -= returns.values.mean();
  out.mean_adjusted = true;
  return out;
}

SummaryStats summary_stats(const ReturnSeries& returns) { return summary_stats(returns.values); }

SummaryStats summary_stats(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw std::invalid_argument("summary statistics need at least 2 observations");

  SummaryStats s;
  s.n = n;
  s.mean = values.mean();

  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const auto half = static_cast<std::size_t>(n / 2);
  s.median = (n % 2 == 1) ? sorted[half] : 0.5 * (sorted[half - 1] + sorted[half]);

  const Eigen::ArrayXd centered = values.array() - s.mean;
  const double m2 = centered.square().mean();
  s.std = std::sqrt(centered.square().sum() / static_cast<double>(n - 1));
  // Rounding noise around a constant series is treated as zero variance.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * values.cwiseAbs().maxCoeff();
  if (m2 > noise * noise) {
    const double m3 = centered.cube().mean();
    const double m4 = centered.square().square().mean();
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  }
  return s;
}

}  // namespace amh
