#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "amh/calibrate.hpp"
#include "amh/diagnostics.hpp"
#include "amh/ingest.hpp"
#include "amh/models.hpp"
#include "amh/simulate.hpp"

namespace amh {

/// Shortest text that round-trips the double (17 significant digits at most).
std::string format_number(double value);

/// Theta as JSON with the field subset of the spec's kind. sigma2_w is a
/// scalar for one random-walk coefficient and an array otherwise.
nlohmann::json theta_to_json(const ModelSpec& spec, const Theta& theta);
/// Reads the fields of the spec's kind; throws std::invalid_argument on a
/// missing or non-numeric field.
Theta theta_from_json(const ModelSpec& spec, const nlohmann::json& j);

nlohmann::json summary_to_json(const SummaryStats& stats);
nlohmann::json fit_to_json(const FitResult& fit);

/// `end_date,stat,lower,upper`; undefined values and absent bounds are empty.
void write_rolling_csv(std::ostream& out, const RollingSeries& series);
/// `t,end_date,state_0,state_1,p00,p11,e,r_e` for each filtered step.
void write_filter_csv(std::ostream& out, const FilterOutput<double>& fo, const std::vector<Date>& dates);
/// Same layout as the filter CSV, with e and r_e taken from the filter run.
void write_smoothed_csv(std::ostream& out, const SmoothedOutput<double>& so,
                        const FilterOutput<double>& fo, const std::vector<Date>& dates);
/// `date,beta`
void write_beta_csv(std::ostream& out, const FitResult& fit);
/// `model,k,log_lf,aic,preferred,error`
void write_ranking_csv(std::ostream& out, const std::vector<RankingRow>& rows);
/// `t,y,true_beta,true_h`
void write_simulation_csv(std::ostream& out, const SimOutput& sim);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace amh
