#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "twoway/factor_model.hpp"
#include "twoway/neyman.hpp"
#include "twoway/simulation.hpp"

namespace twoway {

/// Long-format panel: header `i,t,y,x1,...,xK`, one row per cell. Unit and
/// period labels are arbitrary strings, ordered by first appearance. Missing
/// or duplicated cells throw Io.
struct LabeledPanel {
  PanelData data;
  std::vector<std::string> units;
  std::vector<std::string> periods;
};

LabeledPanel read_panel_csv(const std::filesystem::path& path);
void write_panel_csv(const std::filesystem::path& path, const PanelData& data);

/// coef,estimate,se,ci_lower,ci_upper,dfc,estimator
void write_estimate_csv(const std::filesystem::path& path, const EstimateResult& res, double level);
/// r,singular_value,ratio (r is 1-based; the last row has an empty ratio)
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumReport& report);
/// estimator,N,T,rounds,bias,rmse,coverage,mean_se,sd_beta,failures
void write_mc_summary_csv(const std::filesystem::path& path, const std::vector<McRow>& rows);
std::vector<McRow> read_mc_summary_csv(const std::filesystem::path& path);
/// estimator,N,T,round,beta,se,covered,failed
void write_mc_rounds_csv(const std::filesystem::path& path, const std::vector<McRound>& rounds);

/// Shortest round-tripping text for a double (17 significant digits).
std::string format_double(double v);

}  // namespace twoway
