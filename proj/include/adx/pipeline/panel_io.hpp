#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adx/econ/panel.hpp"

namespace adx::pipeline {

// Fixed leading columns of a panel file. Any further columns are numeric
// extras; tags are semicolon-separated labels.
inline constexpr const char* kPanelColumns[] = {"site_id",         "week",      "year",      "cpm",
                                                "supply",          "supply_millions",        "avg_daily_buyers_pre",
                                                "monthly_ad_spend", "partial_flag", "full_flag", "tags"};

// Errors carry 1-based file line numbers (the header is line 1).
std::vector<econ::PanelObservation> read_panel(std::istream& in);
std::vector<econ::PanelObservation> load_panel(const std::string& path);

// Extras are written in name order; a column missing from some row is an
// input error rather than a silent blank.
void write_panel(std::ostream& out, std::span<const econ::PanelObservation> panel);
void save_panel(const std::string& path, std::span<const econ::PanelObservation> panel);

// Makes the extra column `column` the outcome and keeps the old outcome as
// extra "cpm". "cpm" itself is a no-op.
std::vector<econ::PanelObservation> select_outcome(std::span<const econ::PanelObservation> panel,
                                                   const std::string& column);

} // namespace adx::pipeline
