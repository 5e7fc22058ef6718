#pragma once

#include <map>
#include <set>
#include <span>
#include <string>

namespace adx::econ {

// One site-week-year row of a diff-in-diff panel.
struct PanelObservation {
    std::string site_id;
    int week = 0;
    int year = 0; // 0 = base year, 1 = treatment year
    double outcome = 0.0;
    double weight = 1.0; // impressions supplied
    double supply_millions = 0.0;
    double avg_daily_buyers_pre = 0.0;
    double monthly_ad_spend = 0.0;
    int partial_flag = 0;
    int full_flag = 0;
    std::set<std::string> tags;
    // Additional numeric columns carried through from files or generators
    // (for example avg_daily_buyers as an alternative outcome).
    std::map<std::string, double> extra;

    bool operator==(const PanelObservation&) const = default;
};

// Checks the row invariants: positive finite weights, flags in {0,1} and not
// both set, year in {0,1}, avg_daily_buyers_pre constant within a site.
// Throws InputError naming the first offending row (0-based index).
void validate_panel(std::span<const PanelObservation> panel);

} // namespace adx::econ
