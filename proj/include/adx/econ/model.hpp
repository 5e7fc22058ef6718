#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace adx::econ {

// A regressor: the product of one or more factors. Factors are built-in
// panel variables (partial, full, year, placebo, supply_millions,
// avg_daily_buyers_pre, monthly_ad_spend), declared group tags (0/1
// indicators), or names of extra numeric columns.
struct Term {
    std::vector<std::string> factors;

    // Factors joined by "_x_", e.g. "full_x_year_x_thin".
    std::string name() const;

    // "full*year*thin" -> {full, year, thin}.
    static Term parse(const std::string& text);

    bool operator==(const Term&) const = default;
};

enum class ClusterBy {
    Week,     // week index pooled across years
    YearWeek, // calendar week of a given year
    Site,
};

std::string to_string(ClusterBy cluster);
ClusterBy parse_cluster(const std::string& text);

struct ModelSpec {
    std::string outcome = "cpm";
    std::vector<Term> terms;
    std::vector<std::string> tags;
    bool site_fixed_effects = true;
    ClusterBy cluster = ClusterBy::YearWeek;
    // Under site FE, a regressor constant within every site is absorbed. When
    // true such columns are excluded and reported; when false the design
    // build fails with DegenerateColumnError.
    bool exclude_absorbed = true;
    // Keep only rows with partial_flag = full_flag = 0.
    bool pre_period_only = false;
    // Placebo indicator = 1 iff week > split. Enabled when `placebo` is set;
    // the split defaults to the midpoint of the retained weeks.
    bool placebo = false;
    std::optional<int> placebo_split_week;
    // Count absorbed fixed effects in k for adjusted R-squared and the
    // small-sample cluster correction.
    bool count_absorbed_in_dof = true;

    // Throws SpecError on unknown keys or malformed values.
    static ModelSpec from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    // Revenue regression with controls: effect interactions, period
    // baselines, year, then supply, pre-period buyers and ad spend.
    static ModelSpec main_effects();
    // Same spec without the three controls.
    static ModelSpec without_controls();
    // Pre-period rows only with a placebo split at the midpoint week.
    static ModelSpec placebo_test();
};

} // namespace adx::econ
