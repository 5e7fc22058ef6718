#pragma once

#include <iosfwd>

namespace adx::cli {

struct ProjectionInputs {
    double weekly_supply = 0.0; // impressions per site per week
    double cpm_uplift = 0.0;    // currency units per thousand impressions
    double weeks = 0.0;
    double n_sites = 0.0;
    double commission = 0.0;    // exchange share of publisher revenue
};

struct RevenueProjection {
    double per_site = 0.0;
    double total = 0.0;
    double exchange = 0.0;
};

// per_site = weekly_supply / 1000 * cpm_uplift * weeks, total = per_site *
// n_sites, exchange = total * commission. Supply, weeks, sites and
// commission must be positive; the uplift must be >= 0.
RevenueProjection project_revenue(const ProjectionInputs& in);

// Human report rounded to whole currency units.
void write_projection_report(std::ostream& out, const ProjectionInputs& in, const RevenueProjection& p);
// key=value at full precision.
void write_projection_kv(std::ostream& out, const ProjectionInputs& in, const RevenueProjection& p);

} // namespace adx::cli
