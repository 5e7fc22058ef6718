#include "adx/pipeline/aggregate.hpp"

#include <cmath>
#include <set>

#include "adx/errors.hpp"

namespace adx::pipeline {

double cpm_from_revenue(double revenue, double supply) {
    if (!(supply > 0.0)) throw InputError("cpm_from_revenue: supply must be positive");
    return 1000.0 * revenue / supply;
}

double average_daily_buyers(std::span<const std::size_t> distinct_winners_per_day) {
    if (distinct_winners_per_day.empty()) return 0.0;
    double total = 0.0;
    for (auto n : distinct_winners_per_day) total += static_cast<double>(n);
    return total / static_cast<double>(distinct_winners_per_day.size());
}

std::optional<SiteWeekAggregate> aggregate_outcomes(const SiteWeekOutcomes& cell) {
    const auto n = cell.outcomes.size();
    if (!cell.day.empty() && cell.day.size() != n)
        throw InputError("aggregate_outcomes: day vector length differs from the outcome count");
    if (cell.supply < 0.0 || !std::isfinite(cell.supply)) throw InputError("aggregate_outcomes: invalid supply");

    SiteWeekAggregate agg;
    agg.supply = cell.supply > 0.0 ? cell.supply : static_cast<double>(n);
    std::vector<std::set<market::BidderIndex>> winners(kDaysPerWeek);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& outcome = cell.outcomes[j];
        if (!outcome.winner) continue;
        agg.sold += 1.0;
        agg.revenue += outcome.price / 1000.0;
        const int day = cell.day.empty() ? static_cast<int>(j * kDaysPerWeek / n) : cell.day[j];
        if (day < 0 || day >= kDaysPerWeek) throw InputError("aggregate_outcomes: day out of range");
        winners[static_cast<std::size_t>(day)].insert(*outcome.winner);
    }
    if (agg.sold > agg.supply) throw InputError("aggregate_outcomes: more impressions sold than supplied");
    if (agg.supply <= 0.0) return std::nullopt;
    agg.cpm = cpm_from_revenue(agg.revenue, agg.supply);
    std::vector<std::size_t> counts;
    for (const auto& day : winners) counts.push_back(day.size());
    agg.avg_daily_buyers = average_daily_buyers(counts);
    return agg;
}

} // namespace adx::pipeline
