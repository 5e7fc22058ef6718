#include "adx/econ/panel.hpp"

#include <cmath>
#include <map>

#include "adx/errors.hpp"

namespace adx::econ {

void validate_panel(std::span<const PanelObservation> panel) {
    std::map<std::string, double> buyers_pre;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        const auto& row = panel[i];
        const auto fail = [&](const std::string& what) {
            throw InputError("row " + std::to_string(i) + " (site " + row.site_id + ", week " +
                             std::to_string(row.week) + ", year " + std::to_string(row.year) + "): " + what);
        };
        if (row.site_id.empty()) fail("empty site_id");
        if (!(row.weight > 0.0) || !std::isfinite(row.weight)) fail("weight must be positive");
        if (row.year != 0 && row.year != 1) fail("year must be 0 or 1");
        if ((row.partial_flag != 0 && row.partial_flag != 1) || (row.full_flag != 0 && row.full_flag != 1))
            fail("disclosure flags must be 0 or 1");
        if (row.partial_flag == 1 && row.full_flag == 1) fail("partial_flag and full_flag both set");
        if (!std::isfinite(row.outcome) || !std::isfinite(row.supply_millions) ||
            !std::isfinite(row.avg_daily_buyers_pre) || !std::isfinite(row.monthly_ad_spend))
            fail("non-finite value");
        const auto [it, inserted] = buyers_pre.emplace(row.site_id, row.avg_daily_buyers_pre);
        if (!inserted && it->second != row.avg_daily_buyers_pre)
            fail("avg_daily_buyers_pre varies within site " + row.site_id);
    }
}

} // namespace adx::econ
