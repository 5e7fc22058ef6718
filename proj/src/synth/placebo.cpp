#include "adx/synth/placebo.hpp"

#include <algorithm>
#include <ostream>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::synth {

double mspe_ratio_p_value(double treated_ratio, std::span<const double> placebo_ratios) {
    const auto exceeding = std::count_if(placebo_ratios.begin(), placebo_ratios.end(),
                                         [&](double ratio) { return ratio >= treated_ratio; });
    return static_cast<double>(1 + exceeding) / static_cast<double>(1 + placebo_ratios.size());
}

PlaceboReport placebo_inference(std::span<const BuyerWeekRecord> records, const std::string& treated_id,
                                const PlaceboConfig& config) {
    if (!(config.mspe_filter > 0.0)) throw ConfigError("mspe_filter must be positive");
    validate_records(records);
    const auto kept = apply_filter(records, config.synth.predictors.filter);
    const auto buyers = buyers_of(kept);
    if (std::find(buyers.begin(), buyers.end(), treated_id) == buyers.end())
        throw InputError("treated buyer " + treated_id + " has no records after filtering");
    if (buyers.size() < 2) throw InputError("placebo inference needs at least 2 buyers");

    const auto pre_weeks = resolve_pre_weeks(kept, config.synth);
    if (!missing_weeks(kept, treated_id, pre_weeks).empty()) {
        build_predictors_filtered(kept, treated_id, pre_weeks, config.synth.predictors); // throws with the list
    }
    // Every buyer is fitted against the same unit set, so one table and one
    // set of outcome series serve all the fits.
    const auto table = build_predictor_table(kept, buyers, pre_weeks, config.synth.predictors);
    const auto series = outcome_series(kept, buyers, config.synth.outcome);

    const auto fit_buyer = [&](std::size_t b) {
        auto fit = fit_weights(table.for_treated(buyers[b], config.synth.predictors.standardize), config.synth.solver);
        std::vector<OutcomeSeries> donors;
        for (std::size_t u = 0; u < buyers.size(); ++u)
            if (u != b) donors.push_back(series[u]);
        return gaps_and_mspe(std::move(fit), series[b], donors, config.synth.intervention_week);
    };

    PlaceboReport report;
    report.treated_id = treated_id;
    const auto treated_index =
        static_cast<std::size_t>(std::find(buyers.begin(), buyers.end(), treated_id) - buyers.begin());
    const auto treated_fit = fit_buyer(treated_index);
    report.weeks = treated_fit.weeks;
    report.rows.push_back({treated_id, treated_fit.mspe_pre, treated_fit.mspe_post, treated_fit.mspe_ratio(), true,
                           treated_fit.gaps});

    std::vector<double> retained_ratios;
    for (std::size_t b = 0; b < buyers.size(); ++b) {
        if (b == treated_index) continue;
        if (!missing_weeks(kept, buyers[b], pre_weeks).empty()) {
            report.skipped.push_back(buyers[b]);
            continue;
        }
        const auto fit = fit_buyer(b);
        PlaceboRow row{buyers[b], fit.mspe_pre, fit.mspe_post, fit.mspe_ratio(), false, fit.gaps};
        row.retained = row.mspe_pre < config.mspe_filter * treated_fit.mspe_pre;
        if (row.retained) retained_ratios.push_back(row.ratio);
        report.rows.push_back(std::move(row));
    }

    const double treated_ratio = report.rows.front().ratio;
    report.n_retained = retained_ratios.size() + 1;
    report.treated_rank = 1 + static_cast<std::size_t>(std::count_if(
                                  retained_ratios.begin(), retained_ratios.end(),
                                  [&](double ratio) { return ratio >= treated_ratio; }));
    report.p_value = mspe_ratio_p_value(treated_ratio, retained_ratios);
    return report;
}

void write_placebo_table(std::ostream& out, const PlaceboReport& report) {
    out << "buyer_id,mspe_pre,mspe_post,ratio,retained\n";
    for (const auto& row : report.rows)
        out << row.buyer_id << ',' << text::real(row.mspe_pre) << ',' << text::real(row.mspe_post) << ','
            << text::real(row.ratio) << ',' << (row.retained ? 1 : 0) << '\n';
}

void write_placebo_gaps(std::ostream& out, const PlaceboReport& report) {
    out << "week";
    for (const auto& row : report.rows) out << ',' << row.buyer_id;
    out << '\n';
    for (std::size_t t = 0; t < report.weeks.size(); ++t) {
        out << report.weeks[t];
        for (const auto& row : report.rows) out << ',' << (t < row.gaps.size() ? text::real(row.gaps[t]) : "");
        out << '\n';
    }
}

void write_placebo_summary(std::ostream& out, const PlaceboReport& report) {
    out << "treated=" << report.treated_id << '\n';
    out << "buyers=" << report.rows.size() << '\n';
    out << "retained=" << report.n_retained << '\n';
    out << "skipped=" << report.skipped.size() << '\n';
    out << "treated_rank=" << report.treated_rank << '\n';
    out << "p_value=" << text::real(report.p_value) << '\n';
}

} // namespace adx::synth
