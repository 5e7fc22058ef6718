#include "adx/synth/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "adx/errors.hpp"

namespace adx::synth {

namespace {

struct Cell {
    double impressions = 0.0;
    double revenue = 0.0; // impressions x price

    void add(double imps, double price) {
        impressions += imps;
        revenue += imps * price;
    }
};

} // namespace

std::string to_string(PredictorBlock block) {
    switch (block) {
    case PredictorBlock::GenreWeekImpressions:
        return "genre_week_impressions";
    case PredictorBlock::GenreWeekPrice:
        return "genre_week_price";
    case PredictorBlock::WeekImpressions:
        return "week_impressions";
    case PredictorBlock::WeekPrice:
        return "week_price";
    case PredictorBlock::PeriodImpressions:
        return "period_impressions";
    case PredictorBlock::PeriodPrice:
        return "period_price";
    }
    return "";
}

PredictorBlock parse_block(const std::string& text) {
    for (auto block : {PredictorBlock::GenreWeekImpressions, PredictorBlock::GenreWeekPrice,
                       PredictorBlock::WeekImpressions, PredictorBlock::WeekPrice, PredictorBlock::PeriodImpressions,
                       PredictorBlock::PeriodPrice}) {
        if (to_string(block) == text) return block;
    }
    throw ConfigError("unknown predictor block '" + text + "'");
}

std::vector<PredictorBlock> default_blocks() {
    return {PredictorBlock::GenreWeekImpressions, PredictorBlock::GenreWeekPrice, PredictorBlock::WeekImpressions,
            PredictorBlock::WeekPrice};
}

Eigen::VectorXd PredictorMatrix::scaled_X1() const {
    return standardized ? Eigen::VectorXd(X1.cwiseQuotient(scale)) : X1;
}

Eigen::MatrixXd PredictorMatrix::scaled_X0() const {
    if (!standardized) return X0;
    return scale.cwiseInverse().asDiagonal() * X0;
}

PredictorMatrix build_predictors(std::span<const BuyerWeekRecord> records, const std::string& treated_id,
                                 std::span<const int> pre_weeks, const PredictorOptions& options) {
    validate_records(records);
    const auto kept = apply_filter(records, options.filter);
    return build_predictors_filtered(kept, treated_id, pre_weeks, options);
}

std::vector<int> missing_weeks(std::span<const BuyerWeekRecord> kept, const std::string& buyer,
                               std::span<const int> pre_weeks) {
    std::set<int> seen;
    for (const auto& r : kept)
        if (r.buyer_id == buyer) seen.insert(r.week);
    std::set<int> missing;
    for (int week : pre_weeks)
        if (!seen.contains(week)) missing.insert(week);
    return {missing.begin(), missing.end()};
}

PredictorTable build_predictor_table(std::span<const BuyerWeekRecord> kept, std::span<const std::string> units,
                                     std::span<const int> pre_weeks, const PredictorOptions& options) {
    if (pre_weeks.empty()) throw InputError("build_predictors: no pre-treatment weeks given");
    if (options.blocks.empty()) throw ConfigError("build_predictors: no predictor blocks selected");
    if (units.empty()) throw InputError("build_predictors: no buyers");
    const std::set<int> week_set(pre_weeks.begin(), pre_weeks.end());
    const std::vector<int> weeks(week_set.begin(), week_set.end());
    const auto genres = genres_of(kept);

    std::map<std::string, std::size_t> unit_index;
    for (std::size_t u = 0; u < units.size(); ++u) unit_index.emplace(units[u], u);
    std::map<int, std::size_t> week_index;
    for (std::size_t w = 0; w < weeks.size(); ++w) week_index.emplace(weeks[w], w);
    std::map<std::string, std::size_t> genre_index;
    for (std::size_t g = 0; g < genres.size(); ++g) genre_index.emplace(genres[g], g);

    const auto U = units.size();
    const auto W = weeks.size();
    const auto G = genres.size();
    std::vector<Cell> cells(U * W * G);
    const auto at = [&](std::size_t u, std::size_t w, std::size_t g) -> Cell& { return cells[(u * W + w) * G + g]; };
    for (const auto& r : kept) {
        const auto u = unit_index.find(r.buyer_id);
        const auto w = week_index.find(r.week);
        if (u == unit_index.end() || w == week_index.end()) continue;
        at(u->second, w->second, genre_index.at(r.genre)).add(r.impressions_won, r.avg_price);
    }

    std::vector<std::size_t> all_weeks(W);
    std::iota(all_weeks.begin(), all_weeks.end(), 0);
    std::vector<std::size_t> all_genres(G);
    std::iota(all_genres.begin(), all_genres.end(), 0);
    const auto total = [&](std::size_t u, std::span<const std::size_t> ws, std::span<const std::size_t> gs) {
        Cell sum;
        for (auto w : ws)
            for (auto g : gs) {
                sum.impressions += at(u, w, g).impressions;
                sum.revenue += at(u, w, g).revenue;
            }
        return sum;
    };

    PredictorTable table;
    table.units.assign(units.begin(), units.end());
    std::vector<std::vector<double>> rows;
    const auto add_impressions = [&](std::string label, std::span<const std::size_t> ws,
                                     std::span<const std::size_t> gs) {
        std::vector<double> row(U);
        for (std::size_t u = 0; u < U; ++u) row[u] = total(u, ws, gs).impressions;
        table.labels.push_back(std::move(label));
        rows.push_back(std::move(row));
    };
    const auto add_price = [&](std::string label, std::span<const std::size_t> ws, std::span<const std::size_t> gs) {
        std::vector<double> row(U);
        for (std::size_t u = 0; u < U; ++u) {
            const auto sum = total(u, ws, gs);
            if (sum.impressions <= 0.0) {
                ++table.dropped_price_cells;
                return;
            }
            row[u] = sum.revenue / sum.impressions;
        }
        table.labels.push_back(std::move(label));
        rows.push_back(std::move(row));
    };

    for (const auto block : options.blocks) {
        switch (block) {
        case PredictorBlock::GenreWeekImpressions:
        case PredictorBlock::GenreWeekPrice:
            for (std::size_t g = 0; g < G; ++g) {
                for (std::size_t w = 0; w < W; ++w) {
                    const bool impressions = block == PredictorBlock::GenreWeekImpressions;
                    auto label = std::string(impressions ? "impressions" : "price") + ":" + genres[g] + ":w" +
                                 std::to_string(weeks[w]);
                    if (impressions) {
                        add_impressions(std::move(label), std::span(&w, 1), std::span(&g, 1));
                    } else {
                        add_price(std::move(label), std::span(&w, 1), std::span(&g, 1));
                    }
                }
            }
            break;
        case PredictorBlock::WeekImpressions:
            for (std::size_t w = 0; w < W; ++w)
                add_impressions("impressions:w" + std::to_string(weeks[w]), std::span(&w, 1), all_genres);
            break;
        case PredictorBlock::WeekPrice:
            for (std::size_t w = 0; w < W; ++w)
                add_price("price:w" + std::to_string(weeks[w]), std::span(&w, 1), all_genres);
            break;
        case PredictorBlock::PeriodImpressions:
            add_impressions("impressions:total", all_weeks, all_genres);
            break;
        case PredictorBlock::PeriodPrice:
            add_price("price:mean", all_weeks, all_genres);
            break;
        }
    }
    if (rows.empty()) throw InputError("build_predictors: every predictor was dropped");

    const auto P = static_cast<Eigen::Index>(rows.size());
    table.values.resize(P, static_cast<Eigen::Index>(U));
    table.scale = Eigen::VectorXd::Ones(P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto& row = rows[static_cast<std::size_t>(p)];
        const Eigen::Map<const Eigen::RowVectorXd> values(row.data(), static_cast<Eigen::Index>(U));
        table.values.row(p) = values;
        const double mean = values.mean();
        const double sd = std::sqrt((values.array() - mean).square().mean());
        if (sd > 1e-12 * (1.0 + values.cwiseAbs().maxCoeff())) table.scale(p) = sd;
    }
    return table;
}

PredictorMatrix PredictorTable::for_treated(const std::string& treated, bool standardize) const {
    const auto it = std::find(units.begin(), units.end(), treated);
    if (it == units.end()) throw InputError("buyer " + treated + " is not in the predictor table");
    const auto t = static_cast<Eigen::Index>(it - units.begin());
    PredictorMatrix pm;
    pm.treated_id = treated;
    pm.labels = labels;
    pm.X1 = values.col(t);
    pm.X0.resize(values.rows(), values.cols() - 1);
    for (Eigen::Index u = 0, j = 0; u < values.cols(); ++u) {
        if (u == t) continue;
        pm.X0.col(j++) = values.col(u);
        pm.donor_ids.push_back(units[static_cast<std::size_t>(u)]);
    }
    pm.scale = scale;
    pm.standardized = standardize;
    pm.dropped_price_cells = dropped_price_cells;
    return pm;
}

PredictorMatrix build_predictors_filtered(std::span<const BuyerWeekRecord> kept, const std::string& treated_id,
                                          std::span<const int> pre_weeks, const PredictorOptions& options) {
    if (pre_weeks.empty()) throw InputError("build_predictors: no pre-treatment weeks given");
    const auto missing = missing_weeks(kept, treated_id, pre_weeks);
    if (!missing.empty()) {
        std::string list;
        for (int week : missing) list += (list.empty() ? "" : ", ") + std::to_string(week);
        throw InputError("treated buyer " + treated_id + " has no records in pre-weeks: " + list);
    }
    const auto units = buyers_of(kept);
    if (units.size() < 2) throw InputError("build_predictors: no donor buyers besides " + treated_id);
    return build_predictor_table(kept, units, pre_weeks, options).for_treated(treated_id, options.standardize);
}

} // namespace adx::synth
