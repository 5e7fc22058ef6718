#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adx/synth/records.hpp"

namespace adx::synth {

enum class PredictorBlock {
    GenreWeekImpressions, // impressions won per genre per pre-week
    GenreWeekPrice,       // average price per genre per pre-week
    WeekImpressions,      // total impressions won per pre-week
    WeekPrice,            // average price per pre-week
    PeriodImpressions,    // total impressions over all pre-weeks
    PeriodPrice,          // average price over all pre-weeks
};

std::string to_string(PredictorBlock block);
PredictorBlock parse_block(const std::string& text);

std::vector<PredictorBlock> default_blocks();

struct PredictorOptions {
    std::vector<PredictorBlock> blocks = default_blocks();
    RecordFilter filter;
    // Divide every predictor by its standard deviation across buyers before
    // fitting, so impression counts do not swamp prices.
    bool standardize = true;
};

// Raw predictors; `scale` holds the per-predictor divisor applied when
// `standardized` is set (1 where a predictor does not vary).
struct PredictorMatrix {
    std::string treated_id;
    std::vector<std::string> donor_ids;
    std::vector<std::string> labels;
    Eigen::VectorXd X1;
    Eigen::MatrixXd X0;
    Eigen::VectorXd scale;
    bool standardized = false;
    // Price cells left out because some buyer won nothing there.
    std::size_t dropped_price_cells = 0;

    Eigen::VectorXd scaled_X1() const;
    Eigen::MatrixXd scaled_X0() const;
};

// Predictors for every buyer in `units` (sorted ids), one column each. A
// price cell is kept only when every unit won impressions in it.
struct PredictorTable {
    std::vector<std::string> units;
    std::vector<std::string> labels;
    Eigen::MatrixXd values; // predictors x units
    Eigen::VectorXd scale;  // population sd across units, 1 where constant
    std::size_t dropped_price_cells = 0;

    // `treated` against all the other units as donors.
    PredictorMatrix for_treated(const std::string& treated, bool standardize) const;
};

PredictorTable build_predictor_table(std::span<const BuyerWeekRecord> kept, std::span<const std::string> units,
                                     std::span<const int> pre_weeks, const PredictorOptions& options);

// Pre-weeks in which `buyer` has no record.
std::vector<int> missing_weeks(std::span<const BuyerWeekRecord> kept, const std::string& buyer,
                               std::span<const int> pre_weeks);

// Donors are every other buyer with at least one record left after
// filtering. Impression cells a buyer never filled count as 0; a price cell
// is used only when every buyer won impressions in it.
PredictorMatrix build_predictors(std::span<const BuyerWeekRecord> records, const std::string& treated_id,
                                 std::span<const int> pre_weeks, const PredictorOptions& options = {});

// Same, on records that have already been filtered.
PredictorMatrix build_predictors_filtered(std::span<const BuyerWeekRecord> kept, const std::string& treated_id,
                                          std::span<const int> pre_weeks, const PredictorOptions& options);

} // namespace adx::synth
