#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace adx::synth {

// One buyer's activity in one genre. A row with day == 0 aggregates a whole
// week; day in 1..7 marks a single day of that week.
struct BuyerWeekRecord {
    std::string buyer_id;
    int week = 0;
    std::string genre;
    double impressions_won = 0.0;
    double avg_price = 0.0; // per thousand impressions
    int day = 0;

    bool operator==(const BuyerWeekRecord&) const = default;
};

inline constexpr int kDaysPerWeek = 7;

// Rows with an unusually high price or a low daily volume are dropped before
// any aggregation. A weekly row is judged on its per-day average volume.
struct RecordFilter {
    double price_cap = 10.0;
    double volume_floor = 500.0;
    bool enabled = true;

    bool keeps(const BuyerWeekRecord& record) const;
};

void validate_records(std::span<const BuyerWeekRecord> records);

std::vector<BuyerWeekRecord> apply_filter(std::span<const BuyerWeekRecord> records, const RecordFilter& filter);

// Sorted distinct buyer ids, weeks and genres.
std::vector<std::string> buyers_of(std::span<const BuyerWeekRecord> records);
std::vector<int> weeks_of(std::span<const BuyerWeekRecord> records);
std::vector<std::string> genres_of(std::span<const BuyerWeekRecord> records);

// Header: buyer_id,week,genre,impressions_won,avg_price with an optional
// trailing day column.
std::vector<BuyerWeekRecord> read_records(std::istream& in);
std::vector<BuyerWeekRecord> load_records(const std::string& path);
void write_records(std::ostream& out, std::span<const BuyerWeekRecord> records);

} // namespace adx::synth
