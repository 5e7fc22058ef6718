#include "adx/synth/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::synth {

bool RecordFilter::keeps(const BuyerWeekRecord& record) const {
    if (!enabled) return true;
    if (record.avg_price > price_cap) return false;
    const double daily = record.day == 0 ? record.impressions_won / kDaysPerWeek : record.impressions_won;
    return daily >= volume_floor;
}

void validate_records(std::span<const BuyerWeekRecord> records) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto where = "record " + std::to_string(i) + " (" + r.buyer_id + ", week " + std::to_string(r.week) + ")";
        if (r.buyer_id.empty()) throw InputError(where + ": empty buyer_id");
        if (r.genre.empty()) throw InputError(where + ": empty genre");
        if (!std::isfinite(r.impressions_won) || r.impressions_won < 0.0)
            throw InputError(where + ": impressions_won must be a finite value >= 0");
        if (!std::isfinite(r.avg_price) || r.avg_price < 0.0)
            throw InputError(where + ": avg_price must be a finite value >= 0");
        if (r.day < 0 || r.day > kDaysPerWeek) throw InputError(where + ": day must be in 0..7");
    }
}

std::vector<BuyerWeekRecord> apply_filter(std::span<const BuyerWeekRecord> records, const RecordFilter& filter) {
    std::vector<BuyerWeekRecord> kept;
    kept.reserve(records.size());
    std::copy_if(records.begin(), records.end(), std::back_inserter(kept),
                 [&](const BuyerWeekRecord& r) { return filter.keeps(r); });
    return kept;
}

std::vector<std::string> buyers_of(std::span<const BuyerWeekRecord> records) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.buyer_id);
    return {ids.begin(), ids.end()};
}

std::vector<int> weeks_of(std::span<const BuyerWeekRecord> records) {
    std::set<int> weeks;
    for (const auto& r : records) weeks.insert(r.week);
    return {weeks.begin(), weeks.end()};
}

std::vector<std::string> genres_of(std::span<const BuyerWeekRecord> records) {
    std::set<std::string> genres;
    for (const auto& r : records) genres.insert(r.genre);
    return {genres.begin(), genres.end()};
}

std::vector<BuyerWeekRecord> read_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("buyer records: empty input");
    const auto header = text::split(line, ',');
    const std::vector<std::string> expected{"buyer_id", "week", "genre", "impressions_won", "avg_price"};
    const bool has_day = header.size() == expected.size() + 1 && header.back() == "day";
    if (!(header.size() == expected.size() || has_day) ||
        !std::equal(expected.begin(), expected.end(), header.begin())) {
        throw ValidationError(1, "buyer records header must be buyer_id,week,genre,impressions_won,avg_price[,day]");
    }
    std::vector<BuyerWeekRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, ',');
        if (fields.size() != header.size())
            throw ValidationError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                               std::to_string(fields.size()));
        try {
            BuyerWeekRecord r;
            r.buyer_id = std::string(text::trim(fields[0]));
            r.week = static_cast<int>(text::parse_int(fields[1], "week"));
            r.genre = std::string(text::trim(fields[2]));
            r.impressions_won = text::parse_real(fields[3], "impressions_won");
            r.avg_price = text::parse_real(fields[4], "avg_price");
            if (has_day) r.day = static_cast<int>(text::parse_int(fields[5], "day"));
            validate_records(std::span(&r, 1));
            records.push_back(std::move(r));
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            throw ValidationError(line_no, e.what());
        }
    }
    return records;
}

std::vector<BuyerWeekRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open buyer records file " + path);
    return read_records(in);
}

void write_records(std::ostream& out, std::span<const BuyerWeekRecord> records) {
    const bool daily = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.day != 0; });
    out << "buyer_id,week,genre,impressions_won,avg_price" << (daily ? ",day" : "") << '\n';
    for (const auto& r : records) {
        out << r.buyer_id << ',' << r.week << ',' << r.genre << ',' << text::real(r.impressions_won) << ','
            << text::real(r.avg_price);
        if (daily) out << ',' << r.day;
        out << '\n';
    }
}

} // namespace adx::synth
