#include "adx/pipeline/panel_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <tuple>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::pipeline {

namespace {

constexpr std::size_t kFixed = std::size(kPanelColumns);

std::set<std::string> split_tags(std::string_view field) {
    std::set<std::string> tags;
    if (text::trim(field).empty()) return tags;
    for (const auto& tag : text::split(field, ';')) {
        const auto label = text::trim(tag);
        if (label.empty()) throw InputError("tags: empty label");
        tags.emplace(label);
    }
    return tags;
}

int parse_flag(std::string_view field, std::string_view name) {
    const auto value = text::parse_int(field, name);
    if (value != 0 && value != 1) throw InputError(std::string(name) + " must be 0 or 1");
    return static_cast<int>(value);
}

std::string key_text(const econ::PanelObservation& row) {
    return "(" + row.site_id + ", week " + std::to_string(row.week) + ", year " + std::to_string(row.year) + ")";
}

} // namespace

std::vector<econ::PanelObservation> read_panel(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("panel: empty input");
    const auto header = text::split(line, ',');
    if (header.size() < kFixed || !std::equal(std::begin(kPanelColumns), std::end(kPanelColumns), header.begin())) {
        std::string expected;
        for (const auto* column : kPanelColumns) expected += (expected.empty() ? "" : ",") + std::string(column);
        throw ValidationError(1, "panel header must start with " + expected);
    }
    std::vector<std::string> extras;
    for (std::size_t c = kFixed; c < header.size(); ++c) {
        const auto name = std::string(text::trim(header[c]));
        if (name.empty() || std::find(extras.begin(), extras.end(), name) != extras.end())
            throw ValidationError(1, "panel header: empty or repeated column '" + name + "'");
        extras.push_back(name);
    }

    std::vector<econ::PanelObservation> panel;
    std::set<std::tuple<std::string, int, int>> seen;
    std::map<std::string, std::pair<double, std::size_t>> pre_buyers;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, ',');
        if (fields.size() != header.size())
            throw ValidationError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                               std::to_string(fields.size()));
        econ::PanelObservation row;
        try {
            row.site_id = std::string(text::trim(fields[0]));
            if (row.site_id.empty()) throw InputError("empty site_id");
            row.week = static_cast<int>(text::parse_int(fields[1], "week"));
            row.year = static_cast<int>(text::parse_int(fields[2], "year"));
            if (row.year != 0 && row.year != 1) throw InputError("year must be 0 or 1");
            row.outcome = text::parse_real(fields[3], "cpm");
            row.weight = text::parse_real(fields[4], "supply");
            if (!(row.weight > 0.0) || !std::isfinite(row.weight)) throw InputError("supply must be positive and finite");
            row.supply_millions = text::parse_real(fields[5], "supply_millions");
            row.avg_daily_buyers_pre = text::parse_real(fields[6], "avg_daily_buyers_pre");
            row.monthly_ad_spend = text::parse_real(fields[7], "monthly_ad_spend");
            row.partial_flag = parse_flag(fields[8], "partial_flag");
            row.full_flag = parse_flag(fields[9], "full_flag");
            if (row.partial_flag && row.full_flag) throw InputError("partial_flag and full_flag both set");
            row.tags = split_tags(fields[10]);
            for (std::size_t c = 0; c < extras.size(); ++c)
                row.extra[extras[c]] = text::parse_real(fields[kFixed + c], extras[c]);
            for (double v : {row.outcome, row.supply_millions, row.avg_daily_buyers_pre, row.monthly_ad_spend})
                if (!std::isfinite(v)) throw InputError("non-finite numeric field");
        } catch (const Error& e) {
            throw ValidationError(line_no, e.what());
        }
        if (!seen.emplace(row.site_id, row.week, row.year).second)
            throw ValidationError(line_no, "duplicate key " + key_text(row));
        const auto [it, inserted] = pre_buyers.try_emplace(row.site_id, row.avg_daily_buyers_pre, line_no);
        if (!inserted && it->second.first != row.avg_daily_buyers_pre)
            throw ValidationError(line_no, "avg_daily_buyers_pre differs from line " +
                                               std::to_string(it->second.second) + " for site " + row.site_id);
        panel.push_back(std::move(row));
    }
    return panel;
}

std::vector<econ::PanelObservation> load_panel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open panel file " + path);
    return read_panel(in);
}

void write_panel(std::ostream& out, std::span<const econ::PanelObservation> panel) {
    std::set<std::string> extras;
    for (const auto& row : panel)
        for (const auto& [name, value] : row.extra) extras.insert(name);
    for (std::size_t c = 0; c < kFixed; ++c) out << (c ? "," : "") << kPanelColumns[c];
    for (const auto& name : extras) out << ',' << name;
    out << '\n';
    for (const auto& row : panel) {
        std::string tags;
        for (const auto& tag : row.tags) tags += (tags.empty() ? "" : ";") + tag;
        out << row.site_id << ',' << row.week << ',' << row.year << ',' << text::real(row.outcome) << ','
            << text::real(row.weight) << ',' << text::real(row.supply_millions) << ','
            << text::real(row.avg_daily_buyers_pre) << ',' << text::real(row.monthly_ad_spend) << ','
            << row.partial_flag << ',' << row.full_flag << ',' << tags;
        for (const auto& name : extras) {
            const auto it = row.extra.find(name);
            if (it == row.extra.end()) throw InputError("write_panel: row " + key_text(row) + " lacks column " + name);
            out << ',' << text::real(it->second);
        }
        out << '\n';
    }
}

void save_panel(const std::string& path, std::span<const econ::PanelObservation> panel) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write panel file " + path);
    write_panel(out, panel);
    if (!out) throw IoError("write failed for " + path);
}

std::vector<econ::PanelObservation> select_outcome(std::span<const econ::PanelObservation> panel,
                                                   const std::string& column) {
    std::vector<econ::PanelObservation> out(panel.begin(), panel.end());
    if (column == "cpm") return out;
    for (auto& row : out) {
        const auto it = row.extra.find(column);
        if (it == row.extra.end()) throw InputError("outcome column '" + column + "' not in panel " + key_text(row));
        const double value = it->second;
        row.extra.erase(it);
        row.extra["cpm"] = row.outcome;
        row.outcome = value;
    }
    return out;
}

} // namespace adx::pipeline
