#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adx/synth/fit.hpp"

namespace adx::synth {

struct PlaceboConfig {
    SynthConfig synth;
    // A placebo buyer is kept when its pre-period MSPE is below this multiple
    // of the treated buyer's.
    double mspe_filter = 5.0;
};

struct PlaceboRow {
    std::string buyer_id;
    double mspe_pre = 0.0;
    double mspe_post = 0.0;
    double ratio = 0.0;
    bool retained = false;
    std::vector<double> gaps;
};

struct PlaceboReport {
    std::string treated_id;
    std::vector<int> weeks;
    std::vector<PlaceboRow> rows; // treated buyer first, then the others in id order
    // Buyers that could not be treated in turn (no records in some pre-week).
    std::vector<std::string> skipped;
    std::size_t n_retained = 0;
    std::size_t treated_rank = 0; // retained buyers with ratio >= the treated one, itself included
    double p_value = 1.0;
};

// (1 + #{placebo ratios >= treated}) / (1 + #placebos): the treated buyer
// counts in both numerator and denominator.
double mspe_ratio_p_value(double treated_ratio, std::span<const double> placebo_ratios);

// Fits a synthetic control for every buyer in turn, donors being all the
// others, and ranks the treated buyer's post/pre MSPE ratio among the
// retained placebo buyers.
PlaceboReport placebo_inference(std::span<const BuyerWeekRecord> records, const std::string& treated_id,
                                const PlaceboConfig& config);

// buyer_id,mspe_pre,mspe_post,ratio,retained
void write_placebo_table(std::ostream& out, const PlaceboReport& report);
// week followed by one gap column per buyer
void write_placebo_gaps(std::ostream& out, const PlaceboReport& report);
// key=value lines
void write_placebo_summary(std::ostream& out, const PlaceboReport& report);

} // namespace adx::synth
