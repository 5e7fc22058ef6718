#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace adx::market {

using BidderIndex = std::size_t;
using SiteIndex = std::size_t;

// The random engine every simulation path draws from. mt19937_64 has a fully
// specified output sequence, so a seed pins the whole run.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed);

// Parameterization of one simulated exchange.
//
// Site value s_ik ~ Normal(site_mean(k), sigma), residual impression value
// r_ij ~ Normal(0, omega). For two sites the site means are mu -/+ delta/2;
// for K > 2 they are spread linearly so that delta stays the largest gap.
struct MarketConfig {
    std::size_t n_bidders = 25;
    std::size_t n_sites = 2;
    std::vector<double> site_shares{0.5, 0.5};
    double mu = 1.0;
    double delta = 0.0;
    double sigma = 1.0;
    double omega = 1.0;
    std::size_t n_impressions = 1000;
    std::uint64_t seed = 0;

    // Throws ConfigError naming the offending field.
    void validate() const;

    double site_mean(SiteIndex k) const;

    // Equal shares over `n_sites`.
    static std::vector<double> equal_shares(std::size_t n_sites);
};

class DisclosureRegime {
public:
    enum class Kind { None, Partial, Full };

    static DisclosureRegime none() { return DisclosureRegime(Kind::None, {}); }
    static DisclosureRegime full() { return DisclosureRegime(Kind::Full, {}); }
    static DisclosureRegime partial(std::set<BidderIndex> treated) {
        return DisclosureRegime(Kind::Partial, std::move(treated));
    }

    Kind kind() const noexcept { return kind_; }
    const std::set<BidderIndex>& treated() const noexcept { return treated_; }

    // True when `bidder` sees the site of each impression.
    bool discloses_to(BidderIndex bidder) const;

    void validate(const MarketConfig& config) const;

    // "none", "partial" or "full".
    std::string name() const;
    static Kind parse_kind(const std::string& text);

    bool operator==(const DisclosureRegime&) const = default;

private:
    DisclosureRegime(Kind kind, std::set<BidderIndex> treated)
        : kind_(kind), treated_(std::move(treated)) {}

    Kind kind_;
    std::set<BidderIndex> treated_;
};

} // namespace adx::market
