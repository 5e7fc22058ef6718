#pragma once

#include <optional>
#include <span>

#include "adx/market/config.hpp"

namespace adx::market {

struct AuctionResult {
    std::optional<BidderIndex> winner;
    double price = 0.0;
    std::size_t n_participants = 0;

    bool operator==(const AuctionResult&) const = default;
};

// Sealed-bid second-price auction with a reserve of zero. Bidders whose bid is
// <= 0 abstain. The highest participant wins and pays the second-highest
// participant bid, or 0 when alone. Ties at the top are broken uniformly at
// random with a draw from `rng`; no draw is taken when there is no tie.
AuctionResult run_auction(std::span<const double> bids, Rng& rng);

} // namespace adx::market
