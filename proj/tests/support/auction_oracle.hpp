#pragma once

// Brute-force reference for the intersection search, written independently
// of the quantity walk in src/market.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "microtrade/market/auction.hpp"

namespace microtrade::support {

struct OracleIntersection {
    std::size_t k = 0;
    std::size_t l = 0;
    std::int64_t volume = 0;  // milli-kWh
};

// Enumerates every (k, l) with bid_k > ask_l, keeps the pairs with the largest
// tradable volume min(B_k, S_l), and reports the smallest such k and l.
inline std::optional<OracleIntersection> oracle_intersection(const std::vector<market::MarketOrder>& buyers_desc,
                                                             const std::vector<market::MarketOrder>& sellers_asc) {
    std::vector<std::int64_t> B{0}, S{0};
    for (const auto& b : buyers_desc) B.push_back(B.back() + b.quantity.units());
    for (const auto& s : sellers_asc) S.push_back(S.back() + s.quantity.units());
    std::int64_t best = 0;
    for (std::size_t k = 1; k <= buyers_desc.size(); ++k) {
        for (std::size_t l = 1; l <= sellers_asc.size(); ++l) {
            if (buyers_desc[k - 1].price > sellers_asc[l - 1].price) best = std::max(best, std::min(B[k], S[l]));
        }
    }
    if (best == 0) return std::nullopt;
    OracleIntersection out{0, 0, best};
    while (B[out.k] < best) ++out.k;
    while (S[out.l] < best) ++out.l;
    return out;
}

// Random book with at most `max_participants` orders on a coarse price grid,
// so ties and plateaus are common.
inline std::vector<market::MarketOrder> random_orders(std::mt19937_64& rng, int max_participants) {
    std::uniform_int_distribution<int> count(0, max_participants);
    std::uniform_int_distribution<int> tick(0, 12);
    std::uniform_int_distribution<int> qty(1, 7500);
    std::bernoulli_distribution buy(0.5);
    std::vector<market::MarketOrder> orders;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        market::MarketOrder o;
        o.participant = i;
        o.side = buy(rng) ? market::Side::Buy : market::Side::Sell;
        o.price = 15.0 + tick(rng) * 0.6;
        o.quantity = Energy::from_units(qty(rng));
        orders.push_back(o);
    }
    return orders;
}

}  // namespace microtrade::support
