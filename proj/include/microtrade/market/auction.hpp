#pragma once

// Hour-ahead sealed-bid double auction.
//
// Buyers are ranked by bid price (descending), sellers by ask price
// (ascending), both with ties broken by lower participant id. The two ranked
// curves are walked in quantity space; the walk continues while the current
// buyer's bid strictly exceeds the current seller's ask. The last buyer and
// seller touched by the walk are the marginal pair (k, l), and the clearing
// price is the midpoint of their prices.

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "microtrade/units.hpp"

namespace microtrade::market {

enum class Side { Buy, Sell };

struct MarketOrder {
    int participant = 0;
    Side side = Side::Buy;
    double price = 0.0;  // cents/kWh
    Energy quantity;
};

struct MarketLimits {
    double price_floor = 15.0;
    double price_cap = 22.79;
    Energy max_bid_quantity = Energy::from_units(std::numeric_limits<std::int64_t>::max());
};

class OrderError : public std::invalid_argument {
public:
    OrderError(int participant, const std::string& what)
        : std::invalid_argument("participant " + std::to_string(participant) + ": " + what),
          participant_(participant) {}
    int participant() const { return participant_; }

private:
    int participant_;
};

struct OrderBook {
    std::vector<MarketOrder> buyers;   // price descending
    std::vector<MarketOrder> sellers;  // price ascending
};

/// Counts of matched buyers and sellers from the top of each ranked curve.
struct Intersection {
    std::size_t buyers = 0;
    std::size_t sellers = 0;
    friend bool operator==(const Intersection&, const Intersection&) = default;
};

struct ClearingResult {
    std::optional<double> clearing_price;
    std::map<int, Energy> allocations;  // participant -> cleared quantity
    Energy cleared_total;

    Energy allocation(int participant) const {
        auto it = allocations.find(participant);
        return it == allocations.end() ? Energy{} : it->second;
    }
    bool traded() const { return clearing_price.has_value() && cleared_total.is_positive(); }
};

/// Throws OrderError when price or quantity is out of bounds.
void validate_order(const MarketOrder& order, const MarketLimits& limits);

/// Validates every order and rejects a second order from the same participant.
void validate_orders(std::span<const MarketOrder> orders, const MarketLimits& limits);

OrderBook sort_curves(std::span<const MarketOrder> orders);

std::optional<Intersection> find_intersection(std::span<const MarketOrder> buyers_desc,
                                              std::span<const MarketOrder> sellers_asc);

/// Midpoint of the marginal bid and ask. Requires bid > ask.
double clearing_price(double marginal_bid, double marginal_ask);

ClearingResult allocate(std::span<const MarketOrder> buyers_desc, std::span<const MarketOrder> sellers_asc,
                        Intersection at);

/// sort_curves -> find_intersection -> clearing_price -> allocate.
ClearingResult run_auction(std::span<const MarketOrder> orders, const MarketLimits& limits = {});

}  // namespace microtrade::market
