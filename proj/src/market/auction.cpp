#include "microtrade/market/auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace microtrade::market {

namespace {

__extension__ using Wide = __int128;

Energy total_quantity(std::span<const MarketOrder> orders) {
    Energy sum;
    for (const auto& o : orders) sum += o.quantity;
    return sum;
}

// Fill `target` units from the ranked side. Participants strictly ahead of
// the marginal price are filled fully; the group sharing the marginal price
// splits the remainder pro-rata by submitted quantity, with the leftover
// sub-units going to the largest fractional remainders (ties: rank order).
void fill_long_side(std::span<const MarketOrder> ranked, Energy target, std::map<int, Energy>& out) {
    Energy remaining = target;
    std::size_t i = 0;
    while (i < ranked.size() && remaining.is_positive()) {
        std::size_t group_end = i;
        Energy group_total;
        while (group_end < ranked.size() && ranked[group_end].price == ranked[i].price) {
            group_total += ranked[group_end].quantity;
            ++group_end;
        }
        if (group_total <= remaining) {
            for (std::size_t j = i; j < group_end; ++j) out[ranked[j].participant] = ranked[j].quantity;
            remaining -= group_total;
            i = group_end;
            continue;
        }

        struct Share {
            std::size_t index;
            std::int64_t units;
            Wide remainder;
        };
        std::vector<Share> shares;
        std::int64_t assigned = 0;
        for (std::size_t j = i; j < group_end; ++j) {
            Wide num = static_cast<Wide>(remaining.units()) * ranked[j].quantity.units();
            auto units = static_cast<std::int64_t>(num / group_total.units());
            shares.push_back({j, units, num % group_total.units()});
            assigned += units;
        }
        std::int64_t leftover = remaining.units() - assigned;
        std::vector<std::size_t> order(shares.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return shares[a].remainder > shares[b].remainder; });
        for (std::size_t r = 0; r < order.size() && leftover > 0; ++r, --leftover) ++shares[order[r]].units;
        for (const auto& s : shares) {
            if (s.units > 0) out[ranked[s.index].participant] = Energy::from_units(s.units);
        }
        remaining = Energy{};
    }
}

}  // namespace

void validate_order(const MarketOrder& order, const MarketLimits& limits) {
    if (!std::isfinite(order.price) || order.price < limits.price_floor || order.price > limits.price_cap) {
        throw OrderError(order.participant, "price " + std::to_string(order.price) + " outside [" +
                                                std::to_string(limits.price_floor) + ", " +
                                                std::to_string(limits.price_cap) + "]");
    }
    if (!order.quantity.is_positive()) {
        throw OrderError(order.participant, "quantity must be strictly positive");
    }
    if (order.quantity > limits.max_bid_quantity) {
        throw OrderError(order.participant, "quantity " + std::to_string(order.quantity.value()) +
                                                " exceeds max bid quantity " +
                                                std::to_string(limits.max_bid_quantity.value()));
    }
}

void validate_orders(std::span<const MarketOrder> orders, const MarketLimits& limits) {
    std::set<int> seen;
    for (const auto& o : orders) {
        validate_order(o, limits);
        if (!seen.insert(o.participant).second) {
            throw OrderError(o.participant, "more than one order in the same slot");
        }
    }
}

OrderBook sort_curves(std::span<const MarketOrder> orders) {
    OrderBook book;
    for (const auto& o : orders) (o.side == Side::Buy ? book.buyers : book.sellers).push_back(o);
    std::sort(book.buyers.begin(), book.buyers.end(), [](const MarketOrder& a, const MarketOrder& b) {
        return a.price != b.price ? a.price > b.price : a.participant < b.participant;
    });
    std::sort(book.sellers.begin(), book.sellers.end(), [](const MarketOrder& a, const MarketOrder& b) {
        return a.price != b.price ? a.price < b.price : a.participant < b.participant;
    });
    return book;
}

std::optional<Intersection> find_intersection(std::span<const MarketOrder> buyers_desc,
                                              std::span<const MarketOrder> sellers_asc) {
    if (buyers_desc.empty() || sellers_asc.empty() || !(buyers_desc[0].price > sellers_asc[0].price)) {
        return std::nullopt;
    }
    // Walk both curves in quantity space. `b`/`s` index the participant
    // currently being consumed; their residual quantities are tracked.
    std::size_t b = 0, s = 0;
    Energy buyer_left = buyers_desc[0].quantity;
    Energy seller_left = sellers_asc[0].quantity;
    Intersection at{1, 1};
    for (;;) {
        Energy step = min(buyer_left, seller_left);
        buyer_left -= step;
        seller_left -= step;
        std::size_t next_b = buyer_left.is_zero() ? b + 1 : b;
        std::size_t next_s = seller_left.is_zero() ? s + 1 : s;
        if (next_b >= buyers_desc.size() || next_s >= sellers_asc.size()) break;
        if (!(buyers_desc[next_b].price > sellers_asc[next_s].price)) break;
        if (next_b != b) buyer_left = buyers_desc[next_b].quantity;
        if (next_s != s) seller_left = sellers_asc[next_s].quantity;
        b = next_b;
        s = next_s;
        at = {b + 1, s + 1};
    }
    return at;
}

double clearing_price(double marginal_bid, double marginal_ask) {
    if (!(marginal_bid > marginal_ask)) {
        throw std::invalid_argument("clearing price requires bid > ask (bid " + std::to_string(marginal_bid) +
                                    ", ask " + std::to_string(marginal_ask) + ")");
    }
    return (marginal_bid + marginal_ask) / 2.0;
}

ClearingResult allocate(std::span<const MarketOrder> buyers_desc, std::span<const MarketOrder> sellers_asc,
                        Intersection at) {
    if (at.buyers == 0 || at.sellers == 0 || at.buyers > buyers_desc.size() || at.sellers > sellers_asc.size()) {
        throw std::invalid_argument("intersection out of range");
    }
    ClearingResult result;
    result.clearing_price = clearing_price(buyers_desc[at.buyers - 1].price, sellers_asc[at.sellers - 1].price);

    auto matched_buyers = buyers_desc.first(at.buyers);
    auto matched_sellers = sellers_asc.first(at.sellers);
    Energy demand = total_quantity(matched_buyers);
    Energy supply = total_quantity(matched_sellers);
    result.cleared_total = min(demand, supply);

    // The short side is filled completely. The long side is filled by price
    // priority; same-priced participants beyond the marginal index share the
    // marginal group, so pass the whole side.
    if (demand <= supply) {
        for (const auto& o : matched_buyers) result.allocations[o.participant] = o.quantity;
    } else {
        fill_long_side(buyers_desc, result.cleared_total, result.allocations);
    }
    if (supply <= demand) {
        for (const auto& o : matched_sellers) result.allocations[o.participant] = o.quantity;
    } else {
        fill_long_side(sellers_asc, result.cleared_total, result.allocations);
    }
    return result;
}

ClearingResult run_auction(std::span<const MarketOrder> orders, const MarketLimits& limits) {
    validate_orders(orders, limits);
    OrderBook book = sort_curves(orders);
    auto at = find_intersection(book.buyers, book.sellers);
    if (!at) return {};
    return allocate(book.buyers, book.sellers, *at);
}

}  // namespace microtrade::market
