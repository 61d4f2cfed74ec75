#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "microtrade/market/auction.hpp"

namespace microtrade::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct SlotOrders {
    int slot = 0;
    std::vector<market::MarketOrder> orders;
};

/// Parses `slot,participant,side,price_cents_kwh,quantity_kwh` rows, grouped
/// by slot in ascending order. Throws std::invalid_argument naming the line.
std::vector<SlotOrders> read_orders_csv(std::istream& in);

/// Clears every slot and returns `slot,clearing_price,participant,allocation_kwh`
/// rows. A slot without a cross prints `none` with zero allocations.
std::string clear_auction_csv(const std::vector<SlotOrders>& slots, const market::MarketLimits& limits);

}  // namespace microtrade::cli
