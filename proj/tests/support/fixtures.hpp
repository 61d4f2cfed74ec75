#pragma once

#include <memory>
#include <random>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/marl/action_codec.hpp"

namespace microtrade::support {

inline grid::MicrogridParams params(double capacity = 100.0, double area = 150.0) {
    grid::MicrogridParams p;
    p.panel_area = area;
    p.conversion_efficiency = 0.2;
    p.battery_capacity = kwh(capacity);
    p.charge_efficiency = 0.95;
    p.discharge_efficiency = 0.95;
    p.max_charge_rate = kwh(capacity);
    p.max_bid_quantity = kwh(7.5);
    return p;
}

inline std::shared_ptr<const grid::ExogenousProfiles> random_profiles(std::size_t n, std::size_t length,
                                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> rad(0.0, 1.0), load(0.0, 12.0);
    grid::ExogenousProfiles p;
    p.radiation.assign(n, std::vector<double>(length));
    p.load.assign(n, std::vector<double>(length));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < length; ++t) {
            p.radiation[i][t] = (t % 24 < 6 || t % 24 > 18) ? 0.0 : rad(rng);
            p.load[i][t] = load(rng);
        }
    }
    return std::make_shared<const grid::ExogenousProfiles>(std::move(p));
}

inline grid::EnvironmentConfig four_grid_config(std::uint64_t seed = 3) {
    grid::EnvironmentConfig c;
    c.microgrids = {params(100), params(100), params(20, 25), params(10, 25)};
    c.seed = seed;
    return c;
}

inline marl::NormalizedAction random_action(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    marl::NormalizedAction a;
    a.price = u(rng);
    a.quantity = u(rng);
    a.battery = u(rng);
    return a;
}

}  // namespace microtrade::support
