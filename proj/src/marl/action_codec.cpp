#include "microtrade/marl/action_codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace microtrade::marl {

grid::ScheduleAction decode_action(const NormalizedAction& u, const grid::MicrogridParams& params,
                                   PriceBounds bounds) {
    for (double c : u.as_array()) {
        if (!(c >= -1.0 && c <= 1.0)) throw std::invalid_argument("normalized action component outside [-1, 1]");
    }
    grid::ScheduleAction action;
    action.battery_delta = kwh(u.battery * params.max_charge_rate.value());

    const double price = bounds.floor + (u.price + 1.0) / 2.0 * (bounds.cap - bounds.floor);
    Energy quantity = kwh(std::abs(u.quantity) * params.max_bid_quantity.value());
    quantity = min(quantity, params.max_bid_quantity);
    if (quantity.is_positive()) {
        if (u.quantity > 0.0) {
            action.role = grid::BuyerRole{price, quantity};
        } else {
            action.role = grid::SellerRole{price, quantity};
        }
    }
    return action;
}

ObservationScaler::ObservationScaler(std::vector<double> battery_capacity, std::vector<double> max_generation,
                                     std::vector<double> max_load, PriceBounds prices)
    : capacity_(std::move(battery_capacity)),
      max_generation_(std::move(max_generation)),
      max_load_(std::move(max_load)),
      prices_(prices) {
    if (capacity_.size() != max_generation_.size() || capacity_.size() != max_load_.size()) {
        throw std::invalid_argument("observation scaler arity mismatch");
    }
    if (!(prices_.cap > prices_.floor)) throw std::invalid_argument("price cap must exceed floor");
}

ObservationScaler ObservationScaler::from_setup(std::span<const grid::MicrogridParams> params,
                                                const grid::ExogenousProfiles& profiles, PriceBounds prices) {
    std::vector<double> cap, gen, load;
    for (std::size_t i = 0; i < params.size(); ++i) {
        cap.push_back(params[i].battery_capacity.value());
        double peak_radiation = 0.0, peak_load = 0.0;
        for (double r : profiles.radiation.at(i)) peak_radiation = std::max(peak_radiation, r);
        for (double l : profiles.load.at(i)) peak_load = std::max(peak_load, l);
        gen.push_back(std::max(1e-9, grid::pv_generation(params[i], peak_radiation).value()));
        load.push_back(std::max(1e-9, peak_load));
    }
    return ObservationScaler(std::move(cap), std::move(gen), std::move(load), prices);
}

std::array<double, kStateSize> ObservationScaler::normalize(std::size_t agent, const grid::Observation& obs) const {
    const double span = prices_.cap - prices_.floor;
    return {obs.battery_level.value() / capacity_.at(agent), obs.last_generation.value() / max_generation_.at(agent),
            obs.last_load.value() / max_load_.at(agent), (obs.wholesale_price - prices_.floor) / span,
            (obs.last_clearing_price - prices_.floor) / span};
}

nn::Matrix stack_states(const ObservationScaler& scaler, std::span<const grid::Observation> obs) {
    nn::Matrix m(kStateSize, static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        auto s = scaler.normalize(i, obs[i]);
        for (int r = 0; r < kStateSize; ++r) m(r, static_cast<Eigen::Index>(i)) = s[r];
    }
    return m;
}

}  // namespace microtrade::marl
