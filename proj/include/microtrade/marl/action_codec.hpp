#pragma once

#include <array>
#include <span>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/grid/microgrid.hpp"
#include "microtrade/nn/dense_network.hpp"

namespace microtrade::marl {

inline constexpr int kStateSize = 5;   // battery, generation, load, wholesale price, clearing price
inline constexpr int kPrivateStateSize = 3;
inline constexpr int kActionSize = 3;  // price, quantity, battery

/// Actor output: price, trading quantity and battery command, each in [-1, 1].
/// A positive quantity makes the agent a buyer, a negative one a seller.
struct NormalizedAction {
    double price = 0.0;
    double quantity = 0.0;
    double battery = 0.0;

    std::array<double, kActionSize> as_array() const { return {price, quantity, battery}; }
    static NormalizedAction from(const double* v) { return {v[0], v[1], v[2]}; }
};

struct PriceBounds {
    double floor = 15.0;
    double cap = 22.79;
};

/// Maps a normalized action onto a physical schedule. Throws
/// std::invalid_argument for components outside [-1, 1].
grid::ScheduleAction decode_action(const NormalizedAction& u, const grid::MicrogridParams& params,
                                   PriceBounds bounds);

/// Maps physical observations into roughly [0, 1] network inputs.
class ObservationScaler {
public:
    ObservationScaler() = default;
    ObservationScaler(std::vector<double> battery_capacity, std::vector<double> max_generation,
                      std::vector<double> max_load, PriceBounds prices);

    /// Uses each microgrid's capacity and the profile maxima.
    static ObservationScaler from_setup(std::span<const grid::MicrogridParams> params,
                                        const grid::ExogenousProfiles& profiles, PriceBounds prices);

    std::array<double, kStateSize> normalize(std::size_t agent, const grid::Observation& obs) const;
    std::size_t agent_count() const { return capacity_.size(); }

private:
    std::vector<double> capacity_, max_generation_, max_load_;
    PriceBounds prices_;
};

/// Column-per-agent helpers for joint states/actions.
nn::Matrix stack_states(const ObservationScaler& scaler, std::span<const grid::Observation> obs);

}  // namespace microtrade::marl
