#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/io/config.hpp"

namespace microtrade::io {

/// Raised for unreadable or malformed profile files. The message names the
/// file and, where applicable, the 1-based line.
class ProfileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProfileScale {
    double radiation = 1.0;
    double load = 1.0;
};

inline const std::string kProfileHeader = "slot,radiation_kw_m2,load_kwh";

/// One CSV per microgrid with header `slot,radiation_kw_m2,load_kwh` and
/// consecutive slots from 0. Series are truncated to the shortest file and
/// must hold at least `min_length` rows.
grid::ExogenousProfiles load_profiles(const std::vector<std::filesystem::path>& paths,
                                      const std::vector<ProfileScale>& scales, double wholesale_price,
                                      std::size_t min_length);

void write_profile_csv(const std::filesystem::path& path, const std::vector<double>& radiation,
                       const std::vector<double>& load);

/// Nominal shape parameters of a synthetic archetype.
struct ArchetypeShape {
    double peak_radiation = 1.0;  // kW/m^2 at solar noon on a clear day
    double min_cloud_factor = 0.6;
    double min_hourly_jitter = 0.85;
    double base_load = 3.0;       // kWh per slot
    double evening_load = 1.5;    // extra kWh at the evening peak
    double load_noise_sd = 0.3;
};

ArchetypeShape archetype_shape(Archetype archetype);

/// Hourly series starting at midnight. Microgrid i draws from its own
/// stream derived from (seed, i), so adding a microgrid never changes the
/// others.
grid::ExogenousProfiles synth_profiles(std::uint64_t seed, const std::vector<Archetype>& archetypes,
                                       std::size_t length, double wholesale_price);

/// Profiles for an experiment: synthetic or CSV per `profile_source`, with
/// per-microgrid scales applied either way.
std::shared_ptr<const grid::ExogenousProfiles> build_profiles(const ExperimentConfig& config);

}  // namespace microtrade::io
