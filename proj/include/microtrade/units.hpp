#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace microtrade {

// Fixed-point quantity stored as an integer count of `Resolution` sub-units.
// Sums and differences are exact; conversion to and from double rounds to
// the nearest sub-unit.
template <typename Tag, std::int64_t UnitsPerWhole>
class FixedQuantity {
public:
    static constexpr std::int64_t kUnitsPerWhole = UnitsPerWhole;

    constexpr FixedQuantity() = default;

    static constexpr FixedQuantity from_units(std::int64_t units) { return FixedQuantity(units); }

    static FixedQuantity from_double(double value) {
        if (!std::isfinite(value)) {
            throw std::domain_error("non-finite quantity");
        }
        return FixedQuantity(static_cast<std::int64_t>(std::llround(value * static_cast<double>(UnitsPerWhole))));
    }

    constexpr std::int64_t units() const { return units_; }
    constexpr double value() const { return static_cast<double>(units_) / static_cast<double>(UnitsPerWhole); }

    constexpr bool is_zero() const { return units_ == 0; }
    constexpr bool is_positive() const { return units_ > 0; }

    constexpr FixedQuantity& operator+=(FixedQuantity o) { units_ += o.units_; return *this; }
    constexpr FixedQuantity& operator-=(FixedQuantity o) { units_ -= o.units_; return *this; }
    friend constexpr FixedQuantity operator+(FixedQuantity a, FixedQuantity b) { return a += b; }
    friend constexpr FixedQuantity operator-(FixedQuantity a, FixedQuantity b) { return a -= b; }
    friend constexpr FixedQuantity operator-(FixedQuantity a) { return FixedQuantity(-a.units_); }
    friend constexpr auto operator<=>(FixedQuantity, FixedQuantity) = default;

private:
    constexpr explicit FixedQuantity(std::int64_t units) : units_(units) {}
    std::int64_t units_ = 0;
};

struct EnergyTag {};
struct MoneyTag {};

/// Energy in kWh at 0.001 kWh resolution. One slot is one hour, so energy
/// per slot and average power are numerically interchangeable.
using Energy = FixedQuantity<EnergyTag, 1000>;

/// Money in cents at 0.0001 cent resolution.
using Money = FixedQuantity<MoneyTag, 10000>;

inline Energy kwh(double value) { return Energy::from_double(value); }
inline Money cents(double value) { return Money::from_double(value); }

inline constexpr Energy min(Energy a, Energy b) { return a < b ? a : b; }
inline constexpr Energy max(Energy a, Energy b) { return a < b ? b : a; }
inline constexpr Energy clamp(Energy v, Energy lo, Energy hi) { return v < lo ? lo : (hi < v ? hi : v); }

/// price (cents/kWh) times energy, rounded to the money resolution.
inline Money charge(double price_cents_per_kwh, Energy energy) {
    return Money::from_double(price_cents_per_kwh * energy.value());
}

}  // namespace microtrade
