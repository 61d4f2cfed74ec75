#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace microtrade::marl {

struct OuParams {
    double theta = 0.15;
    double mu = 0.0;
    double sigma = 0.2;
    friend bool operator==(const OuParams&, const OuParams&) = default;
};

/// One Euler step of the Ornstein-Uhlenbeck recurrence:
/// x <- x + theta * (mu - x) + sigma * N(0, 1), per component.
void ou_noise_step(std::vector<double>& x, const OuParams& p, std::mt19937_64& rng);

class OrnsteinUhlenbeck {
public:
    OrnsteinUhlenbeck(std::size_t dims, OuParams params, std::uint64_t seed);

    void reset();
    const std::vector<double>& sample();
    const std::vector<double>& state() const { return x_; }

private:
    OuParams params_;
    std::vector<double> x_;
    std::mt19937_64 rng_;
};

/// Linear decay from `initial` at episode 0 to zero at `decay_episodes`.
double noise_scale(std::size_t episode, double initial, std::size_t decay_episodes);

/// SplitMix64 finalizer; derives independent sub-seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace microtrade::marl
