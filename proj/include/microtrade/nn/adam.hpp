#pragma once

#include "microtrade/nn/dense_network.hpp"

namespace microtrade::nn {

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive moment estimation. Holds the first/second moment estimates for
/// one network.
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(const DenseNetwork& net, AdamConfig config);

    /// Descends along `grad`. Throws std::domain_error if any component is
    /// non-finite; the network and moments are left untouched in that case.
    void step(DenseNetwork& net, const Gradient& grad);

    const AdamConfig& config() const { return config_; }
    long long steps() const { return steps_; }
    const Gradient& first_moment() const { return m_; }
    const Gradient& second_moment() const { return v_; }

private:
    AdamConfig config_;
    Gradient m_;
    Gradient v_;
    long long steps_ = 0;
};

}  // namespace microtrade::nn
