#include "microtrade/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace microtrade::nn {

AdamOptimizer::AdamOptimizer(const DenseNetwork& net, AdamConfig config)
    : config_(config), m_(net.zero_gradient()), v_(net.zero_gradient()) {
    if (!(config_.step_size > 0.0)) throw std::invalid_argument("Adam step size must be positive");
}

void AdamOptimizer::step(DenseNetwork& net, const Gradient& grad) {
    if (grad.layers.size() != m_.layers.size()) throw std::invalid_argument("gradient/optimizer shape mismatch");
    for (std::size_t i = 0; i < grad.layers.size(); ++i) {
        const auto& g = grad.layers[i];
        if (g.weights.rows() != m_.layers[i].weights.rows() || g.weights.cols() != m_.layers[i].weights.cols()) {
            throw std::invalid_argument("gradient/optimizer shape mismatch at layer " + std::to_string(i));
        }
        if (!g.weights.allFinite() || !g.bias.allFinite()) {
            throw std::domain_error("non-finite gradient component in layer " + std::to_string(i));
        }
    }

    ++steps_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const double lr = config_.step_size;
    const double eps = config_.epsilon;

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        update(layers[i].weights, m_.layers[i].weights, v_.layers[i].weights, grad.layers[i].weights);
        update(layers[i].bias, m_.layers[i].bias, v_.layers[i].bias, grad.layers[i].bias);
    }
}

}  // namespace microtrade::nn
