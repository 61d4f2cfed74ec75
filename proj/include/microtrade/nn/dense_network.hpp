#pragma once

// Fully-connected feed-forward networks with exact reverse-mode gradients.
// Batches are column-major: one sample per column.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace microtrade::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { ReLU = 0, Tanh = 1, Linear = 2 };

struct DenseLayer {
    Matrix weights;  // out x in
    Vector bias;     // out
};

/// Parameter-shaped container, used for gradients and optimizer moments.
struct Gradient {
    std::vector<DenseLayer> layers;

    void set_zero();
    bool all_finite() const;
    double squared_norm() const;
};

/// Per-layer outputs recorded by a forward pass; consumed by backward().
struct ForwardTape {
    std::vector<Matrix> values;  // values[0] = input, values[i+1] = output of layer i
    const Matrix& output() const { return values.back(); }
};

class DenseNetwork {
public:
    DenseNetwork() = default;

    /// `layer_sizes` includes input and output widths. Hidden layers use
    /// `hidden`; the last layer uses `output`. Weights and biases start
    /// uniform in +-1/sqrt(fan_in).
    DenseNetwork(std::vector<int> layer_sizes, Activation output, std::uint64_t seed,
                 Activation hidden = Activation::ReLU);

    Vector forward(const Vector& input) const;
    Matrix forward(const Matrix& inputs) const;
    Matrix forward(const Matrix& inputs, ForwardTape& tape) const;

    /// Gradients of sum(output .* upstream) with respect to every parameter.
    /// When `input_gradient` is non-null it receives the gradient with
    /// respect to the inputs.
    Gradient backward(const ForwardTape& tape, const Matrix& upstream, Matrix* input_gradient = nullptr) const;

    /// Input gradient only; skips parameter gradients.
    Matrix input_gradient(const ForwardTape& tape, const Matrix& upstream) const;

    Gradient zero_gradient() const;

    /// target <- tau * online + (1 - tau) * target for every parameter.
    void soft_blend_from(const DenseNetwork& online, double tau);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t parameter_count() const;

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    bool same_shape(const DenseNetwork& other) const { return sizes_ == other.sizes_; }

    void save(std::ostream& out) const;
    static DenseNetwork load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static DenseNetwork load(const std::filesystem::path& path);

private:
    Activation activation_for(std::size_t layer) const {
        return layer + 1 == layers_.size() ? output_ : hidden_;
    }

    std::vector<int> sizes_;
    std::vector<DenseLayer> layers_;
    Activation hidden_ = Activation::ReLU;
    Activation output_ = Activation::Linear;
    std::uint64_t seed_ = 0;
};

/// Free-function form of DenseNetwork::soft_blend_from; rejects tau outside
/// [0, 1] and mismatched shapes.
void soft_blend(DenseNetwork& target, const DenseNetwork& online, double tau);

}  // namespace microtrade::nn
