#include "microtrade/nn/dense_network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

namespace microtrade::nn {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'T', 'N', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

void apply_activation(Matrix& m, Activation a) {
    switch (a) {
        case Activation::ReLU: m = m.cwiseMax(0.0); break;
        case Activation::Tanh: m = m.array().tanh().matrix(); break;
        case Activation::Linear: break;
    }
}

// Multiplies `delta` in place by the activation derivative, expressed in
// terms of the activation's output.
void apply_derivative(Matrix& delta, const Matrix& out, Activation a) {
    switch (a) {
        case Activation::ReLU: delta = (out.array() > 0.0).select(delta, 0.0); break;
        case Activation::Tanh: delta.array() *= 1.0 - out.array().square(); break;
        case Activation::Linear: break;
    }
}

void check_activation(std::uint8_t raw) {
    if (raw > static_cast<std::uint8_t>(Activation::Linear)) {
        throw std::runtime_error("unknown activation code " + std::to_string(raw));
    }
}

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>((static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T read_le(std::istream& in) {
    static_assert(std::is_integral_v<T>);
    std::make_unsigned_t<T> value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        int c = in.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated network file");
        value |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<T>(value);
}

void write_double(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }
double read_double(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

}  // namespace

void Gradient::set_zero() {
    for (auto& l : layers) {
        l.weights.setZero();
        l.bias.setZero();
    }
}

bool Gradient::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

double Gradient::squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) s += l.weights.squaredNorm() + l.bias.squaredNorm();
    return s;
}

DenseNetwork::DenseNetwork(std::vector<int> layer_sizes, Activation output, std::uint64_t seed, Activation hidden)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output), seed_(seed) {
    if (sizes_.size() < 2) throw std::invalid_argument("a network needs at least input and output sizes");
    for (int s : sizes_) {
        if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[i]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer{Matrix(sizes_[i + 1], sizes_[i]), Vector(sizes_[i + 1])};
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = dist(rng);
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
        layers_.push_back(std::move(layer));
    }
}

Vector DenseNetwork::forward(const Vector& input) const {
    Matrix out = forward(Matrix(input));
    return out.col(0);
}

Matrix DenseNetwork::forward(const Matrix& inputs) const {
    if (inputs.rows() != input_size()) {
        throw std::invalid_argument("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                                    std::to_string(input_size()));
    }
    Matrix x = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Matrix y = layers_[i].weights * x;
        y.colwise() += layers_[i].bias;
        apply_activation(y, activation_for(i));
        x = std::move(y);
    }
    return x;
}

Matrix DenseNetwork::forward(const Matrix& inputs, ForwardTape& tape) const {
    if (inputs.rows() != input_size()) {
        throw std::invalid_argument("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                                    std::to_string(input_size()));
    }
    tape.values.resize(layers_.size() + 1);
    tape.values[0] = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Matrix& y = tape.values[i + 1];
        y.noalias() = layers_[i].weights * tape.values[i];
        y.colwise() += layers_[i].bias;
        apply_activation(y, activation_for(i));
    }
    return tape.output();
}

Gradient DenseNetwork::backward(const ForwardTape& tape, const Matrix& upstream, Matrix* input_gradient) const {
    if (tape.values.size() != layers_.size() + 1) throw std::invalid_argument("tape does not match network");
    if (upstream.rows() != output_size() || upstream.cols() != tape.output().cols()) {
        throw std::invalid_argument("upstream gradient shape mismatch");
    }
    Gradient grad;
    grad.layers.resize(layers_.size());
    Matrix delta = upstream;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        apply_derivative(delta, tape.values[k + 1], activation_for(k));
        grad.layers[k].weights.noalias() = delta * tape.values[k].transpose();
        grad.layers[k].bias = delta.rowwise().sum();
        if (k > 0 || input_gradient) {
            Matrix next = layers_[k].weights.transpose() * delta;
            delta = std::move(next);
        }
    }
    if (input_gradient) *input_gradient = std::move(delta);
    return grad;
}

Matrix DenseNetwork::input_gradient(const ForwardTape& tape, const Matrix& upstream) const {
    if (tape.values.size() != layers_.size() + 1) throw std::invalid_argument("tape does not match network");
    if (upstream.rows() != output_size() || upstream.cols() != tape.output().cols()) {
        throw std::invalid_argument("upstream gradient shape mismatch");
    }
    Matrix delta = upstream;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        apply_derivative(delta, tape.values[k + 1], activation_for(k));
        Matrix next = layers_[k].weights.transpose() * delta;
        delta = std::move(next);
    }
    return delta;
}

Gradient DenseNetwork::zero_gradient() const {
    Gradient g;
    for (const auto& l : layers_) {
        g.layers.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
    }
    return g;
}

void DenseNetwork::soft_blend_from(const DenseNetwork& online, double tau) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].weights = tau * online.layers_[i].weights + (1.0 - tau) * layers_[i].weights;
        layers_[i].bias = tau * online.layers_[i].bias + (1.0 - tau) * layers_[i].bias;
    }
}

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
        n += static_cast<std::size_t>(sizes_[i]) * sizes_[i + 1] + sizes_[i + 1];
    }
    return n;
}

void DenseNetwork::save(std::ostream& out) const {
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kFormatVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sizes_.size()));
    for (int s : sizes_) write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(hidden_));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(output_));
    write_le<std::uint64_t>(out, seed_);
    for (const auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) write_double(out, l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) write_double(out, l.bias(r));
    }
    if (!out) throw std::runtime_error("failed writing network");
}

DenseNetwork DenseNetwork::load(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error("not a network file (bad magic)");
    auto version = read_le<std::uint32_t>(in);
    if (version != kFormatVersion) throw std::runtime_error("unsupported network file version " + std::to_string(version));
    auto count = read_le<std::uint32_t>(in);
    if (count < 2 || count > 64) throw std::runtime_error("implausible layer count " + std::to_string(count));
    DenseNetwork net;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto s = read_le<std::uint32_t>(in);
        if (s == 0 || s > (1u << 20)) throw std::runtime_error("implausible layer size");
        net.sizes_.push_back(static_cast<int>(s));
    }
    auto hidden = read_le<std::uint8_t>(in);
    auto output = read_le<std::uint8_t>(in);
    check_activation(hidden);
    check_activation(output);
    net.hidden_ = static_cast<Activation>(hidden);
    net.output_ = static_cast<Activation>(output);
    net.seed_ = read_le<std::uint64_t>(in);
    for (std::size_t i = 0; i + 1 < net.sizes_.size(); ++i) {
        DenseLayer l{Matrix(net.sizes_[i + 1], net.sizes_[i]), Vector(net.sizes_[i + 1])};
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = read_double(in);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = read_double(in);
        net.layers_.push_back(std::move(l));
    }
    return net;
}

void DenseNetwork::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    save(out);
}

DenseNetwork DenseNetwork::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open network file " + path.string());
    return load(in);
}

void soft_blend(DenseNetwork& target, const DenseNetwork& online, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in [0, 1]");
    if (!target.same_shape(online)) throw std::invalid_argument("soft_blend: network shapes differ");
    target.soft_blend_from(online, tau);
}

}  // namespace microtrade::nn
