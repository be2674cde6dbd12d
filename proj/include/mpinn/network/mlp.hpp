#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpinn/autodiff/tape.hpp"

namespace mpinn::nn {

struct Point2 {
    double x1 = 0.0;
    double x2 = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Fully-connected tanh network mapping (x1, x2) to a scalar. Hidden layers
/// apply tanh; the output layer is affine.
struct MlpArchitecture {
    static constexpr std::size_t input_dim = 2;
    static constexpr std::size_t output_dim = 1;

    std::vector<std::size_t> hidden_widths;

    /// Throws std::invalid_argument for an empty or zero-width hidden list.
    void validate() const;
    /// [2, m1, ..., m_n, 1]
    std::vector<std::size_t> layer_sizes() const;
    std::size_t affine_layers() const { return hidden_widths.size() + 1; }
    /// "2-32-32-1"
    std::string to_string() const;
    /// Accepts "2-32-32-1", "[2-32-32-1]" or a bare hidden list "32-32".
    static MlpArchitecture parse(std::string_view text);

    friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

std::size_t param_count(const MlpArchitecture& arch);

struct LayerSlot {
    std::size_t fan_in;
    std::size_t fan_out;
    std::size_t weight_offset;  // fan_in x fan_out, row-major
    std::size_t bias_offset;    // fan_out
};

/// Flattened weights and biases. Layout is [W1, b1, W2, b2, ...]; each W is
/// stored fan_in x fan_out row-major so that a layer computes a * W + b on
/// row-vector activations.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(MlpArchitecture arch);
    ParameterVector(MlpArchitecture arch, std::vector<double> flat);

    const MlpArchitecture& architecture() const noexcept { return arch_; }
    const std::vector<LayerSlot>& layout() const noexcept { return layout_; }

    std::span<const double> flat() const noexcept { return flat_; }
    std::span<double> flat() noexcept { return flat_; }
    std::size_t size() const noexcept { return flat_.size(); }

    std::span<const double> weights(std::size_t layer) const;
    std::span<const double> biases(std::size_t layer) const;
    std::span<double> weights(std::size_t layer);
    std::span<double> biases(std::size_t layer);

    friend bool operator==(const ParameterVector& a, const ParameterVector& b) {
        return a.arch_ == b.arch_ && a.flat_ == b.flat_;
    }

private:
    MlpArchitecture arch_;
    std::vector<LayerSlot> layout_;
    std::vector<double> flat_;
};

/// Glorot-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases.
ParameterVector init_xavier(const MlpArchitecture& arch, std::uint64_t seed);

/// Parameter leaves of one network on a tape. Evaluating the same bound
/// network on several point sets shares the leaves, so gradients add up.
struct BoundNetwork {
    const ParameterVector* params = nullptr;
    std::vector<ad::NodeRef> weights;
    std::vector<ad::NodeRef> biases;
};

BoundNetwork bind(const ParameterVector& params, ad::Tape& tape);

/// Collects the gradient of the bound leaves into layout order.
std::vector<double> gather_gradient(const BoundNetwork& net, const ad::Gradients& grads);

enum class DerivativeOrder { value = 0, first = 1, second = 2 };

/// Network output at a batch of points together with its spatial derivative
/// channels. Channels beyond `order` are absent. Only one mixed channel is
/// stored since d12 == d21.
struct EvalBundle {
    ad::NodeRef u, d1, d2, d11, d12, d22;
    std::size_t batch = 0;
    DerivativeOrder order = DerivativeOrder::value;
};

ad::NodeRef forward(const BoundNetwork& net, std::span<const Point2> x, ad::Tape& tape);
ad::NodeRef forward(const ParameterVector& params, std::span<const Point2> x, ad::Tape& tape);

/// Propagates (a, Da, D2a) through every layer as tape operations:
///   affine:  (Wa + b, W Da, W D2a)
///   tanh:    Dk a' = (1 - t^2) Dk z,
///            Dkl a' = -2t(1 - t^2) Dk z Dl z + (1 - t^2) Dkl z
EvalBundle forward_with_spatial(const BoundNetwork& net, std::span<const Point2> x,
                                ad::Tape& tape,
                                DerivativeOrder order = DerivativeOrder::second);
EvalBundle forward_with_spatial(const ParameterVector& params, std::span<const Point2> x,
                                ad::Tape& tape,
                                DerivativeOrder order = DerivativeOrder::second);

/// Tape-free inference.
std::vector<double> evaluate(const ParameterVector& params, std::span<const Point2> x);

/// Binary format: uint32 layer count L, L uint32 layer sizes, then the flat
/// parameters as float64 in layout order (host byte order).
void save_parameters(const std::filesystem::path& path, const ParameterVector& params);
ParameterVector load_parameters(const std::filesystem::path& path);

}  // namespace mpinn::nn
