#include "mpinn/network/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "mpinn/util/random.hpp"

namespace mpinn::nn {

using ad::NodeRef;
using ad::Tape;
using ad::TensorValue;

void MlpArchitecture::validate() const {
    if (hidden_widths.empty()) throw std::invalid_argument("architecture needs at least one hidden layer");
    for (auto w : hidden_widths) {
        if (w == 0) throw std::invalid_argument("hidden layer widths must be positive");
    }
}

std::vector<std::size_t> MlpArchitecture::layer_sizes() const {
    std::vector<std::size_t> sizes;
    sizes.reserve(hidden_widths.size() + 2);
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), hidden_widths.begin(), hidden_widths.end());
    sizes.push_back(output_dim);
    return sizes;
}

std::string MlpArchitecture::to_string() const {
    std::ostringstream os;
    const auto sizes = layer_sizes();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) os << '-';
        os << sizes[i];
    }
    return os.str();
}

MlpArchitecture MlpArchitecture::parse(std::string_view text) {
    std::string s(text);
    std::erase_if(s, [](char c) { return c == '[' || c == ']' || c == ' ' || c == '\t'; });
    std::vector<std::size_t> sizes;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '-')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad architecture '" + std::string(text) + "'");
        }
        if (pos != item.size() || v <= 0) {
            throw std::invalid_argument("bad architecture '" + std::string(text) + "'");
        }
        sizes.push_back(static_cast<std::size_t>(v));
    }
    MlpArchitecture arch;
    if (sizes.size() >= 3 && sizes.front() == input_dim && sizes.back() == output_dim) {
        arch.hidden_widths.assign(sizes.begin() + 1, sizes.end() - 1);
    } else {
        arch.hidden_widths = sizes;
    }
    arch.validate();
    return arch;
}

std::size_t param_count(const MlpArchitecture& arch) {
    arch.validate();
    const auto sizes = arch.layer_sizes();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l] * sizes[l + 1] + sizes[l + 1];
    return n;
}

namespace {

std::vector<LayerSlot> make_layout(const MlpArchitecture& arch) {
    const auto sizes = arch.layer_sizes();
    std::vector<LayerSlot> layout;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        LayerSlot slot{sizes[l], sizes[l + 1], offset, offset + sizes[l] * sizes[l + 1]};
        offset = slot.bias_offset + slot.fan_out;
        layout.push_back(slot);
    }
    return layout;
}

}  // namespace

ParameterVector::ParameterVector(MlpArchitecture arch)
    : ParameterVector(arch, std::vector<double>(param_count(arch), 0.0)) {}

ParameterVector::ParameterVector(MlpArchitecture arch, std::vector<double> flat)
    : arch_(std::move(arch)), flat_(std::move(flat)) {
    arch_.validate();
    layout_ = make_layout(arch_);
    if (flat_.size() != param_count(arch_)) {
        throw std::invalid_argument("parameter vector length " + std::to_string(flat_.size()) +
                                    " does not match architecture " + arch_.to_string());
    }
}

std::span<const double> ParameterVector::weights(std::size_t layer) const {
    const auto& s = layout_.at(layer);
    return std::span<const double>(flat_).subspan(s.weight_offset, s.fan_in * s.fan_out);
}

std::span<const double> ParameterVector::biases(std::size_t layer) const {
    const auto& s = layout_.at(layer);
    return std::span<const double>(flat_).subspan(s.bias_offset, s.fan_out);
}

std::span<double> ParameterVector::weights(std::size_t layer) {
    const auto& s = layout_.at(layer);
    return std::span<double>(flat_).subspan(s.weight_offset, s.fan_in * s.fan_out);
}

std::span<double> ParameterVector::biases(std::size_t layer) {
    const auto& s = layout_.at(layer);
    return std::span<double>(flat_).subspan(s.bias_offset, s.fan_out);
}

ParameterVector init_xavier(const MlpArchitecture& arch, std::uint64_t seed) {
    ParameterVector p(arch);
    util::Rng rng(seed);
    for (std::size_t l = 0; l < p.layout().size(); ++l) {
        const auto& s = p.layout()[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
        for (auto& w : p.weights(l)) w = rng.uniform(-limit, limit);
    }
    return p;
}

BoundNetwork bind(const ParameterVector& params, Tape& tape) {
    BoundNetwork net;
    net.params = &params;
    for (std::size_t l = 0; l < params.layout().size(); ++l) {
        const auto& s = params.layout()[l];
        const auto w = params.weights(l);
        const auto b = params.biases(l);
        net.weights.push_back(
            tape.parameter(TensorValue::matrix(s.fan_in, s.fan_out, {w.begin(), w.end()})));
        net.biases.push_back(tape.parameter(TensorValue::matrix(1, s.fan_out, {b.begin(), b.end()})));
    }
    return net;
}

std::vector<double> gather_gradient(const BoundNetwork& net, const ad::Gradients& grads) {
    std::vector<double> out(net.params->size(), 0.0);
    const auto& layout = net.params->layout();
    for (std::size_t l = 0; l < layout.size(); ++l) {
        const auto& gw = grads[net.weights[l]].data;
        const auto& gb = grads[net.biases[l]].data;
        std::copy(gw.begin(), gw.end(), out.begin() + static_cast<std::ptrdiff_t>(layout[l].weight_offset));
        std::copy(gb.begin(), gb.end(), out.begin() + static_cast<std::ptrdiff_t>(layout[l].bias_offset));
    }
    return out;
}

namespace {

TensorValue input_matrix(std::span<const Point2> x) {
    std::vector<double> data;
    data.reserve(2 * x.size());
    for (const auto& p : x) {
        data.push_back(p.x1);
        data.push_back(p.x2);
    }
    return TensorValue::matrix(x.size(), 2, std::move(data));
}

NodeRef mul_opt(Tape& tape, NodeRef a, NodeRef b) {
    if (!a.valid() || !b.valid()) return {};
    return tape.mul(a, b);
}

NodeRef add_opt(Tape& tape, NodeRef a, NodeRef b) {
    if (!a.valid()) return b;
    if (!b.valid()) return a;
    return tape.add(a, b);
}

NodeRef matmul_opt(Tape& tape, NodeRef a, NodeRef w) {
    if (!a.valid()) return {};
    return tape.matmul(a, w);
}

}  // namespace

NodeRef forward(const BoundNetwork& net, std::span<const Point2> x, Tape& tape) {
    return forward_with_spatial(net, x, tape, DerivativeOrder::value).u;
}

NodeRef forward(const ParameterVector& params, std::span<const Point2> x, Tape& tape) {
    return forward(bind(params, tape), x, tape);
}

EvalBundle forward_with_spatial(const ParameterVector& params, std::span<const Point2> x, Tape& tape,
                                DerivativeOrder order) {
    return forward_with_spatial(bind(params, tape), x, tape, order);
}

EvalBundle forward_with_spatial(const BoundNetwork& net, std::span<const Point2> x, Tape& tape,
                                DerivativeOrder order) {
    if (x.empty()) throw std::invalid_argument("forward: empty batch");
    const bool first = order != DerivativeOrder::value;
    const bool second = order == DerivativeOrder::second;

    // Input channels: a = x, D1 a = e1, D2 a = e2 (broadcast rows), D2 a = 0.
    NodeRef a = tape.constant(input_matrix(x));
    NodeRef a1, a2, a11, a12, a22;
    if (first) {
        a1 = tape.constant(TensorValue::matrix(1, 2, {1.0, 0.0}));
        a2 = tape.constant(TensorValue::matrix(1, 2, {0.0, 1.0}));
    }

    const auto layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const auto W = net.weights[l];
        NodeRef z = tape.add(tape.matmul(a, W), net.biases[l]);
        NodeRef z1 = matmul_opt(tape, a1, W);
        NodeRef z2 = matmul_opt(tape, a2, W);
        NodeRef z11 = matmul_opt(tape, a11, W);
        NodeRef z12 = matmul_opt(tape, a12, W);
        NodeRef z22 = matmul_opt(tape, a22, W);

        if (l + 1 == layers) {
            a = z;
            a1 = z1, a2 = z2, a11 = z11, a12 = z12, a22 = z22;
            break;
        }

        const NodeRef t = tape.tanh(z);
        a = t;
        if (!first) continue;
        const NodeRef s = tape.add_scalar(tape.neg(tape.square(t)), 1.0);  // 1 - t^2
        a1 = tape.mul(s, z1);
        a2 = tape.mul(s, z2);
        if (!second) continue;
        const NodeRef q = tape.scale(tape.mul(t, s), -2.0);  // -2 t (1 - t^2)
        const NodeRef q1 = tape.mul(q, z1);
        const NodeRef q2 = tape.mul(q, z2);
        a11 = add_opt(tape, tape.mul(q1, z1), mul_opt(tape, s, z11));
        a12 = add_opt(tape, tape.mul(q1, z2), mul_opt(tape, s, z12));
        a22 = add_opt(tape, tape.mul(q2, z2), mul_opt(tape, s, z22));
    }

    EvalBundle out;
    out.u = a;
    out.batch = x.size();
    out.order = order;
    if (first) out.d1 = a1, out.d2 = a2;
    if (second) out.d11 = a11, out.d12 = a12, out.d22 = a22;
    return out;
}

std::vector<double> evaluate(const ParameterVector& params, std::span<const Point2> x) {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using ConstMap = Eigen::Map<const RowMatrix>;
    constexpr std::size_t chunk = 4096;

    std::vector<double> out;
    out.reserve(x.size());
    const auto& layout = params.layout();
    for (std::size_t start = 0; start < x.size(); start += chunk) {
        const auto n = std::min(chunk, x.size() - start);
        RowMatrix a(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, 0) = x[start + i].x1;
            a(i, 1) = x[start + i].x2;
        }
        for (std::size_t l = 0; l < layout.size(); ++l) {
            const auto& s = layout[l];
            ConstMap W(params.weights(l).data(), s.fan_in, s.fan_out);
            ConstMap b(params.biases(l).data(), 1, s.fan_out);
            RowMatrix z = a * W;
            z.rowwise() += b.row(0);
            if (l + 1 < layout.size()) {
                a = z.array().tanh().matrix();
            } else {
                a = std::move(z);
            }
        }
        for (std::size_t i = 0; i < n; ++i) out.push_back(a(i, 0));
    }
    return out;
}

void save_parameters(const std::filesystem::path& path, const ParameterVector& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto sizes = params.architecture().layer_sizes();
    const auto count = static_cast<std::uint32_t>(sizes.size());
    os.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (auto s : sizes) {
        const auto v = static_cast<std::uint32_t>(s);
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    const auto flat = params.flat();
    os.write(reinterpret_cast<const char*>(flat.data()),
             static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

ParameterVector load_parameters(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::uint32_t count = 0;
    is.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!is || count < 3 || count > 1024) throw std::runtime_error("bad parameter file header: " + path.string());
    std::vector<std::size_t> sizes(count);
    for (auto& s : sizes) {
        std::uint32_t v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        s = v;
    }
    if (!is || sizes.front() != MlpArchitecture::input_dim || sizes.back() != MlpArchitecture::output_dim) {
        throw std::runtime_error("bad parameter file header: " + path.string());
    }
    MlpArchitecture arch{{sizes.begin() + 1, sizes.end() - 1}};
    std::vector<double> flat(param_count(arch));
    is.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated parameter file: " + path.string());
    return ParameterVector(std::move(arch), std::move(flat));
}

}  // namespace mpinn::nn
