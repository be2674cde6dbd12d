#include "mpinn/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

namespace mpinn::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

enum class Broadcast { same, rows, scalar };

Broadcast broadcast_kind(OpKind kind, const TensorValue& a, const TensorValue& b) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::rows;
    if (b.is_scalar()) return Broadcast::scalar;
    throw ShapeError(std::string(to_string(kind)) + ": incompatible shapes " + a.shape_string() +
                     " and " + b.shape_string());
}

inline std::size_t bindex(Broadcast bc, std::size_t i, std::size_t cols) {
    switch (bc) {
        case Broadcast::same: return i;
        case Broadcast::rows: return i % cols;
        case Broadcast::scalar: return 0;
    }
    return 0;
}

void ensure(std::vector<double>& adj, std::size_t n) {
    if (adj.empty()) adj.assign(n, 0.0);
}

}  // namespace

std::string_view to_string(OpKind kind) noexcept {
    switch (kind) {
        case OpKind::parameter: return "parameter";
        case OpKind::constant: return "constant";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::div: return "div";
        case OpKind::tanh: return "tanh";
        case OpKind::exp: return "exp";
        case OpKind::square: return "square";
        case OpKind::sqrt: return "sqrt";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::neg: return "neg";
        case OpKind::scale: return "scale";
        case OpKind::add_scalar: return "add_scalar";
        case OpKind::div_scalar: return "div_scalar";
    }
    return "unknown";
}

const TensorValue& Gradients::operator[](NodeRef parameter) const {
    auto it = grads_.find(parameter.index);
    if (it == grads_.end()) throw ContractError("no gradient recorded for node");
    return it->second;
}

NodeRef Tape::parameter(TensorValue value) {
    Node n;
    n.kind = OpKind::parameter;
    n.requires_grad = true;
    n.value = std::move(value);
    auto ref = push(std::move(n));
    parameters_.push_back(ref.index);
    return ref;
}

NodeRef Tape::constant(TensorValue value) {
    Node n;
    n.kind = OpKind::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeRef Tape::record(OpKind kind, std::span<const NodeRef> inputs, double attribute) {
    switch (kind) {
        case OpKind::parameter:
        case OpKind::constant:
            throw ContractError("leaf nodes are created with parameter() or constant()");
        case OpKind::matmul:
        case OpKind::add:
        case OpKind::sub:
        case OpKind::mul:
        case OpKind::div:
            if (inputs.size() != 2) throw ContractError(std::string(to_string(kind)) + " takes two inputs");
            return binary(kind, inputs[0], inputs[1]);
        default:
            if (inputs.size() != 1) throw ContractError(std::string(to_string(kind)) + " takes one input");
            return unary(kind, inputs[0], attribute);
    }
}

const Tape::Node& Tape::node(NodeRef ref) const {
    if (!ref.valid() || ref.index >= nodes_.size()) throw ContractError("node reference not on this tape");
    return nodes_[ref.index];
}

const TensorValue& Tape::value(NodeRef ref) const { return node(ref).value; }

double Tape::scalar_value(NodeRef ref) const {
    const auto& v = node(ref).value;
    if (!v.is_scalar()) throw ContractError("node is not scalar: " + v.shape_string());
    return v.data[0];
}

OpKind Tape::kind(NodeRef ref) const { return node(ref).kind; }

std::span<const NodeRef> Tape::inputs(NodeRef ref) const {
    const auto& n = node(ref);
    return {n.inputs.data(), n.arity};
}

TensorValue Tape::adjoint(NodeRef ref) const {
    const auto& n = node(ref);
    if (n.adjoint.empty()) return TensorValue::zeros(n.value.rows(), n.value.cols());
    return TensorValue(n.value.shape, n.adjoint);
}

NodeRef Tape::push(Node n) {
    const auto index = nodes_.size();
    const auto& data = n.value.data;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) throw NonFiniteError(std::string(to_string(n.kind)), index, i);
    }
    nodes_.push_back(std::move(n));
    return NodeRef{index};
}

NodeRef Tape::unary(OpKind kind, NodeRef a, double attribute) {
    const auto& in = node(a);
    const auto& x = in.value.data;
    Node n;
    n.kind = kind;
    n.inputs[0] = a;
    n.arity = 1;
    n.attribute = attribute;
    n.requires_grad = in.requires_grad;

    std::vector<double> out;
    switch (kind) {
        case OpKind::sum:
        case OpKind::mean: {
            double acc = 0.0;
            for (double v : x) acc += v;  // sequential, index order
            if (kind == OpKind::mean) {
                if (x.empty()) throw ShapeError("mean of an empty tensor");
                acc /= static_cast<double>(x.size());
            }
            n.value = TensorValue::scalar(acc);
            return push(std::move(n));
        }
        default: break;
    }

    out.resize(x.size());
    switch (kind) {
        case OpKind::tanh:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
            break;
        case OpKind::exp:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
            break;
        case OpKind::square:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
            break;
        case OpKind::sqrt:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::sqrt(x[i]);
            break;
        case OpKind::neg:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
            break;
        case OpKind::scale:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * attribute;
            break;
        case OpKind::add_scalar:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + attribute;
            break;
        case OpKind::div_scalar:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / attribute;
            break;
        default:
            throw ContractError(std::string(to_string(kind)) + " is not a unary operation");
    }
    n.value = TensorValue(in.value.shape, std::move(out));
    return push(std::move(n));
}

NodeRef Tape::binary(OpKind kind, NodeRef a, NodeRef b) {
    const auto& na = node(a);
    const auto& nb = node(b);
    const auto& va = na.value;
    const auto& vb = nb.value;
    Node n;
    n.kind = kind;
    n.inputs = {a, b};
    n.arity = 2;
    n.requires_grad = na.requires_grad || nb.requires_grad;

    if (kind == OpKind::matmul) {
        if (va.cols() != vb.rows()) {
            throw ShapeError("matmul: incompatible shapes " + va.shape_string() + " and " +
                             vb.shape_string());
        }
        TensorValue out = TensorValue::zeros(va.rows(), vb.cols());
        MutMap(out.data.data(), va.rows(), vb.cols()).noalias() =
            ConstMap(va.data.data(), va.rows(), va.cols()) *
            ConstMap(vb.data.data(), vb.rows(), vb.cols());
        n.value = std::move(out);
        return push(std::move(n));
    }

    const auto bc = broadcast_kind(kind, va, vb);
    const auto cols = va.cols();
    const auto& x = va.data;
    const auto& y = vb.data;
    std::vector<double> out(x.size());
    switch (kind) {
        case OpKind::add:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[bindex(bc, i, cols)];
            break;
        case OpKind::sub:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[bindex(bc, i, cols)];
            break;
        case OpKind::mul:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[bindex(bc, i, cols)];
            break;
        case OpKind::div:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[bindex(bc, i, cols)];
            break;
        default:
            throw ContractError(std::string(to_string(kind)) + " is not a binary operation");
    }
    n.value = TensorValue(va.shape, std::move(out));
    return push(std::move(n));
}

Gradients Tape::backward(NodeRef loss) {
    const auto& ln = node(loss);
    if (!ln.value.is_scalar()) {
        throw ContractError("backward requires a scalar loss, got shape " + ln.value.shape_string());
    }
    for (auto& n : nodes_) n.adjoint.clear();
    nodes_[loss.index].adjoint.assign(1, 1.0);

    for (std::size_t i = loss.index + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.adjoint.empty() || !n.requires_grad || n.arity == 0) continue;
        propagate(i);
    }

    Gradients g;
    for (auto p : parameters_) {
        const auto& n = nodes_[p];
        if (n.adjoint.empty()) {
            g.grads_.emplace(p, TensorValue::zeros(n.value.rows(), n.value.cols()));
        } else {
            g.grads_.emplace(p, TensorValue(n.value.shape, n.adjoint));
        }
    }
    return g;
}

void Tape::propagate(std::size_t index) {
    Node& n = nodes_[index];
    const auto& g = n.adjoint;
    Node& a = nodes_[n.inputs[0].index];
    const auto& x = a.value.data;

    if (n.arity == 1) {
        if (!a.requires_grad) return;
        ensure(a.adjoint, x.size());
        auto& da = a.adjoint;
        const auto& y = n.value.data;
        switch (n.kind) {
            case OpKind::tanh:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            case OpKind::exp:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] * y[i];
                break;
            case OpKind::square:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += 2.0 * g[i] * x[i];
                break;
            case OpKind::sqrt:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] * 0.5 / y[i];
                break;
            case OpKind::sum:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[0];
                break;
            case OpKind::mean: {
                const double s = g[0] / static_cast<double>(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += s;
                break;
            }
            case OpKind::neg:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] -= g[i];
                break;
            case OpKind::scale:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] * n.attribute;
                break;
            case OpKind::add_scalar:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i];
                break;
            case OpKind::div_scalar:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] / n.attribute;
                break;
            default: break;
        }
        return;
    }

    Node& b = nodes_[n.inputs[1].index];
    const auto& y = b.value.data;

    if (n.kind == OpKind::matmul) {
        const auto r = a.value.rows(), k = a.value.cols(), c = b.value.cols();
        ConstMap G(g.data(), r, c);
        if (a.requires_grad) {
            ensure(a.adjoint, x.size());
            MutMap(a.adjoint.data(), r, k).noalias() += G * ConstMap(y.data(), k, c).transpose();
        }
        if (b.requires_grad) {
            ensure(b.adjoint, y.size());
            MutMap(b.adjoint.data(), k, c).noalias() += ConstMap(x.data(), r, k).transpose() * G;
        }
        return;
    }

    const auto bc = broadcast_kind(n.kind, a.value, b.value);
    const auto cols = a.value.cols();
    if (a.requires_grad) {
        ensure(a.adjoint, x.size());
        auto& da = a.adjoint;
        switch (n.kind) {
            case OpKind::add:
            case OpKind::sub:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i];
                break;
            case OpKind::mul:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] * y[bindex(bc, i, cols)];
                break;
            case OpKind::div:
                for (std::size_t i = 0; i < x.size(); ++i) da[i] += g[i] / y[bindex(bc, i, cols)];
                break;
            default: break;
        }
    }
    if (b.requires_grad) {
        ensure(b.adjoint, y.size());
        auto& db = b.adjoint;
        switch (n.kind) {
            case OpKind::add:
                for (std::size_t i = 0; i < x.size(); ++i) db[bindex(bc, i, cols)] += g[i];
                break;
            case OpKind::sub:
                for (std::size_t i = 0; i < x.size(); ++i) db[bindex(bc, i, cols)] -= g[i];
                break;
            case OpKind::mul:
                for (std::size_t i = 0; i < x.size(); ++i) db[bindex(bc, i, cols)] += g[i] * x[i];
                break;
            case OpKind::div:
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = y[bindex(bc, i, cols)];
                    db[bindex(bc, i, cols)] -= g[i] * x[i] / (d * d);
                }
                break;
            default: break;
        }
    }
}

}  // namespace mpinn::ad
