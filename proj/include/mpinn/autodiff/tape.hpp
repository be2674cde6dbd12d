#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "mpinn/autodiff/tensor.hpp"

namespace mpinn::ad {

/// Operation kinds recorded on a tape.
///
/// Binary elementwise kinds (add, sub, mul, div) accept a right operand of
/// the same shape, of shape 1 x cols (broadcast over rows, i.e. over the
/// batch) or of shape 1 x 1.
enum class OpKind {
    parameter,
    constant,
    matmul,
    add,
    sub,
    mul,
    div,
    tanh,
    exp,
    square,
    sqrt,
    sum,
    mean,
    neg,
    scale,       // a * attribute
    add_scalar,  // a + attribute
    div_scalar,  // a / attribute
};

std::string_view to_string(OpKind kind) noexcept;

/// Handle to a node on a tape. A default-constructed handle is "absent"; the
/// network module uses absent handles for derivative channels that are
/// identically zero.
struct NodeRef {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t index = npos;

    constexpr bool valid() const noexcept { return index != npos; }
    friend constexpr bool operator==(NodeRef, NodeRef) = default;
    friend constexpr auto operator<=>(NodeRef, NodeRef) = default;
};

/// Parameter gradients produced by Tape::backward.
class Gradients {
public:
    const TensorValue& operator[](NodeRef parameter) const;
    bool contains(NodeRef parameter) const { return grads_.count(parameter.index) != 0; }
    std::size_t size() const noexcept { return grads_.size(); }

private:
    friend class Tape;
    std::map<std::size_t, TensorValue> grads_;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so every node's inputs precede it. A tape belongs to one thread.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) noexcept = default;
    Tape& operator=(Tape&&) noexcept = default;

    NodeRef parameter(TensorValue value);
    NodeRef constant(TensorValue value);

    /// Records an operation and computes its forward value. `attribute` is
    /// the scalar operand of scale / add_scalar / div_scalar.
    NodeRef record(OpKind kind, std::span<const NodeRef> inputs, double attribute = 0.0);

    NodeRef matmul(NodeRef a, NodeRef b) { return binary(OpKind::matmul, a, b); }
    NodeRef add(NodeRef a, NodeRef b) { return binary(OpKind::add, a, b); }
    NodeRef sub(NodeRef a, NodeRef b) { return binary(OpKind::sub, a, b); }
    NodeRef mul(NodeRef a, NodeRef b) { return binary(OpKind::mul, a, b); }
    NodeRef div(NodeRef a, NodeRef b) { return binary(OpKind::div, a, b); }
    NodeRef tanh(NodeRef a) { return unary(OpKind::tanh, a); }
    NodeRef exp(NodeRef a) { return unary(OpKind::exp, a); }
    NodeRef square(NodeRef a) { return unary(OpKind::square, a); }
    NodeRef sqrt(NodeRef a) { return unary(OpKind::sqrt, a); }
    NodeRef sum(NodeRef a) { return unary(OpKind::sum, a); }
    NodeRef mean(NodeRef a) { return unary(OpKind::mean, a); }
    NodeRef neg(NodeRef a) { return unary(OpKind::neg, a); }
    NodeRef scale(NodeRef a, double s) { return unary(OpKind::scale, a, s); }
    NodeRef add_scalar(NodeRef a, double s) { return unary(OpKind::add_scalar, a, s); }
    NodeRef div_scalar(NodeRef a, double s) { return unary(OpKind::div_scalar, a, s); }

    const TensorValue& value(NodeRef node) const;
    double scalar_value(NodeRef node) const;
    OpKind kind(NodeRef node) const;
    std::span<const NodeRef> inputs(NodeRef node) const;

    /// Adjoint accumulated by the most recent backward pass (zeros if the
    /// node did not influence the loss).
    TensorValue adjoint(NodeRef node) const;

    /// Runs the reverse sweep from a scalar node. Adjoints are reset first,
    /// so backward may be called repeatedly on the same tape.
    Gradients backward(NodeRef loss);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        OpKind kind = OpKind::constant;
        std::array<NodeRef, 2> inputs{};
        std::size_t arity = 0;
        double attribute = 0.0;
        bool requires_grad = false;
        TensorValue value;
        std::vector<double> adjoint;
    };

    NodeRef unary(OpKind kind, NodeRef a, double attribute = 0.0);
    NodeRef binary(OpKind kind, NodeRef a, NodeRef b);
    NodeRef push(Node node);
    const Node& node(NodeRef ref) const;
    void propagate(std::size_t index);

    std::vector<Node> nodes_;
    std::vector<std::size_t> parameters_;
};

}  // namespace mpinn::ad
