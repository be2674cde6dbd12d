#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpinn::ad {

/// Raised when operand shapes are incompatible for an operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a forward value contains NaN or Inf.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(std::string kind, std::size_t node, std::size_t entry);

    const std::string& kind() const noexcept { return kind_; }
    std::size_t node() const noexcept { return node_; }
    std::size_t entry() const noexcept { return entry_; }

private:
    std::string kind_;
    std::size_t node_;
    std::size_t entry_;
};

/// Misuse of the tape API (e.g. backward from a non-scalar node).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Dense row-major tensor of doubles. The tape works with rank-2 values;
/// rank-0 and rank-1 shapes are read as 1x1 and n x 1.
struct TensorValue {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    TensorValue() = default;
    TensorValue(std::vector<std::size_t> shape_, std::vector<double> data_);

    static TensorValue scalar(double v) { return TensorValue({1, 1}, {v}); }
    static TensorValue zeros(std::size_t rows, std::size_t cols);
    static TensorValue column(std::span<const double> values);
    static TensorValue matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;
    std::size_t size() const noexcept { return data.size(); }
    bool is_scalar() const noexcept { return data.size() == 1; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    std::string shape_string() const;
};

}  // namespace mpinn::ad
