#include "mpinn/autodiff/tensor.hpp"

#include <functional>
#include <numeric>
#include <sstream>

namespace mpinn::ad {

NonFiniteError::NonFiniteError(std::string kind, std::size_t node, std::size_t entry)
    : std::runtime_error("non-finite value produced by '" + kind + "' at node " +
                         std::to_string(node) + ", entry " + std::to_string(entry)),
      kind_(std::move(kind)),
      node_(node),
      entry_(entry) {}

TensorValue::TensorValue(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    const auto expected = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          std::multiplies<>());
    if (expected != data.size()) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_string());
    }
}

TensorValue TensorValue::zeros(std::size_t rows, std::size_t cols) {
    return TensorValue({rows, cols}, std::vector<double>(rows * cols, 0.0));
}

TensorValue TensorValue::column(std::span<const double> values) {
    return TensorValue({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

TensorValue TensorValue::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return TensorValue({rows, cols}, std::move(values));
}

std::size_t TensorValue::rows() const noexcept {
    if (shape.empty()) return 1;
    return shape[0];
}

std::size_t TensorValue::cols() const noexcept {
    if (shape.size() < 2) return 1;
    std::size_t c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
}

std::string TensorValue::shape_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

}  // namespace mpinn::ad
