#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace attnlens::model {

// Dense row-major tensor of doubles. Construction validates that the shape
// matches the element count and that every value is finite.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return values_.size(); }

    // Rank-2 accessors; rows() and cols() require rank() == 2.
    std::size_t rows() const;
    std::size_t cols() const;
    double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
    std::span<const double> row(std::size_t r) const;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

} // namespace attnlens::model
