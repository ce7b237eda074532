#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cloudedge::numerics {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix zeros_like(const Matrix& m) { return Matrix(m.rows(), m.cols()); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape() const;

    Matrix& operator+=(const Matrix& o);
    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct NamedMatrix {
    std::string name;
    Matrix value;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T b
Matrix matmul_at(const Matrix& a, const Matrix& b);
/// a b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Throws ShapeError mentioning `op` and both shapes.
void require_same_shape(const Matrix& a, const Matrix& b, const char* op);

}  // namespace cloudedge::numerics
