#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace genvert {

/// Dense real vector. Every public constructor rejects NaN/Inf.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim, double fill = 0.0);
    Vector(std::initializer_list<double> values);
    explicit Vector(std::vector<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }
    std::span<const double> span() const noexcept { return values_; }
    std::span<double> span() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }
    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }

    bool operator==(const Vector&) const = default;

private:
    std::vector<double> values_;
};

/// Dense row-major matrix. Every public constructor rejects NaN/Inf.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return entries_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return entries_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept { return {entries_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) noexcept { return {entries_.data() + r * cols_, cols_}; }
    const std::vector<double>& entries() const noexcept { return entries_; }

    /// Submatrix made of the listed rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const;
    Matrix transposed() const;
    Matrix scaled(double factor) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

inline constexpr double kSolveTolerance = 1e-9;
inline constexpr double kPivotTolerance = 1e-12;

Vector matvec(const Matrix& m, const Vector& v);
/// m^T v without materializing the transpose.
Vector matvec_transposed(const Matrix& m, const Vector& v);

/// Gaussian elimination with partial pivoting. Throws SingularMatrix when a
/// pivot falls below kPivotTolerance (scaled by the largest entry when that exceeds 1).
Vector solve_square(const Matrix& m, const Vector& rhs);

struct LeastSquaresResult {
    Vector solution;
    double residual_norm = 0.0;  // ||m y - rhs||_2
};

/// Householder QR. Throws RankDeficient if any |R_jj| is below the pivot tolerance.
LeastSquaresResult least_squares(const Matrix& m, const Vector& rhs);

double norm_inf(std::span<const double> v) noexcept;
double norm1(std::span<const double> v) noexcept;
double norm2(std::span<const double> v) noexcept;
double dot(std::span<const double> a, std::span<const double> b);

Vector add(const Vector& a, const Vector& b);
Vector subtract(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double factor);
/// alpha*a + beta*b
Vector combine(double alpha, const Vector& a, double beta, const Vector& b);

}  // namespace genvert
