#include "genvert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genvert/errors.hpp"

namespace genvert {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::InsufficientActiveRows: return "InsufficientActiveRows";
    case ErrorCode::NotRealizable: return "NotRealizable";
    case ErrorCode::NeverFeasible: return "NeverFeasible";
    case ErrorCode::UnboundedRelaxation: return "UnboundedRelaxation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

namespace {

void require_finite(std::span<const double> values, const char* what)
{
    for (double v : values) {
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFinite, std::string(what) + " contains a non-finite entry");
    }
}

void require_same_dim(std::size_t a, std::size_t b, const char* what)
{
    if (a != b)
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

double pivot_threshold(const Matrix& m)
{
    double largest = 0.0;
    for (double v : m.entries())
        largest = std::max(largest, std::abs(v));
    return kPivotTolerance * std::max(1.0, largest);
}

}  // namespace

Vector::Vector(std::size_t dim, double fill) : values_(dim, fill)
{
    require_finite(values_, "vector");
}

Vector::Vector(std::initializer_list<double> values) : values_(values)
{
    require_finite(values_, "vector");
}

Vector::Vector(std::vector<double> values) : values_(std::move(values))
{
    require_finite(values_, "vector");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill)
{
    require_finite(entries_, "matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries))
{
    if (entries_.size() != rows_ * cols_)
        throw Error(ErrorCode::DimensionMismatch, "matrix entry count " + std::to_string(entries_.size()) +
                                                      " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    require_finite(entries_, "matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw Error(ErrorCode::DimensionMismatch, "ragged matrix initializer");
        entries_.insert(entries_.end(), r.begin(), r.end());
    }
    require_finite(entries_, "matrix");
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const
{
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_)
            throw Error(ErrorCode::InvalidArgument, "row index out of range");
        std::copy_n(entries_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                    out.entries_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

Matrix Matrix::transposed() const
{
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            out(c, r) = (*this)(r, c);
    return out;
}

Matrix Matrix::scaled(double factor) const
{
    Matrix out = *this;
    for (double& v : out.entries_)
        v *= factor;
    require_finite(out.entries_, "scaled matrix");
    return out;
}

Vector matvec(const Matrix& m, const Vector& v)
{
    require_same_dim(m.cols(), v.dim(), "matvec");
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c)
            acc += row[c] * v[c];
        out[r] = acc;
    }
    return Vector(std::move(out));
}

Vector matvec_transposed(const Matrix& m, const Vector& v)
{
    require_same_dim(m.rows(), v.dim(), "matvec_transposed");
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double s = v[r];
        if (s == 0.0)
            continue;
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c)
            out[c] += row[c] * s;
    }
    return Vector(std::move(out));
}

Vector solve_square(const Matrix& m, const Vector& rhs)
{
    if (m.rows() != m.cols())
        throw Error(ErrorCode::DimensionMismatch, "solve_square needs a square matrix");
    require_same_dim(m.rows(), rhs.dim(), "solve_square rhs");

    const std::size_t n = m.rows();
    const double threshold = pivot_threshold(m);
    std::vector<double> a = m.entries();
    std::vector<double> b = rhs.values();

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col]))
                pivot = r;
        if (std::abs(a[pivot * n + col]) < threshold)
            throw Error(ErrorCode::SingularMatrix, "pivot " + std::to_string(col) + " below tolerance");
        if (pivot != col) {
            std::swap_ranges(a.begin() + static_cast<std::ptrdiff_t>(col * n),
                             a.begin() + static_cast<std::ptrdiff_t>((col + 1) * n),
                             a.begin() + static_cast<std::ptrdiff_t>(pivot * n));
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }

    std::vector<double> y(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c)
            acc -= a[i * n + c] * y[c];
        y[i] = acc / a[i * n + i];
    }
    return Vector(std::move(y));
}

LeastSquaresResult least_squares(const Matrix& m, const Vector& rhs)
{
    require_same_dim(m.rows(), rhs.dim(), "least_squares rhs");
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    if (rows < cols)
        throw Error(ErrorCode::RankDeficient, "least_squares needs rows >= cols");

    const double threshold = pivot_threshold(m);
    // Column-major working copy keeps Householder updates contiguous.
    std::vector<double> a(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            a[c * rows + r] = m(r, c);
    std::vector<double> b = rhs.values();

    for (std::size_t j = 0; j < cols; ++j) {
        double* col = a.data() + j * rows;
        double norm = 0.0;
        for (std::size_t r = j; r < rows; ++r)
            norm += col[r] * col[r];
        norm = std::sqrt(norm);
        if (norm < threshold)
            throw Error(ErrorCode::RankDeficient, "column " + std::to_string(j) + " is dependent");
        const double alpha = col[j] > 0 ? -norm : norm;
        // v = x - alpha e1, stored in place below the diagonal
        col[j] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t r = j; r < rows; ++r)
            vnorm2 += col[r] * col[r];
        for (std::size_t k = j + 1; k < cols; ++k) {
            double* other = a.data() + k * rows;
            double s = 0.0;
            for (std::size_t r = j; r < rows; ++r)
                s += col[r] * other[r];
            s = 2.0 * s / vnorm2;
            for (std::size_t r = j; r < rows; ++r)
                other[r] -= s * col[r];
        }
        double s = 0.0;
        for (std::size_t r = j; r < rows; ++r)
            s += col[r] * b[r];
        s = 2.0 * s / vnorm2;
        for (std::size_t r = j; r < rows; ++r)
            b[r] -= s * col[r];
        col[j] = alpha;  // R_jj
    }

    std::vector<double> y(cols, 0.0);
    for (std::size_t i = cols; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < cols; ++c)
            acc -= a[c * rows + i] * y[c];
        y[i] = acc / a[i * rows + i];
    }

    LeastSquaresResult result{Vector(std::move(y)), 0.0};
    const Vector fitted = matvec(m, result.solution);
    double res = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        res += (fitted[r] - rhs[r]) * (fitted[r] - rhs[r]);
    result.residual_norm = std::sqrt(res);
    return result;
}

double norm_inf(std::span<const double> v) noexcept
{
    double out = 0.0;
    for (double x : v)
        out = std::max(out, std::abs(x));
    return out;
}

double norm1(std::span<const double> v) noexcept
{
    double out = 0.0;
    for (double x : v)
        out += std::abs(x);
    return out;
}

double norm2(std::span<const double> v) noexcept
{
    double out = 0.0;
    for (double x : v)
        out += x * x;
    return std::sqrt(out);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    require_same_dim(a.size(), b.size(), "dot");
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        out += a[i] * b[i];
    return out;
}

Vector combine(double alpha, const Vector& a, double beta, const Vector& b)
{
    require_same_dim(a.dim(), b.dim(), "combine");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = alpha * a[i] + beta * b[i];
    return Vector(std::move(out));
}

Vector add(const Vector& a, const Vector& b) { return combine(1.0, a, 1.0, b); }
Vector subtract(const Vector& a, const Vector& b) { return combine(1.0, a, -1.0, b); }

Vector scale(const Vector& a, double factor)
{
    std::vector<double> out(a.values());
    for (double& v : out)
        v *= factor;
    return Vector(std::move(out));
}

}  // namespace genvert
