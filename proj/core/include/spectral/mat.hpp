#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace spectral {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    /// n x 1 column matrix.
    static Mat column(const Vec& v);
    /// Matrix whose columns are the given equal-length vectors.
    static Mat from_columns(const std::vector<Vec>& cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    Vec col(std::size_t c) const;
    void set_col(std::size_t c, std::span<const double> v);

    Mat transpose() const;
    /// Rows [r0, r0+nr) and columns [c0, c0+nc).
    Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Mat& b);

    void fill(double v);
    bool all_finite() const noexcept;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s);

    friend bool operator==(const Mat& a, const Mat& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

/// a * b; throws DimMismatch on inner-dimension mismatch.
Mat matmul(const Mat& a, const Mat& b);
/// a^T * b without forming the transpose.
Mat matmul_tn(const Mat& a, const Mat& b);
/// a * b^T without forming the transpose.
Mat matmul_nt(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, std::span<const double> v);

double frobenius_norm(const Mat& a);
double max_abs(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);
/// max |A - A^T|.
double asymmetry(const Mat& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
Vec scaled(std::span<const double> v, double s);
Vec subtract(std::span<const double> a, std::span<const double> b);

}  // namespace spectral
