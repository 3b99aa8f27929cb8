#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nnsc {

/// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a value outside the representable/valid domain.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A column that must be renormalized has zero norm.
class ZeroColumnError : public NumericError {
public:
    ZeroColumnError(std::size_t column, const std::string& context)
        : NumericError(context + ": column " + std::to_string(column) + " has zero norm"),
          column_(column) {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Malformed matrix file or unreadable path.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Dense row-major matrix of doubles.
 *
 * Samples are stored as columns, so a data matrix X is (dimension x samples).
 * All free functions in this header return fresh matrices and leave their
 * arguments untouched.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        check_finite_value(fill);
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(rows_, cols_));
        }
        for (double v : data_) check_finite_value(v);
    }

    /// Row-wise literal, e.g. Matrix{{1, 2}, {3, 4}}.
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_) throw DimensionError("Matrix: ragged row literal");
            for (double v : row) {
                check_finite_value(v);
                data_.push_back(v);
            }
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Builds an (rows x 1) column vector.
    static Matrix column_vector(std::span<const double> values) {
        return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data_).subspan(i * cols_, cols_);
    }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    void set_column(std::size_t j, std::span<const double> values) {
        if (values.size() != rows_) throw DimensionError("Matrix::set_column: length mismatch");
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
    }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    std::string shape() const { return shape_string(rows_, cols_); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

    static std::string shape_string(std::size_t r, std::size_t c) {
        return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
    }

private:
    static void check_finite_value(double v) {
        if (!std::isfinite(v)) throw NumericError("Matrix: non-finite value");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {

inline void ensure_finite(const Matrix& m, const char* what) {
    for (double v : m.data()) {
        if (!std::isfinite(v)) throw NumericError(std::string(what) + " produced a non-finite value");
    }
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape() + " vs " + b.shape());
    }
}

}  // namespace detail

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: incompatible shapes " + a.shape() + " and " + b.shape());
    }
    Matrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data().data() + i * n;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.data().data() + k * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    detail::ensure_finite(c, "matmul");
    return c;
}

/// Computes a^T * b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: incompatible shapes " + a.shape() + "^T and " + b.shape());
    }
    Matrix c(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* bk = b.data().data() + k * n;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            double* ci = c.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
        }
    }
    detail::ensure_finite(c, "matmul_tn");
    return c;
}

/// Computes a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: incompatible shapes " + a.shape() + " and " + b.shape() + "^T");
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto bj = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < ai.size(); ++k) acc += ai[k] * bj[k];
            c(i, j) = acc;
        }
    }
    detail::ensure_finite(c, "matmul_nt");
    return c;
}

enum class ElementwiseOp { multiply, divide, add, subtract };

inline Matrix elementwise(const Matrix& a, const Matrix& b, ElementwiseOp op) {
    detail::require_same_shape(a, b, "elementwise");
    Matrix c(a.rows(), a.cols());
    const auto x = a.data();
    const auto y = b.data();
    auto z = c.data();
    switch (op) {
        case ElementwiseOp::multiply:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
            break;
        case ElementwiseOp::divide:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] / y[i];
            break;
        case ElementwiseOp::add:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
            break;
        case ElementwiseOp::subtract:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
            break;
    }
    detail::ensure_finite(c, "elementwise");
    return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) { return elementwise(a, b, ElementwiseOp::add); }
inline Matrix operator-(const Matrix& a, const Matrix& b) { return elementwise(a, b, ElementwiseOp::subtract); }

inline Matrix add_scalar(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.data()) v += c;
    detail::ensure_finite(out, "add_scalar");
    return out;
}

inline Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.data()) v *= c;
    detail::ensure_finite(out, "scale");
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Sum of squared entries.
inline double frobenius_sq(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v * v;
    return acc;
}

inline double sum(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    return acc;
}

inline double max_entry(const Matrix& a) {
    if (a.empty()) throw DimensionError("max_entry: empty matrix");
    return *std::max_element(a.data().begin(), a.data().end());
}

inline double min_entry(const Matrix& a) {
    if (a.empty()) throw DimensionError("min_entry: empty matrix");
    return *std::min_element(a.data().begin(), a.data().end());
}

inline std::vector<double> column_norms(const Matrix& a) {
    std::vector<double> sq(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) sq[j] += r[j] * r[j];
    }
    for (double& v : sq) v = std::sqrt(v);
    return sq;
}

/// Rescales every column to unit Euclidean norm. Throws ZeroColumnError on a zero column.
inline Matrix normalize_columns(const Matrix& a) {
    const auto norms = column_norms(a);
    for (std::size_t j = 0; j < norms.size(); ++j) {
        if (!(norms[j] > 0.0)) throw ZeroColumnError(j, "normalize_columns");
    }
    Matrix out = a;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) /= norms[j];
    return out;
}

inline Matrix clamp_nonneg(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data()) v = v < 0.0 ? 0.0 : v;
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "max_abs_diff");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

// CSV: one matrix row per line, comma separated, no header.

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const Matrix& m) {
    std::string line;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        line.clear();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j != 0) line += ',';
            line += format_double(m(i, j));
        }
        line += '\n';
        os << line;
    }
}

inline void write_csv(const std::string& path, const Matrix& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    write_csv(os, m);
    if (!os) throw FormatError("write failed for '" + path + "'");
}

inline Matrix read_csv(std::istream& is) {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t count = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            std::string_view field = rest.substr(0, comma);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
            if (!field.empty() && field.front() == '+') field.remove_prefix(1);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() ||
                !std::isfinite(v)) {
                throw FormatError("read_csv: bad numeric field '" + std::string(field) + "' on line " +
                                  std::to_string(rows + 1));
            }
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw FormatError("read_csv: line " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                              " fields, expected " + std::to_string(cols));
        }
        ++rows;
    }
    if (rows == 0) throw FormatError("read_csv: no data");
    return Matrix(rows, cols, std::move(values));
}

inline Matrix read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open '" + path + "' for reading");
    return read_csv(is);
}

inline std::ostream& operator<<(std::ostream& os, const Matrix& m) {
    os << "Matrix" << m.shape() << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << "  [";
        for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
        os << "]\n";
    }
    return os;
}

}  // namespace nnsc
