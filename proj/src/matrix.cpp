#include "mdpsat/matrix.hpp"

namespace mdpsat {

RatMatrix RatMatrix::identity(std::size_t n) {
    RatMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

RatMatrix RatMatrix::operator*(const RatMatrix& other) const {
    if (cols_ != other.rows_) throw Error("DimensionMismatch", "matrix multiply");
    RatMatrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const Rat& a = at(i, k);
            if (a == 0) continue;
            for (std::size_t j = 0; j < other.cols_; ++j)
                out.at(i, j) += a * other.at(k, j);
        }
    return out;
}

RatMatrix RatMatrix::operator+(const RatMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw Error("DimensionMismatch", "matrix add");
    RatMatrix out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] + other.data_[i];
    return out;
}

RatMatrix RatMatrix::operator-(const RatMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw Error("DimensionMismatch", "matrix subtract");
    RatMatrix out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] - other.data_[i];
    return out;
}

RatMatrix RatMatrix::scaled(const Rat& s) const {
    RatMatrix out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] * s;
    return out;
}

RatMatrix RatMatrix::solve(const RatMatrix& rhs) const {
    if (rows_ != cols_ || rhs.rows_ != rows_)
        throw Error("DimensionMismatch", "matrix solve");
    const std::size_t n = rows_, m = rhs.cols_;
    RatMatrix a(*this), b(rhs);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a.at(pivot, col) == 0) ++pivot;
        if (pivot == n) throw Error("SingularMatrix", "no pivot in column " + std::to_string(col));
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a.at(pivot, j), a.at(col, j));
            for (std::size_t j = 0; j < m; ++j) std::swap(b.at(pivot, j), b.at(col, j));
        }
        Rat inv = Rat(1) / a.at(col, col);
        for (std::size_t j = col; j < n; ++j) a.at(col, j) *= inv;
        for (std::size_t j = 0; j < m; ++j) b.at(col, j) *= inv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            Rat factor = a.at(r, col);
            if (factor == 0) continue;
            for (std::size_t j = col; j < n; ++j) a.at(r, j) -= factor * a.at(col, j);
            for (std::size_t j = 0; j < m; ++j) b.at(r, j) -= factor * b.at(col, j);
        }
    }
    return b;
}

RatMatrix RatMatrix::inverse() const { return solve(identity(rows_)); }

Rat RatMatrix::inf_norm() const {
    Rat best(0);
    for (std::size_t i = 0; i < rows_; ++i) {
        Rat sum(0);
        for (std::size_t j = 0; j < cols_; ++j) sum += rat_abs(at(i, j));
        if (sum > best) best = sum;
    }
    return best;
}

std::vector<Rat> mat_vec(const RatMatrix& m, const std::vector<Rat>& v) {
    if (m.cols() != v.size()) throw Error("DimensionMismatch", "matrix-vector multiply");
    std::vector<Rat> out(m.rows(), Rat(0));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m.at(i, j) != 0) out[i] += m.at(i, j) * v[j];
    return out;
}

Rat dot(const std::vector<Rat>& a, const std::vector<Rat>& b) {
    if (a.size() != b.size()) throw Error("DimensionMismatch", "dot product");
    Rat out(0);
    for (std::size_t i = 0; i < a.size(); ++i) out += a[i] * b[i];
    return out;
}

}  // namespace mdpsat
