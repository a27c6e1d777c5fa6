#pragma once

#include <vector>

#include "mdpsat/rat.hpp"

namespace mdpsat {

// Dense matrix of exact rationals with Gaussian-elimination solve/inverse.
// Small and simple on purpose: every solver in this artifact works at desk
// scale and needs exactness, not speed.
class RatMatrix {
public:
    RatMatrix() = default;
    RatMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, Rat(0)) {}

    static RatMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rat& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rat& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    RatMatrix operator*(const RatMatrix& other) const;
    RatMatrix operator+(const RatMatrix& other) const;
    RatMatrix operator-(const RatMatrix& other) const;
    RatMatrix scaled(const Rat& s) const;

    // Solves this * x = rhs (rhs may have several columns).
    // Throws Error("SingularMatrix") when no unique solution exists.
    RatMatrix solve(const RatMatrix& rhs) const;
    RatMatrix inverse() const;

    // Maximum absolute row sum.
    Rat inf_norm() const;

    bool operator==(const RatMatrix& other) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rat> data_;
};

std::vector<Rat> mat_vec(const RatMatrix& m, const std::vector<Rat>& v);
Rat dot(const std::vector<Rat>& a, const std::vector<Rat>& b);

}  // namespace mdpsat
