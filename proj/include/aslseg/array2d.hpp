#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aslseg/errors.hpp"

namespace aslseg {

// Dense row-major 2D grid. The one container every image/mask/probability
// map in the project is built on.
template <typename T>
class Array2D {
public:
    Array2D() = default;
    Array2D(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw ValidationError("Array2D: negative dimensions");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    T& at(int r, int c) {
        check_bounds(r, c);
        return (*this)(r, c);
    }
    const T& at(int r, int c) const {
        check_bounds(r, c);
        return (*this)(r, c);
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool same_shape(const Array2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Array2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    Array2D<U> cast() const {
        Array2D<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.raw()[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    void check_bounds(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw ValidationError("Array2D: index out of bounds");
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using MaskGrid = Array2D<std::uint8_t>;
using ImageGrid = Array2D<float>;

// Require matching shapes, naming the caller in the error.
template <typename A, typename B>
inline void require_same_shape(const Array2D<A>& a, const Array2D<B>& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError(std::string(who) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()) + ")");
}

inline std::size_t count_foreground(const MaskGrid& m) {
    std::size_t n = 0;
    for (auto v : m.raw()) n += (v != 0);
    return n;
}

} // namespace aslseg
