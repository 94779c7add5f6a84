#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tvec/types.hpp"

namespace tvec {

template <class T>
struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    T value;
};

// Square CSR matrix, columns sorted within each row, no stored zeros.
template <class T>
class CsrMatrix {
public:
    CsrMatrix() : row_ptr_(1, 0) {}
    explicit CsrMatrix(std::size_t n) : n_(n), row_ptr_(n + 1, 0) {}

    // Duplicate (row, col) entries are summed; entries equal to T{} dropped.
    static CsrMatrix from_triplets(std::size_t n, std::vector<Triplet<T>> triplets) {
        for (const auto& t : triplets)
            if (t.row >= n || t.col >= n) throw ShapeError("triplet index out of range");
        std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        CsrMatrix m(n);
        for (std::size_t i = 0; i < triplets.size();) {
            const auto row = triplets[i].row;
            const auto col = triplets[i].col;
            T sum = T{};
            for (; i < triplets.size() && triplets[i].row == row && triplets[i].col == col; ++i)
                sum += triplets[i].value;
            if (sum == T{}) continue;
            m.col_.push_back(col);
            m.val_.push_back(sum);
            ++m.row_ptr_[row + 1];
        }
        for (std::size_t r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    std::size_t size() const { return n_; }
    std::size_t nnz() const { return val_.size(); }

    std::span<const std::uint32_t> row_cols(std::size_t r) const {
        return {col_.data() + row_ptr_[r], col_.data() + row_ptr_[r + 1]};
    }
    std::span<const T> row_values(std::size_t r) const {
        return {val_.data() + row_ptr_[r], val_.data() + row_ptr_[r + 1]};
    }

    T at(std::size_t r, std::size_t c) const {
        const auto cols = row_cols(r);
        const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
        if (it == cols.end() || *it != c) return T{};
        return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
    }

    std::vector<Triplet<T>> triplets() const {
        std::vector<Triplet<T>> out;
        out.reserve(nnz());
        for (std::size_t r = 0; r < n_; ++r) {
            const auto cols = row_cols(r);
            const auto vals = row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k)
                out.push_back({static_cast<std::uint32_t>(r), cols[k], vals[k]});
        }
        return out;
    }

    bool is_symmetric() const {
        for (std::size_t r = 0; r < n_; ++r) {
            const auto cols = row_cols(r);
            const auto vals = row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k)
                if (at(cols[k], r) != vals[k]) return false;
        }
        return true;
    }

    T row_sum(std::size_t r) const {
        T sum = T{};
        for (const T& v : row_values(r)) sum += v;
        return sum;
    }

    bool operator==(const CsrMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<T> val_;
};

}  // namespace tvec
