#pragma once

// Positive pointwise mutual information matrices built from slice counts.
// Natural logarithm throughout.

#include <cstdint>
#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/sparse.hpp"

namespace tvec {

struct PpmiMatrix {
    CsrMatrix<double> values;  // stored entries are all > 0, symmetric
    SliceLabel label = 0;

    std::size_t vocab_size() const { return values.size(); }
    bool operator==(const PpmiMatrix&) const = default;
};

class PpmiSequence {
public:
    PpmiSequence() = default;
    // Matrices must share V and have strictly increasing labels.
    explicit PpmiSequence(std::vector<PpmiMatrix> matrices);

    std::size_t num_slices() const { return matrices_.size(); }
    std::size_t vocab_size() const { return vocab_size_; }
    const PpmiMatrix& operator[](std::size_t t) const { return matrices_[t]; }
    const std::vector<PpmiMatrix>& matrices() const { return matrices_; }
    std::vector<SliceLabel> labels() const;

private:
    std::vector<PpmiMatrix> matrices_;
    std::size_t vocab_size_ = 0;
};

struct PpmiOptions {
    // Subtracted from PMI before clamping at zero.
    double shift = 0.0;
};

// log(count_wc * total / (count_w * count_c)); -infinity when count_wc == 0.
double pmi_value(std::uint64_t count_wc, std::uint64_t count_w, std::uint64_t count_c,
                 std::uint64_t total);

PpmiMatrix build_ppmi(const SliceStats& stats, SliceLabel label = 0, const PpmiOptions& options = {});

}  // namespace tvec
