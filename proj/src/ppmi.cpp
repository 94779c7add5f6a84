#include "tvec/ppmi.hpp"

#include <cmath>
#include <limits>

namespace tvec {

PpmiSequence::PpmiSequence(std::vector<PpmiMatrix> matrices) : matrices_(std::move(matrices)) {
    if (matrices_.empty()) return;
    vocab_size_ = matrices_.front().vocab_size();
    for (std::size_t t = 0; t < matrices_.size(); ++t) {
        if (matrices_[t].vocab_size() != vocab_size_)
            throw ShapeError("PPMI matrices disagree on vocabulary size");
        if (t > 0 && matrices_[t].label <= matrices_[t - 1].label)
            throw std::invalid_argument("PPMI slice labels must be strictly increasing");
    }
}

std::vector<SliceLabel> PpmiSequence::labels() const {
    std::vector<SliceLabel> out;
    for (const auto& m : matrices_) out.push_back(m.label);
    return out;
}

double pmi_value(std::uint64_t count_wc, std::uint64_t count_w, std::uint64_t count_c,
                 std::uint64_t total) {
    if (count_wc == 0) return -std::numeric_limits<double>::infinity();
    if (count_w == 0 || count_c == 0 || total == 0)
        throw DomainError("PMI undefined: zero marginal count with a nonzero co-occurrence");
    const double ratio = (static_cast<double>(count_wc) * static_cast<double>(total)) /
                         (static_cast<double>(count_w) * static_cast<double>(count_c));
    return std::log(ratio);
}

PpmiMatrix build_ppmi(const SliceStats& stats, SliceLabel label, const PpmiOptions& options) {
    const std::size_t v = stats.vocab_size();
    std::vector<Triplet<double>> trip;
    for (std::size_t w = 0; w < v; ++w) {
        if (stats.unigram[w] == 0) continue;
        const auto cols = stats.cooc.row_cols(w);
        const auto vals = stats.cooc.row_values(w);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto c = cols[k];
            if (stats.unigram[c] == 0) continue;
            const double value =
                pmi_value(vals[k], stats.unigram[w], stats.unigram[c], stats.total_tokens) - options.shift;
            if (value > 0.0) trip.push_back({static_cast<std::uint32_t>(w), c, value});
        }
    }
    return PpmiMatrix{CsrMatrix<double>::from_triplets(v, std::move(trip)), label};
}

}  // namespace tvec
