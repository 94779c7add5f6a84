#pragma once

// Time-sliced corpus loading, vocabulary construction and windowed
// co-occurrence counting.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tvec/sparse.hpp"
#include "tvec/types.hpp"

namespace tvec {

using Document = std::vector<std::string>;
using StopwordSet = std::unordered_set<std::string>;

struct CorpusSlice {
    SliceLabel label = 0;
    std::vector<Document> documents;
};

// Slices ordered by strictly increasing label, T >= 1.
class TimeSlicedCorpus {
public:
    explicit TimeSlicedCorpus(std::vector<CorpusSlice> slices);

    std::size_t num_slices() const { return slices_.size(); }
    const CorpusSlice& slice(std::size_t t) const { return slices_[t]; }
    const std::vector<CorpusSlice>& slices() const { return slices_; }
    std::vector<SliceLabel> labels() const;

private:
    std::vector<CorpusSlice> slices_;
};

class Vocabulary {
public:
    Vocabulary() = default;
    // Words must be distinct. Counts are optional metadata (empty or size V).
    explicit Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts = {});

    std::size_t size() const { return words_.size(); }
    const std::string& word(WordId id) const { return words_[id]; }
    const std::vector<std::string>& words() const { return words_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::optional<WordId> find(std::string_view word) const;

private:
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, WordId> index_;
};

struct SliceStats {
    CsrMatrix<std::uint64_t> cooc;
    std::vector<std::uint64_t> unigram;
    std::uint64_t total_tokens = 0;
    std::uint32_t window = 0;

    std::size_t vocab_size() const { return unigram.size(); }
    bool operator==(const SliceStats&) const = default;
};

// Lowercases, splits on anything that is not a letter or digit, drops
// stopwords and purely numeric tokens.
Document tokenize(std::string_view text, const StopwordSet& stopwords);

// Keeps words whose total count over all slices is >= min_count, ordered by
// descending count then lexicographically.
Vocabulary build_vocabulary(const TimeSlicedCorpus& corpus, std::uint64_t min_count);

// Every ordered position pair (i, j) with 0 < |i - j| <= window inside one
// document, both tokens in vocab, adds one to cooc[w_i][w_j]. Positions of
// out-of-vocabulary tokens still count toward distance.
SliceStats count_cooccurrences(const std::vector<Document>& documents, const Vocabulary& vocab,
                               std::uint32_t window);

// Sum of per-slice statistics (same V and window required).
SliceStats pool_stats(const std::vector<SliceStats>& slices);

// Binomial thinning of co-occurrence counts at the given rate, one draw per
// unordered pair. Unigrams follow the per-row retention ratio.
SliceStats subsample_counts(const SliceStats& stats, double rate, std::uint64_t seed);

void validate_stats(const SliceStats& stats);

// Directory with one sub-directory per slice (name = integer label, every
// regular file inside is one document) or a JSON-lines file with
// {"label": int, "text": string} records.
TimeSlicedCorpus load_corpus(const std::filesystem::path& path, const StopwordSet& stopwords);

// One word per line; blank lines and lines starting with # are ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

}  // namespace tvec
