#pragma once

// Clustering quality (NMI, pair-counting F-beta), cross-time alignment
// quality (MRR, MP@K) and embedding-norm popularity series.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/types.hpp"

namespace tvec {

inline constexpr std::uint32_t kRankCutoff = 10;

struct LabeledItem {
    WordId word = 0;
    SliceLabel slice_label = 0;
    std::string section;
};

struct AlignmentRecord {
    WordId query_word = 0;
    SliceLabel query_label = 0;
    SliceLabel target_label = 0;
    WordId answer_word = 0;
};

struct AlignmentTestset {
    std::string name;
    std::vector<AlignmentRecord> records;
    std::size_t dropped = 0;  // rows with out-of-vocabulary words or unknown labels
};

struct Clustering {
    std::vector<std::uint32_t> assignment;
    std::uint32_t num_clusters = 0;
    double objective = 0;                   // mean cosine to the assigned centroid
    std::vector<double> objective_history;  // after every iteration of the kept run
};

struct Neighbour {
    WordId word = 0;
    double similarity = 0;
};

// Rank 1..kRankCutoff, or nullopt when the answer is outside the top 10.
using Rank = std::optional<std::uint32_t>;

// Throws DomainError on a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

// Top-K rows of `matrix` by cosine to `query`, ties by ascending word id.
// Zero rows and excluded words are skipped.
std::vector<Neighbour> nearest_neighbors(std::span<const double> query, const Matrix& matrix, std::size_t k,
                                         const std::unordered_set<WordId>& exclude = {});

struct KMeansOptions {
    std::uint32_t max_iters = 100;
    std::uint32_t restarts = 10;
};

// Rows of `vectors` are the items.
Clustering spherical_kmeans(const Matrix& vectors, std::uint32_t k, std::uint64_t seed,
                            const KMeansOptions& options = {});

// Labels/clusters are arbitrary integer ids.
double nmi(std::span<const std::uint32_t> labels, std::span<const std::uint32_t> clusters);
double f_beta(std::span<const std::uint32_t> labels, std::span<const std::uint32_t> clusters, double beta = 5.0);

// Vector used to represent (word, query slice) when ranking inside the target
// slice. The default is the word's row in the query slice.
using QueryVectorFn = std::function<Vector(WordId word, std::size_t query_slice, std::size_t target_slice)>;

struct AlignmentResult {
    std::vector<Rank> ranks;
    std::size_t skipped = 0;  // zero query vectors or labels not in the embedding
};

// The query word itself is excluded only when query and target slice coincide.
AlignmentResult run_alignment_test(const AlignmentTestset& testset, const std::vector<Matrix>& embeddings,
                                   const std::vector<SliceLabel>& labels, const QueryVectorFn& query_vector = {});

double mrr(std::span<const Rank> ranks);
double mp_at_k(std::span<const Rank> ranks, std::uint32_t k);

std::vector<std::pair<SliceLabel, double>> norm_series(WordId word, const std::vector<Matrix>& embeddings,
                                                       const std::vector<SliceLabel>& labels);

// --- file loaders -----------------------------------------------------------

// CSV with header query_word,query_label,target_label,answer_word.
AlignmentTestset load_testset(const std::filesystem::path& path, const Vocabulary& vocab,
                              const std::vector<SliceLabel>& labels);

struct TripletFilter {
    double min_strength = 0.35;
    std::size_t per_section_top = 200;
    // Keep only the strongest slice for each (word, section).
    bool strongest_slice_only = true;
};

struct LabeledItems {
    std::vector<LabeledItem> items;
    std::size_t dropped = 0;  // out of vocabulary or unknown label
};

// CSV with header word,label,section,strength.
LabeledItems load_triplets(const std::filesystem::path& path, const Vocabulary& vocab,
                           const std::vector<SliceLabel>& labels, const TripletFilter& filter = {});

}  // namespace tvec
