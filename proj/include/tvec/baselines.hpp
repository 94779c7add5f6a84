#pragma once

// Comparison systems: pooled static factorization, independent per-slice
// factorization, pairwise orthogonal Procrustes alignment, and local linear
// mapping around a query word.

#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/ppmi.hpp"
#include "tvec/solver.hpp"

namespace tvec {

struct PerSliceEmbeddings {
    std::vector<Matrix> U;
    std::vector<SliceLabel> labels;
};

struct OrthogonalMap {
    Matrix R;  // d x d, R^T R = I
};

inline constexpr std::size_t kDefaultLocalNeighbours = 30;

// Solver with T = 1 and tau = 0; returns the canonical (U + W) / 2 embedding.
Matrix factorize_single(const PpmiMatrix& Y, const SolverConfig& config);

// PPMI of the pooled counts, then factorize_single.
Matrix train_static(const SliceStats& pooled, const SolverConfig& config, const PpmiOptions& ppmi = {});

// Each slice factorized on its own; slice t uses seed derive_seed(config.seed, "per_slice/<t>").
PerSliceEmbeddings train_per_slice(const PpmiSequence& Y, const SolverConfig& config);

// argmin over orthogonal R of ||source R - target||_F via SVD of source^T target.
// Warns (and keeps the SVD's choice) when source^T target is rank deficient.
OrthogonalMap procrustes_align(const Matrix& source, const Matrix& target);

// Slice 0 is the anchor; slice t is mapped onto the already aligned slice t-1.
std::vector<Matrix> align_sequence(const PerSliceEmbeddings& per_slice);

// Fits M = argmin sum_{n in N} ||source_n M - target_n||^2 over the k nearest
// neighbours N of the query in the source slice (cosine, query excluded) and
// returns source_query * M.
Vector local_linear_map(WordId query, const Matrix& source, const Matrix& target,
                        std::size_t k = kDefaultLocalNeighbours);

}  // namespace tvec
