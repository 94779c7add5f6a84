#pragma once

// Independent dense reference implementations used as test oracles. None of
// these share code paths with the library's sparse/kernel implementations.

#include <cstdint>
#include <random>
#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/ppmi.hpp"
#include "tvec/solver.hpp"

namespace tvec::testing {

using DenseMatrix = Eigen::MatrixXd;  // column-major, deliberately unlike tvec::Matrix

DenseMatrix to_dense(const CsrMatrix<double>& m);

// Random symmetric nonnegative sparse matrix with the given density.
PpmiMatrix random_ppmi(std::size_t v, double density, std::mt19937_64& rng, SliceLabel label = 0);
PpmiSequence random_ppmi_sequence(std::size_t v, std::size_t t, double density, std::uint64_t seed);

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0);
Matrix random_orthogonal(std::size_t d, std::mt19937_64& rng);

// Dense double loop over every term of the relaxed objective.
double dense_objective(const EmbeddingSequence& seq, const PpmiSequence& Y);

// 1/2 ||Y - U U^T||_F^2 evaluated densely.
double dense_symmetric_residual(const Matrix& U, const PpmiMatrix& Y);

// Central finite differences of dense_symmetric_residual.
Matrix finite_difference_gradient(const Matrix& U, const PpmiMatrix& Y, double step);

// Enumerates every ordered position pair within the window.
std::vector<std::vector<std::uint64_t>> brute_force_cooc(const std::vector<Document>& docs, const Vocabulary& vocab,
                                                         std::uint32_t window);

// Dense PMI/PPMI from raw counts.
DenseMatrix naive_ppmi(const SliceStats& stats);

// Entropies and mutual information straight from the definitions, log base e.
double brute_force_nmi(const std::vector<std::uint32_t>& labels, const std::vector<std::uint32_t>& clusters);
// Enumerates all unordered item pairs.
double brute_force_f_beta(const std::vector<std::uint32_t>& labels, const std::vector<std::uint32_t>& clusters,
                          double beta);

}  // namespace tvec::testing
