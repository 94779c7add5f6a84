#pragma once

// Joint temporal factorization Y(t) ~ U(t) W(t)^T with ridge, U/W coupling
// and adjacent-slice smoothing penalties, solved by exact block coordinate
// descent over row blocks of one factor at a time.
//
//   F = 1/2 sum_t ||Y(t) - U(t) W(t)^T||^2 + gamma/2 sum_t ||U(t) - W(t)||^2
//     + lambda/2 sum_t (||U(t)||^2 + ||W(t)||^2)
//     + tau/2 sum_{t>=2} (||U(t-1) - U(t)||^2 + ||W(t-1) - W(t)||^2)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "tvec/ppmi.hpp"
#include "tvec/types.hpp"

namespace tvec {

struct SolverConfig {
    std::size_t dim = 50;
    double lambda = 10.0;
    double tau = 50.0;
    double gamma = 50.0;
    std::uint32_t epochs = 5;
    std::size_t block_rows = 1024;
    std::uint64_t seed = 0;
    double init_scale = 1.0;

    void validate() const;
    bool operator==(const SolverConfig&) const = default;
};

enum class Factor { kU, kW };

enum class EmbeddingMode { kAverage, kU, kW };

struct EmbeddingSequence {
    std::vector<Matrix> U;
    std::vector<Matrix> W;
    SolverConfig config;
    std::vector<SliceLabel> labels;

    std::size_t num_slices() const { return U.size(); }
    std::size_t vocab_size() const { return U.empty() ? 0 : static_cast<std::size_t>(U.front().rows()); }
    std::size_t dim() const { return U.empty() ? 0 : static_cast<std::size_t>(U.front().cols()); }

    std::vector<Matrix>& factor(Factor f) { return f == Factor::kU ? U : W; }
    const std::vector<Matrix>& factor(Factor f) const { return f == Factor::kU ? U : W; }
};

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

EmbeddingSequence init_embeddings(std::size_t vocab_size, std::size_t num_slices, const SolverConfig& config);

// Full relaxed objective. The residual term is expanded as
// ||Y||^2 - 2<Y, UW^T> + tr((U^T U)(W^T W)) so the cost is O(nnz d + V d^2).
double objective(const EmbeddingSequence& seq, const PpmiSequence& Y);

// Gradient of f(U) = 1/2 ||Y - U U^T||^2, i.e. -2 Y U + 2 U (U^T U).
// Verification only; training uses the relaxed form.
Matrix residual_gradient(const Matrix& U, const PpmiMatrix& Y);

// Number of existing neighbours of slice t (2 inside, 1 at the ends, 0 if T == 1).
int smoothing_neighbours(std::size_t t, std::size_t num_slices);

// Normal equations for one factor at one slice: rows * A = B with
//   A = F^T F + (gamma + lambda + c_t tau) I        (F = opposite factor at t)
//   B = Y(t)[rows, :] F + gamma F[rows, :] + tau (S(t-1)[rows, :] + S(t+1)[rows, :])
// A does not depend on the rows being solved for, so it is factored once and
// reused for every row block of the factor.
class FactorSystem {
public:
    FactorSystem(const EmbeddingSequence& state, const PpmiSequence& Y, Factor which, std::size_t t,
                 const SolverConfig& config);

    const Matrix& lhs() const { return lhs_; }
    bool used_least_norm_fallback() const { return fallback_; }

    Matrix rhs(RowRange rows) const;
    Matrix solve(const Matrix& rhs) const;

private:
    const EmbeddingSequence& state_;
    const PpmiSequence& Y_;
    Factor which_;
    std::size_t t_;
    SolverConfig config_;
    Matrix lhs_;
    Eigen::LLT<Matrix> llt_;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
    bool fallback_ = false;
};

struct BlockUpdate {
    Matrix rows;                 // new values for the block
    double normal_residual = 0;  // ||rows A - B||_F / ||B||_F (0 when B == 0 and rows == 0)
};

BlockUpdate ridge_update_block(RowRange rows, Factor which, std::size_t t, const EmbeddingSequence& state,
                               const PpmiSequence& Y, const SolverConfig& config);

// Same as above with a prebuilt system.
BlockUpdate ridge_update_block(RowRange rows, const FactorSystem& system);

struct BlockEvent {
    std::uint32_t epoch = 0;  // 1-based
    std::size_t slice = 0;
    Factor factor = Factor::kU;
    RowRange rows;
    double normal_residual = 0;
    std::optional<double> objective;  // set when TrainOptions::track_block_objective
};

struct EpochEvent {
    std::uint32_t epoch = 0;  // 1-based
    double objective = 0;
};

struct TrainOptions {
    std::function<void(const BlockEvent&)> on_block;
    std::function<void(const EpochEvent&)> on_epoch;
    bool track_block_objective = false;
    // When set, the full state and epoch counter are written here after
    // every epoch, and an existing checkpoint with the same config resumes.
    std::optional<std::filesystem::path> checkpoint;
};

EmbeddingSequence train(const PpmiSequence& Y, const SolverConfig& config, const TrainOptions& options = {});

// Continues from a given state for the remaining epochs in [first_epoch, config.epochs].
EmbeddingSequence train_from(EmbeddingSequence state, std::uint32_t first_epoch, const PpmiSequence& Y,
                             const TrainOptions& options = {});

std::vector<Matrix> final_embedding(const EmbeddingSequence& seq, EmbeddingMode mode = EmbeddingMode::kAverage);

}  // namespace tvec
