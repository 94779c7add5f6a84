#pragma once

// On-disk formats. All binary formats are little-endian and round-trip
// bit-exactly.
//
//   TVCO  slice statistics   magic, u32 version, u64 V, u32 L, u64 total_tokens,
//                            V x u64 unigram, u64 nnz, nnz x (u32 row, u32 col, u64 count)
//   TVPM  PPMI matrix        magic, u32 version, u64 V, i64 label, u64 nnz,
//                            nnz x (u32 row, u32 col, f64 value)
//   TVEM  embeddings         magic, u32 version, u64 V, u64 T, u64 d, T x i64 label,
//                            T row-major V x d f64 matrices
//   TVCK  solver checkpoint  magic, u32 version, u32 epochs_done, solver config,
//                            T x i64 label, U matrices, W matrices

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/ppmi.hpp"
#include "tvec/solver.hpp"

namespace tvec::io {

inline constexpr std::uint32_t kFormatVersion = 1;

// Writes to "<path>.tmp" and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

std::string encode_stats(const SliceStats& stats);
SliceStats decode_stats(const std::string& bytes);
void write_stats(const std::filesystem::path& path, const SliceStats& stats);
SliceStats read_stats(const std::filesystem::path& path);

std::string encode_ppmi(const PpmiMatrix& m);
PpmiMatrix decode_ppmi(const std::string& bytes);
void write_ppmi(const std::filesystem::path& path, const PpmiMatrix& m);
PpmiMatrix read_ppmi(const std::filesystem::path& path);
// "row col value" per line, value with 17 significant digits.
std::string ppmi_to_text(const PpmiMatrix& m);

struct EmbeddingFile {
    std::vector<SliceLabel> labels;
    std::vector<Matrix> matrices;  // one V x d matrix per slice
};

std::string encode_embeddings(const EmbeddingFile& e);
EmbeddingFile decode_embeddings(const std::string& bytes);
void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& e);
EmbeddingFile read_embeddings(const std::filesystem::path& path);

// Header "V T d", then "word label v1 ... vd" per (slice, word), %.9g values.
std::string embeddings_to_text(const EmbeddingFile& e, const Vocabulary& vocab);

struct Checkpoint {
    EmbeddingSequence state;
    std::uint32_t epochs_done = 0;
};

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::string& bytes);

// "word<TAB>count" per line, in index order.
void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path);

}  // namespace tvec::io
