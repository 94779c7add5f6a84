#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tvec/io.hpp"

using namespace tvec;
using namespace tvec::testing;

namespace {

std::filesystem::path scratch(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("tvec_io_" + name);
}

SliceStats sample_stats() {
    const Vocabulary vocab({"a", "b", "c"});
    return count_cooccurrences({{"a", "b", "c", "a", "a"}, {"c", "b"}}, vocab, 2);
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("stats round-trip") {
    const auto s = sample_stats();
    const auto bytes = io::encode_stats(s);
    CHECK(bytes.substr(0, 4) == "TVCO");
    CHECK(io::decode_stats(bytes) == s);
    CHECK(io::encode_stats(io::decode_stats(bytes)) == bytes);

    const auto path = scratch("stats.tvco");
    io::write_stats(path, s);
    CHECK(io::read_stats(path) == s);
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}

TEST_CASE("decoders reject corrupt input") {
    const auto bytes = io::encode_stats(sample_stats());
    CHECK_THROWS_AS(io::decode_stats(bytes.substr(0, bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(io::decode_stats(bytes + "x"), FormatError);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    CHECK_THROWS_AS(io::decode_stats(wrong_magic), FormatError);
    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    CHECK_THROWS_AS(io::decode_stats(wrong_version), FormatError);
    CHECK_THROWS_AS(io::decode_ppmi(bytes), FormatError);
    CHECK_THROWS_AS(io::decode_embeddings(""), FormatError);
}

TEST_CASE("PPMI round-trip and text export") {
    std::mt19937_64 rng(6);
    const auto m = random_ppmi(30, 0.2, rng, -1850);
    const auto bytes = io::encode_ppmi(m);
    CHECK(bytes.substr(0, 4) == "TVPM");
    const auto back = io::decode_ppmi(bytes);
    CHECK(back == m);
    const auto path = scratch("m.tvpm");
    io::write_ppmi(path, m);
    CHECK(io::read_ppmi(path) == m);

    const PpmiMatrix tiny{CsrMatrix<double>::from_triplets(2, {{0, 1, 0.1}, {1, 0, 0.1}}), 0};
    CHECK(io::ppmi_to_text(tiny) == "0 1 0.10000000000000001\n1 0 0.10000000000000001\n");
}

TEST_CASE("embedding round-trip is bit-exact") {
    std::mt19937_64 rng(8);
    io::EmbeddingFile e;
    e.labels = {1990, 2000, 2010};
    for (int t = 0; t < 3; ++t) e.matrices.push_back(random_matrix(17, 5, rng));
    e.matrices[1](3, 2) = -0.0;
    e.matrices[2](0, 0) = 1e-310;
    const auto bytes = io::encode_embeddings(e);
    CHECK(bytes.substr(0, 4) == "TVEM");
    const auto back = io::decode_embeddings(bytes);
    CHECK(back.labels == e.labels);
    for (int t = 0; t < 3; ++t) CHECK(bit_equal(back.matrices[t], e.matrices[t]));
    CHECK(io::encode_embeddings(back) == bytes);

    const auto path = scratch("e.tvem");
    io::write_embeddings(path, e);
    CHECK(io::encode_embeddings(io::read_embeddings(path)) == bytes);
}

TEST_CASE("embedding text format") {
    io::EmbeddingFile e;
    e.labels = {7, 9};
    Matrix a(2, 2);
    a << 1.0, 0.5, 1.0 / 3.0, -2.0;
    e.matrices = {a, 2.0 * a};
    const std::string text = io::embeddings_to_text(e, Vocabulary({"x", "y"}));
    CHECK(text ==
          "2 2 2\n"
          "x 7 1 0.5\n"
          "y 7 0.333333333 -2\n"
          "x 9 2 1\n"
          "y 9 0.666666667 -4\n");
}

TEST_CASE("checkpoint round-trip") {
    SolverConfig c;
    c.dim = 3;
    c.lambda = 0.1;
    c.tau = 2.5;
    c.gamma = 7;
    c.epochs = 9;
    c.block_rows = 4;
    c.seed = 0xFFFFFFFFFFFFFFFFull;
    c.init_scale = 0.3;
    io::Checkpoint ck{init_embeddings(11, 2, c), 4};
    ck.state.labels = {-5, 5};
    const auto bytes = io::encode_checkpoint(ck);
    CHECK(bytes.substr(0, 4) == "TVCK");
    const auto back = io::decode_checkpoint(bytes);
    CHECK(back.epochs_done == 4);
    CHECK(back.state.config == c);
    CHECK(back.state.labels == ck.state.labels);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(bit_equal(back.state.U[t], ck.state.U[t]));
        CHECK(bit_equal(back.state.W[t], ck.state.W[t]));
    }
}

TEST_CASE("vocabulary file") {
    const Vocabulary v({"b", "a", "ñ"}, {5, 3, 1});
    const auto path = scratch("vocab.tsv");
    io::write_vocabulary(path, v);
    const auto back = io::read_vocabulary(path);
    CHECK(back.words() == v.words());
    CHECK(back.counts() == v.counts());
}
