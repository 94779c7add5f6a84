#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tvec/ppmi.hpp"

using namespace tvec;

TEST_CASE("pmi_value") {
    CHECK(pmi_value(3, 2, 2, 4) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(pmi_value(3, 2, 2, 4) == doctest::Approx(1.09861).epsilon(1e-5));
    CHECK(pmi_value(1, 2, 2, 4) == 0.0);
    CHECK(pmi_value(0, 5, 5, 100) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(pmi_value(1, 0, 2, 4), DomainError);
}

TEST_CASE("build_ppmi toy examples") {
    const Vocabulary ab({"a", "b"});
    const auto stats = count_cooccurrences({{"a", "b", "a", "b"}}, ab, 1);
    const auto y = build_ppmi(stats, 7);
    CHECK(y.label == 7);
    CHECK(y.values.at(0, 1) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(y.values.at(1, 0) == y.values.at(0, 1));
    CHECK(y.values.nnz() == 2);

    // Ordered position pairs put 6 on the diagonal: log(6 * 4 / 16) > 0.
    const auto uniform = count_cooccurrences({{"a", "a", "a", "a"}}, Vocabulary({"a"}), 1);
    CHECK(uniform.cooc.at(0, 0) == 6);
    CHECK(build_ppmi(uniform).values.at(0, 0) == doctest::Approx(std::log(1.5)).epsilon(1e-15));

    // With three co-occurrences the same marginals give log(0.75) < 0: absent.
    SliceStats three = uniform;
    three.cooc = CsrMatrix<std::uint64_t>::from_triplets(1, {{0, 0, 3}});
    CHECK(build_ppmi(three).values.nnz() == 0);
}

TEST_CASE("all-negative PMI gives an empty matrix") {
    SliceStats s;
    s.window = 1;
    s.unigram = {10, 10};
    s.total_tokens = 20;
    s.cooc = CsrMatrix<std::uint64_t>::from_triplets(2, {{0, 1, 1}, {1, 0, 1}, {0, 0, 2}});
    CHECK(build_ppmi(s).values.nnz() == 0);
}

TEST_CASE("shift removes entries at or below the shift") {
    const Vocabulary ab({"a", "b"});
    const auto stats = count_cooccurrences({{"a", "b", "a", "b"}}, ab, 1);
    CHECK(build_ppmi(stats, 0, {std::log(3.0) - 0.5}).values.at(0, 1) == doctest::Approx(0.5));
    CHECK(build_ppmi(stats, 0, {2.0}).values.nnz() == 0);
}

TEST_CASE("sparse PPMI equals the dense oracle on random corpora") {
    std::mt19937_64 rng(5);
    std::vector<std::string> words;
    for (int i = 0; i < 12; ++i) words.push_back("w" + std::to_string(i));
    const Vocabulary vocab(std::vector<std::string>(words.begin(), words.begin() + 10));
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Document> docs(3);
        for (auto& d : docs)
            for (int n = 0; n < 40; ++n) d.push_back(words[rng() % words.size()]);
        const auto stats = count_cooccurrences(docs, vocab, 1 + static_cast<std::uint32_t>(rng() % 4));
        // Words with zero unigram would make the marginals degenerate; skip such draws.
        bool ok = true;
        for (auto u : stats.unigram) ok = ok && u > 0;
        if (!ok) continue;
        const auto sparse = build_ppmi(stats);
        const auto dense = tvec::testing::naive_ppmi(stats);
        const auto got = tvec::testing::to_dense(sparse.values);
        CHECK((got - dense).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(sparse.values.is_symmetric());
        for (const auto& t : sparse.values.triplets()) CHECK(t.value > 0.0);
    }
}

TEST_CASE("PpmiSequence validation") {
    PpmiMatrix a{CsrMatrix<double>(3), 1};
    PpmiMatrix b{CsrMatrix<double>(3), 2};
    PpmiMatrix c{CsrMatrix<double>(4), 3};
    CHECK_NOTHROW(PpmiSequence({a, b}));
    CHECK_THROWS(PpmiSequence({b, a}));
    CHECK_THROWS(PpmiSequence({a, c}));
    CHECK(PpmiSequence({a, b}).labels() == std::vector<SliceLabel>{1, 2});
}
