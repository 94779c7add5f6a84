#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tvec/baselines.hpp"
#include "tvec/diagnostics.hpp"

using namespace tvec;
using namespace tvec::testing;

namespace {

SolverConfig config(std::size_t d, std::uint32_t epochs) {
    SolverConfig c;
    c.dim = d;
    c.epochs = epochs;
    c.block_rows = 16;
    c.seed = 5;
    return c;
}

PpmiMatrix dense_to_ppmi(const Matrix& m) {
    std::vector<Triplet<double>> trip;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            trip.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), m(i, j)});
    return {CsrMatrix<double>::from_triplets(static_cast<std::size_t>(m.rows()), trip), 0};
}

}  // namespace

TEST_CASE("factorize_single") {
    SUBCASE("zero data gives a zero embedding") {
        const PpmiMatrix zero{CsrMatrix<double>(6), 0};
        SolverConfig c = config(3, 1);
        c.gamma = 0;
        CHECK(factorize_single(zero, c).cwiseAbs().maxCoeff() == 0.0);
        // With coupling the factors shrink towards zero geometrically.
        double previous = std::numeric_limits<double>::infinity();
        for (std::uint32_t epochs : {1u, 5u, 25u}) {
            const double norm = factorize_single(zero, config(3, epochs)).norm();
            CHECK(norm < previous);
            previous = norm;
        }
        CHECK(previous <= 1e-3);
    }
    SUBCASE("recovers a planted low-rank factorization") {
        std::mt19937_64 rng(2);
        const Matrix x = random_matrix(40, 4, rng);
        const Matrix y = x * x.transpose();
        SolverConfig c = config(4, 50);
        c.lambda = 1e-3;
        c.gamma = 1.0;  // small next to entries of Y, large enough to tie U and W together
        const Matrix u = factorize_single(dense_to_ppmi(y), c);
        CHECK((y - u * u.transpose()).norm() / y.norm() <= 0.05);
    }
    SUBCASE("deterministic") {
        std::mt19937_64 rng(3);
        const auto y = random_ppmi(20, 0.3, rng);
        CHECK(factorize_single(y, config(3, 4)) == factorize_single(y, config(3, 4)));
    }
}

TEST_CASE("train_static") {
    const Vocabulary vocab({"a", "b", "c", "d"});
    const auto s1 = count_cooccurrences({{"a", "b", "c", "a", "d", "b"}}, vocab, 2);
    CHECK(train_static(pool_stats({s1}), config(2, 3)) == factorize_single(build_ppmi(s1), config(2, 3)));
}

TEST_CASE("pooled PPMI differs from the sum of per-slice PPMIs") {
    // Found by enumerating 3-word documents over {a, b, c}; a counterexample is
    // enough to show pooling has to happen at the count level.
    const Vocabulary vocab({"a", "b", "c"});
    const auto s1 = count_cooccurrences({{"a", "b", "a"}}, vocab, 1);
    const auto s2 = count_cooccurrences({{"a", "c", "b"}}, vocab, 1);
    const Matrix pooled = to_dense(build_ppmi(pool_stats({s1, s2})).values);
    const Matrix summed = to_dense(build_ppmi(s1).values) + to_dense(build_ppmi(s2).values);
    CHECK((pooled - summed).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("train_per_slice uses distinct seeds per slice") {
    std::vector<PpmiMatrix> ms;
    std::mt19937_64 rng(9);
    const auto y = random_ppmi(15, 0.3, rng);
    for (SliceLabel t = 0; t < 2; ++t) ms.push_back({y.values, t});
    const auto per = train_per_slice(PpmiSequence(ms), config(3, 3));
    REQUIRE(per.U.size() == 2);
    CHECK(per.labels == std::vector<SliceLabel>{0, 1});
    CHECK(per.U[0] != per.U[1]);
}

TEST_CASE("procrustes_align") {
    std::mt19937_64 rng(17);
    SUBCASE("recovers a planted rotation") {
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix source = random_matrix(60, 8, rng);
            const Matrix r0 = random_orthogonal(8, rng);
            const auto map = procrustes_align(source, source * r0);
            CHECK((map.R - r0).norm() <= 1e-8);
            CHECK((map.R.transpose() * map.R - Matrix::Identity(8, 8)).norm() <= 1e-10);
        }
    }
    SUBCASE("identity when source equals target") {
        const Matrix source = random_matrix(30, 5, rng);
        CHECK((procrustes_align(source, source).R - Matrix::Identity(5, 5)).norm() <= 1e-10);
    }
    SUBCASE("warns on rank-deficient input") {
        Matrix source = random_matrix(30, 4, rng);
        source.col(3).setZero();
        WarningCapture capture;
        const auto map = procrustes_align(source, source);
        CHECK(capture.count() == 1);
        CHECK((map.R.transpose() * map.R - Matrix::Identity(4, 4)).norm() <= 1e-10);
    }
    SUBCASE("shape mismatch") { CHECK_THROWS_AS(procrustes_align(Matrix(3, 2), Matrix(3, 3)), ShapeError); }
}

TEST_CASE("align_sequence undoes a chain of rotations") {
    std::mt19937_64 rng(23);
    const Matrix base = random_matrix(50, 6, rng);
    PerSliceEmbeddings per;
    for (SliceLabel t = 0; t < 5; ++t) {
        per.U.push_back(t == 0 ? base : Matrix(base * random_orthogonal(6, rng)));
        per.labels.push_back(t);
    }
    const auto aligned = align_sequence(per);
    REQUIRE(aligned.size() == 5);
    for (const auto& m : aligned) CHECK((m - base).cwiseAbs().maxCoeff() <= 1e-6);

    PerSliceEmbeddings single{{base}, {0}};
    CHECK(align_sequence(single).front() == base);
}

TEST_CASE("local_linear_map") {
    std::mt19937_64 rng(31);
    const Matrix source = random_matrix(80, 5, rng);
    SUBCASE("identity map returns the query vector") {
        const Vector got = local_linear_map(7, source, source, 30);
        CHECK((got - source.row(7).transpose()).norm() <= 1e-8);
    }
    SUBCASE("recovers a planted linear map") {
        Matrix m0 = random_matrix(5, 5, rng);
        m0.diagonal().array() += 3.0;
        const Matrix target = source * m0;
        for (WordId q : {0u, 13u, 79u}) {
            const Vector got = local_linear_map(q, source, target, 30);
            const Vector want = (source.row(q) * m0).transpose();
            CHECK((got - want).norm() <= 1e-6 * want.norm());
        }
    }
    SUBCASE("errors") {
        Matrix zero_query = source;
        zero_query.row(2).setZero();
        CHECK_THROWS_AS(local_linear_map(2, zero_query, source, 30), DomainError);
        CHECK_THROWS_AS(local_linear_map(0, source, source, 80), DomainError);
        CHECK_THROWS_AS(local_linear_map(0, source, Matrix(80, 4), 30), ShapeError);
    }
}
