#include "tvec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tvec/diagnostics.hpp"
#include "tvec/kernels.hpp"
#include "tvec/seed.hpp"

namespace tvec {

Matrix factorize_single(const PpmiMatrix& Y, const SolverConfig& config) {
    SolverConfig single = config;
    single.tau = 0.0;
    const PpmiSequence seq({Y});
    return final_embedding(train(seq, single)).front();
}

Matrix train_static(const SliceStats& pooled, const SolverConfig& config, const PpmiOptions& ppmi) {
    return factorize_single(build_ppmi(pooled, 0, ppmi), config);
}

PerSliceEmbeddings train_per_slice(const PpmiSequence& Y, const SolverConfig& config) {
    PerSliceEmbeddings out;
    out.labels = Y.labels();
    for (std::size_t t = 0; t < Y.num_slices(); ++t) {
        SolverConfig c = config;
        c.seed = derive_seed(config.seed, "per_slice/" + std::to_string(t));
        PpmiMatrix m = Y[t];
        m.label = 0;
        out.U.push_back(factorize_single(m, c));
    }
    return out;
}

OrthogonalMap procrustes_align(const Matrix& source, const Matrix& target) {
    if (source.rows() != target.rows() || source.cols() != target.cols())
        throw ShapeError("procrustes: source and target shapes differ");
    const Matrix m = source.transpose() * target;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double largest = sv.size() ? sv(0) : 0.0;
    const double smallest = sv.size() ? sv(sv.size() - 1) : 0.0;
    if (largest == 0.0 || smallest <= 1e-12 * largest) {
        std::ostringstream msg;
        msg << "procrustes: cross-covariance is rank deficient (sigma_min/sigma_max = "
            << (largest > 0 ? smallest / largest : 0.0) << "); rotation is not unique";
        warn(msg.str());
    }
    return OrthogonalMap{svd.matrixU() * svd.matrixV().transpose()};
}

std::vector<Matrix> align_sequence(const PerSliceEmbeddings& per_slice) {
    std::vector<Matrix> aligned;
    aligned.reserve(per_slice.U.size());
    for (std::size_t t = 0; t < per_slice.U.size(); ++t) {
        if (t == 0) {
            aligned.push_back(per_slice.U[0]);
            continue;
        }
        const OrthogonalMap map = procrustes_align(per_slice.U[t], aligned[t - 1]);
        aligned.push_back(per_slice.U[t] * map.R);
    }
    return aligned;
}

Vector local_linear_map(WordId query, const Matrix& source, const Matrix& target, std::size_t k) {
    if (source.rows() != target.rows() || source.cols() != target.cols())
        throw ShapeError("local_linear_map: source and target shapes differ");
    const auto v = static_cast<std::size_t>(source.rows());
    const auto d = static_cast<std::size_t>(source.cols());
    if (query >= v) throw std::out_of_range("local_linear_map: query index out of range");
    if (k < 1) throw std::invalid_argument("local_linear_map: k must be >= 1");

    const auto& kern = kernels::active();
    const double* q = source.data() + static_cast<std::size_t>(query) * d;
    const double q_norm = std::sqrt(kern.dot(q, q, d));
    if (q_norm == 0.0) throw DomainError("local_linear_map: query word has a zero vector in the source slice");

    std::vector<std::pair<double, WordId>> scored;
    scored.reserve(v);
    for (std::size_t w = 0; w < v; ++w) {
        if (w == query) continue;
        const double* s = source.data() + w * d;
        const double* t = target.data() + w * d;
        const double s_norm = std::sqrt(kern.dot(s, s, d));
        if (s_norm == 0.0 || kern.dot(t, t, d) == 0.0) continue;
        scored.emplace_back(kern.dot(s, q, d) / (s_norm * q_norm), static_cast<WordId>(w));
    }
    if (scored.size() < k) {
        std::ostringstream msg;
        msg << "local_linear_map: only " << scored.size() << " words have nonzero vectors in both slices, need " << k;
        throw DomainError(msg.str());
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });

    Matrix xs(static_cast<Eigen::Index>(k), source.cols());
    Matrix xt(static_cast<Eigen::Index>(k), source.cols());
    for (std::size_t n = 0; n < k; ++n) {
        xs.row(static_cast<Eigen::Index>(n)) = source.row(scored[n].second);
        xt.row(static_cast<Eigen::Index>(n)) = target.row(scored[n].second);
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(xs);
    Matrix map;
    if (qr.rank() == xs.cols()) {
        map = qr.solve(xt);
    } else {
        Matrix normal = xs.transpose() * xs;
        normal.diagonal().array() += 1e-8;
        map = normal.ldlt().solve(xs.transpose() * xt);
    }
    return (source.row(query) * map).transpose();
}

}  // namespace tvec
