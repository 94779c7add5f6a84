#include "tvec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "tvec/diagnostics.hpp"
#include "tvec/kernels.hpp"
#include "tvec/seed.hpp"

namespace tvec {

namespace {

bool ranks_before(double sim_a, WordId a, double sim_b, WordId b) {
    return sim_a != sim_b ? sim_a > sim_b : a < b;
}

std::vector<double> row_norms(const Matrix& m) {
    const auto d = static_cast<std::size_t>(m.cols());
    const auto& k = kernels::active();
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double* row = m.data() + r * d;
        out[r] = std::sqrt(k.dot(row, row, d));
    }
    return out;
}

// Cosine of every row against q (0 for zero rows, which callers skip).
std::vector<double> cosine_scores(std::span<const double> q, const Matrix& m, const std::vector<double>& norms) {
    const auto& k = kernels::active();
    const auto d = static_cast<std::size_t>(m.cols());
    const double q_norm = std::sqrt(k.dot(q.data(), q.data(), d));
    std::vector<double> scores(static_cast<std::size_t>(m.rows()));
    k.row_dots(m.data(), scores.size(), d, q.data(), d, scores.data());
    for (std::size_t r = 0; r < scores.size(); ++r) scores[r] = norms[r] > 0 ? scores[r] / (norms[r] * q_norm) : 0.0;
    return scores;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("cosine: vector lengths differ");
    const auto& k = kernels::active();
    const double na = k.dot(a.data(), a.data(), a.size());
    const double nb = k.dot(b.data(), b.data(), b.size());
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine of a zero vector is undefined");
    const double c = k.dot(a.data(), b.data(), a.size()) / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

std::vector<Neighbour> nearest_neighbors(std::span<const double> query, const Matrix& matrix, std::size_t k,
                                         const std::unordered_set<WordId>& exclude) {
    if (k < 1) throw std::invalid_argument("nearest_neighbors: K must be >= 1");
    if (query.size() != static_cast<std::size_t>(matrix.cols())) throw ShapeError("nearest_neighbors: dimension mismatch");
    if (kernels::squared_norm(query) == 0.0) throw DomainError("nearest_neighbors: zero query vector");
    const auto norms = row_norms(matrix);
    const auto scores = cosine_scores(query, matrix, norms);

    std::vector<Neighbour> pool;
    pool.reserve(scores.size());
    for (std::size_t w = 0; w < scores.size(); ++w) {
        if (norms[w] == 0.0 || exclude.contains(static_cast<WordId>(w))) continue;
        pool.push_back({static_cast<WordId>(w), scores[w]});
    }
    const std::size_t take = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                      [](const Neighbour& a, const Neighbour& b) { return ranks_before(a.similarity, a.word, b.similarity, b.word); });
    pool.resize(take);
    return pool;
}

// --- spherical k-means ------------------------------------------------------

namespace {

struct KMeansRun {
    std::vector<std::uint32_t> assignment;
    std::vector<double> history;
    double objective = -2.0;
};

KMeansRun kmeans_once(const Matrix& x, std::uint32_t k, std::mt19937_64& rng, std::uint32_t max_iters) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    const auto& kern = kernels::active();
    const auto dot = [&](const double* a, const double* b) { return kern.dot(a, b, d); };

    // k-means++ seeding with cosine distance 1 - cos.
    Matrix centroids(static_cast<Eigen::Index>(k), x.cols());
    std::vector<char> chosen(n, 0);
    std::vector<double> best_sim(n, -2.0);
    const auto add_center = [&](std::size_t c, std::size_t idx) {
        chosen[idx] = 1;
        centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(idx));
        for (std::size_t i = 0; i < n; ++i)
            best_sim[i] = std::max(best_sim[i], dot(x.data() + i * d, centroids.data() + c * d));
    };
    add_center(0, std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n))));
    for (std::uint32_t c = 1; c < k; ++c) {
        std::vector<double> weight(n, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            const double dist = std::max(0.0, 1.0 - best_sim[i]);
            weight[i] = dist * dist;
            total += weight[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double target = uniform01(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (weight[i] <= 0.0) continue;
                pick = i;
                if (target < weight[i]) break;
                target -= weight[i];
            }
        } else {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) free.push_back(i);
            pick = free[std::min(free.size() - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(free.size())))];
        }
        add_center(c, pick);
    }

    KMeansRun run;
    run.assignment.assign(n, k);  // k = unassigned
    std::vector<double> sim(n, 0.0);
    for (std::uint32_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t best = 0;
            double best_value = -2.0;
            for (std::uint32_t c = 0; c < k; ++c) {
                const double s = dot(x.data() + i * d, centroids.data() + c * d);
                if (s > best_value) {
                    best_value = s;
                    best = c;
                }
            }
            if (run.assignment[i] != best) changed = true;
            run.assignment[i] = best;
            sim[i] = best_value;
            ++sizes[best];
        }
        // Empty clusters take the point farthest from its own centroid.
        for (std::uint32_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t victim = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[run.assignment[i]] < 2) continue;
                if (victim == n || sim[i] < sim[victim]) victim = i;
            }
            if (victim == n) break;
            --sizes[run.assignment[victim]];
            run.assignment[victim] = c;
            ++sizes[c];
            centroids.row(c) = x.row(static_cast<Eigen::Index>(victim));
            sim[victim] = dot(x.data() + victim * d, centroids.data() + c * d);
            changed = true;
        }
        double total = 0.0;
        for (double s : sim) total += s;
        run.history.push_back(total / static_cast<double>(n));
        if (!changed) break;

        Matrix sums = Matrix::Zero(centroids.rows(), centroids.cols());
        for (std::size_t i = 0; i < n; ++i)
            kern.axpy(1.0, x.data() + i * d, sums.data() + run.assignment[i] * d, d);
        for (std::uint32_t c = 0; c < k; ++c) {
            const double norm = sums.row(c).norm();
            if (norm > 0.0) centroids.row(c) = sums.row(c) / norm;
        }
    }
    run.objective = run.history.empty() ? -2.0 : run.history.back();
    return run;
}

}  // namespace

Clustering spherical_kmeans(const Matrix& vectors, std::uint32_t k, std::uint64_t seed, const KMeansOptions& options) {
    const auto n = static_cast<std::size_t>(vectors.rows());
    if (k < 1 || k > n) throw std::invalid_argument("spherical_kmeans: need 1 <= K <= number of items");
    if (options.max_iters < 1 || options.restarts < 1) throw std::invalid_argument("spherical_kmeans: bad options");
    Matrix x = vectors;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double norm = x.row(i).norm();
        if (norm == 0.0) throw DomainError("spherical_kmeans: zero vector at item " + std::to_string(i));
        x.row(i) /= norm;
    }

    KMeansRun best;
    for (std::uint32_t r = 0; r < options.restarts; ++r) {
        std::mt19937_64 rng(derive_seed(seed, "kmeans/restart/" + std::to_string(r)));
        KMeansRun run = kmeans_once(x, k, rng, options.max_iters);
        if (r == 0 || run.objective > best.objective) best = std::move(run);
    }
    return Clustering{std::move(best.assignment), k, best.objective, std::move(best.history)};
}

// --- clustering metrics -----------------------------------------------------

namespace {

struct Contingency {
    std::vector<std::vector<double>> joint;  // [label][cluster]
    std::vector<double> label_totals;
    std::vector<double> cluster_totals;
    double n = 0;
};

std::vector<std::uint32_t> densify(std::span<const std::uint32_t> ids, std::size_t& count) {
    std::map<std::uint32_t, std::uint32_t> remap;
    std::vector<std::uint32_t> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(remap.emplace(id, static_cast<std::uint32_t>(remap.size())).first->second);
    count = remap.size();
    return out;
}

Contingency contingency(std::span<const std::uint32_t> labels, std::span<const std::uint32_t> clusters) {
    if (labels.size() != clusters.size()) throw ShapeError("labels and clusters differ in length");
    if (labels.empty()) throw std::invalid_argument("no items to score");
    std::size_t nl = 0;
    std::size_t nc = 0;
    const auto l = densify(labels, nl);
    const auto c = densify(clusters, nc);
    Contingency t;
    t.joint.assign(nl, std::vector<double>(nc, 0.0));
    t.label_totals.assign(nl, 0.0);
    t.cluster_totals.assign(nc, 0.0);
    for (std::size_t i = 0; i < l.size(); ++i) {
        t.joint[l[i]][c[i]] += 1;
        t.label_totals[l[i]] += 1;
        t.cluster_totals[c[i]] += 1;
    }
    t.n = static_cast<double>(l.size());
    return t;
}

double entropy(const std::vector<double>& totals, double n) {
    double h = 0.0;
    for (double m : totals)
        if (m > 0) h -= (m / n) * std::log(m / n);
    return h;
}

double pairs(double m) { return m * (m - 1) / 2; }

}  // namespace

double nmi(std::span<const std::uint32_t> labels, std::span<const std::uint32_t> clusters) {
    const Contingency t = contingency(labels, clusters);
    const double hl = entropy(t.label_totals, t.n);
    const double hc = entropy(t.cluster_totals, t.n);
    if (hl + hc == 0.0) {
        warn("NMI: single label and single cluster; returning 1 by convention");
        return 1.0;
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < t.joint.size(); ++i)
        for (std::size_t j = 0; j < t.joint[i].size(); ++j) {
            const double nij = t.joint[i][j];
            if (nij == 0) continue;
            mi += (nij / t.n) * std::log(nij * t.n / (t.label_totals[i] * t.cluster_totals[j]));
        }
    return std::clamp(mi / ((hl + hc) / 2.0), 0.0, 1.0);
}

double f_beta(std::span<const std::uint32_t> labels, std::span<const std::uint32_t> clusters, double beta) {
    const Contingency t = contingency(labels, clusters);
    if (t.n < 2) throw std::invalid_argument("F-beta needs at least two items");
    double tp = 0.0;
    for (const auto& row : t.joint)
        for (double nij : row) tp += pairs(nij);
    double same_cluster = 0.0;
    for (double m : t.cluster_totals) same_cluster += pairs(m);
    double same_label = 0.0;
    for (double m : t.label_totals) same_label += pairs(m);
    if (same_cluster == 0.0 || same_label == 0.0) {
        warn("F-beta: precision or recall undefined (no same-cluster or same-label pairs); returning 0");
        return 0.0;
    }
    const double p = tp / same_cluster;
    const double r = tp / same_label;
    const double b2 = beta * beta;
    const double denom = b2 * p + r;
    return denom > 0 ? (b2 + 1) * p * r / denom : 0.0;
}

// --- alignment --------------------------------------------------------------

AlignmentResult run_alignment_test(const AlignmentTestset& testset, const std::vector<Matrix>& embeddings,
                                   const std::vector<SliceLabel>& labels, const QueryVectorFn& query_vector) {
    if (embeddings.size() != labels.size()) throw ShapeError("one label per embedding slice required");
    std::map<SliceLabel, std::size_t> slice_of;
    for (std::size_t t = 0; t < labels.size(); ++t) slice_of[labels[t]] = t;

    std::vector<std::vector<double>> norms;
    norms.reserve(embeddings.size());
    for (const auto& m : embeddings) norms.push_back(row_norms(m));

    AlignmentResult result;
    for (const auto& rec : testset.records) {
        const auto qs = slice_of.find(rec.query_label);
        const auto ts = slice_of.find(rec.target_label);
        if (qs == slice_of.end() || ts == slice_of.end()) {
            ++result.skipped;
            continue;
        }
        const Matrix& target = embeddings[ts->second];
        if (rec.query_word >= target.rows() || rec.answer_word >= target.rows())
            throw ShapeError("alignment record word index out of range");
        const Vector q = query_vector ? query_vector(rec.query_word, qs->second, ts->second)
                                      : Vector(embeddings[qs->second].row(rec.query_word).transpose());
        if (q.squaredNorm() == 0.0) {
            warn("alignment query has a zero vector; record skipped");
            ++result.skipped;
            continue;
        }
        const auto& tn = norms[ts->second];
        const auto scores = cosine_scores({q.data(), static_cast<std::size_t>(q.size())}, target, tn);
        const bool exclude_self = rec.query_label == rec.target_label;
        const WordId answer = rec.answer_word;
        if (tn[answer] == 0.0 || (exclude_self && answer == rec.query_word)) {
            result.ranks.push_back(std::nullopt);
            continue;
        }
        std::uint32_t rank = 1;
        for (std::size_t w = 0; w < scores.size() && rank <= kRankCutoff; ++w) {
            if (w == answer || tn[w] == 0.0) continue;
            if (exclude_self && w == rec.query_word) continue;
            if (ranks_before(scores[w], static_cast<WordId>(w), scores[answer], answer)) ++rank;
        }
        result.ranks.push_back(rank <= kRankCutoff ? Rank(rank) : std::nullopt);
    }
    return result;
}

double mrr(std::span<const Rank> ranks) {
    if (ranks.empty()) throw std::invalid_argument("MRR of an empty rank list");
    double sum = 0.0;
    for (const auto& r : ranks)
        if (r && *r <= kRankCutoff) sum += 1.0 / static_cast<double>(*r);
    return sum / static_cast<double>(ranks.size());
}

double mp_at_k(std::span<const Rank> ranks, std::uint32_t k) {
    if (k < 1) throw std::invalid_argument("MP@K needs K >= 1");
    if (ranks.empty()) throw std::invalid_argument("MP@K of an empty rank list");
    std::size_t hits = 0;
    for (const auto& r : ranks)
        if (r && *r <= k) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::vector<std::pair<SliceLabel, double>> norm_series(WordId word, const std::vector<Matrix>& embeddings,
                                                       const std::vector<SliceLabel>& labels) {
    if (embeddings.size() != labels.size()) throw ShapeError("one label per embedding slice required");
    std::vector<std::pair<SliceLabel, double>> out;
    for (std::size_t t = 0; t < embeddings.size(); ++t) {
        if (word >= embeddings[t].rows()) throw std::out_of_range("norm_series: word index out of range");
        out.emplace_back(labels[t], embeddings[t].row(word).norm());
    }
    return out;
}

// --- loaders ----------------------------------------------------------------

namespace {

std::string trim(std::string s) {
    const auto start = s.find_first_not_of(" \t\r\n");
    if (start == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(start, end - start + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || split_csv(trim(line)) != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw FormatError(path.string() + ": expected header " + want);
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_csv(trim(line));
        if (cells.size() != header.size())
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields");
        rows.push_back(std::move(cells));
    }
    return rows;
}

SliceLabel to_label(const std::string& s, const std::filesystem::path& path) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw FormatError(path.string() + ": bad slice label '" + s + "'");
    return v;
}

}  // namespace

AlignmentTestset load_testset(const std::filesystem::path& path, const Vocabulary& vocab,
                              const std::vector<SliceLabel>& labels) {
    const auto rows = read_csv(path, {"query_word", "query_label", "target_label", "answer_word"});
    const std::unordered_set<SliceLabel> known(labels.begin(), labels.end());
    AlignmentTestset ts;
    ts.name = path.stem().string();
    for (const auto& row : rows) {
        const auto q = vocab.find(row[0]);
        const auto a = vocab.find(row[3]);
        const SliceLabel ql = to_label(row[1], path);
        const SliceLabel tl = to_label(row[2], path);
        if (!q || !a || !known.contains(ql) || !known.contains(tl)) {
            ++ts.dropped;
            continue;
        }
        ts.records.push_back({*q, ql, tl, *a});
    }
    if (ts.dropped > 0)
        warn(std::to_string(ts.dropped) + " testset rows dropped (word not in vocabulary or unknown label)");
    return ts;
}

LabeledItems load_triplets(const std::filesystem::path& path, const Vocabulary& vocab,
                           const std::vector<SliceLabel>& labels, const TripletFilter& filter) {
    struct Row {
        std::string word;
        SliceLabel label;
        std::string section;
        double strength;
    };
    std::vector<Row> rows;
    for (const auto& cells : read_csv(path, {"word", "label", "section", "strength"})) {
        double strength = 0;
        try {
            strength = std::stod(cells[3]);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": bad strength '" + cells[3] + "'");
        }
        if (strength >= filter.min_strength) rows.push_back({cells[0], to_label(cells[1], path), cells[2], strength});
    }
    const auto stronger = [](const Row& a, const Row& b) {
        if (a.strength != b.strength) return a.strength > b.strength;
        if (a.word != b.word) return a.word < b.word;
        return a.label < b.label;
    };
    if (filter.strongest_slice_only) {
        std::map<std::pair<std::string, std::string>, Row> best;
        for (auto& r : rows) {
            auto key = std::make_pair(r.word, r.section);
            auto it = best.find(key);
            if (it == best.end() || stronger(r, it->second)) best.insert_or_assign(key, r);
        }
        rows.clear();
        for (auto& [key, r] : best) rows.push_back(std::move(r));
    }
    std::map<std::string, std::vector<Row>> by_section;
    for (auto& r : rows) by_section[r.section].push_back(std::move(r));

    const std::unordered_set<SliceLabel> known(labels.begin(), labels.end());
    LabeledItems out;
    for (auto& [section, list] : by_section) {
        std::sort(list.begin(), list.end(), stronger);
        if (list.size() > filter.per_section_top) list.resize(filter.per_section_top);
        for (const auto& r : list) {
            const auto w = vocab.find(r.word);
            if (!w || !known.contains(r.label)) {
                ++out.dropped;
                continue;
            }
            out.items.push_back({*w, r.label, section});
        }
    }
    if (out.dropped > 0)
        warn(std::to_string(out.dropped) + " labeled triplets dropped (word not in vocabulary or unknown label)");
    return out;
}

}  // namespace tvec
