#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tvec/baselines.hpp"
#include "tvec/diagnostics.hpp"
#include "tvec/evaluation.hpp"
#include "tvec/io.hpp"
#include "tvec/seed.hpp"

namespace tvec::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// --- value parsing ----------------------------------------------------------

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw UsageError("invalid integer for " + key + ": '" + text + "'");
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double value = 0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(value))
        throw UsageError("invalid number for " + key + ": '" + text + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw UsageError("invalid boolean for " + key + ": '" + text + "'");
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

EmbeddingMode parse_mode(const std::string& text) {
    if (text == "average") return EmbeddingMode::kAverage;
    if (text == "u") return EmbeddingMode::kU;
    if (text == "w") return EmbeddingMode::kW;
    throw UsageError("embedding must be one of average, u, w (got '" + text + "')");
}

std::string mode_name(EmbeddingMode m) {
    switch (m) {
        case EmbeddingMode::kU:
            return "u";
        case EmbeddingMode::kW:
            return "w";
        default:
            return "average";
    }
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"corpus", [](RunConfig& c, const auto&, const auto& v) { c.corpus = v; }},
        {"stopwords", [](RunConfig& c, const auto&, const auto& v) { c.stopwords = v; }},
        {"out", [](RunConfig& c, const auto&, const auto& v) { c.out = v; }},
        {"min_count", [](RunConfig& c, const auto& k, const auto& v) { c.min_count = parse_integer<std::uint64_t>(k, v); }},
        {"window", [](RunConfig& c, const auto& k, const auto& v) { c.window = parse_integer<std::uint32_t>(k, v); }},
        {"method", [](RunConfig& c, const auto&, const auto& v) { c.method = v; }},
        {"dim", [](RunConfig& c, const auto& k, const auto& v) { c.solver.dim = parse_integer<std::size_t>(k, v); }},
        {"lambda", [](RunConfig& c, const auto& k, const auto& v) { c.solver.lambda = parse_real(k, v); }},
        {"tau", [](RunConfig& c, const auto& k, const auto& v) { c.solver.tau = parse_real(k, v); }},
        {"gamma", [](RunConfig& c, const auto& k, const auto& v) { c.solver.gamma = parse_real(k, v); }},
        {"epochs", [](RunConfig& c, const auto& k, const auto& v) { c.solver.epochs = parse_integer<std::uint32_t>(k, v); }},
        {"block_rows", [](RunConfig& c, const auto& k, const auto& v) { c.solver.block_rows = parse_integer<std::size_t>(k, v); }},
        {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.solver.seed = parse_integer<std::uint64_t>(k, v); }},
        {"init_scale", [](RunConfig& c, const auto& k, const auto& v) { c.solver.init_scale = parse_real(k, v); }},
        {"embedding", [](RunConfig& c, const auto&, const auto& v) { c.embedding = parse_mode(v); }},
        {"ppmi_shift", [](RunConfig& c, const auto& k, const auto& v) { c.ppmi_shift = parse_real(k, v); }},
        {"local_neighbours", [](RunConfig& c, const auto& k, const auto& v) { c.local_neighbours = parse_integer<std::size_t>(k, v); }},
        {"checkpoint", [](RunConfig& c, const auto& k, const auto& v) { c.checkpoint = parse_bool(k, v); }},
        {"testset", [](RunConfig& c, const auto&, const auto& v) { c.testset = v; }},
        {"triplets", [](RunConfig& c, const auto&, const auto& v) { c.triplets = v; }},
        {"min_strength", [](RunConfig& c, const auto& k, const auto& v) { c.min_strength = parse_real(k, v); }},
        {"per_section_top", [](RunConfig& c, const auto& k, const auto& v) { c.per_section_top = parse_integer<std::size_t>(k, v); }},
        {"kmeans_restarts", [](RunConfig& c, const auto& k, const auto& v) { c.kmeans_restarts = parse_integer<std::uint32_t>(k, v); }},
        {"kmeans_max_iters", [](RunConfig& c, const auto& k, const auto& v) { c.kmeans_max_iters = parse_integer<std::uint32_t>(k, v); }},
        {"rates",
         [](RunConfig& c, const auto& k, const auto& v) {
             c.rates.clear();
             for (const auto& item : split(v, ',')) c.rates.push_back(parse_real(k, item));
         }},
        {"slices", [](RunConfig& c, const auto&, const auto& v) { c.slices = v; }},
    };
    return table;
}

void validate(const RunConfig& c) {
    try {
        c.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    static const std::vector<std::string> methods{"dw2v", "sw2v", "tw2v", "aw2v"};
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
        throw UsageError("unknown method '" + c.method + "' (expected dw2v, sw2v, tw2v or aw2v)");
    if (c.window < 1) throw UsageError("window must be >= 1");
    if (c.min_count < 1) throw UsageError("min_count must be >= 1");
    if (c.local_neighbours < 1) throw UsageError("local_neighbours must be >= 1");
    if (c.per_section_top < 1) throw UsageError("per_section_top must be >= 1");
    if (c.kmeans_restarts < 1 || c.kmeans_max_iters < 1) throw UsageError("kmeans_restarts and kmeans_max_iters must be >= 1");
    if (c.ppmi_shift < 0) throw UsageError("ppmi_shift must be >= 0");
    if (c.out.empty()) throw UsageError("out must not be empty");
    if (c.rates.empty()) throw UsageError("rates must list at least one value");
    for (double r : c.rates)
        if (!(r > 0.0 && r <= 1.0)) throw UsageError("every rate must lie in (0, 1]");
    select_slices(c.slices, 1);
}

// --- output helpers ---------------------------------------------------------

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

Json config_json(const SolverConfig& c) {
    Json j;
    j["dim"] = c.dim;
    j["lambda"] = c.lambda;
    j["tau"] = c.tau;
    j["gamma"] = c.gamma;
    j["epochs"] = c.epochs;
    j["block_rows"] = c.block_rows;
    j["seed"] = c.seed;
    j["init_scale"] = c.init_scale;
    return j;
}

// --- artifacts --------------------------------------------------------------

struct Manifest {
    std::size_t vocab_size = 0;
    std::uint32_t window = 0;
    std::vector<SliceLabel> labels;
};

fs::path stats_path(const RunConfig& c, SliceLabel label) {
    return fs::path(c.out) / "stats" / (std::to_string(label) + ".tvco");
}
fs::path ppmi_path(const RunConfig& c, SliceLabel label) {
    return fs::path(c.out) / "ppmi" / (std::to_string(label) + ".tvpm");
}
fs::path method_dir(const RunConfig& c) { return fs::path(c.out) / c.method; }

void require_file(const fs::path& p, const std::string& hint) {
    if (!fs::exists(p)) throw UsageError("missing " + p.string() + " (" + hint + ")");
}

Manifest read_manifest(const RunConfig& c) {
    const fs::path p = fs::path(c.out) / "manifest.json";
    require_file(p, "run `tvec build` first");
    Json j;
    try {
        j = Json::parse(io::read_file(p));
        Manifest m;
        m.vocab_size = j.at("vocab_size").get<std::size_t>();
        m.window = j.at("window").get<std::uint32_t>();
        m.labels = j.at("labels").get<std::vector<SliceLabel>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

Vocabulary read_vocab(const RunConfig& c, const Manifest& m) {
    const fs::path p = fs::path(c.out) / "vocab.tsv";
    require_file(p, "run `tvec build` first");
    Vocabulary v = io::read_vocabulary(p);
    if (v.size() != m.vocab_size) throw FormatError(p.string() + ": vocabulary size does not match manifest");
    return v;
}

std::vector<SliceStats> read_all_stats(const RunConfig& c, const Manifest& m) {
    std::vector<SliceStats> out;
    for (SliceLabel label : m.labels) {
        const auto p = stats_path(c, label);
        require_file(p, "run `tvec build` first");
        out.push_back(io::read_stats(p));
        if (out.back().vocab_size() != m.vocab_size)
            throw FormatError(p.string() + ": vocabulary size does not match manifest");
    }
    return out;
}

PpmiSequence read_all_ppmi(const RunConfig& c, const Manifest& m) {
    std::vector<PpmiMatrix> ms;
    for (SliceLabel label : m.labels) {
        const auto p = ppmi_path(c, label);
        require_file(p, "run `tvec build` first");
        ms.push_back(io::read_ppmi(p));
        if (ms.back().vocab_size() != m.vocab_size || ms.back().label != label)
            throw FormatError(p.string() + ": does not match manifest");
    }
    return PpmiSequence(std::move(ms));
}

struct TrainedEmbeddings {
    std::string method;
    std::vector<Matrix> matrices;
    std::vector<SliceLabel> labels;
};

TrainedEmbeddings read_trained(const RunConfig& c, const Manifest& m) {
    const fs::path dir = method_dir(c);
    require_file(dir / "embeddings.tvem", "run `tvec train --method " + c.method + "` first");
    auto e = io::read_embeddings(dir / "embeddings.tvem");
    if (e.labels != m.labels) throw FormatError("embedding slice labels do not match the build manifest");
    for (const auto& mat : e.matrices)
        if (static_cast<std::size_t>(mat.rows()) != m.vocab_size)
            throw FormatError("embedding vocabulary size does not match the build manifest");
    return {c.method, std::move(e.matrices), std::move(e.labels)};
}

// Query vector for (word, query slice) when ranking in the target slice.
// Per-slice embeddings without a shared space are mapped with the local
// linear transform; the others use the word's own row.
QueryVectorFn query_function(const RunConfig& c, const std::vector<Matrix>& emb) {
    if (c.method != "tw2v") return {};
    const std::size_t k = c.local_neighbours;
    return [&emb, k](WordId word, std::size_t qs, std::size_t ts) -> Vector {
        if (qs == ts) return emb[qs].row(word).transpose();
        try {
            return local_linear_map(word, emb[qs], emb[ts], k);
        } catch (const DomainError& e) {
            warn(e.what());
            return Vector::Zero(emb[qs].cols());
        }
    };
}

void write_embedding_files(const fs::path& dir, const std::string& stem, const std::vector<Matrix>& mats,
                           const std::vector<SliceLabel>& labels, const Vocabulary& vocab) {
    const io::EmbeddingFile file{labels, mats};
    io::write_embeddings(dir / (stem + ".tvem"), file);
    io::write_file_atomic(dir / (stem + ".txt"), io::embeddings_to_text(file, vocab));
}

WordId lookup_word(const Vocabulary& vocab, const std::string& word) {
    if (const auto id = vocab.find(word)) return *id;
    std::string msg = "word '" + word + "' is not in the vocabulary";
    const auto near = suggest(word, vocab);
    if (!near.empty()) {
        msg += "; did you mean:";
        for (std::size_t i = 0; i < near.size(); ++i) msg += (i ? ", " : " ") + near[i];
        msg += "?";
    }
    throw LookupError(msg);
}

std::size_t lookup_slice(const std::vector<SliceLabel>& labels, SliceLabel label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
        std::string known;
        for (auto l : labels) known += (known.empty() ? "" : ", ") + std::to_string(l);
        throw LookupError("slice label " + std::to_string(label) + " not found (available: " + known + ")");
    }
    return static_cast<std::size_t>(it - labels.begin());
}

struct AlignmentScores {
    double mrr = 0;
    std::map<std::uint32_t, double> mp;
};

AlignmentScores score(const std::vector<Rank>& ranks) {
    AlignmentScores s;
    s.mrr = mrr(ranks);
    for (std::uint32_t k : {1u, 3u, 5u, 10u}) s.mp[k] = mp_at_k(ranks, k);
    return s;
}

Json mp_json(const AlignmentScores& s) {
    Json j;
    for (const auto& [k, v] : s.mp) j[std::to_string(k)] = v;
    return j;
}

// --- commands ---------------------------------------------------------------

struct Context {
    RunConfig config;
    std::ostream& out;
    std::ostream& err;
    bool quiet = false;
};

int cmd_build(Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.corpus.empty()) throw UsageError("corpus is required for build");
    if (!fs::exists(c.corpus)) throw UsageError("corpus path does not exist: " + c.corpus);
    StopwordSet stop;
    if (!c.stopwords.empty()) {
        if (!fs::exists(c.stopwords)) throw UsageError("stopword file does not exist: " + c.stopwords);
        stop = load_stopwords(c.stopwords);
    }
    const TimeSlicedCorpus corpus = load_corpus(c.corpus, stop);
    Vocabulary vocab;
    try {
        vocab = build_vocabulary(corpus, c.min_count);
    } catch (const EmptyVocabularyError& e) {
        throw UsageError(e.what());
    }

    fs::create_directories(fs::path(c.out) / "stats");
    fs::create_directories(fs::path(c.out) / "ppmi");
    io::write_vocabulary(fs::path(c.out) / "vocab.tsv", vocab);

    Json manifest;
    manifest["format_version"] = io::kFormatVersion;
    manifest["vocab_size"] = vocab.size();
    manifest["window"] = c.window;
    manifest["ppmi_shift"] = c.ppmi_shift;
    manifest["labels"] = corpus.labels();
    Json nnz = Json::array();

    ctx.out << "V=" << vocab.size() << " T=" << corpus.num_slices() << " window=" << c.window << "\n";
    ctx.out << std::left << std::setw(12) << "label" << std::setw(12) << "tokens" << std::setw(12) << "cooc_nnz"
            << "ppmi_nnz\n";
    for (const auto& slice : corpus.slices()) {
        const SliceStats stats = count_cooccurrences(slice.documents, vocab, c.window);
        const PpmiMatrix ppmi = build_ppmi(stats, slice.label, PpmiOptions{c.ppmi_shift});
        io::write_stats(stats_path(c, slice.label), stats);
        io::write_ppmi(ppmi_path(c, slice.label), ppmi);
        nnz.push_back(ppmi.values.nnz());
        ctx.out << std::setw(12) << slice.label << std::setw(12) << stats.total_tokens << std::setw(12)
                << stats.cooc.nnz() << ppmi.values.nnz() << "\n";
    }
    manifest["ppmi_nnz"] = nnz;
    io::write_file_atomic(fs::path(c.out) / "manifest.json", json_text(manifest));
    return kExitOk;
}

int cmd_train(Context& ctx) {
    const RunConfig& c = ctx.config;
    const Manifest m = read_manifest(c);
    const Vocabulary vocab = read_vocab(c, m);
    const fs::path dir = method_dir(c);
    fs::create_directories(dir);

    Json report;
    report["method"] = c.method;
    report["labels"] = m.labels;
    report["vocab_size"] = m.vocab_size;
    report["config"] = config_json(c.solver);

    std::vector<Matrix> emb;
    if (c.method == "dw2v") {
        const PpmiSequence Y = read_all_ppmi(c, m);
        TrainOptions opts;
        Json objectives = Json::array();
        opts.on_epoch = [&](const EpochEvent& ev) {
            objectives.push_back(ev.objective);
            if (!ctx.quiet)
                ctx.err << "epoch " << ev.epoch << "/" << c.solver.epochs << " objective " << std::setprecision(12)
                        << ev.objective << "\n";
        };
        if (c.checkpoint) opts.checkpoint = dir / "checkpoint.tvck";
        const EmbeddingSequence seq = train(Y, c.solver, opts);
        emb = final_embedding(seq, c.embedding);
        report["embedding"] = mode_name(c.embedding);
        report["objective"] = objectives;
    } else if (c.method == "sw2v") {
        const SliceStats pooled = pool_stats(read_all_stats(c, m));
        const Matrix single = train_static(pooled, c.solver, PpmiOptions{c.ppmi_shift});
        emb.assign(m.labels.size(), single);
    } else {
        const PpmiSequence Y = read_all_ppmi(c, m);
        const PerSliceEmbeddings per = train_per_slice(Y, c.solver);
        if (c.method == "aw2v") {
            write_embedding_files(dir, "per_slice", per.U, m.labels, vocab);
            emb = align_sequence(per);
        } else {
            emb = per.U;
            report["local_neighbours"] = c.local_neighbours;
        }
    }
    write_embedding_files(dir, "embeddings", emb, m.labels, vocab);
    io::write_file_atomic(dir / "train.json", json_text(report));
    ctx.out << "wrote " << c.method << "/embeddings.tvem (" << m.labels.size() << " slices, V=" << m.vocab_size
            << ", d=" << c.solver.dim << ")\n";
    return kExitOk;
}

struct QueryArgs {
    std::string word;
    SliceLabel label = 0;
    std::optional<SliceLabel> target;
    std::size_t k = 10;
    bool all_years = false;
    bool exclude_self = false;
};

int cmd_query(Context& ctx, const QueryArgs& q) {
    const RunConfig& c = ctx.config;
    const Manifest m = read_manifest(c);
    const Vocabulary vocab = read_vocab(c, m);
    const TrainedEmbeddings e = read_trained(c, m);
    if (q.k < 1) throw UsageError("k must be >= 1");
    const WordId word = lookup_word(vocab, q.word);
    const std::size_t qs = lookup_slice(e.labels, q.label);
    std::vector<std::size_t> targets;
    if (q.all_years) {
        for (std::size_t t = 0; t < e.labels.size(); ++t) targets.push_back(t);
    } else {
        targets.push_back(q.target ? lookup_slice(e.labels, *q.target) : qs);
    }
    const QueryVectorFn fn = query_function(c, e.matrices);
    std::unordered_set<WordId> exclude;
    if (q.exclude_self) exclude.insert(word);

    for (std::size_t ts : targets) {
        const Vector v = fn ? fn(word, qs, ts) : Vector(e.matrices[qs].row(word).transpose());
        if (v.squaredNorm() == 0.0)
            throw LookupError("'" + q.word + "' has a zero vector in slice " + std::to_string(q.label));
        const auto nn = nearest_neighbors({v.data(), static_cast<std::size_t>(v.size())}, e.matrices[ts], q.k, exclude);
        if (q.all_years) {
            ctx.out << e.labels[ts];
            for (const auto& n : nn) ctx.out << "\t" << vocab.word(n.word) << " (" << fixed(n.similarity) << ")";
            ctx.out << "\n";
        } else {
            ctx.out << "query " << q.word << "@" << q.label << " in " << e.labels[ts] << "\n";
            for (std::size_t i = 0; i < nn.size(); ++i)
                ctx.out << std::right << std::setw(3) << i + 1 << "  " << std::left << std::setw(24)
                        << vocab.word(nn[i].word) << fixed(nn[i].similarity) << "\n";
        }
    }
    return kExitOk;
}

int cmd_evaluate(Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.testset.empty() && c.triplets.empty()) throw UsageError("evaluate needs testset and/or triplets");
    if (!c.testset.empty() && !fs::exists(c.testset)) throw UsageError("testset does not exist: " + c.testset);
    if (!c.triplets.empty() && !fs::exists(c.triplets)) throw UsageError("triplet file does not exist: " + c.triplets);
    const Manifest m = read_manifest(c);
    const Vocabulary vocab = read_vocab(c, m);
    const TrainedEmbeddings e = read_trained(c, m);

    Json report;
    report["nmi"] = nullptr;
    report["f_beta"] = nullptr;
    report["mrr"] = nullptr;
    report["mp"] = nullptr;
    std::ostringstream text;
    text << "method " << c.method << "\n";

    if (!c.triplets.empty()) {
        const TripletFilter filter{c.min_strength, c.per_section_top, true};
        const LabeledItems items = load_triplets(c.triplets, vocab, e.labels, filter);
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < items.items.size(); ++i) {
            const auto& it = items.items[i];
            if (e.matrices[lookup_slice(e.labels, it.slice_label)].row(it.word).squaredNorm() > 0) keep.push_back(i);
        }
        if (keep.size() < items.items.size())
            warn(std::to_string(items.items.size() - keep.size()) + " labeled items have zero vectors and were skipped");
        if (keep.empty()) throw EmptyEvaluationError("no labeled items left after filtering " + c.triplets);

        std::map<std::string, std::uint32_t> section_id;
        for (std::size_t i : keep) section_id.emplace(items.items[i].section, 0);
        std::uint32_t next = 0;
        for (auto& [name, id] : section_id) id = next++;
        Matrix vectors(static_cast<Eigen::Index>(keep.size()), e.matrices.front().cols());
        std::vector<std::uint32_t> truth;
        for (std::size_t r = 0; r < keep.size(); ++r) {
            const auto& it = items.items[keep[r]];
            vectors.row(static_cast<Eigen::Index>(r)) = e.matrices[lookup_slice(e.labels, it.slice_label)].row(it.word);
            truth.push_back(section_id[it.section]);
        }

        Json nmi_j;
        Json f_j;
        text << "clusters  nmi      f_beta\n";
        for (std::uint32_t k : {10u, 15u, 20u}) {
            const std::string key = std::to_string(k);
            if (k > keep.size()) {
                warn("only " + std::to_string(keep.size()) + " labeled items; skipping K=" + key);
                nmi_j[key] = nullptr;
                f_j[key] = nullptr;
                text << std::left << std::setw(10) << k << "n/a      n/a\n";
                continue;
            }
            const KMeansOptions opts{c.kmeans_max_iters, c.kmeans_restarts};
            const Clustering cl = spherical_kmeans(vectors, k, derive_seed(c.solver.seed, "evaluate/kmeans/" + key), opts);
            const double a = nmi(truth, cl.assignment);
            const double f = f_beta(truth, cl.assignment);
            nmi_j[key] = a;
            f_j[key] = f;
            text << std::left << std::setw(10) << k << std::setw(9) << fixed(a) << fixed(f) << "\n";
        }
        report["nmi"] = nmi_j;
        report["f_beta"] = f_j;
    }

    if (!c.testset.empty()) {
        const AlignmentTestset ts = load_testset(c.testset, vocab, e.labels);
        if (ts.records.empty()) throw EmptyEvaluationError("no testset records left after filtering " + c.testset);
        const AlignmentResult res = run_alignment_test(ts, e.matrices, e.labels, query_function(c, e.matrices));
        if (res.ranks.empty()) throw EmptyEvaluationError("every testset record was skipped");
        const AlignmentScores s = score(res.ranks);
        report["mrr"] = s.mrr;
        report["mp"] = mp_json(s);
        text << "records " << res.ranks.size() << " (dropped " << ts.dropped << ", skipped " << res.skipped << ")\n";
        text << "mrr     " << fixed(s.mrr) << "\n";
        for (const auto& [k, v] : s.mp) text << std::left << std::setw(8) << ("mp@" + std::to_string(k)) << fixed(v) << "\n";
    }

    const fs::path path = method_dir(c) / "evaluation.json";
    io::write_file_atomic(path, json_text(report));
    ctx.out << text.str();
    return kExitOk;
}

int cmd_robustness(Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.testset.empty()) throw UsageError("robustness needs a testset");
    if (!fs::exists(c.testset)) throw UsageError("testset does not exist: " + c.testset);
    const Manifest m = read_manifest(c);
    const Vocabulary vocab = read_vocab(c, m);
    const std::vector<SliceStats> stats = read_all_stats(c, m);
    const AlignmentTestset ts = load_testset(c.testset, vocab, m.labels);
    if (ts.records.empty()) throw EmptyEvaluationError("no testset records left after filtering " + c.testset);
    const auto selected = select_slices(c.slices, m.labels.size());

    Json rows = Json::array();
    std::ostringstream text;
    text << std::left << std::setw(8) << "method" << std::setw(10) << "rate" << std::setw(9) << "mrr" << std::setw(9)
         << "mp@1" << std::setw(9) << "mp@3" << std::setw(9) << "mp@5" << "mp@10\n";
    for (double rate : c.rates) {
        std::vector<PpmiMatrix> ms;
        for (std::size_t t = 0; t < stats.size(); ++t) {
            const bool thin = std::find(selected.begin(), selected.end(), t) != selected.end();
            const SliceStats s =
                thin ? subsample_counts(stats[t], rate,
                                        derive_seed(c.solver.seed, "subsample/" + std::to_string(m.labels[t])))
                     : stats[t];
            ms.push_back(build_ppmi(s, m.labels[t], PpmiOptions{c.ppmi_shift}));
        }
        const PpmiSequence Y(std::move(ms));
        const auto dw = final_embedding(train(Y, c.solver), c.embedding);
        const auto aw = align_sequence(train_per_slice(Y, c.solver));
        for (const auto& [name, emb] : {std::pair<std::string, const std::vector<Matrix>*>{"dw2v", &dw},
                                         std::pair<std::string, const std::vector<Matrix>*>{"aw2v", &aw}}) {
            const AlignmentResult res = run_alignment_test(ts, *emb, m.labels);
            if (res.ranks.empty()) throw EmptyEvaluationError("every testset record was skipped");
            const AlignmentScores s = score(res.ranks);
            Json row;
            row["method"] = name;
            row["rate"] = rate;
            row["mrr"] = s.mrr;
            row["mp"] = mp_json(s);
            rows.push_back(row);
            std::ostringstream rate_text;
            rate_text << rate * 100 << "%";
            text << std::left << std::setw(8) << name << std::setw(10) << rate_text.str() << std::setw(9) << fixed(s.mrr);
            for (const auto& [k, v] : s.mp) text << (k == 10 ? std::setw(0) : std::setw(9)) << fixed(v);
            text << "\n";
        }
    }
    Json report;
    report["slices"] = c.slices;
    report["subsampled_labels"] = Json::array();
    for (auto t : selected) report["subsampled_labels"].push_back(m.labels[t]);
    report["rows"] = rows;
    io::write_file_atomic(fs::path(c.out) / "robustness.json", json_text(report));
    ctx.out << text.str();
    return kExitOk;
}

struct NormArgs {
    std::string words;
    std::string output;
};

int cmd_export_norms(Context& ctx, const NormArgs& a) {
    const RunConfig& c = ctx.config;
    const Manifest m = read_manifest(c);
    const Vocabulary vocab = read_vocab(c, m);
    const TrainedEmbeddings e = read_trained(c, m);
    if (a.words.empty()) throw UsageError("--words is required");
    std::ostringstream csv;
    csv << "word,label,norm\n";
    for (const auto& w : split(a.words, ',')) {
        if (w.empty()) continue;
        const WordId id = lookup_word(vocab, w);
        for (const auto& [label, norm] : norm_series(id, e.matrices, e.labels)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", norm);
            csv << w << "," << label << "," << buf << "\n";
        }
    }
    if (a.output.empty()) {
        ctx.out << csv.str();
    } else {
        io::write_file_atomic(a.output, csv.str());
    }
    return kExitOk;
}

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

}  // namespace

// --- public helpers ---------------------------------------------------------

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::size_t lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second) throw UsageError("config key '" + key + "' given twice");
    }
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, set] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

RunConfig make_run_config(const KeyValues& values) {
    RunConfig c;
    for (const auto& [key, value] : values) {
        const auto& table = setters();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
        if (it == table.end()) {
            std::string msg = "unknown config key '" + key + "'";
            std::size_t best = std::string::npos;
            std::string best_key;
            for (const auto& k : config_keys())
                if (const auto d = edit_distance(key, k); d < best) {
                    best = d;
                    best_key = k;
                }
            if (best <= 3) msg += " (did you mean '" + best_key + "'?)";
            throw UsageError(msg);
        }
        it->second(c, key, value);
    }
    validate(c);
    return c;
}

std::vector<std::size_t> select_slices(std::string_view selector, std::size_t num_slices) {
    std::vector<std::size_t> out;
    if (selector == "all") {
        for (std::size_t t = 0; t < num_slices; ++t) out.push_back(t);
        return out;
    }
    if (selector == "none") return out;
    const auto parts = split(selector, ':');
    if (parts.size() < 2 || parts.size() > 3 || parts[0] != "every")
        throw UsageError("slice selector must be all, none, every:N or every:N:OFFSET (got '" + std::string(selector) + "')");
    const auto n = parse_integer<std::size_t>("slices", parts[1]);
    const auto offset = parts.size() == 3 ? parse_integer<std::size_t>("slices", parts[2]) : 0;
    if (n < 1 || offset >= n) throw UsageError("slice selector needs N >= 1 and OFFSET < N");
    for (std::size_t t = offset; t < num_slices; t += n) out.push_back(t);
    return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::vector<std::string> suggest(std::string_view word, const Vocabulary& vocab, std::size_t count) {
    std::vector<std::pair<std::size_t, std::string>> scored;
    for (const auto& w : vocab.words()) scored.emplace_back(edit_distance(word, w), w);
    const auto n = std::min(count, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic temporal word embeddings", args.empty() ? "tvec" : args.front()};
    app.require_subcommand(1, 1);
    app.fallthrough();
    std::string config_path;
    bool quiet = false;
    app.add_option("--config", config_path, "key = value settings file");
    app.add_flag("--quiet", quiet, "suppress warnings and progress logs");

    std::map<std::string, std::string> flag_storage;
    std::vector<std::pair<std::string, CLI::Option*>> flag_options;
    const auto add_keys = [&](CLI::App* sub) {
        for (const auto& key : config_keys())
            flag_options.emplace_back(key, sub->add_option("--" + dashed(key), flag_storage[key]));
    };

    auto* build = app.add_subcommand("build", "count co-occurrences and build PPMI matrices");
    auto* train_cmd = app.add_subcommand("train", "train embeddings with the selected method");
    auto* query = app.add_subcommand("query", "nearest neighbours of a word in a slice");
    auto* evaluate = app.add_subcommand("evaluate", "clustering and alignment metrics");
    auto* robustness = app.add_subcommand("robustness", "alignment metrics under count subsampling");
    auto* norms = app.add_subcommand("export-norms", "embedding norm time series as CSV");
    for (auto* sub : {build, train_cmd, query, evaluate, robustness, norms}) add_keys(sub);

    QueryArgs qa;
    std::optional<SliceLabel> target;
    query->add_option("--word", qa.word, "query word")->required();
    query->add_option("--label", qa.label, "slice label of the query")->required();
    query->add_option("--target-label", target, "slice to search (default: the query slice)");
    query->add_option("--k", qa.k, "number of neighbours");
    query->add_flag("--all-years", qa.all_years, "search every slice, one row per slice");
    query->add_flag("--exclude-self", qa.exclude_self, "drop the query word from the results");

    NormArgs na;
    norms->add_option("--words", na.words, "comma-separated words")->required();
    norms->add_option("--output", na.output, "CSV destination (default: stdout)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("tvec");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    qa.target = target;

    WarningHandler previous = set_warning_handler([&](std::string_view msg) {
        if (!quiet) err << "warning: " << msg << "\n";
    });
    struct Restore {
        WarningHandler h;
        ~Restore() { set_warning_handler(h); }
    } restore{previous};

    try {
        KeyValues values;
        if (!config_path.empty()) {
            if (!fs::exists(config_path)) throw UsageError("config file does not exist: " + config_path);
            values = parse_key_values(io::read_file(config_path));
        }
        for (const auto& [key, opt] : flag_options)
            if (opt->count() > 0) values[key] = flag_storage[key];
        Context ctx{make_run_config(values), out, err, quiet};

        if (build->parsed()) return cmd_build(ctx);
        if (train_cmd->parsed()) return cmd_train(ctx);
        if (query->parsed()) return cmd_query(ctx, qa);
        if (evaluate->parsed()) return cmd_evaluate(ctx);
        if (robustness->parsed()) return cmd_robustness(ctx);
        if (norms->parsed()) return cmd_export_norms(ctx, na);
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const LookupError& e) {
        err << "error: " << e.what() << "\n";
        return kExitLookup;
    } catch (const EmptyEvaluationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitEmptyEvaluation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace tvec::cli
