#include "tvec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

namespace tvec {

namespace fs = std::filesystem;

TimeSlicedCorpus::TimeSlicedCorpus(std::vector<CorpusSlice> slices) : slices_(std::move(slices)) {
    if (slices_.empty()) throw std::invalid_argument("corpus needs at least one time slice");
    for (std::size_t t = 1; t < slices_.size(); ++t)
        if (slices_[t].label <= slices_[t - 1].label)
            throw std::invalid_argument("slice labels must be strictly increasing");
}

std::vector<SliceLabel> TimeSlicedCorpus::labels() const {
    std::vector<SliceLabel> out;
    out.reserve(slices_.size());
    for (const auto& s : slices_) out.push_back(s.label);
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts)
    : words_(std::move(words)), counts_(std::move(counts)) {
    if (!counts_.empty() && counts_.size() != words_.size())
        throw ShapeError("vocabulary counts must match words");
    index_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (!index_.emplace(words_[i], static_cast<WordId>(i)).second)
            throw std::invalid_argument("duplicate vocabulary word: " + words_[i]);
    }
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

// Decodes one code point. A malformed sequence yields 0xFFFFFFFF and
// advances by one byte.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char c = byte(i);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        extra = 1;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        extra = 2;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        extra = 3;
        cp = c & 0x07;
    } else {
        ++i;
        return 0xFFFFFFFF;
    }
    for (int k = 1; k <= extra; ++k) {
        if (i + k >= s.size() || (byte(i + k) & 0xC0) != 0x80) {
            ++i;
            return 0xFFFFFFFF;
        }
        cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Approximate Unicode letter/digit test: ASCII alphanumerics plus every
// non-ASCII code point outside the punctuation, symbol and space blocks.
bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    if (cp == 0xFFFFFFFF) return false;
    if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, math
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp < 0x80) return cp;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 &&
        cp != 0x17F) {
        // Latin Extended-A alternates upper/lower, with a parity flip at 0x139..0x148 and 0x179..0x17E.
        const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (odd_upper ? (cp % 2 == 1) : (cp % 2 == 0)) return cp + 1;
        return cp;
    }
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

bool is_numeric(std::string_view token) {
    return !token.empty() &&
           std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

Document tokenize(std::string_view text, const StopwordSet& stopwords) {
    Document tokens;
    std::string current;
    const auto flush = [&] {
        if (current.empty()) return;
        if (!is_numeric(current) && !stopwords.contains(current)) tokens.push_back(current);
        current.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
        const char32_t cp = next_code_point(text, i);
        if (is_word_char(cp))
            append_utf8(current, to_lower(cp));
        else
            flush();
    }
    flush();
    return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary and counting

Vocabulary build_vocabulary(const TimeSlicedCorpus& corpus, std::uint64_t min_count) {
    if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
    std::unordered_map<std::string, std::uint64_t> totals;
    for (const auto& slice : corpus.slices())
        for (const auto& doc : slice.documents)
            for (const auto& tok : doc) ++totals[tok];

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [word, count] : totals)
        if (count >= min_count) kept.emplace_back(word, count);
    if (kept.empty())
        throw EmptyVocabularyError("no word reaches min_count=" + std::to_string(min_count));

    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> words;
    std::vector<std::uint64_t> counts;
    words.reserve(kept.size());
    counts.reserve(kept.size());
    for (auto& [w, c] : kept) {
        words.push_back(std::move(w));
        counts.push_back(c);
    }
    return Vocabulary(std::move(words), std::move(counts));
}

SliceStats count_cooccurrences(const std::vector<Document>& documents, const Vocabulary& vocab,
                               std::uint32_t window) {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    const std::size_t v = vocab.size();
    SliceStats stats;
    stats.window = window;
    stats.unigram.assign(v, 0);

    std::unordered_map<std::uint64_t, std::uint64_t> pairs;
    std::vector<std::int64_t> ids;
    for (const auto& doc : documents) {
        ids.clear();
        for (const auto& tok : doc) {
            const auto id = vocab.find(tok);
            ids.push_back(id ? static_cast<std::int64_t>(*id) : -1);
            if (id) ++stats.unigram[*id];
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0) continue;
            const std::size_t hi = std::min(ids.size(), i + window + 1);
            for (std::size_t j = i + 1; j < hi; ++j) {
                if (ids[j] < 0) continue;
                const auto a = static_cast<std::uint64_t>(ids[i]);
                const auto b = static_cast<std::uint64_t>(ids[j]);
                // (i, j) and (j, i) are both ordered pairs within the window.
                ++pairs[a * v + b];
                ++pairs[b * v + a];
            }
        }
    }
    for (auto u : stats.unigram) stats.total_tokens += u;

    std::vector<Triplet<std::uint64_t>> trip;
    trip.reserve(pairs.size());
    for (const auto& [key, count] : pairs)
        trip.push_back({static_cast<std::uint32_t>(key / v), static_cast<std::uint32_t>(key % v), count});
    stats.cooc = CsrMatrix<std::uint64_t>::from_triplets(v, std::move(trip));
    return stats;
}

SliceStats pool_stats(const std::vector<SliceStats>& slices) {
    if (slices.empty()) throw std::invalid_argument("nothing to pool");
    const std::size_t v = slices.front().vocab_size();
    SliceStats pooled;
    pooled.window = slices.front().window;
    pooled.unigram.assign(v, 0);
    std::vector<Triplet<std::uint64_t>> trip;
    for (const auto& s : slices) {
        if (s.vocab_size() != v) throw ShapeError("pooled slices disagree on vocabulary size");
        if (s.window != pooled.window) throw ShapeError("pooled slices disagree on window");
        for (std::size_t i = 0; i < v; ++i) pooled.unigram[i] += s.unigram[i];
        pooled.total_tokens += s.total_tokens;
        auto t = s.cooc.triplets();
        trip.insert(trip.end(), t.begin(), t.end());
    }
    pooled.cooc = CsrMatrix<std::uint64_t>::from_triplets(v, std::move(trip));
    return pooled;
}

SliceStats subsample_counts(const SliceStats& stats, double rate, std::uint64_t seed) {
    if (!(rate > 0.0) || rate > 1.0) throw std::invalid_argument("subsampling rate must lie in (0, 1]");
    if (rate == 1.0) return stats;

    const std::size_t v = stats.vocab_size();
    std::mt19937_64 rng(seed);
    std::vector<Triplet<std::uint64_t>> trip;
    for (std::size_t r = 0; r < v; ++r) {
        const auto cols = stats.cooc.row_cols(r);
        const auto vals = stats.cooc.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] < r) continue;
            std::binomial_distribution<std::uint64_t> draw(vals[k], rate);
            const std::uint64_t kept = draw(rng);
            if (kept == 0) continue;
            trip.push_back({static_cast<std::uint32_t>(r), cols[k], kept});
            if (cols[k] != r) trip.push_back({cols[k], static_cast<std::uint32_t>(r), kept});
        }
    }

    SliceStats out;
    out.window = stats.window;
    out.cooc = CsrMatrix<std::uint64_t>::from_triplets(v, std::move(trip));
    out.unigram.assign(v, 0);
    for (std::size_t i = 0; i < v; ++i) {
        const std::uint64_t u = stats.unigram[i];
        if (u == 0) continue;
        const std::uint64_t before = stats.cooc.row_sum(i);
        const std::uint64_t after = out.cooc.row_sum(i);
        const double ratio = before > 0 ? static_cast<double>(after) / static_cast<double>(before) : rate;
        auto scaled = static_cast<std::uint64_t>(std::llround(static_cast<double>(u) * ratio));
        if (after > 0) scaled = std::max<std::uint64_t>(scaled, 1);
        out.unigram[i] = scaled;
    }
    for (auto u : out.unigram) out.total_tokens += u;
    return out;
}

void validate_stats(const SliceStats& stats) {
    const std::size_t v = stats.vocab_size();
    if (stats.cooc.size() != v) throw ShapeError("co-occurrence matrix size differs from unigram length");
    std::uint64_t total = 0;
    for (auto u : stats.unigram) total += u;
    if (total != stats.total_tokens) throw FormatError("unigram counts do not sum to total_tokens");
    for (std::size_t r = 0; r < v; ++r) {
        for (auto c : stats.cooc.row_cols(r))
            if (stats.unigram[r] == 0 || stats.unigram[c] == 0)
                throw FormatError("co-occurrence recorded for a word with zero unigram count");
    }
    if (!stats.cooc.is_symmetric()) throw FormatError("co-occurrence matrix is not symmetric");
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SliceLabel parse_label(const std::string& text, const fs::path& where) {
    std::size_t used = 0;
    long long value = 0;
    try {
        value = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty())
        throw std::runtime_error("slice label is not an integer: " + where.string());
    return value;
}

TimeSlicedCorpus load_directory(const fs::path& root, const StopwordSet& stopwords) {
    std::map<SliceLabel, CorpusSlice> by_label;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const SliceLabel label = parse_label(entry.path().filename().string(), entry.path());
        std::vector<fs::path> files;
        for (const auto& f : fs::directory_iterator(entry.path()))
            if (f.is_regular_file()) files.push_back(f.path());
        std::sort(files.begin(), files.end());
        CorpusSlice slice;
        slice.label = label;
        for (const auto& f : files) slice.documents.push_back(tokenize(read_file(f), stopwords));
        if (!by_label.emplace(label, std::move(slice)).second)
            throw std::runtime_error("duplicate slice label in " + root.string());
    }
    if (by_label.empty()) throw std::runtime_error("no slice directories under " + root.string());
    std::vector<CorpusSlice> slices;
    for (auto& [label, s] : by_label) slices.push_back(std::move(s));
    return TimeSlicedCorpus(std::move(slices));
}

TimeSlicedCorpus load_jsonl(const fs::path& file, const StopwordSet& stopwords) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::map<SliceLabel, CorpusSlice> by_label;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!rec.contains("label") || !rec["label"].is_number_integer() || !rec.contains("text") ||
            !rec["text"].is_string())
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                     ": expected {\"label\": int, \"text\": string}");
        const SliceLabel label = rec["label"].get<SliceLabel>();
        auto& slice = by_label[label];
        slice.label = label;
        slice.documents.push_back(tokenize(rec["text"].get<std::string>(), stopwords));
    }
    if (by_label.empty()) throw std::runtime_error("no records in " + file.string());
    std::vector<CorpusSlice> slices;
    for (auto& [label, s] : by_label) slices.push_back(std::move(s));
    return TimeSlicedCorpus(std::move(slices));
}

}  // namespace

TimeSlicedCorpus load_corpus(const fs::path& path, const StopwordSet& stopwords) {
    if (!fs::exists(path)) throw std::runtime_error("corpus path does not exist: " + path.string());
    if (fs::is_directory(path)) return load_directory(path, stopwords);
    return load_jsonl(path, stopwords);
}

StopwordSet load_stopwords(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read stopword file " + path.string());
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        const auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        for (const auto& tok : tokenize(line.substr(start), {})) out.insert(tok);
    }
    return out;
}

}  // namespace tvec
