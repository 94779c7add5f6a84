#include "tvec/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tvec::io {

namespace fs = std::filesystem;

namespace {

class ByteWriter {
public:
    void magic(const char (&m)[5]) { out_.append(m, 4); }

    template <class T>
    void put(T value) {
        static_assert(std::is_arithmetic_v<T>);
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
        const U bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }

    void matrix(const Matrix& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(m(r, c));
    }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class ByteReader {
public:
    ByteReader(const std::string& bytes, const char* what) : bytes_(bytes), what_(what) {}

    void expect_magic(const char (&m)[5]) {
        need(4);
        if (std::memcmp(bytes_.data() + pos_, m, 4) != 0)
            throw FormatError(std::string(what_) + ": bad magic, expected " + m);
        pos_ += 4;
    }

    template <class T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
        need(sizeof(U));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return std::bit_cast<T>(bits);
    }

    void version() {
        const auto v = get<std::uint32_t>();
        if (v != kFormatVersion)
            throw FormatError(std::string(what_) + ": unsupported version " + std::to_string(v));
    }

    Matrix matrix(std::size_t rows, std::size_t cols) {
        need(rows * cols * 8);
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>();
        return m;
    }

    // Guards element counts read from the header before allocating.
    void need_elements(std::uint64_t count, std::size_t width) {
        if (width != 0 && count > (bytes_.size() - pos_) / width)
            throw FormatError(std::string(what_) + ": truncated payload");
    }

    void finish() const {
        if (pos_ != bytes_.size()) throw FormatError(std::string(what_) + ": trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError(std::string(what_) + ": truncated file");
    }

    const std::string& bytes_;
    const char* what_;
    std::size_t pos_ = 0;
};

void put_config(ByteWriter& w, const SolverConfig& c) {
    w.put<std::uint64_t>(c.dim);
    w.put<double>(c.lambda);
    w.put<double>(c.tau);
    w.put<double>(c.gamma);
    w.put<std::uint32_t>(c.epochs);
    w.put<std::uint64_t>(c.block_rows);
    w.put<std::uint64_t>(c.seed);
    w.put<double>(c.init_scale);
}

SolverConfig get_config(ByteReader& r) {
    SolverConfig c;
    c.dim = r.get<std::uint64_t>();
    c.lambda = r.get<double>();
    c.tau = r.get<double>();
    c.gamma = r.get<double>();
    c.epochs = r.get<std::uint32_t>();
    c.block_rows = r.get<std::uint64_t>();
    c.seed = r.get<std::uint64_t>();
    c.init_scale = r.get<double>();
    return c;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- TVCO -------------------------------------------------------------------

std::string encode_stats(const SliceStats& stats) {
    ByteWriter w;
    w.magic("TVCO");
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint64_t>(stats.vocab_size());
    w.put<std::uint32_t>(stats.window);
    w.put<std::uint64_t>(stats.total_tokens);
    for (auto u : stats.unigram) w.put<std::uint64_t>(u);
    const auto trip = stats.cooc.triplets();
    w.put<std::uint64_t>(trip.size());
    for (const auto& t : trip) {
        w.put<std::uint32_t>(t.row);
        w.put<std::uint32_t>(t.col);
        w.put<std::uint64_t>(t.value);
    }
    return w.take();
}

SliceStats decode_stats(const std::string& bytes) {
    ByteReader r(bytes, "TVCO");
    r.expect_magic("TVCO");
    r.version();
    SliceStats s;
    const auto v = r.get<std::uint64_t>();
    s.window = r.get<std::uint32_t>();
    s.total_tokens = r.get<std::uint64_t>();
    r.need_elements(v, 8);
    s.unigram.resize(v);
    for (auto& u : s.unigram) u = r.get<std::uint64_t>();
    const auto nnz = r.get<std::uint64_t>();
    r.need_elements(nnz, 16);
    std::vector<Triplet<std::uint64_t>> trip(nnz);
    for (auto& t : trip) {
        t.row = r.get<std::uint32_t>();
        t.col = r.get<std::uint32_t>();
        t.value = r.get<std::uint64_t>();
    }
    r.finish();
    s.cooc = CsrMatrix<std::uint64_t>::from_triplets(v, std::move(trip));
    if (s.cooc.nnz() != nnz) throw FormatError("TVCO: duplicate or zero triplets");
    return s;
}

void write_stats(const fs::path& path, const SliceStats& stats) { write_file_atomic(path, encode_stats(stats)); }
SliceStats read_stats(const fs::path& path) { return decode_stats(read_file(path)); }

// --- TVPM -------------------------------------------------------------------

std::string encode_ppmi(const PpmiMatrix& m) {
    ByteWriter w;
    w.magic("TVPM");
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint64_t>(m.vocab_size());
    w.put<std::int64_t>(m.label);
    const auto trip = m.values.triplets();
    w.put<std::uint64_t>(trip.size());
    for (const auto& t : trip) {
        w.put<std::uint32_t>(t.row);
        w.put<std::uint32_t>(t.col);
        w.put<double>(t.value);
    }
    return w.take();
}

PpmiMatrix decode_ppmi(const std::string& bytes) {
    ByteReader r(bytes, "TVPM");
    r.expect_magic("TVPM");
    r.version();
    PpmiMatrix m;
    const auto v = r.get<std::uint64_t>();
    m.label = r.get<std::int64_t>();
    const auto nnz = r.get<std::uint64_t>();
    r.need_elements(nnz, 16);
    std::vector<Triplet<double>> trip(nnz);
    for (auto& t : trip) {
        t.row = r.get<std::uint32_t>();
        t.col = r.get<std::uint32_t>();
        t.value = r.get<double>();
    }
    r.finish();
    m.values = CsrMatrix<double>::from_triplets(v, std::move(trip));
    if (m.values.nnz() != nnz) throw FormatError("TVPM: duplicate or zero triplets");
    return m;
}

void write_ppmi(const fs::path& path, const PpmiMatrix& m) { write_file_atomic(path, encode_ppmi(m)); }
PpmiMatrix read_ppmi(const fs::path& path) { return decode_ppmi(read_file(path)); }

std::string ppmi_to_text(const PpmiMatrix& m) {
    std::string out;
    char buf[96];
    for (const auto& t : m.values.triplets()) {
        std::snprintf(buf, sizeof buf, "%u %u %.17g\n", t.row, t.col, t.value);
        out += buf;
    }
    return out;
}

// --- TVEM -------------------------------------------------------------------

std::string encode_embeddings(const EmbeddingFile& e) {
    if (e.labels.size() != e.matrices.size()) throw ShapeError("one label per embedding matrix required");
    const std::size_t v = e.matrices.empty() ? 0 : static_cast<std::size_t>(e.matrices.front().rows());
    const std::size_t d = e.matrices.empty() ? 0 : static_cast<std::size_t>(e.matrices.front().cols());
    for (const auto& m : e.matrices)
        if (static_cast<std::size_t>(m.rows()) != v || static_cast<std::size_t>(m.cols()) != d)
            throw ShapeError("embedding matrices differ in shape");
    ByteWriter w;
    w.magic("TVEM");
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint64_t>(v);
    w.put<std::uint64_t>(e.matrices.size());
    w.put<std::uint64_t>(d);
    for (auto l : e.labels) w.put<std::int64_t>(l);
    for (const auto& m : e.matrices) w.matrix(m);
    return w.take();
}

EmbeddingFile decode_embeddings(const std::string& bytes) {
    ByteReader r(bytes, "TVEM");
    r.expect_magic("TVEM");
    r.version();
    const auto v = r.get<std::uint64_t>();
    const auto t = r.get<std::uint64_t>();
    const auto d = r.get<std::uint64_t>();
    r.need_elements(t, 8);
    EmbeddingFile e;
    for (std::uint64_t i = 0; i < t; ++i) e.labels.push_back(r.get<std::int64_t>());
    for (std::uint64_t i = 0; i < t; ++i) e.matrices.push_back(r.matrix(v, d));
    r.finish();
    return e;
}

void write_embeddings(const fs::path& path, const EmbeddingFile& e) {
    write_file_atomic(path, encode_embeddings(e));
}
EmbeddingFile read_embeddings(const fs::path& path) { return decode_embeddings(read_file(path)); }

std::string embeddings_to_text(const EmbeddingFile& e, const Vocabulary& vocab) {
    const std::size_t v = e.matrices.empty() ? vocab.size() : static_cast<std::size_t>(e.matrices.front().rows());
    const std::size_t d = e.matrices.empty() ? 0 : static_cast<std::size_t>(e.matrices.front().cols());
    if (v != vocab.size()) throw ShapeError("embedding rows do not match vocabulary size");
    std::string out = std::to_string(v) + " " + std::to_string(e.matrices.size()) + " " + std::to_string(d) + "\n";
    char buf[64];
    for (std::size_t t = 0; t < e.matrices.size(); ++t) {
        const std::string label = std::to_string(e.labels[t]);
        for (std::size_t w = 0; w < v; ++w) {
            out += vocab.word(static_cast<WordId>(w));
            out += ' ';
            out += label;
            for (std::size_t k = 0; k < d; ++k) {
                std::snprintf(buf, sizeof buf, " %.9g", e.matrices[t](static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(k)));
                out += buf;
            }
            out += '\n';
        }
    }
    return out;
}

// --- TVCK -------------------------------------------------------------------

std::string encode_checkpoint(const Checkpoint& ck) {
    const auto& s = ck.state;
    ByteWriter w;
    w.magic("TVCK");
    w.put<std::uint32_t>(kFormatVersion);
    w.put<std::uint32_t>(ck.epochs_done);
    put_config(w, s.config);
    w.put<std::uint64_t>(s.vocab_size());
    w.put<std::uint64_t>(s.num_slices());
    for (auto l : s.labels) w.put<std::int64_t>(l);
    for (const auto& m : s.U) w.matrix(m);
    for (const auto& m : s.W) w.matrix(m);
    return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    ByteReader r(bytes, "TVCK");
    r.expect_magic("TVCK");
    r.version();
    Checkpoint ck;
    ck.epochs_done = r.get<std::uint32_t>();
    ck.state.config = get_config(r);
    const auto v = r.get<std::uint64_t>();
    const auto t = r.get<std::uint64_t>();
    r.need_elements(t, 8);
    for (std::uint64_t i = 0; i < t; ++i) ck.state.labels.push_back(r.get<std::int64_t>());
    const std::size_t d = ck.state.config.dim;
    for (std::uint64_t i = 0; i < t; ++i) ck.state.U.push_back(r.matrix(v, d));
    for (std::uint64_t i = 0; i < t; ++i) ck.state.W.push_back(r.matrix(v, d));
    r.finish();
    return ck;
}

// --- vocabulary -------------------------------------------------------------

void write_vocabulary(const fs::path& path, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out += vocab.word(static_cast<WordId>(i));
        out += '\t';
        out += std::to_string(vocab.counts().empty() ? 0 : vocab.counts()[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

Vocabulary read_vocabulary(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> words;
    std::vector<std::uint64_t> counts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            words.push_back(line);
            counts.push_back(0);
            continue;
        }
        words.push_back(line.substr(0, tab));
        counts.push_back(std::stoull(line.substr(tab + 1)));
    }
    return Vocabulary(std::move(words), std::move(counts));
}

}  // namespace tvec::io
