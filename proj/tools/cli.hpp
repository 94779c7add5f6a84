#pragma once

// Command-line front end: build / train / query / evaluate / robustness /
// export-norms. Settings come from a "key = value" config file and from
// flags of the same name (dashes for underscores); flags win.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/solver.hpp"

namespace tvec::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,
    kExitLookup = 3,
    kExitEmptyEvaluation = 4,
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyEvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string corpus;
    std::string stopwords;
    std::string out = "tvec_out";
    std::uint64_t min_count = 5;
    std::uint32_t window = 5;
    std::string method = "dw2v";  // dw2v | sw2v | tw2v | aw2v
    SolverConfig solver;
    EmbeddingMode embedding = EmbeddingMode::kAverage;
    double ppmi_shift = 0.0;
    std::size_t local_neighbours = 30;
    bool checkpoint = false;
    std::string testset;
    std::string triplets;
    double min_strength = 0.35;
    std::size_t per_section_top = 200;
    std::uint32_t kmeans_restarts = 10;
    std::uint32_t kmeans_max_iters = 100;
    std::vector<double> rates{1.0, 0.1, 0.01, 0.001};
    std::string slices = "every:3";
};

using KeyValues = std::map<std::string, std::string>;

// '#' starts a comment; blank lines are ignored. Throws UsageError on
// malformed lines or duplicate keys.
KeyValues parse_key_values(std::string_view text);

// Throws UsageError on unknown keys or invalid values.
RunConfig make_run_config(const KeyValues& values);

// All recognised config keys, in a fixed order.
const std::vector<std::string>& config_keys();

// Slice indices picked by "all", "none", "every:N" or "every:N:OFFSET"
// (indices t with t % N == OFFSET).
std::vector<std::size_t> select_slices(std::string_view selector, std::size_t num_slices);

std::size_t edit_distance(std::string_view a, std::string_view b);

// Up to `count` vocabulary words closest to `word` by edit distance.
std::vector<std::string> suggest(std::string_view word, const Vocabulary& vocab, std::size_t count = 3);

// args[0] is the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvec::cli
