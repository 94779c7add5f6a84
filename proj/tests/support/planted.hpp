#pragma once

// Synthetic time-sliced corpus with two word communities and one planted
// semantic swap, used by the integration and acceptance suites.
//
// Each community has `topics_per_community` topics; every word belongs to a
// distinct triple of topics of its community. A document picks one topic and
// draws its tokens from that topic's members (plus uniform background noise).
// From slice T/2 on, the probe word (community A) and its partner
// (community B) exchange topic triples.

#include <cstdint>
#include <string>
#include <vector>

#include "tvec/corpus.hpp"
#include "tvec/evaluation.hpp"

namespace tvec::testing {

struct PlantedSpec {
    std::size_t num_slices = 8;
    std::size_t words_per_community = 150;
    std::size_t topics_per_community = 12;
    std::size_t docs_per_slice = 600;
    std::size_t doc_length = 12;
    double noise = 0.1;
    std::uint64_t seed = 1;
};

struct PlantedCorpus {
    TimeSlicedCorpus corpus;
    std::vector<std::string> words;  // all generated words, w000 ... w299
    std::string probe;
    std::string partner;
    std::size_t shift_slice = 0;  // first slice index after the swap
};

PlantedCorpus make_planted_corpus(const PlantedSpec& spec);

// Cross-time equivalences: every word maps to itself across slices, except
// that probe-before maps to partner-after (and vice versa) across the swap.
// Rows are (query_word, query_label, target_label, answer_word) strings.
struct EquivalenceRow {
    std::string query_word;
    SliceLabel query_label;
    SliceLabel target_label;
    std::string answer_word;
};
std::vector<EquivalenceRow> planted_equivalences(const PlantedCorpus& planted);

AlignmentTestset to_testset(const std::vector<EquivalenceRow>& rows, const Vocabulary& vocab);

void write_corpus_directory(const PlantedCorpus& planted, const std::string& root);

}  // namespace tvec::testing
