#pragma once

#include "attnlens/model/training.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace attnlens::model {

struct LabeledText {
    std::string text;
    int label = 0;

    bool operator==(const LabeledText&) const = default;
};

// JSON-lines corpus, one {"text": ..., "label": 0|1} object per line.
std::vector<LabeledText> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<LabeledText>& corpus);

std::vector<LabeledSequence> to_sequences(const std::vector<LabeledText>& corpus,
                                          const Vocabulary& vocab, std::size_t max_seq_len);

// Binary task whose label is the presence of one cue word among random
// filler words. Classes alternate so the corpus is balanced.
std::vector<LabeledText> keyword_corpus(std::size_t n, std::uint64_t seed,
                                        const std::string& cue = "excellent",
                                        std::size_t min_words = 6, std::size_t max_words = 14);

// Word pools for a two-label task: cue words that signal each class and
// neutral filler.
struct TaskLexicon {
    std::array<std::string, 2> labels;
    std::array<std::vector<std::string>, 2> cues;
    std::vector<std::string> fillers;

    // Class whose cue list contains `word`, or -1.
    int cue_class(const std::string& word) const;
};

// Lexicons for the three built-in experiments ("exp1" sentiment, "exp2"
// action/drama, "exp3" horror/comedy). Throws Error{not_found} otherwise.
TaskLexicon task_lexicon(const std::string& experiment_id);

// Texts of min_words..max_words words. Each carries more cues of its own
// class than of the other; the cue margin varies from text to text so
// classifier confidence varies too.
std::vector<LabeledText> cue_corpus(const TaskLexicon& lexicon, std::size_t n,
                                    std::size_t min_words, std::size_t max_words,
                                    std::uint64_t seed);

} // namespace attnlens::model
