#include "attnlens/model/corpus.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace attnlens::model {

using nlohmann::json;

namespace {

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "the",     "a",       "film",      "movie",   "story",    "scene",  "actor",   "plot",
        "and",     "of",      "to",        "it",      "was",      "is",     "this",    "that",
        "with",    "for",     "on",        "as",      "director", "cast",   "camera",  "music",
        "ending",  "minutes", "character", "script",  "about",    "from",   "after",   "before",
        "some",    "there",   "when",      "while",   "which",    "his",    "her",     "their",
        "city",    "night",   "family",    "house",   "road",     "time",   "year",    "people",
        "then",    "again",   "also",      "only",    "very",     "quite",  "rather",  "first",
        "second",  "last",    "between",   "through", "into",     "around", "version", "sequel"};
    return words;
}

const std::vector<std::string>& keyword_fillers() {
    static const std::vector<std::string> words = {
        "the",  "a",     "film", "movie", "story", "scene", "actor", "plot",  "and",   "of",
        "to",   "it",    "was",  "is",    "this",  "that",  "with",  "for",   "on",    "as",
        "city", "night", "road", "time",  "year",  "house", "music", "first", "again", "then"};
    return words;
}

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<std::size_t>(rng.index(pool.size()))];
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += w;
    }
    return out;
}

} // namespace

std::vector<LabeledText> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::io, "cannot read corpus " + path.string());
    }
    std::vector<LabeledText> corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            LabeledText t{j.at("text").get<std::string>(), j.at("label").get<int>()};
            if (t.label != 0 && t.label != 1) {
                fail(ErrorKind::input, "label must be 0 or 1");
            }
            corpus.push_back(std::move(t));
        } catch (const json::exception& e) {
            fail(ErrorKind::input, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            fail(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return corpus;
}

void write_corpus(const std::filesystem::path& path, const std::vector<LabeledText>& corpus) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::io, "cannot write corpus " + path.string());
    }
    for (const auto& t : corpus) {
        json j;
        j["text"] = t.text;
        j["label"] = t.label;
        out << j.dump() << '\n';
    }
}

std::vector<LabeledSequence> to_sequences(const std::vector<LabeledText>& corpus,
                                          const Vocabulary& vocab, std::size_t max_seq_len) {
    std::vector<LabeledSequence> out;
    out.reserve(corpus.size());
    for (const auto& t : corpus) {
        out.push_back({tokenize(t.text, vocab, max_seq_len), t.label});
    }
    return out;
}

std::vector<LabeledText> keyword_corpus(std::size_t n, std::uint64_t seed, const std::string& cue,
                                        std::size_t min_words, std::size_t max_words) {
    if (min_words < 1 || max_words < min_words) {
        fail(ErrorKind::input, "invalid word-count range");
    }
    Rng rng(seed);
    const auto& pool = keyword_fillers();
    std::vector<LabeledText> corpus;
    corpus.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const std::size_t len = min_words + rng.index(max_words - min_words + 1);
        std::vector<std::string> words;
        for (std::size_t w = 0; w < len; ++w) {
            words.push_back(pick(rng, pool));
        }
        if (label == 1) {
            words[rng.index(len)] = cue;
        }
        corpus.push_back({join(words), label});
    }
    return corpus;
}

int TaskLexicon::cue_class(const std::string& word) const {
    for (int c = 0; c < 2; ++c) {
        const auto& list = cues[static_cast<std::size_t>(c)];
        if (std::find(list.begin(), list.end(), word) != list.end()) {
            return c;
        }
    }
    return -1;
}

TaskLexicon task_lexicon(const std::string& experiment_id) {
    TaskLexicon lex;
    lex.fillers = filler_words();
    if (experiment_id == "exp1") {
        lex.labels = {"positive", "negative"};
        lex.cues = {std::vector<std::string>{"great", "wonderful", "excellent", "brilliant",
                                             "superb", "loved", "delightful", "masterpiece"},
                    std::vector<std::string>{"awful", "terrible", "boring", "worst", "dull",
                                             "waste", "horrible", "mess"}};
    } else if (experiment_id == "exp2") {
        lex.labels = {"action", "drama"};
        lex.cues = {std::vector<std::string>{"explosion", "chase", "fight", "gun", "mission",
                                             "hero", "battle", "stunt"},
                    std::vector<std::string>{"grief", "marriage", "tears", "memory", "illness",
                                             "divorce", "letter", "funeral"}};
    } else if (experiment_id == "exp3") {
        lex.labels = {"horror", "comedy"};
        lex.cues = {std::vector<std::string>{"ghost", "blood", "scream", "haunted", "demon",
                                             "killer", "corpse", "nightmare"},
                    std::vector<std::string>{"hilarious", "joke", "laugh", "funny", "prank",
                                             "wedding", "silly", "comic"}};
    } else {
        fail(ErrorKind::not_found, "no built-in lexicon for experiment '" + experiment_id + "'");
    }
    return lex;
}

std::vector<LabeledText> cue_corpus(const TaskLexicon& lexicon, std::size_t n,
                                    std::size_t min_words, std::size_t max_words,
                                    std::uint64_t seed) {
    if (min_words < 6 || max_words < min_words) {
        fail(ErrorKind::input, "cue corpus needs at least 6 words per text");
    }
    Rng rng(seed);
    std::vector<LabeledText> corpus;
    corpus.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const std::size_t len = min_words + rng.index(max_words - min_words + 1);
        const std::size_t own = 1 + rng.index(4);   // 1..4 cues of the label
        const std::size_t other = rng.index(own);   // fewer cues of the other class
        std::vector<std::string> words;
        for (std::size_t w = 0; w < len; ++w) {
            words.push_back(pick(rng, lexicon.fillers));
        }
        std::vector<std::size_t> slots(len);
        for (std::size_t s = 0; s < len; ++s) {
            slots[s] = s;
        }
        rng.shuffle(std::span<std::size_t>(slots));
        std::size_t next = 0;
        for (std::size_t c = 0; c < own; ++c) {
            words[slots[next++]] = pick(rng, lexicon.cues[static_cast<std::size_t>(label)]);
        }
        for (std::size_t c = 0; c < other; ++c) {
            words[slots[next++]] = pick(rng, lexicon.cues[static_cast<std::size_t>(1 - label)]);
        }
        corpus.push_back({join(words), label});
    }
    return corpus;
}

} // namespace attnlens::model
