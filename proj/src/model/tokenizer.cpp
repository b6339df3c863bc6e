#include "attnlens/model/tokenizer.hpp"

#include "attnlens/error.hpp"

#include <algorithm>
#include <map>

namespace attnlens::model {

namespace {

const char* const kSpecialNames[kNumSpecialTokens] = {"[PAD]", "[CLS]", "[UNK]", "[MASK]"};

bool is_word_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '\'' || c >= 0x80;
}

} // namespace

void TokenSequence::validate() const {
    if (token_ids.empty() || token_ids[0] != kClsId) {
        fail(ErrorKind::input, "token sequence must start with CLS");
    }
    if (raw_words.size() != word_spans.size()) {
        fail(ErrorKind::input, "raw_words and word_spans disagree in length");
    }
    std::size_t expected = 1;
    for (const auto& span : word_spans) {
        if (span.first != expected || span.last < span.first || span.last >= token_ids.size()) {
            fail(ErrorKind::input, "word spans must be ordered, contiguous and nonempty");
        }
        expected = span.last + 1;
    }
    if (expected != token_ids.size()) {
        fail(ErrorKind::input, "word spans do not cover every non-special token");
    }
}

Vocabulary::Vocabulary() {
    for (const char* name : kSpecialNames) {
        add(name);
    }
}

void Vocabulary::add(const std::string& word) {
    if (index_.contains(word)) {
        return;
    }
    index_.emplace(word, static_cast<TokenId>(words_.size()));
    words_.push_back(word);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t max_words,
                             std::size_t min_count) {
    std::map<std::string, std::size_t> counts;
    for (const auto& text : texts) {
        for (auto& w : split_words(text)) {
            ++counts[w];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary vocab;
    for (const auto& [word, count] : ranked) {
        if (count < min_count) {
            continue;
        }
        if (max_words != 0 && vocab.size() - kNumSpecialTokens >= max_words) {
            break;
        }
        vocab.add(word);
    }
    return vocab;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words_in_id_order) {
    if (words_in_id_order.size() < kNumSpecialTokens) {
        fail(ErrorKind::input, "vocabulary is missing the special tokens");
    }
    for (std::size_t i = 0; i < kNumSpecialTokens; ++i) {
        if (words_in_id_order[i] != kSpecialNames[i]) {
            fail(ErrorKind::input, "vocabulary special token mismatch at id " + std::to_string(i));
        }
    }
    Vocabulary vocab;
    for (std::size_t i = kNumSpecialTokens; i < words_in_id_order.size(); ++i) {
        if (vocab.index_.contains(words_in_id_order[i])) {
            fail(ErrorKind::input, "duplicate vocabulary entry '" + words_in_id_order[i] + "'");
        }
        vocab.add(words_in_id_order[i]);
    }
    return vocab;
}

TokenId Vocabulary::id(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
        fail(ErrorKind::input, "token id " + std::to_string(id) + " out of vocabulary");
    }
    return words_[static_cast<std::size_t>(id)];
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_char(c)) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    for (const auto& w : split_words(text)) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += w;
    }
    return out;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_seq_len) {
    if (max_seq_len < 2) {
        fail(ErrorKind::input, "max_seq_len must leave room for CLS and one word");
    }
    auto words = split_words(text);
    if (words.empty()) {
        fail(ErrorKind::input, "cannot tokenize empty text");
    }
    if (words.size() > max_seq_len - 1) {
        words.resize(max_seq_len - 1);
    }
    TokenSequence seq;
    seq.token_ids.reserve(words.size() + 1);
    seq.token_ids.push_back(kClsId);
    for (auto& w : words) {
        const std::size_t pos = seq.token_ids.size();
        seq.token_ids.push_back(vocab.id(w));
        seq.word_spans.push_back({pos, pos});
        seq.raw_words.push_back(std::move(w));
    }
    return seq;
}

TokenSequence mask_words(const TokenSequence& seq, const std::vector<bool>& keep, TokenId mask_id) {
    if (keep.size() != seq.word_count()) {
        fail(ErrorKind::dimension, "mask length does not match word count");
    }
    TokenSequence out = seq;
    for (std::size_t w = 0; w < keep.size(); ++w) {
        if (keep[w]) {
            continue;
        }
        const auto& span = seq.word_spans[w];
        for (std::size_t t = span.first; t <= span.last; ++t) {
            out.token_ids[t] = mask_id;
        }
    }
    return out;
}

} // namespace attnlens::model
