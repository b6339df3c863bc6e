#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace attnlens::model {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kClsId = 1;
inline constexpr TokenId kUnkId = 2;
inline constexpr TokenId kMaskId = 3;
inline constexpr std::size_t kNumSpecialTokens = 4;

// Inclusive range of token positions produced by one word.
struct WordSpan {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last - first + 1; }
    bool operator==(const WordSpan&) const = default;
};

struct TokenSequence {
    std::vector<TokenId> token_ids; // token_ids[0] == kClsId
    std::vector<WordSpan> word_spans;
    std::vector<std::string> raw_words;

    std::size_t length() const noexcept { return token_ids.size(); }
    std::size_t word_count() const noexcept { return word_spans.size(); }

    // Throws Error{input} if the CLS/span invariants do not hold.
    void validate() const;
};

// Word-level vocabulary. Ids 0..3 are reserved for PAD, CLS, UNK and MASK.
class Vocabulary {
public:
    Vocabulary();

    // Most frequent words first, ties broken alphabetically; at most
    // `max_words` regular entries (0 = unlimited).
    static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_words = 0,
                            std::size_t min_count = 1);
    static Vocabulary from_words(const std::vector<std::string>& words_in_id_order);

    TokenId id(std::string_view word) const;
    const std::string& word(TokenId id) const;
    std::size_t size() const noexcept { return words_.size(); }
    const std::vector<std::string>& words() const noexcept { return words_; }

private:
    void add(const std::string& word);

    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
};

// Lowercases and splits on anything that is not a letter, digit, apostrophe
// or non-ASCII byte.
std::vector<std::string> split_words(std::string_view text);
std::string normalize_text(std::string_view text);

// Prepends CLS and maps each word to one token (UNK when out of vocabulary).
// Texts longer than max_seq_len - 1 words are truncated. Empty text (no
// words after normalization) throws Error{input}.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_seq_len);

// Copy of `seq` with every token of the words where keep[w] is false
// replaced by `mask_id`.
TokenSequence mask_words(const TokenSequence& seq, const std::vector<bool>& keep, TokenId mask_id);

} // namespace attnlens::model
