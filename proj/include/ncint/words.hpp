#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ncint/errors.hpp"

namespace ncint {

// A word over the alphabet {1..N}: an element of the free semigroup with N
// generators. The empty word is the identity. Words index the levels of the
// Fock-type grading used throughout: level k holds the N^k words of length k,
// ordered first-letter-major, so that level k is the concatenation of the
// blocks [1*(level k-1), 2*(level k-1), ..., N*(level k-1)].
class Word {
public:
    Word() = default;
    explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}
    Word(std::initializer_list<int> letters) : letters_(letters) {}

    int length() const { return static_cast<int>(letters_.size()); }
    bool empty() const { return letters_.empty(); }
    int letter(int i) const { return letters_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& letters() const { return letters_; }

    bool valid_for(int alphabet) const {
        for (int a : letters_)
            if (a < 1 || a > alphabet) return false;
        return true;
    }

    friend bool operator==(const Word& a, const Word& b) { return a.letters_ == b.letters_; }
    friend bool operator!=(const Word& a, const Word& b) { return !(a == b); }
    friend bool operator<(const Word& a, const Word& b) { return a.letters_ < b.letters_; }

    std::string str() const {
        if (letters_.empty()) return "e";
        std::string s;
        for (std::size_t i = 0; i < letters_.size(); ++i) {
            if (i > 0 && has_wide_letter()) s.push_back('.');
            s += std::to_string(letters_[i]);
        }
        return s;
    }

    friend std::ostream& operator<<(std::ostream& os, const Word& w) { return os << w.str(); }

private:
    bool has_wide_letter() const {
        for (int a : letters_)
            if (a > 9) return true;
        return false;
    }

    std::vector<int> letters_;
};

// Position of a word inside the fixed enumeration: (length, offset) with
// offset in [0, N^length).
struct LevelIndex {
    int level = 0;
    std::int64_t offset = 0;

    friend bool operator==(const LevelIndex& a, const LevelIndex& b) {
        return a.level == b.level && a.offset == b.offset;
    }
};

inline std::int64_t pow_i64(int base, int exp) {
    std::int64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

inline Word concat(int letter, const Word& tail) {
    std::vector<int> ls;
    ls.reserve(static_cast<std::size_t>(tail.length()) + 1);
    ls.push_back(letter);
    ls.insert(ls.end(), tail.letters().begin(), tail.letters().end());
    return Word(std::move(ls));
}

inline Word concat(const Word& head, const Word& tail) {
    std::vector<int> ls = head.letters();
    ls.insert(ls.end(), tail.letters().begin(), tail.letters().end());
    return Word(std::move(ls));
}

// All N^k words of length k, first-letter-major. enumerate_words(N, k) equals
// [concat(j, t) for j in 1..N for t in enumerate_words(N, k-1)]; every block
// formula in the library indexes its sub-blocks by this order.
inline std::vector<Word> enumerate_words(int alphabet, int length) {
    if (alphabet < 0 || length < 0)
        throw invalid_word_error("enumerate_words: negative alphabet or length");
    if (alphabet == 0 && length > 0)
        throw invalid_word_error("enumerate_words: empty alphabet with positive length");
    std::vector<Word> level{Word{}};
    for (int k = 1; k <= length; ++k) {
        std::vector<Word> next;
        next.reserve(static_cast<std::size_t>(pow_i64(alphabet, k)));
        for (int j = 1; j <= alphabet; ++j)
            for (const Word& t : level) next.push_back(concat(j, t));
        level = std::move(next);
    }
    return level;
}

// Offset of w inside its level: the base-N number with digits (letter-1),
// most significant digit first.
inline LevelIndex word_index(const Word& w, int alphabet) {
    if (!w.valid_for(alphabet))
        throw invalid_word_error("word_index: letter out of range for alphabet " +
                                 std::to_string(alphabet) + " in word " + w.str());
    std::int64_t offset = 0;
    for (int a : w.letters()) offset = offset * alphabet + (a - 1);
    return LevelIndex{w.length(), offset};
}

inline Word index_word(const LevelIndex& idx, int alphabet) {
    if (idx.level < 0 || idx.offset < 0 || (idx.level > 0 && alphabet < 1) ||
        idx.offset >= pow_i64(alphabet, idx.level))
        throw invalid_word_error("index_word: offset out of range");
    std::vector<int> letters(static_cast<std::size_t>(idx.level));
    std::int64_t rem = idx.offset;
    for (int i = idx.level - 1; i >= 0; --i) {
        letters[static_cast<std::size_t>(i)] = static_cast<int>(rem % alphabet) + 1;
        rem /= alphabet;
    }
    return Word(std::move(letters));
}

// w = k*tail with k the first letter.
inline std::pair<int, Word> split_first(const Word& w) {
    if (w.empty()) throw invalid_word_error("split_first: empty word has no first letter");
    std::vector<int> tail(w.letters().begin() + 1, w.letters().end());
    return {w.letter(0), Word(std::move(tail))};
}

// Number of words of length <= depth, i.e. 1 + N + ... + N^depth.
inline std::int64_t words_up_to(int alphabet, int depth) {
    std::int64_t total = 0;
    for (int k = 0; k <= depth; ++k) total += pow_i64(alphabet, k);
    return total;
}

} // namespace ncint
