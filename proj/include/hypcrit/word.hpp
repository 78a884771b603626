#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "hypcrit/errors.hpp"

namespace hypcrit {

/// A letter of the free-group alphabet: +i is generator i (1-based),
/// -i its inverse. Printed as 'a'+i-1 and 'A'+i-1 respectively.
using Letter = std::int8_t;

inline char letter_char(Letter l) {
    return l > 0 ? static_cast<char>('a' + l - 1) : static_cast<char>('A' - l - 1);
}

inline Letter char_letter(char c) {
    if (c >= 'a' && c <= 'z') return static_cast<Letter>(c - 'a' + 1);
    if (c >= 'A' && c <= 'Z') return static_cast<Letter>(-(c - 'A' + 1));
    throw ArgumentError(std::string("invalid word letter '") + c + "'");
}

/// Freely reduced word over {a_1..a_k}^{±1}. Every mutating operation keeps
/// the word reduced.
class Word {
public:
    Word() = default;
    explicit Word(std::vector<Letter> letters) {
        for (Letter l : letters) push_back(l);
    }

    /// Parses "abA" style words; "" and "id" denote the identity.
    static Word parse(std::string_view s) {
        Word w;
        if (s == "id") return w;
        for (char c : s) w.push_back(char_letter(c));
        return w;
    }

    std::size_t size() const { return letters_.size(); }
    bool empty() const { return letters_.empty(); }
    Letter operator[](std::size_t i) const { return letters_[i]; }
    Letter back() const { return letters_.back(); }
    const std::vector<Letter>& letters() const { return letters_; }

    /// Appends on the right, cancelling against the last letter if needed.
    void push_back(Letter l) {
        if (l == 0) throw ArgumentError("zero letter");
        if (!letters_.empty() && letters_.back() == -l)
            letters_.pop_back();
        else
            letters_.push_back(l);
    }
    void pop_back() { letters_.pop_back(); }

    Word inverse() const {
        Word w;
        w.letters_.reserve(letters_.size());
        for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) w.letters_.push_back(static_cast<Letter>(-*it));
        return w;
    }

    /// Length of the cyclic reduction.
    std::size_t cyclic_length() const {
        std::size_t i = 0, j = letters_.size();
        while (j - i >= 2 && letters_[i] == -letters_[j - 1]) { ++i; --j; }
        return j - i;
    }

    Word prefix(std::size_t n) const {
        Word w;
        w.letters_.assign(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
        return w;
    }

    std::string str() const {
        if (letters_.empty()) return "id";
        std::string s;
        s.reserve(letters_.size());
        for (Letter l : letters_) s.push_back(letter_char(l));
        return s;
    }

    /// Raw letter string; the identity is the empty string so that it sorts first.
    std::string key() const {
        std::string s;
        s.reserve(letters_.size());
        for (Letter l : letters_) s.push_back(letter_char(l));
        return s;
    }

    friend Word operator*(const Word& g, const Word& h) {
        Word r = g;
        for (Letter l : h.letters_) r.push_back(l);
        return r;
    }
    friend bool operator==(const Word&, const Word&) = default;
    /// Lexicographic order with letters ranked a < A < b < B < …
    friend bool operator<(const Word& a, const Word& b) {
        auto rank = [](Letter l) { return 2 * (std::abs(l) - 1) + (l < 0 ? 1 : 0); };
        return std::lexicographical_compare(a.letters_.begin(), a.letters_.end(), b.letters_.begin(), b.letters_.end(),
                                            [&](Letter x, Letter y) { return rank(x) < rank(y); });
    }

private:
    std::vector<Letter> letters_;
};

/// Number of letters shared at the start of two words.
inline std::size_t common_prefix(const std::vector<Letter>& a, const std::vector<Letter>& b) {
    std::size_t n = std::min(a.size(), b.size()), i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return i;
}

} // namespace hypcrit
