#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/error.hpp"
#include "concord/tensor.hpp"

namespace concord {

// --------------------------- tokenization ------------------------------

namespace detail {

// Decodes UTF-8 into codepoints; bytes that do not form a valid sequence
// are passed through as their own codepoints so no input can fail.
inline std::vector<std::uint32_t> decode_utf8(const std::string& s) {
    std::vector<std::uint32_t> cps;
    cps.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char b = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (b < 0x80) {
            cp = b;
            len = 1;
        } else if ((b & 0xE0) == 0xC0) {
            cp = b & 0x1F;
            len = 2;
        } else if ((b & 0xF0) == 0xE0) {
            cp = b & 0x0F;
            len = 3;
        } else if ((b & 0xF8) == 0xF0) {
            cp = b & 0x07;
            len = 4;
        } else {
            cps.push_back(b);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            cps.push_back(b);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char c = static_cast<unsigned char>(s[i + k]);
            if ((c & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (c & 0x3F);
        }
        if (!ok) {
            cps.push_back(b);
            ++i;
            continue;
        }
        cps.push_back(cp);
        i += len;
    }
    return cps;
}

inline void encode_utf8(std::uint32_t cp, std::string& out) {
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

inline bool is_space_cp(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_punct_cp(std::uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= '!' && cp <= '/') || (cp >= ':' && cp <= '@') ||
               (cp >= '[' && cp <= '`') || (cp >= '{' && cp <= '~');
    }
    // common Unicode punctuation: dashes, quotes, ellipsis, inverted marks
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    switch (cp) {
        case 0xA1: case 0xAB: case 0xBB: case 0xBF: case 0x2039: case 0x203A:
            return true;
        default:
            return false;
    }
}

inline std::uint32_t lower_cp(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    return cp;
}

}  // namespace detail

// Lowercases (ASCII), splits on Unicode whitespace, and splits leading and
// trailing punctuation of each word into separate one-character tokens.
// Interior punctuation (apostrophes, hyphens) stays inside the word.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::vector<std::uint32_t> word;
    auto flush_word = [&]() {
        if (word.empty()) return;
        std::size_t lead = 0;
        while (lead < word.size() && detail::is_punct_cp(word[lead])) ++lead;
        std::size_t trail = word.size();
        while (trail > lead && detail::is_punct_cp(word[trail - 1])) --trail;
        auto emit = [&](std::size_t from, std::size_t to) {
            std::string t;
            for (std::size_t i = from; i < to; ++i) detail::encode_utf8(word[i], t);
            tokens.push_back(std::move(t));
        };
        for (std::size_t i = 0; i < lead; ++i) emit(i, i + 1);
        if (trail > lead) emit(lead, trail);
        for (std::size_t i = trail; i < word.size(); ++i) emit(i, i + 1);
        word.clear();
    };
    for (std::uint32_t cp : detail::decode_utf8(text)) {
        if (detail::is_space_cp(cp)) {
            flush_word();
        } else {
            word.push_back(detail::lower_cp(cp));
        }
    }
    flush_word();
    return tokens;
}

// ------------------------- embedding table -----------------------------

// token -> dense vector, all of one fixed dimension. OOV handling is the
// caller's concern (embed_and_pad maps misses to zero rows).
struct EmbeddingTable {
    std::size_t dim = 300;
    std::unordered_map<std::string, std::vector<double>> entries;
    std::size_t duplicates_replaced = 0;  // load-time warning count

    const std::vector<double>* find(const std::string& token) const {
        auto it = entries.find(token);
        return it == entries.end() ? nullptr : &it->second;
    }
};

// Text format: one entry per line, `token v1 ... v_dim`, space separated.
// A line with the wrong component count is a parse error; duplicate tokens
// resolve last-wins with a warning count.
inline EmbeddingTable load_embeddings(const std::string& path, std::size_t dim) {
    if (dim == 0) throw ConfigError("load_embeddings: dim must be positive");
    std::ifstream in(path);
    if (!in) throw ParseError("load_embeddings: cannot open " + path);
    EmbeddingTable table;
    table.dim = dim;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<double> vec;
        vec.reserve(dim);
        double v;
        while (ls >> v) vec.push_back(v);
        if (!ls.eof()) {
            std::string tail;
            ls.clear();
            ls >> tail;
            throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": non-numeric component '" + tail + "'",
                             line_no);
        }
        if (vec.size() != dim)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(dim) + " components, got " +
                                 std::to_string(vec.size()),
                             line_no);
        auto [it, inserted] = table.entries.insert_or_assign(std::move(token), std::move(vec));
        (void)it;
        if (!inserted) ++table.duplicates_replaced;
    }
    return table;
}

// --------------------------- token window ------------------------------

// Fixed-length input to the recurrent encoder. Pre-padded: zero rows come
// first so the final recurrent state lands on real tokens.
struct TokenWindow {
    Tensor matrix;               // [maxlen x dim]
    std::size_t real_length = 0; // trailing rows holding real tokens
};

// Looks up each token (OOV -> zero row), keeps the LAST maxlen tokens of an
// over-long sentence, and left-pads with zero rows up to maxlen.
inline TokenWindow embed_and_pad(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table, std::size_t maxlen) {
    if (maxlen == 0) throw ConfigError("embed_and_pad: maxlen must be >= 1");
    TokenWindow w;
    w.matrix = Tensor::zeros({maxlen, table.dim});
    const std::size_t n = std::min(tokens.size(), maxlen);
    w.real_length = n;
    const std::size_t first_token = tokens.size() - n;  // tail of the sentence
    const std::size_t first_row = maxlen - n;
    for (std::size_t i = 0; i < n; ++i) {
        if (const std::vector<double>* vec = table.find(tokens[first_token + i])) {
            for (std::size_t j = 0; j < table.dim; ++j)
                w.matrix.at(first_row + i, j) = (*vec)[j];
        }
    }
    return w;
}

}  // namespace concord
