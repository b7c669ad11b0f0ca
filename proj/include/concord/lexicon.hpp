#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/error.hpp"
#include "concord/tensor.hpp"

namespace concord {

// Any single-channel lexicon registered under this name plays the role of
// the negation word list; its match count is the negation-word feature.
inline constexpr const char* kNegationLexiconName = "negation";

// Named map from lowercase token to a fixed vector of affect channels.
struct Lexicon {
    std::string name;
    std::vector<std::string> channel_names;
    std::unordered_map<std::string, std::vector<double>> entries;
    std::size_t duplicates_replaced = 0;

    std::size_t channels() const { return channel_names.size(); }
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

inline std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c += 32;
    return s;
}

inline double parse_real(const std::string& s, const std::string& where, std::size_t line_no) {
    if (s.empty()) throw ParseError(where + ": empty value", line_no);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw ParseError(where + ": non-numeric value '" + s + "'", line_no);
    return v;
}

inline std::string file_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

// Unified lexicon TSV: a `#channels<TAB>name1<TAB>...` header, then one
// `token<TAB>v1<TAB>...` row per entry. Other `#` lines are comments.
// Tokens are lowercased on load; duplicates resolve last-wins.
inline Lexicon load_lexicon(const std::string& path, std::string name = "") {
    std::ifstream in(path);
    if (!in) throw ParseError("load_lexicon: cannot open " + path);
    Lexicon lex;
    lex.name = name.empty() ? detail::file_stem(path) : std::move(name);
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        if (line[0] == '#') {
            std::vector<std::string> fields = detail::split_tabs(line);
            if (fields[0] == "#channels") {
                if (have_header) throw ParseError(where + ": duplicate #channels header", line_no);
                if (fields.size() < 2)
                    throw ParseError(where + ": #channels header declares no channels", line_no);
                lex.channel_names.assign(fields.begin() + 1, fields.end());
                have_header = true;
            }
            continue;  // comment
        }
        if (!have_header)
            throw ParseError(where + ": data row before #channels header", line_no);
        std::vector<std::string> fields = detail::split_tabs(line);
        if (fields.size() != lex.channels() + 1)
            throw ParseError(where + ": expected " + std::to_string(lex.channels()) +
                                 " values, got " + std::to_string(fields.size() - 1),
                             line_no);
        std::vector<double> values(lex.channels());
        for (std::size_t i = 0; i < lex.channels(); ++i)
            values[i] = detail::parse_real(fields[i + 1], where, line_no);
        auto [it, inserted] =
            lex.entries.insert_or_assign(detail::ascii_lower(fields[0]), std::move(values));
        (void)it;
        if (!inserted) ++lex.duplicates_replaced;
    }
    if (!have_header) throw ParseError(path + ": missing #channels header");
    return lex;
}

// One feature slot: which lexicon, channel, and aggregate it holds.
struct LexFeatureDescriptor {
    std::string lexicon;
    std::string channel;
    std::string aggregator;  // count | sum | mean | max

    std::string key() const { return lexicon + "/" + channel + "/" + aggregator; }
};

// The fixed feature layout for one lexicon configuration; identical for
// every sentence featurized under it.
struct LexFeatureLayout {
    std::vector<LexFeatureDescriptor> slots;

    std::size_t dim() const { return slots.size(); }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        out.reserve(slots.size());
        for (const auto& s : slots) out.push_back(s.key());
        return out;
    }
};

inline constexpr const char* kAggregatorNames[4] = {"count", "sum", "mean", "max"};

// An ordered collection of lexicons; the order fixes the feature layout.
struct LexiconSet {
    std::vector<Lexicon> lexicons;
    std::shared_ptr<const LexFeatureLayout> layout_ptr;

    static LexiconSet from(std::vector<Lexicon> lexicons) {
        LexiconSet set;
        set.lexicons = std::move(lexicons);
        auto layout = std::make_shared<LexFeatureLayout>();
        for (const Lexicon& lex : set.lexicons)
            for (const std::string& channel : lex.channel_names)
                for (const char* agg : kAggregatorNames)
                    layout->slots.push_back({lex.name, channel, agg});
        set.layout_ptr = std::move(layout);
        return set;
    }

    const LexFeatureLayout& layout() const { return *layout_ptr; }
    std::size_t dim() const { return layout_ptr ? layout_ptr->dim() : 0; }
};

struct LexFeatureVector {
    std::vector<double> values;
    std::shared_ptr<const LexFeatureLayout> layout;

    Tensor as_tensor() const { return Tensor::vector_of(values); }
};

// Bag-of-words aggregates per lexicon channel: match count, sum, mean and
// max over the channel values of matched tokens (mean and max are 0 when
// nothing matches). Tokens must already be lowercase.
inline LexFeatureVector featurize(const std::vector<std::string>& tokens, const LexiconSet& set) {
    LexFeatureVector out;
    out.layout = set.layout_ptr;
    out.values.reserve(set.dim());
    for (const Lexicon& lex : set.lexicons) {
        std::vector<const std::vector<double>*> matches;
        for (const std::string& token : tokens) {
            auto it = lex.entries.find(token);
            if (it != lex.entries.end()) matches.push_back(&it->second);
        }
        const double count = static_cast<double>(matches.size());
        for (std::size_t c = 0; c < lex.channels(); ++c) {
            double sum = 0.0, mx = 0.0;
            bool first = true;
            for (const auto* value : matches) {
                sum += (*value)[c];
                mx = first ? (*value)[c] : std::max(mx, (*value)[c]);
                first = false;
            }
            const double mean = matches.empty() ? 0.0 : sum / count;
            out.values.push_back(count);
            out.values.push_back(sum);
            out.values.push_back(mean);
            out.values.push_back(mx);
        }
    }
    return out;
}

}  // namespace concord
