#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "concord/error.hpp"
#include "concord/tensor.hpp"

namespace concord {

// ------------------------------ labels ---------------------------------

// Class indices are fixed: prediction ties break toward the lowest index.
enum class Label : int { agree = 0, disagree = 1, none = 2 };

inline const char* label_name(Label l) {
    switch (l) {
        case Label::agree: return "agree";
        case Label::disagree: return "disagree";
        default: return "none";
    }
}

// Labels are case-sensitive by contract; "Agree" is not a label.
inline std::optional<Label> label_from_string(const std::string& s) {
    if (s == "agree") return Label::agree;
    if (s == "disagree") return Label::disagree;
    if (s == "none") return Label::none;
    return std::nullopt;
}

// ------------------------------ types ----------------------------------

struct QRPair {
    std::string quote_text;
    std::string response_text;
    Label label = Label::none;
    std::string source_id;
};

struct RawPost {
    std::string debate_id;
    std::string post_id;
    std::optional<std::string> parent_id;  // absent for the root post
    std::string author;
    std::optional<std::string> side;  // for/against, absent on root posts
    std::string text;
};

struct IACAnnotation {
    std::string pair_id;
    std::vector<double> scores;  // each in [-5, 5]
};

// -------------------------- ABCD derivation ----------------------------

struct DeriveResult {
    std::vector<QRPair> pairs;
    std::size_t missing_side_warnings = 0;
};

// One pair per non-root post. A pair is labeled none when its quote is the
// debate's opening post or both posts share an author; otherwise the side
// labels decide: same side agree, different sides disagree. A missing side
// on either post falls back to none and is counted as a warning.
inline DeriveResult derive_abcd_labels(const std::vector<RawPost>& posts) {
    std::unordered_map<std::string, const RawPost*> by_key;
    for (const RawPost& p : posts) {
        const std::string key = p.debate_id + "\x1f" + p.post_id;
        if (!by_key.emplace(key, &p).second)
            throw StructuralError("derive_abcd_labels: duplicate post id '" + p.post_id +
                                  "' in debate '" + p.debate_id + "'");
    }
    std::string dangling;
    for (const RawPost& p : posts) {
        if (!p.parent_id) continue;
        if (!by_key.count(p.debate_id + "\x1f" + *p.parent_id)) {
            if (!dangling.empty()) dangling += ", ";
            dangling += p.debate_id + "/" + p.post_id + "->" + *p.parent_id;
        }
    }
    if (!dangling.empty())
        throw StructuralError("derive_abcd_labels: dangling parent ids: " + dangling);

    std::vector<const RawPost*> ordered;
    ordered.reserve(posts.size());
    for (const RawPost& p : posts) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](const RawPost* a, const RawPost* b) {
        return std::tie(a->debate_id, a->post_id) < std::tie(b->debate_id, b->post_id);
    });

    DeriveResult result;
    for (const RawPost* post : ordered) {
        if (!post->parent_id) continue;
        const RawPost* quote = by_key.at(post->debate_id + "\x1f" + *post->parent_id);
        Label label;
        if (!quote->parent_id) {
            label = Label::none;  // quote is the debate's first post
        } else if (quote->author == post->author) {
            label = Label::none;  // continuation of the same author
        } else if (!quote->side || !post->side) {
            label = Label::none;
            ++result.missing_side_warnings;
        } else {
            label = (*quote->side == *post->side) ? Label::agree : Label::disagree;
        }
        result.pairs.push_back(
            {quote->text, post->text, label, post->debate_id + ":" + post->post_id});
    }
    return result;
}

// ----------------------------- IAC merge -------------------------------

// Interval convention: a score below -1 is disagreement, above +1 is
// agreement, and the closed band [-1, 1] is none, so the boundary scores
// have one owner. None-class scores are dropped unless nothing else
// remains; the surviving scores' average is classified the same way.
inline Label classify_iac_score(double score) {
    if (score < -1.0) return Label::disagree;
    if (score > 1.0) return Label::agree;
    return Label::none;
}

inline Label merge_iac(const IACAnnotation& ann) {
    if (ann.scores.empty())
        throw StructuralError("merge_iac: annotation '" + ann.pair_id + "' has no scores");
    double sum = 0.0;
    std::size_t kept = 0;
    for (double s : ann.scores) {
        if (s < -5.0 || s > 5.0)
            throw RangeError("merge_iac: score " + std::to_string(s) + " outside [-5,5] in '" +
                             ann.pair_id + "'");
        if (classify_iac_score(s) != Label::none) {
            sum += s;
            ++kept;
        }
    }
    if (kept == 0) return Label::none;
    return classify_iac_score(sum / static_cast<double>(kept));
}

// ------------------------------ JSONL ----------------------------------

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& line, const std::string& path,
                                       std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON", line_no);
    if (!j.is_object())
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected a JSON object",
                         line_no);
    return j;
}

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  const std::string& path, std::size_t line_no) {
    if (!j.contains(key) || !j[key].is_string())
        throw ParseError(path + ":" + std::to_string(line_no) + ": missing string key '" + key +
                             "'",
                         line_no);
    return j[key].get<std::string>();
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key,
                                                  const std::string& path, std::size_t line_no) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string())
        throw ParseError(path + ":" + std::to_string(line_no) + ": key '" + key +
                             "' must be a string or null",
                         line_no);
    return j[key].get<std::string>();
}

template <typename PerLine>
void for_each_jsonl_line(const std::string& path, PerLine per_line) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;  // blank
        per_line(parse_jsonl_line(line, path, line_no), line_no);
    }
}

}  // namespace detail

// Pairs file: one {"id","quote","response","label"} object per line.
inline std::vector<QRPair> load_pairs_jsonl(const std::string& path) {
    std::vector<QRPair> pairs;
    detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        QRPair p;
        p.source_id = detail::require_string(j, "id", path, line_no);
        p.quote_text = detail::require_string(j, "quote", path, line_no);
        p.response_text = detail::require_string(j, "response", path, line_no);
        const std::string label = detail::require_string(j, "label", path, line_no);
        auto parsed = label_from_string(label);
        if (!parsed)
            throw ParseError(path + ":" + std::to_string(line_no) + ": unknown label '" + label +
                                 "' (labels are case-sensitive: agree|disagree|none)",
                             line_no);
        p.label = *parsed;
        pairs.push_back(std::move(p));
    });
    return pairs;
}

// Same schema but the label key may be absent (annotation merge fills it).
inline std::vector<QRPair> load_unlabeled_pairs_jsonl(const std::string& path) {
    std::vector<QRPair> pairs;
    detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        QRPair p;
        p.source_id = detail::require_string(j, "id", path, line_no);
        p.quote_text = detail::require_string(j, "quote", path, line_no);
        p.response_text = detail::require_string(j, "response", path, line_no);
        if (j.contains("label") && j["label"].is_string()) {
            auto parsed = label_from_string(j["label"].get<std::string>());
            if (parsed) p.label = *parsed;
        }
        pairs.push_back(std::move(p));
    });
    return pairs;
}

inline std::vector<RawPost> load_raw_posts_jsonl(const std::string& path) {
    std::vector<RawPost> posts;
    detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        RawPost p;
        p.debate_id = detail::require_string(j, "debate_id", path, line_no);
        p.post_id = detail::require_string(j, "post_id", path, line_no);
        p.parent_id = detail::optional_string(j, "parent_id", path, line_no);
        p.author = detail::require_string(j, "author", path, line_no);
        p.side = detail::optional_string(j, "side", path, line_no);
        p.text = detail::require_string(j, "text", path, line_no);
        posts.push_back(std::move(p));
    });
    return posts;
}

// Annotations file: one {"pair_id","scores":[...]} object per line.
inline std::vector<IACAnnotation> load_iac_annotations_jsonl(const std::string& path) {
    std::vector<IACAnnotation> anns;
    detail::for_each_jsonl_line(path, [&](const nlohmann::json& j, std::size_t line_no) {
        IACAnnotation a;
        a.pair_id = detail::require_string(j, "pair_id", path, line_no);
        if (!j.contains("scores") || !j["scores"].is_array() || j["scores"].empty())
            throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": missing nonempty 'scores' array",
                             line_no);
        for (const auto& s : j["scores"]) {
            if (!s.is_number())
                throw ParseError(path + ":" + std::to_string(line_no) +
                                     ": scores must be numbers",
                                 line_no);
            a.scores.push_back(s.get<double>());
        }
        anns.push_back(std::move(a));
    });
    return anns;
}

inline void write_pairs_jsonl(const std::vector<QRPair>& pairs, std::ostream& out) {
    for (const QRPair& p : pairs) {
        nlohmann::json j;
        j["id"] = p.source_id;
        j["quote"] = p.quote_text;
        j["response"] = p.response_text;
        j["label"] = label_name(p.label);
        out << j.dump() << "\n";
    }
}

inline void write_pairs_jsonl(const std::vector<QRPair>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write_pairs_jsonl(pairs, out);
}

// ------------------------------ stats ----------------------------------

struct HistogramBin {
    std::size_t bin_start = 0;  // width-10 bins over token counts
    std::size_t quote_count = 0;
    std::size_t response_count = 0;
};

struct StatsReport {
    std::array<std::size_t, 3> label_counts{};  // indexed by Label
    double quote_mean = 0.0, quote_median = 0.0;
    double response_mean = 0.0, response_median = 0.0;
    std::vector<HistogramBin> histogram;  // contiguous bins from 0
};

using Tokenizer = std::function<std::vector<std::string>(const std::string&)>;

inline StatsReport dataset_stats(const std::vector<QRPair>& pairs, const Tokenizer& tokenizer) {
    StatsReport r;
    if (pairs.empty()) return r;
    std::vector<std::size_t> quote_lens, response_lens;
    quote_lens.reserve(pairs.size());
    response_lens.reserve(pairs.size());
    for (const QRPair& p : pairs) {
        r.label_counts[static_cast<int>(p.label)] += 1;
        quote_lens.push_back(tokenizer(p.quote_text).size());
        response_lens.push_back(tokenizer(p.response_text).size());
    }
    auto mean = [](const std::vector<std::size_t>& v) {
        double s = 0.0;
        for (std::size_t x : v) s += static_cast<double>(x);
        return s / static_cast<double>(v.size());
    };
    auto median = [](std::vector<std::size_t> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        if (n % 2 == 1) return static_cast<double>(v[n / 2]);
        return (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
    };
    r.quote_mean = mean(quote_lens);
    r.quote_median = median(quote_lens);
    r.response_mean = mean(response_lens);
    r.response_median = median(response_lens);

    const std::size_t max_len =
        std::max(*std::max_element(quote_lens.begin(), quote_lens.end()),
                 *std::max_element(response_lens.begin(), response_lens.end()));
    r.histogram.resize(max_len / 10 + 1);
    for (std::size_t b = 0; b < r.histogram.size(); ++b) r.histogram[b].bin_start = b * 10;
    for (std::size_t len : quote_lens) r.histogram[len / 10].quote_count += 1;
    for (std::size_t len : response_lens) r.histogram[len / 10].response_count += 1;
    return r;
}

inline std::string stats_histogram_csv(const StatsReport& r) {
    std::ostringstream out;
    out << "bin_start,quote_count,response_count\n";
    for (const HistogramBin& b : r.histogram)
        out << b.bin_start << "," << b.quote_count << "," << b.response_count << "\n";
    return out.str();
}

inline nlohmann::json stats_summary_json(const StatsReport& r) {
    nlohmann::json j;
    j["label_counts"] = {{"agree", r.label_counts[0]},
                         {"disagree", r.label_counts[1]},
                         {"none", r.label_counts[2]}};
    j["quote_mean_tokens"] = r.quote_mean;
    j["quote_median_tokens"] = r.quote_median;
    j["response_mean_tokens"] = r.response_mean;
    j["response_median_tokens"] = r.response_median;
    return j;
}

// ------------------------------ splits ---------------------------------

struct DataSplits {
    std::vector<QRPair> train, dev, test;
};

// Deterministic shuffle (splitmix64 Fisher-Yates) followed by contiguous
// slicing. Corpora that ship their own splits bypass this.
inline DataSplits split_dataset(std::vector<QRPair> pairs, const std::array<double, 3>& fractions,
                                std::uint64_t seed) {
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw ConfigError("split_dataset: negative fraction");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("split_dataset: fractions sum to " + std::to_string(total) +
                          ", expected 1");
    Rng rng(seed);
    for (std::size_t i = pairs.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(pairs[i - 1], pairs[j]);
    }
    const std::size_t n = pairs.size();
    const auto c1 = static_cast<std::size_t>(fractions[0] * static_cast<double>(n));
    const auto c2 = static_cast<std::size_t>((fractions[0] + fractions[1]) * static_cast<double>(n));
    DataSplits s;
    s.train.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(c1));
    s.dev.assign(pairs.begin() + static_cast<std::ptrdiff_t>(c1),
                 pairs.begin() + static_cast<std::ptrdiff_t>(c2));
    s.test.assign(pairs.begin() + static_cast<std::ptrdiff_t>(c2), pairs.end());
    return s;
}

}  // namespace concord
