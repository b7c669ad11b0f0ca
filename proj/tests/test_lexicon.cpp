#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "concord/lexicon.hpp"

using namespace concord;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/concord_lexicon_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

LexiconSet valence_fixture() {
    Lexicon lex;
    lex.name = "valence";
    lex.channel_names = {"valence"};
    lex.entries["good"] = {3.0};
    lex.entries["bad"] = {-3.0};
    return LexiconSet::from({lex});
}

}  // namespace

TEST_CASE("load_lexicon parses the unified TSV") {
    TempFile f("basic.tsv", "#channels\tvalence\n# a comment\ngood\t3\nbad\t-2.5\n");
    const Lexicon lex = load_lexicon(f.path);
    CHECK(lex.name == "concord_lexicon_basic");  // name defaults to the file stem
    CHECK(load_lexicon(f.path, "valence").name == "valence");
    CHECK(lex.channel_names == std::vector<std::string>{"valence"});
    CHECK(lex.entries.at("good") == std::vector<double>{3.0});
    CHECK(lex.entries.at("bad") == std::vector<double>{-2.5});
}

TEST_CASE("load_lexicon accepts an empty body") {
    TempFile f("empty.tsv", "#channels\tvalence\n");
    const Lexicon lex = load_lexicon(f.path);
    CHECK(lex.entries.empty());
    CHECK(lex.channels() == 1);
}

TEST_CASE("load_lexicon rejects wrong arity with the line number") {
    TempFile f("arity.tsv", "#channels\tvalence\ngood\t1\t2\n");
    try {
        load_lexicon(f.path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("load_lexicon rejects rows before the header and non-numeric values") {
    TempFile f1("early.tsv", "good\t1\n#channels\tvalence\n");
    CHECK_THROWS_AS(load_lexicon(f1.path), ParseError);
    TempFile f2("nan.tsv", "#channels\tvalence\ngood\thigh\n");
    CHECK_THROWS_AS(load_lexicon(f2.path), ParseError);
    TempFile f3("nohdr.tsv", "");
    CHECK_THROWS_AS(load_lexicon(f3.path), ParseError);
}

TEST_CASE("load_lexicon lowercases tokens and counts duplicate replacements") {
    TempFile f("dup.tsv", "#channels\tv\nGood\t1\ngood\t2\n");
    const Lexicon lex = load_lexicon(f.path);
    CHECK(lex.entries.at("good") == std::vector<double>{2.0});
    CHECK(lex.duplicates_replaced == 1);
}

TEST_CASE("featurize aggregates per channel") {
    const LexiconSet set = valence_fixture();
    const LexFeatureVector v = featurize({"good", "good", "bad"}, set);
    REQUIRE(v.values.size() == 4);  // one channel, four aggregates
    CHECK(v.values[0] == 3.0);  // count
    CHECK(v.values[1] == 3.0);  // sum = 3 + 3 - 3
    CHECK(v.values[2] == 1.0);  // mean
    CHECK(v.values[3] == 3.0);  // max
    CHECK(v.layout->slots[0].key() == "valence/valence/count");
}

TEST_CASE("featurize on empty and unmatched input yields zeros of fixed layout") {
    const LexiconSet set = valence_fixture();
    const LexFeatureVector empty = featurize({}, set);
    CHECK(empty.values == std::vector<double>{0, 0, 0, 0});
    const LexFeatureVector miss = featurize({"nothing", "matches"}, set);
    CHECK(miss.values == std::vector<double>{0, 0, 0, 0});
    CHECK(empty.values.size() == set.dim());
}

TEST_CASE("featurize max over all-negative matches is the actual max") {
    const LexiconSet set = valence_fixture();
    const LexFeatureVector v = featurize({"bad", "bad"}, set);
    CHECK(v.values[3] == -3.0);
}

TEST_CASE("featurize is permutation invariant") {
    Lexicon lex;
    lex.name = "mix";
    lex.channel_names = {"a", "b"};
    lex.entries["x"] = {1.0, -1.0};
    lex.entries["y"] = {2.0, 0.5};
    lex.entries["z"] = {-0.5, 4.0};
    const LexiconSet set = LexiconSet::from({lex});
    std::vector<std::string> tokens{"x", "y", "z", "x", "w"};
    const LexFeatureVector base = featurize(tokens, set);
    std::sort(tokens.begin(), tokens.end());
    do {
        CHECK(featurize(tokens, set).values == base.values);
    } while (std::next_permutation(tokens.begin(), tokens.end()));
}

TEST_CASE("appending a token absent from every lexicon changes nothing") {
    const LexiconSet set = valence_fixture();
    const LexFeatureVector base = featurize({"good", "bad"}, set);
    const LexFeatureVector extended = featurize({"good", "bad", "nonlexical"}, set);
    CHECK(base.values == extended.values);
}

TEST_CASE("negation lexicon contributes its match count") {
    Lexicon neg;
    neg.name = kNegationLexiconName;
    neg.channel_names = {"negation"};
    neg.entries["not"] = {1.0};
    neg.entries["never"] = {1.0};
    const LexiconSet set = LexiconSet::from({valence_fixture().lexicons[0], neg});
    CHECK(set.dim() == 8);
    const LexFeatureVector v = featurize({"not", "good", "never", "not"}, set);
    // slots 4..7 are negation count/sum/mean/max
    CHECK(v.layout->slots[4].lexicon == kNegationLexiconName);
    CHECK(v.layout->slots[4].aggregator == "count");
    CHECK(v.values[4] == 3.0);  // "number of negation words"
}

TEST_CASE("layout length is constant across sentences") {
    const LexiconSet set = valence_fixture();
    for (const char* text : {"good", "good bad good", ""}) {
        std::vector<std::string> toks;
        std::istringstream ss(text);
        std::string t;
        while (ss >> t) toks.push_back(t);
        CHECK(featurize(toks, set).values.size() == set.dim());
    }
}
