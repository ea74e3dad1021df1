#include "doctest.h"

#include <fstream>
#include <sstream>

#include "typoflow/rng.hpp"
#include "typoflow/tokenizer.hpp"

using namespace typoflow;

TEST_CASE("figure-style prompt parses to span, font and stripped text") {
    TokenSequence seq = parse_prompt("<b*>Find<\\b*> your path in Font: <font:3>.");
    REQUIRE(seq.spans.size() == 1);
    CHECK(seq.spans[0].attribute == Attr::Bold);
    CHECK(seq.spans[0].word_index == 0);
    CHECK(seq.font_id == 3);
    CHECK(seq.stripped_text == "Find your path in Font: .");
}

TEST_CASE("plain prompt has no spans or font") {
    TokenSequence seq = parse_prompt("hello");
    CHECK(seq.spans.empty());
    CHECK(seq.font_id == -1);
    CHECK(seq.stripped_text == "hello");
    CHECK(seq.ids.front() == Vocabulary::kBos);
    CHECK(seq.ids.back() == Vocabulary::kEos);
}

TEST_CASE("underline on the second word") {
    TokenSequence seq = parse_prompt("he <u*>came<\\u*> home");
    REQUIRE(seq.spans.size() == 1);
    CHECK(seq.spans[0].attribute == Attr::Underline);
    CHECK(seq.spans[0].word_index == 1);
    // the enclosed token slice decodes to the word alone
    std::vector<int> slice(seq.ids.begin() + seq.spans[0].tok_begin,
                           seq.ids.begin() + seq.spans[0].tok_end);
    CHECK(decode(slice) == "came");
}

TEST_CASE("grammar errors carry byte offsets") {
    try {
        parse_prompt("<b*>oops");
        FAIL("expected GrammarError");
    } catch (const GrammarError& e) {
        CHECK(e.byte_offset == 0);
    }
    CHECK_THROWS_AS(parse_prompt("word<\\i*>"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("<b*>a<i*>b<\\i*><\\b*>"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("<b*>two words<\\b*>"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("<b*><\\b*> x"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("<font:7>"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("ab<b*>cd<\\b*>"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("<b*>cd<\\b*>ef"), GrammarError);
    CHECK_THROWS_AS(parse_prompt("<i*>a<\\u*>"), GrammarError);
}

TEST_CASE("decode round-trips markup exactly") {
    const std::string p = "a <i*>b<\\i*>";
    CHECK(decode(parse_prompt(p).ids) == p);
    CHECK(decode({Vocabulary::kBos, Vocabulary::kEos}) == "");
    CHECK_THROWS(decode({12345}));
}

TEST_CASE("last font token wins") {
    TokenSequence seq = parse_prompt("x <font:1> y <font:4>");
    CHECK(seq.font_id == 4);
}

TEST_CASE("characters outside printable ascii map to UNK") {
    TokenSequence seq = parse_prompt("caf\xc3\xa9");
    CHECK(seq.ids.size() == 2 + 5);  // BOS caf(3) + 2 UNK bytes + EOS
    CHECK(seq.ids[4] == Vocabulary::kUnk);
    CHECK(seq.stripped_text == "caf\xc3\xa9");
}

TEST_CASE("with_prefix shifts word indices and is identity for empty prefix") {
    TokenSequence seq = parse_prompt("<b*>hi<\\b*>");
    TokenSequence pre = with_prefix(seq, "sks");
    REQUIRE(pre.spans.size() == 1);
    CHECK(pre.spans[0].word_index == 1);
    CHECK(pre.stripped_text == "sks hi");

    TokenSequence same = with_prefix(seq, "");
    CHECK(same.ids == seq.ids);

    TokenSequence two = parse_prompt("u v <u*>w<\\u*>");
    CHECK(two.spans[0].word_index == 2);
    TokenSequence shifted = with_prefix(two, "a b");
    CHECK(shifted.spans[0].word_index == 4);

    CHECK_THROWS_AS(with_prefix(seq, "<b*>bad<\\b*>"), GrammarError);
}

namespace {

// Generates a grammar-valid prompt: words with optional single-word tags and
// an optional font token; returns the exact source string.
std::string fuzz_prompt(Rng& rng) {
    static const char* words[] = {"card", "note", "flux", "pond", "glyph", "ink",
                                  "rose", "tide", "moon", "fox",  "jazz",  "quip"};
    const int n = 1 + static_cast<int>(rng.next_below(6));
    std::ostringstream os;
    for (int w = 0; w < n; ++w) {
        if (w) os << ' ';
        const char* word = words[rng.next_below(12)];
        const int kind = static_cast<int>(rng.next_below(5));
        if (kind == 0) os << "<b*>" << word << "<\\b*>";
        else if (kind == 1) os << "<i*>" << word << "<\\i*>";
        else if (kind == 2) os << "<u*>" << word << "<\\u*>";
        else os << word;
    }
    if (rng.next_below(3) == 0) os << " <font:" << rng.next_below(5) << ">";
    return os.str();
}

}  // namespace

TEST_CASE("fuzzed valid prompts round-trip exactly") {
    Rng rng(20240817);
    for (int it = 0; it < 1000; ++it) {
        const std::string p = fuzz_prompt(rng);
        TokenSequence seq = parse_prompt(p);
        CHECK(decode(seq.ids) == p);
        // span soundness: each span decodes to one whitespace-free word
        for (const ControlSpan& s : seq.spans) {
            std::vector<int> slice(seq.ids.begin() + s.tok_begin, seq.ids.begin() + s.tok_end);
            const std::string w = decode(slice);
            CHECK(!w.empty());
            CHECK(w.find(' ') == std::string::npos);
        }
    }
}

TEST_CASE("mutated prompts never parse silently") {
    // Deleting an opener or closer, or swapping them, must raise GrammarError.
    Rng rng(77);
    int mutations = 0;
    for (int it = 0; it < 400; ++it) {
        std::string p = fuzz_prompt(rng);
        const size_t open_pos = p.find("<b*>");
        if (open_pos == std::string::npos) continue;
        std::string broken = p;
        broken.erase(open_pos, 4);  // closer now unmatched
        ++mutations;
        CHECK_THROWS_AS(parse_prompt(broken), GrammarError);
    }
    CHECK(mutations > 20);
}

TEST_CASE("vocabulary manifest lists one symbol per line") {
    const std::string path = "vocab_manifest_test.txt";
    Vocabulary::write_manifest(path);
    std::ifstream is(path);
    std::string line;
    int count = 0;
    while (std::getline(is, line)) {
        if (count == Vocabulary::kPad) CHECK(line == "<pad>");
        if (count == Vocabulary::kFirstChar) CHECK(line == " ");
        if (count == Vocabulary::kFirstControl) CHECK(line == "<b*>");
        if (count == Vocabulary::kFirstFont) CHECK(line == "<font:0>");
        ++count;
    }
    CHECK(count == Vocabulary::kSize);
    std::remove(path.c_str());
}
