#include "typoflow/tokenizer.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace typoflow {

const char* attr_name(Attr a) {
    switch (a) {
        case Attr::Bold: return "bold";
        case Attr::Italic: return "italic";
        case Attr::Underline: return "underline";
    }
    return "?";
}

namespace {

const char* kOpenForms[3] = {"<b*>", "<i*>", "<u*>"};
const char* kCloseForms[3] = {"<\\b*>", "<\\i*>", "<\\u*>"};

bool starts_with(const std::string& s, size_t pos, const char* lit) {
    const size_t n = std::char_traits<char>::length(lit);
    return s.compare(pos, n, lit) == 0;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

int count_words(const std::string& s, size_t end) {
    int words = 0;
    bool in_word = false;
    for (size_t i = 0; i < end; ++i) {
        if (is_space(s[i])) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

}  // namespace

std::string Vocabulary::symbol(int id) {
    if (id == kPad) return "<pad>";
    if (id == kUnk) return "<unk>";
    if (id == kBos) return "<bos>";
    if (id == kEos) return "<eos>";
    if (id >= kFirstChar && id < kFirstChar + kCharCount)
        return std::string(1, static_cast<char>(32 + id - kFirstChar));
    if (id >= kFirstControl && id < kFirstControl + kControlCount) {
        const int rel = id - kFirstControl;
        return rel % 2 == 0 ? kOpenForms[rel / 2] : kCloseForms[rel / 2];
    }
    if (id >= kFirstFont && id < kFirstFont + kFontCount)
        return "<font:" + std::to_string(id - kFirstFont) + ">";
    throw std::out_of_range("vocabulary: unknown token id " + std::to_string(id));
}

void Vocabulary::write_manifest(const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write vocabulary manifest: " + path);
    for (int id = 0; id < kSize; ++id) os << symbol(id) << "\n";
}

TokenSequence parse_prompt(const std::string& text) {
    TokenSequence seq;
    seq.ids.push_back(Vocabulary::kBos);

    struct OpenTag {
        Attr attr;
        size_t byte_offset;
        size_t stripped_start;
        int tok_begin;
    };
    struct ClosedSpan {
        Attr attr;
        size_t open_offset;
        size_t close_offset;
        size_t stripped_begin;
        size_t stripped_end;
        int tok_begin;
        int tok_end;
    };

    bool open = false;
    OpenTag cur{};
    std::vector<ClosedSpan> closed;

    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '<') {
            bool matched = false;
            for (int a = 0; a < 3 && !matched; ++a) {
                if (starts_with(text, i, kOpenForms[a])) {
                    if (open) throw GrammarError("nested or interleaved tags", i);
                    seq.ids.push_back(Vocabulary::open_id(static_cast<Attr>(a)));
                    cur = OpenTag{static_cast<Attr>(a), i, seq.stripped_text.size(),
                                  static_cast<int>(seq.ids.size())};
                    open = true;
                    i += std::char_traits<char>::length(kOpenForms[a]);
                    matched = true;
                } else if (starts_with(text, i, kCloseForms[a])) {
                    if (!open || cur.attr != static_cast<Attr>(a))
                        throw GrammarError("closer without matching opener", i);
                    closed.push_back(ClosedSpan{cur.attr, cur.byte_offset, i, cur.stripped_start,
                                                seq.stripped_text.size(), cur.tok_begin,
                                                static_cast<int>(seq.ids.size())});
                    seq.ids.push_back(Vocabulary::close_id(static_cast<Attr>(a)));
                    open = false;
                    i += std::char_traits<char>::length(kCloseForms[a]);
                    matched = true;
                }
            }
            if (!matched && starts_with(text, i, "<font:") && i + 7 < text.size() &&
                text[i + 7] == '>') {
                const char k = text[i + 6];
                if (k < '0' || k > '4') throw GrammarError("font index outside 0..4", i);
                seq.font_id = k - '0';  // last one wins
                seq.ids.push_back(Vocabulary::font_token_id(seq.font_id));
                i += 8;
                matched = true;
            }
            if (matched) continue;
            // not a recognized tag: fall through, '<' is an ordinary character
        }
        seq.ids.push_back(Vocabulary::char_id(text[i]));
        seq.stripped_text.push_back(text[i]);
        ++i;
    }
    if (open) throw GrammarError("opener without matching closer", cur.byte_offset);
    seq.ids.push_back(Vocabulary::kEos);

    const std::string& st = seq.stripped_text;
    for (const ClosedSpan& c : closed) {
        if (c.stripped_begin == c.stripped_end)
            throw GrammarError("tag encloses zero words", c.open_offset);
        for (size_t p = c.stripped_begin; p < c.stripped_end; ++p)
            if (is_space(st[p]))
                throw GrammarError("tag encloses more than one word", c.open_offset);
        if (c.stripped_begin > 0 && !is_space(st[c.stripped_begin - 1]))
            throw GrammarError("tag must start at a word boundary", c.open_offset);
        if (c.stripped_end < st.size() && !is_space(st[c.stripped_end]))
            throw GrammarError("tag must end at a word boundary", c.close_offset);
        seq.spans.push_back(ControlSpan{c.attr, count_words(st, c.stripped_begin), c.tok_begin,
                                        c.tok_end});
    }
    return seq;
}

std::string decode(const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (id == Vocabulary::kBos || id == Vocabulary::kEos || id == Vocabulary::kPad) continue;
        if (id == Vocabulary::kUnk) {
            out.push_back('?');
            continue;
        }
        out += Vocabulary::symbol(id);  // throws on unknown ids
    }
    return out;
}

TokenSequence with_prefix(const TokenSequence& seq, const std::string& prefix) {
    if (prefix.empty()) return seq;
    TokenSequence probe = parse_prompt(prefix);
    if (!probe.spans.empty() || probe.font_id != -1 || probe.stripped_text != prefix)
        throw GrammarError("prefix must not contain markup", 0);
    return parse_prompt(prefix + " " + decode(seq.ids));
}

}  // namespace typoflow
