#pragma once

#include <string>
#include <vector>

#include "typoflow/errors.hpp"

namespace typoflow {

enum class Attr : uint8_t { Bold = 0, Italic = 1, Underline = 2 };

const char* attr_name(Attr a);  // "bold" / "italic" / "underline"

// Word-level typography annotation extracted from an enclosing tag pair.
struct ControlSpan {
    Attr attribute;
    int word_index;  // 0-based over whitespace-delimited words of the stripped text
    int tok_begin;   // token positions of the enclosed word chars, [tok_begin, tok_end)
    int tok_end;
};

struct TokenSequence {
    std::vector<int> ids;  // BOS ... EOS
    std::vector<ControlSpan> spans;
    int font_id = -1;  // -1 = absent
    std::string stripped_text;
};

// Character-level vocabulary: 4 specials, printable ASCII, then the control
// and font symbols appended as the highest contiguous id range.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static constexpr int kFirstChar = 4;        // ASCII 32
    static constexpr int kCharCount = 95;       // ASCII 32..126
    static constexpr int kFirstControl = 99;    // B_OPEN
    static constexpr int kControlCount = 6;     // b/i/u open+close
    static constexpr int kFirstFont = 105;      // FONT_0
    static constexpr int kFontCount = 5;
    static constexpr int kSize = 110;

    // Rows 0..98 live in the base embedding table; the 11 control/font rows
    // are the appended block.
    static constexpr int kBaseRows = 99;
    static constexpr int kCtrlRows = 11;

    static int char_id(char c) {
        const unsigned char u = static_cast<unsigned char>(c);
        return (u >= 32 && u <= 126) ? kFirstChar + (u - 32) : kUnk;
    }
    static int open_id(Attr a) { return kFirstControl + 2 * static_cast<int>(a); }
    static int close_id(Attr a) { return kFirstControl + 2 * static_cast<int>(a) + 1; }
    static int font_token_id(int font) { return kFirstFont + font; }

    static std::string symbol(int id);  // manifest surface form
    static void write_manifest(const std::string& path);
};

// Parses a prompt with ETC-token markup (<b*>word<\b*>, <i*>, <u*>,
// <font:k>) into ids plus extracted spans. Malformed markup raises
// GrammarError with the byte offset of the offending tag.
TokenSequence parse_prompt(const std::string& text);

// Exact inverse of tokenization including tag surface forms; BOS/EOS/PAD
// produce nothing. Unknown ids throw.
std::string decode(const std::vector<int>& ids);

// Re-tokenizes with `prefix + " "` inserted after BOS; span word indices
// shift by the prefix word count. Empty prefix returns the sequence as is.
TokenSequence with_prefix(const TokenSequence& seq, const std::string& prefix);

}  // namespace typoflow
