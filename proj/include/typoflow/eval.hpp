#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "typoflow/glyphsynth.hpp"
#include "typoflow/image.hpp"
#include "typoflow/tensor.hpp"

namespace typoflow {

// Reference bitmaps for every (font, char, attribute) combination, generated
// from the same rasterizer the dataset uses, so clean renders match exactly.
struct AtlasCell {
    char ch;
    int font;
    int attr;  // -1 plain, otherwise Attr
    int x0, x1;  // ink column extent within the single-char raster
    GlyphMask mask;  // rows -1..11 (13 rows), full raster columns
    int band_ink;    // ink count over band rows 0..9
};

class GlyphAtlas {
public:
    static const GlyphAtlas& get();
    const std::vector<AtlasCell>& cells() const { return cells_; }
    int plain_ink(int font, char c) const;

private:
    GlyphAtlas();
    std::vector<AtlasCell> cells_;
    int plain_ink_[SyntheticFont::kFonts][95];
};

// Binarization: a pixel is ink when its squared RGB distance from the
// estimated background exceeds (0.3 * 255)^2.
constexpr int kInkDist2 = 5852;

RGB estimate_background(const Image& img);

struct OcrCell {
    char ch = '?';
    bool confident = false;
    bool at_edge = false;
    int x0 = 0, x1 = 0;
    int font = 0;       // font of the best template
    double score = 1.0;  // normalized hamming distance of the best match
};

struct OcrWord {
    std::string text;
    bool confident = false;
    int x0 = 0, x1 = 0;
    std::vector<OcrCell> cells;
};

struct OcrResult {
    std::vector<OcrWord> words;
    int band_top = 0;
    int font_vote = 0;
    std::string text() const;  // confident glyphs, '?' for rejects
};

// Column-segmenting template-match OCR at dataset geometry. Runs separated
// by a single blank column are bridged; cells touching the canvas edge are
// kept out of word assembly (window crops clip neighbours mid-glyph).
OcrResult ocr_layout(const Image& img);
std::string ocr_decode(const Image& img);

// Deterministic word-level attribute detectors, one set per decoded word:
//   bold      ink >= 1.15x the atlas-plain ink of the decoded word
//   italic    centroid slope vs the plain reference exceeds 0.12 col/row
//   underline a >=80%-coverage ink row in the sub-baseline band
std::vector<std::set<Attr>> detect_attributes(const Image& img, const OcrResult& layout);

struct EvalSample {
    Image image;
    SampleTruth truth;
    std::string prompt;
};

struct SpanRecord {
    int word_index;
    Attr attr;
    std::string word;
    bool pass;
};

struct SampleRecord {
    std::string prompt;
    std::string decoded;
    std::string truth_stripped;
    bool ocr_pass = false;
    bool any_attr_detected = false;
    std::vector<SpanRecord> spans;
};

struct EvalReport {
    double ocr_acc = 0.0;   // fraction of samples whose decoded words all match
    double word_acc = 0.0;  // fraction of truth spans detected at exactly the right word
    double style_score = -1.0;  // mean, when style scoring ran (-1 otherwise)
    int64_t n_samples = 0;
    int64_t n_truth_spans = 0;
    std::vector<SampleRecord> records;
};

EvalReport evaluate_samples(const std::vector<EvalSample>& samples);
void write_eval_report(const EvalReport& report, const std::string& path);

// Cosine distance between pooled style embeddings; lower = more consistent.
// The embedding hook returns [K,d] style tokens for an image.
using StyleEmbedFn = std::function<Tensor(const Image&)>;
double style_score(const Image& generated, const Image& reference, const StyleEmbedFn& embed);

}  // namespace typoflow
