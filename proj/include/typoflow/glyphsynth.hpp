#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "typoflow/image.hpp"
#include "typoflow/tokenizer.hpp"

namespace typoflow {

// Ink mask over glyph-band rows. row0 is the band row of mask row 0 (word
// rasters start at -1 to absorb bold dilation).
struct GlyphMask {
    int w = 0, h = 0;
    int row0 = 0;
    std::vector<uint8_t> on;

    GlyphMask() = default;
    GlyphMask(int w_, int h_, int row0_ = 0)
        : w(w_), h(h_), row0(row0_), on(static_cast<size_t>(w_) * h_, 0) {}

    bool get(int x, int y) const {
        if (x < 0 || x >= w || y < 0 || y >= h) return false;
        return on[static_cast<size_t>(y) * w + x] != 0;
    }
    void set(int x, int y) {
        if (x >= 0 && x < w && y >= 0 && y < h) on[static_cast<size_t>(y) * w + x] = 1;
    }
    void clear(int x, int y) {
        if (x >= 0 && x < w && y >= 0 && y < h) on[static_cast<size_t>(y) * w + x] = 0;
    }
    int ink_count() const {
        int n = 0;
        for (uint8_t v : on) n += v;
        return n;
    }
};

// One of five deterministic variants of the built-in stroke font. Glyph
// cells cover ASCII 33..126 plus space on a 10-row band; the variants differ
// by stroke weight direction, x-height, serif stubs, spacing and corner
// rounding.
class SyntheticFont {
public:
    static constexpr int kFonts = 5;
    static constexpr int kCellRows = 11;    // band rows 0..10; descenders in 9..10
    static constexpr int kBaselineRow = 9;  // first band row below the letter body
    static constexpr int kContentCols = 7;

    static const SyntheticFont& get(int font_id);

    int id() const { return id_; }
    int advance() const { return advance_; }
    int xheight_row() const { return xh_row_; }
    const GlyphMask& glyph(char c) const;  // 11 rows x advance cols, content in 0..6

private:
    explicit SyntheticFont(int id);
    int id_, advance_, xh_row_;
    std::array<GlyphMask, 95> cells_;  // ASCII 32..126
};

// A word with an optional attribute, rasterized at base resolution.
// Bold is a 1-px 8-neighbourhood dilation, italic a 0.25 right shear above
// the baseline, underline a 2-px rule 2 px below the baseline spanning the
// word's content extent.
struct WordRaster {
    GlyphMask mask;  // rows -1..13 (h = 15, row0 = -1)
    int content_x0 = 0, content_x1 = 0;  // inclusive, in mask columns
};
WordRaster rasterize_word(int font_id, const std::string& word, std::optional<Attr> attr);

struct WordSpan {
    int word_index;
    Attr attr;
};

struct RenderSpec {
    std::string text;  // stripped text, no markup
    std::vector<WordSpan> spans;
    int font_id = 0;
    RGB fg{0, 0, 0};
    RGB bg{255, 255, 255};
    int width = 256;
    int height = 64;
    int scale = 1;
};

struct WordBox {
    std::string text;
    int word_index;
    int x0, x1;  // inclusive content extent, base-resolution canvas columns
};

struct TextLayout {
    int band_top = 0;  // base-resolution canvas row of band row 0
    int scale = 1;
    std::vector<WordBox> words;
};

// Pure geometry; throws LayoutError when the text cannot fit.
TextLayout layout_text(const RenderSpec& spec);

// Deterministic rasterization of the spec. Contrast below 64 luma steps or
// canvas overflow raise errors.
Image render(const RenderSpec& spec);

// ---- dataset recipes ----

struct WordTruth {
    int word_index;
    Attr attr;
    std::string word;
};

struct SampleTruth {
    std::string stripped;
    std::vector<WordTruth> spans;
    int font_id = 0;
};

struct Sample {
    RenderSpec spec;
    Image image;
    std::string prompt;  // with ETC markup and font token
    SampleTruth truth;
    uint64_t hash = 0;
};

// Prompt surface for a fully annotated excerpt: tags around annotated words
// plus a trailing whole-prompt font token.
std::string make_prompt(const std::string& stripped, const std::vector<WordSpan>& spans,
                        int font_id);

// The sixteen-variant recipe: one plain sample plus three attributes at each
// of five word positions. Colors are drawn per variant from the fixed
// palette, seeded by (excerpt, font).
std::vector<Sample> build_variants(const std::string& excerpt, int font_id,
                                   const std::vector<int>& positions);

struct BenchPrompt {
    std::string prompt;
    SampleTruth truth;
};

// Benchmark prompts: five words, three attributed positions, a whole-prompt
// font token; seeded and reproducible.
std::vector<BenchPrompt> build_btr_bench(int n, uint64_t seed);

// ---- style sets ----

struct StyleSample {
    Image image;
    std::string prompt;
    std::string content_word;  // empty for textures
    int style_class = 0;       // family id for pairing in eval
};

struct StyleSets {
    std::vector<StyleSample> general;  // textures, no glyphs
    std::vector<StyleSample> artext;   // styled word renders
};

StyleSets build_style_sets(uint64_t seed, int n_general = 2048, int n_artext = 512);

// ---- corpora ----

const std::vector<std::string>& word_corpus();
std::vector<std::string> build_excerpts(int count, uint64_t seed);

const std::array<RGB, 12>& color_palette();
// bg then fg, luma contrast >= 64 guaranteed.
std::pair<RGB, RGB> pick_colors(Rng& rng);

// ---- files ----

struct DatasetConfig {
    std::string out_dir;
    int excerpt_count = 625;
    uint64_t seed = 1;
};

struct DatasetStats {
    int64_t sample_count = 0;
};

DatasetStats write_tc_dataset(const DatasetConfig& cfg);

struct ManifestEntry {
    std::string prompt;
    SampleTruth truth;
    RGB fg, bg;
    std::string image_path;  // relative to the manifest directory
    uint64_t hash = 0;
    int width = 0, height = 0;
};

std::vector<ManifestEntry> read_manifest(const std::string& manifest_path);
void write_btr_bench_file(const std::string& path, const std::vector<BenchPrompt>& bench);
std::vector<BenchPrompt> read_btr_bench_file(const std::string& path);

// Full-height window of `size` columns around a pixel column, clamped to the
// canvas; training crops.
Image crop_window(const Image& canvas, int center_x_px, int size = 64);

}  // namespace typoflow
