#include "typoflow/glyphsynth.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "typoflow/errors.hpp"

namespace typoflow {

namespace {

// Glyph art. kind 0: fixed box, band rows 0..8. kind 1: 6-row body,
// resampled into the font's x-height band. kind 2: 6-row body plus two
// descender rows (band rows 9..10). Every row is 7 columns.
struct GlyphArt {
    char ch;
    int kind;
    const char* rows[9];
};

const GlyphArt kGlyphArt[] = {
    {'!', 0, {"...#...", "...#...", "...#...", "...#...", ".......", ".......", ".......", "...#...", "...#..."}},
    {'"', 0, {"..#.#..", "..#.#..", ".......", ".......", ".......", ".......", ".......", ".......", "......."}},
    {'#', 0, {"..#..#.", "..#..#.", ".######", "..#..#.", ".######", "..#..#.", "..#..#.", ".......", "......."}},
    {'$', 0, {"...#...", ".######", "#..#...", "#..#...", ".#####.", "...#..#", "...#..#", "######.", "...#..."}},
    {'%', 0, {"##....#", "##...#.", "....#..", "...#...", "..#....", ".#...##", "#....##", ".......", "......."}},
    {'&', 0, {".###...", "#...#..", "#...#..", ".###...", "#.#....", "#..#..#", "#...#.#", "#....#.", ".####.#"}},
    {'\'', 0, {"...#...", "...#...", ".......", ".......", ".......", ".......", ".......", ".......", "......."}},
    {'(', 0, {"....#..", "...#...", "..#....", "..#....", "..#....", "..#....", "..#....", "...#...", "....#.."}},
    {')', 0, {"..#....", "...#...", "....#..", "....#..", "....#..", "....#..", "....#..", "...#...", "..#...."}},
    {'*', 0, {".......", "...#...", ".#.#.#.", "..###..", ".#.#.#.", "...#...", ".......", ".......", "......."}},
    {'+', 0, {".......", "...#...", "...#...", ".#####.", "...#...", "...#...", ".......", ".......", "......."}},
    {',', 0, {".......", ".......", ".......", ".......", ".......", ".......", "...##..", "...##..", "...#..."}},
    {'-', 0, {".......", ".......", ".......", ".......", ".#####.", ".......", ".......", ".......", "......."}},
    {'.', 0, {".......", ".......", ".......", ".......", ".......", ".......", ".......", "...##..", "...##.."}},
    {'/', 0, {"......#", ".....#.", "....#..", "....#..", "...#...", "..#....", ".#.....", ".#.....", "#......"}},
    {'0', 0, {".#####.", "#.....#", "#....##", "#...#.#", "#..#..#", "#.#...#", "##....#", "#.....#", ".#####."}},
    {'1', 0, {"...#...", "..##...", ".#.#...", "...#...", "...#...", "...#...", "...#...", "...#...", ".#####."}},
    {'2', 0, {".#####.", "#.....#", "......#", ".....#.", "....#..", "...#...", "..#....", ".#.....", "#######"}},
    {'3', 0, {"######.", "......#", "......#", "......#", ".#####.", "......#", "......#", "......#", "######."}},
    {'4', 0, {"....##.", "...#.#.", "..#..#.", ".#...#.", "#....#.", "#######", ".....#.", ".....#.", ".....#."}},
    {'5', 0, {"#######", "#......", "#......", "######.", "......#", "......#", "......#", "......#", "######."}},
    {'6', 0, {".#####.", "#......", "#......", "#......", "######.", "#.....#", "#.....#", "#.....#", ".#####."}},
    {'7', 0, {"#######", "......#", ".....#.", ".....#.", "....#..", "....#..", "...#...", "...#...", "...#..."}},
    {'8', 0, {".#####.", "#.....#", "#.....#", "#.....#", ".#####.", "#.....#", "#.....#", "#.....#", ".#####."}},
    {'9', 0, {".#####.", "#.....#", "#.....#", "#.....#", ".######", "......#", "......#", "......#", ".#####."}},
    {':', 0, {".......", "...##..", "...##..", ".......", ".......", "...##..", "...##..", ".......", "......."}},
    {';', 0, {".......", "...##..", "...##..", ".......", ".......", "...##..", "...##..", "...#...", "......."}},
    {'<', 0, {"....##.", "...#...", "..#....", ".#.....", "..#....", "...#...", "....##.", ".......", "......."}},
    {'=', 0, {".......", ".......", ".......", ".#####.", ".......", ".#####.", ".......", ".......", "......."}},
    {'>', 0, {".##....", "...#...", "....#..", ".....#.", "....#..", "...#...", ".##....", ".......", "......."}},
    {'?', 0, {".#####.", "#.....#", "......#", ".....#.", "....#..", "...#...", ".......", "...#...", "...#..."}},
    {'@', 0, {".#####.", "#.....#", "#..####", "#.#...#", "#.#...#", "#..####", "#......", "#......", ".#####."}},
    {'A', 0, {".#####.", "#.....#", "#.....#", "#.....#", "#######", "#.....#", "#.....#", "#.....#", "#.....#"}},
    {'B', 0, {"######.", "#.....#", "#.....#", "#.....#", "######.", "#.....#", "#.....#", "#.....#", "######."}},
    {'C', 0, {".######", "#......", "#......", "#......", "#......", "#......", "#......", "#......", ".######"}},
    {'D', 0, {"######.", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "######."}},
    {'E', 0, {"#######", "#......", "#......", "#......", "#####..", "#......", "#......", "#......", "#######"}},
    {'F', 0, {"#######", "#......", "#......", "#......", "#####..", "#......", "#......", "#......", "#......"}},
    {'G', 0, {".######", "#......", "#......", "#......", "#......", "#...###", "#.....#", "#.....#", ".#####."}},
    {'H', 0, {"#.....#", "#.....#", "#.....#", "#.....#", "#######", "#.....#", "#.....#", "#.....#", "#.....#"}},
    {'I', 0, {".#####.", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...", ".#####."}},
    {'J', 0, {"...####", ".....#.", ".....#.", ".....#.", ".....#.", ".....#.", "#....#.", "#....#.", ".####.."}},
    {'K', 0, {"#.....#", "#....#.", "#...#..", "#..#...", "###....", "#..#...", "#...#..", "#....#.", "#.....#"}},
    {'L', 0, {"#......", "#......", "#......", "#......", "#......", "#......", "#......", "#......", "#######"}},
    {'M', 0, {"#.....#", "##...##", "#.#.#.#", "#..#..#", "#..#..#", "#.....#", "#.....#", "#.....#", "#.....#"}},
    {'N', 0, {"#.....#", "##....#", "#.#...#", "#.#...#", "#..#..#", "#...#.#", "#...#.#", "#....##", "#.....#"}},
    {'O', 0, {".#####.", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", ".#####."}},
    {'P', 0, {"######.", "#.....#", "#.....#", "#.....#", "######.", "#......", "#......", "#......", "#......"}},
    {'Q', 0, {".#####.", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#..#..#", "#...#.#", ".####.#"}},
    {'R', 0, {"######.", "#.....#", "#.....#", "#.....#", "######.", "#..#...", "#...#..", "#....#.", "#.....#"}},
    {'S', 0, {".######", "#......", "#......", "#......", ".#####.", "......#", "......#", "......#", "######."}},
    {'T', 0, {"#######", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#..."}},
    {'U', 0, {"#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", ".#####."}},
    {'V', 0, {"#.....#", "#.....#", "#.....#", ".#...#.", ".#...#.", ".#...#.", "..#.#..", "..#.#..", "...#..."}},
    {'W', 0, {"#.....#", "#.....#", "#.....#", "#.....#", "#..#..#", "#..#..#", "#.#.#.#", "##...##", "#.....#"}},
    {'X', 0, {"#.....#", ".#...#.", ".#...#.", "..#.#..", "...#...", "..#.#..", ".#...#.", ".#...#.", "#.....#"}},
    {'Y', 0, {"#.....#", ".#...#.", ".#...#.", "..#.#..", "...#...", "...#...", "...#...", "...#...", "...#..."}},
    {'Z', 0, {"#######", "......#", ".....#.", "....#..", "...#...", "..#....", ".#.....", "#......", "#######"}},
    {'[', 0, {"..###..", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....", "..###.."}},
    {'\\', 0, {"#......", ".#.....", "..#....", "..#....", "...#...", "....#..", ".....#.", ".....#.", "......#"}},
    {']', 0, {"..###..", "....#..", "....#..", "....#..", "....#..", "....#..", "....#..", "....#..", "..###.."}},
    {'^', 0, {"...#...", "..#.#..", ".#...#.", "#.....#", ".......", ".......", ".......", ".......", "......."}},
    {'_', 0, {".......", ".......", ".......", ".......", ".......", ".......", ".......", ".......", "#######"}},
    {'`', 0, {".#.....", "..#....", "...#...", ".......", ".......", ".......", ".......", ".......", "......."}},
    {'a', 1, {".#####.", "......#", ".######", "#.....#", "#....##", ".####.#"}},
    {'b', 0, {"#......", "#......", "#......", "######.", "#.....#", "#.....#", "#.....#", "#.....#", "######."}},
    {'c', 1, {".#####.", "#......", "#......", "#......", "#......", ".#####."}},
    {'d', 0, {"......#", "......#", "......#", ".######", "#.....#", "#.....#", "#.....#", "#.....#", ".######"}},
    {'e', 1, {".#####.", "#.....#", "#######", "#......", "#.....#", ".#####."}},
    {'f', 0, {"...####", "..#....", "..#....", "#####..", "..#....", "..#....", "..#....", "..#....", "..#...."}},
    {'g', 2, {".######", "#.....#", "#.....#", "#.....#", "#.....#", ".######", "......#", ".#####."}},
    {'h', 0, {"#......", "#......", "#......", "######.", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#"}},
    {'i', 1, {"...#...", ".......", "...#...", "...#...", "...#...", "...#..."}},
    {'j', 2, {"....#..", ".......", "....#..", "....#..", "....#..", "....#..", "....#..", ".###..."}},
    {'k', 0, {"#......", "#......", "#......", "#....#.", "#...#..", "####...", "#...#..", "#....#.", "#.....#"}},
    {'l', 0, {".##....", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....", "..#....", ".#####."}},
    {'m', 1, {"##..##.", "#..#..#", "#..#..#", "#..#..#", "#..#..#", "#..#..#"}},
    {'n', 1, {"#.####.", "##....#", "#.....#", "#.....#", "#.....#", "#.....#"}},
    {'o', 1, {".#####.", "#.....#", "#.....#", "#.....#", "#.....#", ".#####."}},
    {'p', 2, {"######.", "#.....#", "#.....#", "#.....#", "#.....#", "######.", "#......", "#......"}},
    {'q', 2, {".######", "#.....#", "#.....#", "#.....#", "#.....#", ".######", "......#", "......#"}},
    {'r', 1, {"#.####.", "##....#", "#......", "#......", "#......", "#......"}},
    {'s', 1, {".######", "#......", ".#####.", "......#", "......#", "######."}},
    {'t', 0, {"..#....", "..#....", "..#....", "######.", "..#....", "..#....", "..#....", "..#....", "...####"}},
    {'u', 1, {"#.....#", "#.....#", "#.....#", "#.....#", "#....##", ".####.#"}},
    {'v', 1, {"#.....#", "#.....#", ".#...#.", ".#...#.", "..#.#..", "...#..."}},
    {'w', 1, {"#.....#", "#.....#", "#..#..#", "#..#..#", "#.#.#.#", ".#...#."}},
    {'x', 1, {"#.....#", ".#...#.", "...#...", "...#...", ".#...#.", "#.....#"}},
    {'y', 2, {"#.....#", "#.....#", "#.....#", "#.....#", "#.....#", ".######", "......#", ".#####."}},
    {'z', 1, {"#######", ".....#.", "....#..", "..##...", ".#.....", "#######"}},
    {'{', 0, {"....##.", "...#...", "...#...", "..##...", "...#...", "...#...", "...#...", "....##.", "......."}},
    {'|', 0, {"...#...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...", "...#..."}},
    {'}', 0, {".##....", "....#..", "....#..", "...##..", "....#..", "....#..", "....#..", ".##....", "......."}},
    {'~', 0, {".......", ".......", ".......", ".##...#", "#..#..#", "#...##.", ".......", ".......", "......."}},
};

const GlyphArt* find_art(char c) {
    for (const GlyphArt& g : kGlyphArt)
        if (g.ch == c) return &g;
    return nullptr;
}

// Body resampling maps per x-height. Hand-picked so the structural rows
// (top, mid bar, bottom) survive squashing and stretching.
int src_row(int r, int target_rows) {
    static const int map5[5] = {0, 1, 2, 4, 5};
    static const int map6[6] = {0, 1, 2, 3, 4, 5};
    static const int map7[7] = {0, 1, 2, 3, 3, 4, 5};
    switch (target_rows) {
        case 5: return map5[r];
        case 6: return map6[r];
        case 7: return map7[r];
        default: return (2 * r + 1) * 3 / target_rows;
    }
}

bool is_word_space(char c) { return c == ' ' || c == '\t'; }

}  // namespace

SyntheticFont::SyntheticFont(int id) : id_(id) {
    switch (id) {
        case 0: advance_ = 11; xh_row_ = 3; break;  // plain
        case 1: advance_ = 11; xh_row_ = 3; break;  // heavy (horizontal double-stroke)
        case 2: advance_ = 11; xh_row_ = 2; break;  // serif, tall x-height
        case 3: advance_ = 12; xh_row_ = 4; break;  // squat, wide spacing
        case 4: advance_ = 12; xh_row_ = 2; break;  // tall, wide, rounded corners
        default: throw ConfigError("font id must be 0..4, got " + std::to_string(id));
    }

    for (int ci = 0; ci < 95; ++ci) {
        const char c = static_cast<char>(32 + ci);
        GlyphMask cell(advance_, kCellRows, 0);
        if (c != ' ') {
            const GlyphArt* art = find_art(c);
            if (!art) throw ConfigError(std::string("missing glyph art for '") + c + "'");
            auto stamp = [&](int band_row, const char* row) {
                for (int x = 0; x < kContentCols; ++x)
                    if (row[x] == '#') cell.set(x, band_row);
            };
            if (art->kind == 0) {
                for (int r = 0; r < 9; ++r) stamp(r, art->rows[r]);
            } else {
                const int target = 9 - xh_row_;
                for (int r = 0; r < target; ++r) stamp(xh_row_ + r, art->rows[src_row(r, target)]);
                if (art->kind == 2) {
                    stamp(9, art->rows[6]);
                    stamp(10, art->rows[7]);
                }
            }

            if (id == 1) {  // horizontal double-stroke, clipped to the content box
                GlyphMask src = cell;
                for (int y = 0; y < kCellRows; ++y)
                    for (int x = 0; x < kContentCols; ++x)
                        if (src.get(x - 1, y)) cell.set(x, y);
            } else if (id == 2) {
                // Serif stubs: widen stroke tips (runs of <= 2) in the top
                // ink row and the baseline row. Full bars stay untouched so
                // D/O-style pairs remain distinct.
                int top = -1;
                for (int y = 0; y < kCellRows && top < 0; ++y)
                    for (int x = 0; x < kContentCols; ++x)
                        if (cell.get(x, y)) {
                            top = y;
                            break;
                        }
                GlyphMask src = cell;
                for (int y : {top, 8}) {
                    if (y < 0) continue;
                    int x = 0;
                    while (x < kContentCols) {
                        if (!src.get(x, y)) {
                            ++x;
                            continue;
                        }
                        int run = x;
                        while (run < kContentCols && src.get(run, y)) ++run;
                        if (run - x <= 2) {
                            if (x - 1 >= 0) cell.set(x - 1, y);
                            if (run < kContentCols) cell.set(run, y);
                        }
                        x = run;
                    }
                }
            } else if (id == 4 && cell.ink_count() >= 12) {
                // Convex corner rounding, skipped for small marks whose
                // shape would not survive it. A pixel is a convex corner of
                // a solid elbow when exactly two perpendicular 4-neighbours
                // are inked and the diagonal between them is too; diagonal
                // stair-steps stay untouched.
                GlyphMask thick = cell;
                for (int y = 0; y < kCellRows; ++y)
                    for (int x = 0; x < kContentCols; ++x) {
                        if (!thick.get(x, y)) continue;
                        const bool n = thick.get(x, y - 1), s = thick.get(x, y + 1);
                        const bool w = thick.get(x - 1, y), e = thick.get(x + 1, y);
                        if (n + s + w + e != 2) continue;
                        const bool solid = (n && w && thick.get(x - 1, y - 1)) ||
                                           (n && e && thick.get(x + 1, y - 1)) ||
                                           (s && w && thick.get(x - 1, y + 1)) ||
                                           (s && e && thick.get(x + 1, y + 1));
                        if (solid) cell.clear(x, y);
                    }
            }
        }
        cells_[static_cast<size_t>(ci)] = std::move(cell);
    }
}

const SyntheticFont& SyntheticFont::get(int font_id) {
    if (font_id < 0 || font_id >= kFonts)
        throw ConfigError("font id must be 0..4, got " + std::to_string(font_id));
    static const SyntheticFont fonts[kFonts] = {SyntheticFont(0), SyntheticFont(1),
                                                SyntheticFont(2), SyntheticFont(3),
                                                SyntheticFont(4)};
    return fonts[font_id];
}

const GlyphMask& SyntheticFont::glyph(char c) const {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 32 || u > 126)
        throw ConfigError("glyph outside the rendered charset: code " + std::to_string(u));
    return cells_[static_cast<size_t>(u - 32)];
}

WordRaster rasterize_word(int font_id, const std::string& word, std::optional<Attr> attr) {
    const SyntheticFont& font = SyntheticFont::get(font_id);
    const int adv = font.advance();
    const int n = static_cast<int>(word.size());
    if (n == 0) throw ConfigError("rasterize_word: empty word");

    WordRaster wr;
    wr.mask = GlyphMask(1 + n * adv + 3, 15, -1);
    wr.content_x0 = 1;
    wr.content_x1 = 1 + (n - 1) * adv + SyntheticFont::kContentCols - 1;

    auto band_set = [&](int x, int band_row) { wr.mask.set(x, band_row + 1); };
    for (int i = 0; i < n; ++i) {
        const GlyphMask& cell = font.glyph(word[static_cast<size_t>(i)]);
        for (int y = 0; y < SyntheticFont::kCellRows; ++y)
            for (int x = 0; x < SyntheticFont::kContentCols; ++x)
                if (cell.get(x, y)) band_set(1 + i * adv + x, y);
    }

    if (attr == Attr::Bold) {
        GlyphMask src = wr.mask;
        for (int y = 0; y < wr.mask.h; ++y)
            for (int x = 0; x < wr.mask.w; ++x) {
                if (wr.mask.get(x, y)) continue;
                for (int dy = -1; dy <= 1 && !wr.mask.get(x, y); ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if (src.get(x + dx, y + dy)) {
                            wr.mask.set(x, y);
                            break;
                        }
            }
    } else if (attr == Attr::Italic) {
        // 0.25 right shear above the baseline; rows at and below it stay put.
        GlyphMask src = wr.mask;
        wr.mask = GlyphMask(src.w, src.h, src.row0);
        for (int m = 0; m < src.h; ++m) {
            const int band_row = m + src.row0;
            const int shift = band_row < SyntheticFont::kBaselineRow
                                  ? (SyntheticFont::kBaselineRow - band_row) / 4
                                  : 0;
            for (int x = 0; x < src.w; ++x)
                if (src.get(x, m)) wr.mask.set(x + shift, m);
        }
    } else if (attr == Attr::Underline) {
        // 2-px rule 2 px below the baseline, spanning the content extent.
        for (int band_row : {SyntheticFont::kBaselineRow + 2, SyntheticFont::kBaselineRow + 3})
            for (int x = wr.content_x0; x <= wr.content_x1; ++x) band_set(x, band_row);
    }
    return wr;
}

TextLayout layout_text(const RenderSpec& spec) {
    const SyntheticFont& font = SyntheticFont::get(spec.font_id);
    const int s = spec.scale;
    if (s < 1 || spec.width % s != 0 || spec.height % s != 0)
        throw ConfigError("render spec: canvas must be a multiple of scale");
    const int wb = spec.width / s, hb = spec.height / s;
    const int band_top = (hb - SyntheticFont::kCellRows) / 2;
    if (band_top < 1 || band_top + SyntheticFont::kCellRows + 2 > hb)
        throw ConfigError("render spec: canvas too short for the glyph band");

    const int adv = font.advance();
    const int n = static_cast<int>(spec.text.size());
    const int width_cols = n > 0 ? (n - 1) * adv + SyntheticFont::kContentCols : 0;
    constexpr int kMargin = 4;
    if (width_cols > wb - 2 * kMargin)
        throw LayoutError("text does not fit the canvas", (width_cols + 2 * kMargin) * s);

    TextLayout layout;
    layout.band_top = band_top;
    layout.scale = s;
    const int x0 = (wb - width_cols) / 2;
    int i = 0, word_index = 0;
    while (i < n) {
        if (is_word_space(spec.text[static_cast<size_t>(i)])) {
            ++i;
            continue;
        }
        int j = i;
        while (j < n && !is_word_space(spec.text[static_cast<size_t>(j)])) ++j;
        WordBox box;
        box.text = spec.text.substr(static_cast<size_t>(i), static_cast<size_t>(j - i));
        box.word_index = word_index++;
        box.x0 = x0 + i * adv;
        box.x1 = x0 + (j - 1) * adv + SyntheticFont::kContentCols - 1;
        layout.words.push_back(std::move(box));
        i = j;
    }
    return layout;
}

Image render(const RenderSpec& spec) {
    if (std::abs(luma(spec.fg) - luma(spec.bg)) < 64)
        throw ConfigError("render spec: fg/bg luma contrast below 64");
    TextLayout layout = layout_text(spec);

    std::map<int, Attr> attr_of;
    for (const WordSpan& sp : spec.spans) {
        if (sp.word_index < 0 || sp.word_index >= static_cast<int>(layout.words.size()))
            throw ConfigError("render spec: span word index out of range");
        if (!attr_of.emplace(sp.word_index, sp.attr).second)
            throw ConfigError("render spec: overlapping spans on one word");
    }

    const int s = spec.scale;
    const int wb = spec.width / s, hb = spec.height / s;
    GlyphMask canvas(wb, hb, 0);
    for (const WordBox& box : layout.words) {
        std::optional<Attr> attr;
        if (auto it = attr_of.find(box.word_index); it != attr_of.end()) attr = it->second;
        WordRaster wr = rasterize_word(spec.font_id, box.text, attr);
        for (int m = 0; m < wr.mask.h; ++m) {
            const int cy = layout.band_top + m + wr.mask.row0;
            if (cy < 0 || cy >= hb) continue;
            for (int x = 0; x < wr.mask.w; ++x)
                if (wr.mask.get(x, m)) canvas.set(box.x0 - 1 + x, cy);
        }
    }

    Image img(spec.width, spec.height, spec.bg);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            if (canvas.get(x / s, y / s)) img.set(x, y, spec.fg);
    return img;
}

// ---------------------------------------------------------------- corpora

const std::vector<std::string>& word_corpus() {
    static const std::vector<std::string> words = {
        "the",  "and",  "for",  "are",  "but",  "not",  "you",  "all",  "any",  "can",
        "her",  "was",  "one",  "our",  "out",  "day",  "get",  "has",  "him",  "his",
        "how",  "man",  "new",  "now",  "old",  "see",  "two",  "way",  "who",  "boy",
        "did",  "its",  "let",  "put",  "say",  "she",  "too",  "use",  "act",  "add",
        "age",  "ago",  "air",  "ant",  "art",  "ask",  "bad",  "bag",  "bat",  "bed",
        "bee",  "big",  "bit",  "box",  "bus",  "buy",  "cap",  "car",  "cat",  "cow",
        "cry",  "cup",  "cut",  "dog",  "dry",  "ear",  "eat",  "egg",  "end",  "eye",
        "far",  "few",  "fit",  "fix",  "fly",  "fog",  "fox",  "fun",  "gap",  "gas",
        "gem",  "hat",  "hen",  "hit",  "hot",  "ice",  "ink",  "jam",  "jar",  "jet",
        "job",  "joy",  "key",  "kid",  "law",  "leg",  "lip",  "log",  "low",  "map",
        "mat",  "mix",  "mud",  "net",  "nut",  "oak",  "oil",  "owl",  "pan",  "pen",
        "pet",  "pig",  "pin",  "pot",  "sky",  "sun",  "tea",  "ten",  "tin",  "top",
        "toy",  "van",  "war",  "web",  "wet",  "win",  "zoo",  "rain", "rock", "rose",
        "sand", "ship", "shop", "sing", "snow", "song", "star", "tree", "wolf", "bird",
        "blue", "book", "cake", "card", "cold", "corn", "dark", "deep", "door", "drum",
        "dust", "face", "farm", "fast", "fire", "fish", "flag", "food", "frog", "game",
        "gate", "gold", "good", "hand", "high", "hill", "home", "hope", "iron", "king",
        "lake", "lamp", "land", "leaf", "lion", "long", "moon", "milk", "mind", "mist",
        "nest", "open", "park", "path", "pond", "rice", "ring", "road", "room", "root",
        "sail", "salt", "seed", "silk", "soft", "soup", "tale", "tide", "time", "town",
        "wave", "wind", "wing", "word", "wool", "yard", "year",
    };
    return words;
}

namespace {

// Widest font must fit the default 256-col canvas with margins.
bool excerpt_fits(const std::string& text) {
    const int n = static_cast<int>(text.size());
    return n > 0 && (n - 1) * 12 + 7 <= 256 - 8;
}

std::string compose_excerpt(Rng& rng, int words) {
    const auto& corpus = word_corpus();
    while (true) {
        std::vector<int> picks;
        std::string text;
        for (int w = 0; w < words; ++w) {
            int idx;
            do {
                idx = static_cast<int>(rng.next_below(static_cast<uint32_t>(corpus.size())));
            } while (std::find(picks.begin(), picks.end(), idx) != picks.end());
            picks.push_back(idx);
            if (w) text += ' ';
            text += corpus[static_cast<size_t>(idx)];
        }
        if (excerpt_fits(text)) return text;
    }
}

}  // namespace

std::vector<std::string> build_excerpts(int count, uint64_t seed) {
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::split(seed, static_cast<uint64_t>(i));
        out.push_back(compose_excerpt(rng, 5));
    }
    return out;
}

const std::array<RGB, 12>& color_palette() {
    static const std::array<RGB, 12> pal = {{{0, 0, 0},
                                             {255, 255, 255},
                                             {200, 30, 30},
                                             {30, 120, 40},
                                             {20, 60, 160},
                                             {80, 170, 200},
                                             {230, 150, 30},
                                             {240, 220, 60},
                                             {120, 40, 140},
                                             {90, 90, 90},
                                             {170, 170, 170},
                                             {40, 160, 150}}};
    return pal;
}

std::pair<RGB, RGB> pick_colors(Rng& rng) {
    const auto& pal = color_palette();
    while (true) {
        const RGB bg = pal[rng.next_below(12)];
        const RGB fg = pal[rng.next_below(12)];
        if (std::abs(luma(fg) - luma(bg)) >= 64) return {bg, fg};
    }
}

// ---------------------------------------------------------------- prompts

std::string make_prompt(const std::string& stripped, const std::vector<WordSpan>& spans,
                        int font_id) {
    std::map<int, Attr> attr_of;
    for (const WordSpan& sp : spans) attr_of[sp.word_index] = sp.attr;

    static const char* kOpen[3] = {"<b*>", "<i*>", "<u*>"};
    static const char* kClose[3] = {"<\\b*>", "<\\i*>", "<\\u*>"};

    std::string out;
    const int n = static_cast<int>(stripped.size());
    int i = 0, word_index = 0;
    while (i < n) {
        if (is_word_space(stripped[static_cast<size_t>(i)])) {
            out += stripped[static_cast<size_t>(i)];
            ++i;
            continue;
        }
        int j = i;
        while (j < n && !is_word_space(stripped[static_cast<size_t>(j)])) ++j;
        const std::string word = stripped.substr(static_cast<size_t>(i), static_cast<size_t>(j - i));
        if (auto it = attr_of.find(word_index); it != attr_of.end()) {
            const int a = static_cast<int>(it->second);
            out += kOpen[a];
            out += word;
            out += kClose[a];
        } else {
            out += word;
        }
        ++word_index;
        i = j;
    }
    if (font_id >= 0) out += " <font:" + std::to_string(font_id) + ">";
    return out;
}

// ---------------------------------------------------------------- variants

std::vector<Sample> build_variants(const std::string& excerpt, int font_id,
                                   const std::vector<int>& positions) {
    std::vector<std::string> words;
    {
        std::istringstream is(excerpt);
        std::string w;
        while (is >> w) words.push_back(w);
    }
    if (words.size() < 5) throw ConfigError("build_variants: excerpt needs at least 5 words");
    if (positions.size() != 5) throw ConfigError("build_variants: exactly 5 positions required");
    for (size_t a = 0; a < positions.size(); ++a) {
        if (positions[a] < 0 || positions[a] >= static_cast<int>(words.size()))
            throw ConfigError("build_variants: position out of range");
        for (size_t b = a + 1; b < positions.size(); ++b)
            if (positions[a] == positions[b])
                throw ConfigError("build_variants: positions must be distinct");
    }

    const uint64_t seed =
        fnv1a64(reinterpret_cast<const uint8_t*>(excerpt.data()), excerpt.size()) ^
        (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(font_id + 1));

    std::vector<Sample> out;
    out.reserve(16);
    for (int v = 0; v < 16; ++v) {
        std::vector<WordSpan> spans;
        if (v > 0) {
            const int pos = positions[static_cast<size_t>((v - 1) / 3)];
            const Attr attr = static_cast<Attr>((v - 1) % 3);
            spans.push_back(WordSpan{pos, attr});
        }
        Rng rng = Rng::split(seed, static_cast<uint64_t>(v));
        auto [bg, fg] = pick_colors(rng);

        Sample s;
        s.spec = RenderSpec{excerpt, spans, font_id, fg, bg, 256, 64, 1};
        s.prompt = make_prompt(excerpt, spans, font_id);
        s.truth.stripped = excerpt;
        s.truth.font_id = font_id;
        for (const WordSpan& sp : spans)
            s.truth.spans.push_back(
                WordTruth{sp.word_index, sp.attr, words[static_cast<size_t>(sp.word_index)]});
        s.image = render(s.spec);
        s.hash = s.image.hash();
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<BenchPrompt> build_btr_bench(int n, uint64_t seed) {
    if (n <= 0) throw ConfigError("build_btr_bench: n must be positive");
    const auto& corpus = word_corpus();
    std::vector<BenchPrompt> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::split(seed ^ 0xb7a3ULL, static_cast<uint64_t>(i));
        std::string text;
        std::vector<std::string> words;
        while (true) {
            words.clear();
            text.clear();
            std::vector<int> picks;
            for (int w = 0; w < 5; ++w) {
                int idx;
                do {
                    idx = static_cast<int>(rng.next_below(static_cast<uint32_t>(corpus.size())));
                } while (std::find(picks.begin(), picks.end(), idx) != picks.end());
                picks.push_back(idx);
                if (w) text += ' ';
                text += corpus[static_cast<size_t>(idx)];
                words.push_back(corpus[static_cast<size_t>(idx)]);
            }
            if (excerpt_fits(text)) break;
        }

        // 3 distinct positions out of 5, uniform over subsets.
        int slots[5] = {0, 1, 2, 3, 4};
        for (int k = 0; k < 3; ++k) {
            const int r = k + static_cast<int>(rng.next_below(static_cast<uint32_t>(5 - k)));
            std::swap(slots[k], slots[r]);
        }
        std::vector<int> pos(slots, slots + 3);
        std::sort(pos.begin(), pos.end());

        BenchPrompt bp;
        bp.truth.stripped = text;
        bp.truth.font_id = static_cast<int>(rng.next_below(5));
        std::vector<WordSpan> spans;
        for (int p : pos) {
            const Attr a = static_cast<Attr>(rng.next_below(3));
            spans.push_back(WordSpan{p, a});
            bp.truth.spans.push_back(WordTruth{p, a, words[static_cast<size_t>(p)]});
        }
        bp.prompt = make_prompt(text, spans, bp.truth.font_id);
        out.push_back(std::move(bp));
    }
    return out;
}

// ---------------------------------------------------------------- styles

namespace {

RGB clamp_rgb(int r, int g, int b) {
    auto cl = [](int v) { return static_cast<uint8_t>(std::clamp(v, 0, 255)); };
    return RGB{cl(r), cl(g), cl(b)};
}

RGB jitter(RGB base, Rng& rng, int amp) {
    auto d = [&]() { return static_cast<int>(rng.next_below(static_cast<uint32_t>(2 * amp + 1))) - amp; };
    return clamp_rgb(base.r + d(), base.g + d(), base.b + d());
}

RGB lerp_rgb(RGB a, RGB b, float t) {
    auto mix = [&](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * t)); };
    return clamp_rgb(mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b));
}

const char* kToneNames[12] = {"black", "white",  "red",    "green",  "navy",   "sky",
                              "amber", "yellow", "purple", "gray",   "silver", "teal"};

int palette_index(RGB c) {
    const auto& pal = color_palette();
    for (int i = 0; i < 12; ++i)
        if (pal[static_cast<size_t>(i)] == c) return i;
    return 0;
}

}  // namespace

StyleSets build_style_sets(uint64_t seed, int n_general, int n_artext) {
    StyleSets sets;
    sets.general.reserve(static_cast<size_t>(n_general));
    sets.artext.reserve(static_cast<size_t>(n_artext));

    static const char* kPatternNames[4] = {"horizontal stripes", "vertical stripes",
                                           "diagonal stripes", "checker blocks"};
    for (int i = 0; i < n_general; ++i) {
        Rng rng = Rng::split(seed ^ 0x5c5c01ULL, static_cast<uint64_t>(i));
        const int kind = static_cast<int>(rng.next_below(5));  // 4 = value noise
        const int pal_idx = static_cast<int>(rng.next_below(12));
        const RGB base = color_palette()[static_cast<size_t>(pal_idx)];
        // Palette stays within the OCR ink threshold so textures carry no ink.
        const RGB c0 = jitter(base, rng, 18);
        const RGB c1 = jitter(base, rng, 18);
        const int period = 2 + static_cast<int>(rng.next_below(5));
        const int phase = static_cast<int>(rng.next_below(static_cast<uint32_t>(period)));
        const uint64_t cell_salt = rng.next_u64();

        StyleSample s;
        s.image = Image(64, 64, c0);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                bool on = false;
                if (kind == 0) on = ((y + phase) / period) % 2 == 0;
                else if (kind == 1) on = ((x + phase) / period) % 2 == 0;
                else if (kind == 2) on = ((x + y + phase) / period) % 2 == 0;
                else if (kind == 3) on = (((x + phase) / period) + ((y + phase) / period)) % 2 == 0;
                else {
                    Rng h(cell_salt ^ (static_cast<uint64_t>(x / period) * 1315423911ULL) ^
                          (static_cast<uint64_t>(y / period) * 2654435761ULL));
                    on = (h.next_u64() & 1) != 0;
                }
                if (on) s.image.set(x, y, c1);
            }
        std::string density = period <= 3 ? "fine" : period <= 5 ? "medium" : "coarse";
        s.prompt = density + " " +
                   (kind == 4 ? std::string("noise texture") : kPatternNames[kind]) + " in " +
                   kToneNames[pal_idx] + " tones";
        s.style_class = kind * 12 + pal_idx;
        sets.general.push_back(std::move(s));
    }

    static const char* kStyleNames[3] = {"checker fill", "gradient fill", "outline"};
    const auto& corpus = word_corpus();
    for (int i = 0; i < n_artext; ++i) {
        Rng rng = Rng::split(seed ^ 0xa27e02ULL, static_cast<uint64_t>(i));
        const std::string word = corpus[rng.next_below(static_cast<uint32_t>(corpus.size()))];
        const int font_id = static_cast<int>(rng.next_below(5));
        const int kind = static_cast<int>(rng.next_below(3));
        auto [bg, ca] = pick_colors(rng);
        RGB cb = ca;
        for (int tries = 0; tries < 64; ++tries) {
            const RGB cand = color_palette()[rng.next_below(12)];
            if (!(cand == ca) && std::abs(luma(cand) - luma(bg)) >= 64) {
                cb = cand;
                break;
            }
        }

        RenderSpec spec{word, {}, font_id, ca, bg, 64, 64, 1};
        StyleSample s;
        s.image = render(spec);
        s.content_word = word;

        // Recolor the ink while keeping every ink pixel past the OCR
        // binarization threshold.
        auto is_ink = [&](int x, int y) { return !(s.image.get(x, y) == bg); };
        Image styled = s.image;
        int x0 = 64, x1 = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (is_ink(x, y)) {
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                }
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                if (!is_ink(x, y)) continue;
                RGB c = ca;
                if (kind == 0) {
                    c = (((x >> 1) + (y >> 1)) & 1) ? ca : cb;
                } else if (kind == 1) {
                    const float t = x1 > x0 ? static_cast<float>(x - x0) / (x1 - x0) : 0.f;
                    c = lerp_rgb(ca, cb, t);
                } else {
                    const bool border = !is_ink(x - 1, y) || !is_ink(x + 1, y) ||
                                        !is_ink(x, y - 1) || !is_ink(x, y + 1) || x == 0 ||
                                        x == 63 || y == 0 || y == 63;
                    if (border) {
                        c = ca;
                    } else {
                        c = lerp_rgb(bg, cb, 0.45f);
                        if (color_dist2(c, bg) <= 5853) c = lerp_rgb(bg, cb, 0.75f);
                        if (color_dist2(c, bg) <= 5853) c = cb;
                    }
                }
                styled.set(x, y, c);
            }
        s.image = std::move(styled);
        s.prompt = "Text: '" + word + "', " + kStyleNames[kind] + " in " +
                   kToneNames[palette_index(ca)] + " and " + kToneNames[palette_index(cb)];
        s.style_class = kind * 144 + palette_index(ca) * 12 + palette_index(cb);
        sets.artext.push_back(std::move(s));
    }
    return sets;
}

// ---------------------------------------------------------------- files

namespace {

using ordered_json = nlohmann::ordered_json;

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ordered_json truth_to_json(const SampleTruth& t) {
    ordered_json spans = ordered_json::array();
    for (const WordTruth& w : t.spans)
        spans.push_back({{"word", w.word_index}, {"attr", attr_name(w.attr)}, {"text", w.word}});
    return {{"stripped", t.stripped}, {"font", t.font_id}, {"spans", spans}};
}

SampleTruth truth_from_json(const nlohmann::json& j) {
    SampleTruth t;
    t.stripped = j.at("stripped").get<std::string>();
    t.font_id = j.at("font").get<int>();
    for (const auto& s : j.at("spans")) {
        const std::string an = s.at("attr").get<std::string>();
        Attr a = Attr::Bold;
        if (an == "italic") a = Attr::Italic;
        else if (an == "underline") a = Attr::Underline;
        else if (an != "bold") throw IoError("unknown attr in manifest: " + an);
        t.spans.push_back(WordTruth{s.at("word").get<int>(), a, s.at("text").get<std::string>()});
    }
    return t;
}

}  // namespace

DatasetStats write_tc_dataset(const DatasetConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(cfg.out_dir) / "img");
    std::ofstream manifest(fs::path(cfg.out_dir) / "manifest.jsonl", std::ios::trunc);
    if (!manifest) throw IoError("cannot write manifest in " + cfg.out_dir);

    const std::vector<std::string> excerpts = build_excerpts(cfg.excerpt_count, cfg.seed);
    const std::vector<int> positions = {0, 1, 2, 3, 4};

    DatasetStats stats;
    for (const std::string& excerpt : excerpts) {
        for (int font = 0; font < SyntheticFont::kFonts; ++font) {
            for (Sample& s : build_variants(excerpt, font, positions)) {
                char rel[32];
                std::snprintf(rel, sizeof rel, "img/%07lld.ppm",
                              static_cast<long long>(stats.sample_count));
                write_ppm(s.image, (fs::path(cfg.out_dir) / rel).string());

                ordered_json j = {{"prompt", s.prompt},
                                  {"truth", truth_to_json(s.truth)},
                                  {"fg", {s.spec.fg.r, s.spec.fg.g, s.spec.fg.b}},
                                  {"bg", {s.spec.bg.r, s.spec.bg.g, s.spec.bg.b}},
                                  {"image", rel},
                                  {"hash", hash_hex(s.hash)},
                                  {"w", s.image.width},
                                  {"h", s.image.height}};
                manifest << j.dump() << "\n";
                ++stats.sample_count;
            }
        }
    }
    if (!manifest) throw IoError("manifest write failed in " + cfg.out_dir);
    return stats;
}

std::vector<ManifestEntry> read_manifest(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("cannot open manifest: " + manifest_path);
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        ManifestEntry e;
        e.prompt = j.at("prompt").get<std::string>();
        e.truth = truth_from_json(j.at("truth"));
        const auto& fg = j.at("fg");
        const auto& bg = j.at("bg");
        e.fg = RGB{fg[0].get<uint8_t>(), fg[1].get<uint8_t>(), fg[2].get<uint8_t>()};
        e.bg = RGB{bg[0].get<uint8_t>(), bg[1].get<uint8_t>(), bg[2].get<uint8_t>()};
        e.image_path = j.at("image").get<std::string>();
        e.hash = std::stoull(j.at("hash").get<std::string>(), nullptr, 16);
        e.width = j.at("w").get<int>();
        e.height = j.at("h").get<int>();
        out.push_back(std::move(e));
    }
    return out;
}

void write_btr_bench_file(const std::string& path, const std::vector<BenchPrompt>& bench) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write bench file: " + path);
    for (const BenchPrompt& b : bench) {
        ordered_json j = {{"prompt", b.prompt}, {"truth", truth_to_json(b.truth)}};
        os << j.dump() << "\n";
    }
}

std::vector<BenchPrompt> read_btr_bench_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open bench file: " + path);
    std::vector<BenchPrompt> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        BenchPrompt b;
        b.prompt = j.at("prompt").get<std::string>();
        b.truth = truth_from_json(j.at("truth"));
        out.push_back(std::move(b));
    }
    return out;
}

Image crop_window(const Image& canvas, int center_x_px, int size) {
    if (canvas.width < size || canvas.height < size)
        throw ConfigError("crop_window: canvas smaller than the window");
    int x0 = std::clamp(center_x_px - size / 2, 0, canvas.width - size);
    const int y0 = (canvas.height - size) / 2;
    Image out(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) out.set(x, y, canvas.get(x0 + x, y0 + y));
    return out;
}

}  // namespace typoflow
