#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "typoflow/glyphsynth.hpp"
#include "typoflow/tokenizer.hpp"

using namespace typoflow;

namespace {

int ink_count(const Image& img, RGB bg) {
    int n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (!(img.get(x, y) == bg)) ++n;
    return n;
}

int ink_in_cols(const Image& img, RGB bg, int x0, int x1) {
    int n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = x0; x <= x1; ++x)
            if (!(img.get(x, y) == bg)) ++n;
    return n;
}

RenderSpec base_spec(const std::string& text, int font = 0) {
    RenderSpec s;
    s.text = text;
    s.font_id = font;
    return s;
}

}  // namespace

TEST_CASE("render is deterministic") {
    RenderSpec spec = base_spec("the quick fox");
    Image a = render(spec);
    Image b = render(spec);
    CHECK(a == b);
}

TEST_CASE("bold increases ink only inside the annotated word") {
    for (int font = 0; font < 5; ++font) {
        RenderSpec plain = base_spec("pond card mist", font);
        RenderSpec bold = plain;
        bold.spans = {WordSpan{1, Attr::Bold}};
        Image ip = render(plain);
        Image ib = render(bold);
        TextLayout lay = layout_text(plain);
        REQUIRE(lay.words.size() == 3);

        const WordBox& w = lay.words[1];
        CHECK(ink_in_cols(ib, bold.bg, w.x0, w.x1) > ink_in_cols(ip, plain.bg, w.x0, w.x1));

        // pixel diff confined to the word extent plus <= 3 columns of overhang
        int diff_lo = ip.width, diff_hi = -1;
        for (int y = 0; y < ip.height; ++y)
            for (int x = 0; x < ip.width; ++x)
                if (!(ip.get(x, y) == ib.get(x, y))) {
                    diff_lo = std::min(diff_lo, x);
                    diff_hi = std::max(diff_hi, x);
                }
        REQUIRE(diff_hi >= 0);
        CHECK(diff_lo >= w.x0 - 3);
        CHECK(diff_hi <= w.x1 + 3);
    }
}

TEST_CASE("italic preserves ink count and stays local") {
    for (int font = 0; font < 5; ++font) {
        RenderSpec plain = base_spec("lamp tide frog", font);
        RenderSpec ital = plain;
        ital.spans = {WordSpan{2, Attr::Italic}};
        Image ip = render(plain);
        Image ii = render(ital);
        const int np = ink_count(ip, plain.bg);
        const int ni = ink_count(ii, ital.bg);
        CHECK(std::abs(ni - np) <= np / 10);

        TextLayout lay = layout_text(plain);
        const WordBox& w = lay.words[2];
        for (int y = 0; y < ip.height; ++y)
            for (int x = 0; x < ip.width; ++x)
                if (!(ip.get(x, y) == ii.get(x, y))) {
                    CHECK(x >= w.x0);
                    CHECK(x <= w.x1 + 3);
                }
    }
}

TEST_CASE("underline adds a high-coverage row below the baseline") {
    for (int font = 0; font < 5; ++font) {
        RenderSpec plain = base_spec("salt pond gate", font);
        RenderSpec under = plain;
        under.spans = {WordSpan{0, Attr::Underline}};
        Image ip = render(plain);
        Image iu = render(under);
        TextLayout lay = layout_text(plain);
        const WordBox& w = lay.words[0];
        const int baseline = lay.band_top + SyntheticFont::kBaselineRow - 1;  // last body row
        const int width = w.x1 - w.x0 + 1;

        auto coverage_row = [&](const Image& img, RGB bg) {
            for (int y = baseline + 1; y <= baseline + 4; ++y) {
                int cov = 0;
                for (int x = w.x0; x <= w.x1; ++x)
                    if (!(img.get(x, y) == bg)) ++cov;
                if (cov * 5 >= width * 4) return y;
            }
            return -1;
        };
        CHECK(coverage_row(iu, under.bg) != -1);
        CHECK(coverage_row(ip, plain.bg) == -1);

        // added ink between 1.5x and 2.5x the word width
        const int added = ink_count(iu, under.bg) - ink_count(ip, plain.bg);
        CHECK(added >= width * 3 / 2);
        CHECK(added <= width * 5 / 2);
    }
}

TEST_CASE("any two fonts differ on at least 30 percent of pangram ink") {
    const std::string pangram = "the quick brown fox";
    Image imgs[5];
    for (int f = 0; f < 5; ++f) imgs[f] = render(base_spec(pangram, f));
    const RGB bg{255, 255, 255};
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) {
            int xor_count = 0, ink_a = 0, ink_b = 0;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 256; ++x) {
                    const bool pa = !(imgs[a].get(x, y) == bg);
                    const bool pb = !(imgs[b].get(x, y) == bg);
                    ink_a += pa;
                    ink_b += pb;
                    xor_count += pa != pb;
                }
            INFO("fonts " << a << " vs " << b << ": xor=" << xor_count
                          << " max_ink=" << std::max(ink_a, ink_b));
            CHECK(xor_count * 10 >= std::max(ink_a, ink_b) * 3);
        }
}

TEST_CASE("glyphs are pairwise distinct and column-connected") {
    for (int f = 0; f < 5; ++f) {
        const SyntheticFont& font = SyntheticFont::get(f);
        std::vector<std::pair<char, const GlyphMask*>> masks;
        for (int c = 33; c <= 126; ++c) masks.push_back({static_cast<char>(c), &font.glyph(static_cast<char>(c))});
        for (size_t i = 0; i < masks.size(); ++i) {
            CHECK(masks[i].second->ink_count() > 0);
            for (size_t j = i + 1; j < masks.size(); ++j) {
                INFO("font " << f << " chars '" << masks[i].first << "' vs '" << masks[j].first << "'");
                CHECK(masks[i].second->on != masks[j].second->on);
            }
        }
    }

    // Column profile of single-char rasters under plain/bold/italic, over
    // the glyph band rows: internal blank gaps must stay below 2 columns so
    // cell segmentation (which bridges 1-column gaps) keeps each glyph whole.
    const std::optional<Attr> attrs[3] = {std::nullopt, Attr::Bold, Attr::Italic};
    for (int f = 0; f < 5; ++f)
        for (int c = 33; c <= 126; ++c)
            for (const auto& attr : attrs) {
                WordRaster wr = rasterize_word(f, std::string(1, static_cast<char>(c)), attr);
                int lo = wr.mask.w, hi = -1;
                auto col_ink = [&](int x) {
                    for (int band = 0; band < SyntheticFont::kCellRows; ++band)
                        if (wr.mask.get(x, band - wr.mask.row0)) return true;
                    return false;
                };
                for (int x = 0; x < wr.mask.w; ++x)
                    if (col_ink(x)) {
                        lo = std::min(lo, x);
                        hi = std::max(hi, x);
                    }
                REQUIRE(hi >= 0);
                int gap = 0, max_gap = 0;
                for (int x = lo; x <= hi; ++x) {
                    gap = col_ink(x) ? 0 : gap + 1;
                    max_gap = std::max(max_gap, gap);
                }
                INFO("font " << f << " char '" << static_cast<char>(c) << "' attr "
                             << (attr ? attr_name(*attr) : "plain"));
                CHECK(max_gap <= 1);
            }
}

TEST_CASE("adjacent glyphs keep at least two blank separating columns") {
    // Cell segmentation bridges 1-column gaps, so any attribute combination
    // must leave >= 2 blank columns between neighbouring glyph cells.
    const std::optional<Attr> attrs[3] = {std::nullopt, Attr::Bold, Attr::Italic};
    for (int f = 0; f < 5; ++f)
        for (const auto& attr : attrs) {
            WordRaster wr = rasterize_word(f, "mwm", attr);
            const int adv = SyntheticFont::get(f).advance();
            auto col_ink = [&](int x) {
                for (int y = 0; y < wr.mask.h; ++y)
                    if (wr.mask.get(x, y)) return true;
                return false;
            };
            for (int gap_start : {1 + 7, 1 + adv + 7}) {
                int blanks = 0;
                for (int x = gap_start; x < gap_start + adv - 7 + 1; ++x)
                    if (!col_ink(x)) ++blanks;
                INFO("font " << f << " attr " << (attr ? attr_name(*attr) : "plain"));
                CHECK(blanks >= 2);
            }
        }
}

TEST_CASE("layout overflow reports the required width") {
    RenderSpec spec = base_spec("aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa");
    try {
        layout_text(spec);
        FAIL("expected LayoutError");
    } catch (const LayoutError& e) {
        CHECK(e.required_width > 256);
    }
}

TEST_CASE("contrast floor is enforced") {
    RenderSpec spec = base_spec("ink");
    spec.fg = RGB{200, 200, 200};
    spec.bg = RGB{255, 255, 255};
    CHECK_THROWS_AS(render(spec), ConfigError);
}

TEST_CASE("build_variants returns the sixteen-image recipe") {
    const std::string excerpt = "the card rose pond mist";
    auto samples = build_variants(excerpt, 2, {0, 1, 2, 3, 4});
    REQUIRE(samples.size() == 16);
    int with_one_span = 0;
    std::set<std::string> strippeds;
    for (const Sample& s : samples) {
        strippeds.insert(parse_prompt(s.prompt).stripped_text);
        if (s.truth.spans.size() == 1) ++with_one_span;
        CHECK(s.truth.font_id == 2);
        CHECK(s.hash == s.image.hash());
        // re-render reproduces the stored image bitwise
        CHECK(render(s.spec).hash() == s.hash);
    }
    CHECK(with_one_span == 15);
    CHECK(samples[0].truth.spans.empty());
    CHECK(strippeds.size() == 1);  // markup removal invariance

    // all (position, attr) combinations appear exactly once
    std::set<std::pair<int, int>> combos;
    for (const Sample& s : samples)
        for (const WordTruth& w : s.truth.spans)
            combos.insert({w.word_index, static_cast<int>(w.attr)});
    CHECK(combos.size() == 15);

    CHECK_THROWS_AS(build_variants("one two three four", 0, {0, 1, 2, 3, 4}), ConfigError);
    CHECK_THROWS_AS(build_variants(excerpt, 0, {0, 1, 2, 3, 3}), ConfigError);
}

TEST_CASE("btr bench shape, determinism and histogram uniformity") {
    auto bench = build_btr_bench(100, 42);
    REQUIRE(bench.size() == 100);
    for (const BenchPrompt& b : bench) {
        CHECK(b.truth.spans.size() == 3);
        TokenSequence seq = parse_prompt(b.prompt);
        CHECK(seq.spans.size() == 3);
        CHECK(seq.font_id == b.truth.font_id);
    }
    auto again = build_btr_bench(100, 42);
    for (size_t i = 0; i < bench.size(); ++i) CHECK(bench[i].prompt == again[i].prompt);

    // n=10000: per-cell counts within 3 sigma of the multinomial expectation
    auto big = build_btr_bench(10000, 7);
    int attr_counts[3] = {0, 0, 0};
    int pos_counts[5] = {0, 0, 0, 0, 0};
    for (const BenchPrompt& b : big)
        for (const WordTruth& w : b.truth.spans) {
            attr_counts[static_cast<int>(w.attr)]++;
            pos_counts[w.word_index]++;
        }
    for (int a = 0; a < 3; ++a) {
        const double expect = 10000.0, sigma = std::sqrt(30000.0 * (1.0 / 3) * (2.0 / 3));
        CHECK(std::abs(attr_counts[a] - expect) <= 3 * sigma);
    }
    for (int p = 0; p < 5; ++p) {
        const double expect = 6000.0, sigma = std::sqrt(10000.0 * 0.6 * 0.4);
        CHECK(std::abs(pos_counts[p] - expect) <= 3 * sigma);
    }
}

TEST_CASE("style sets follow the recipe") {
    StyleSets sets = build_style_sets(9, 64, 32);
    CHECK(sets.general.size() == 64);
    CHECK(sets.artext.size() == 32);

    // textures stay under the ink binarization threshold everywhere
    for (const StyleSample& s : sets.general) {
        CHECK(s.content_word.empty());
        int max_d2 = 0;
        const RGB c0 = s.image.get(0, 0);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) max_d2 = std::max(max_d2, color_dist2(c0, s.image.get(x, y)));
        CHECK(max_d2 <= 5852);
        CHECK(s.prompt.size() <= 62);
    }

    for (const StyleSample& s : sets.artext) {
        // the prompt quotes exactly the truth word
        const size_t q0 = s.prompt.find('\'');
        const size_t q1 = s.prompt.find('\'', q0 + 1);
        REQUIRE(q0 != std::string::npos);
        REQUIRE(q1 != std::string::npos);
        CHECK(s.prompt.substr(q0 + 1, q1 - q0 - 1) == s.content_word);
        CHECK(s.prompt.size() <= 62);
    }
}

TEST_CASE("crop window is clamped and sized") {
    Image canvas(256, 64, RGB{10, 20, 30});
    canvas.set(100, 32, RGB{200, 0, 0});
    Image c = crop_window(canvas, 100);
    CHECK(c.width == 64);
    CHECK(c.height == 64);
    CHECK(c.get(32, 32) == RGB{200, 0, 0});
    Image edge = crop_window(canvas, 2);
    CHECK(edge.get(2, 32) == canvas.get(2, 32));
}

TEST_CASE("dataset excerpts have five distinct words and fit every font") {
    auto excerpts = build_excerpts(50, 3);
    CHECK(excerpts.size() == 50);
    for (const std::string& e : excerpts) {
        std::istringstream is(e);
        std::set<std::string> words;
        std::string w;
        while (is >> w) words.insert(w);
        CHECK(words.size() == 5);
        for (int f = 0; f < 5; ++f) {
            RenderSpec spec = base_spec(e, f);
            CHECK_NOTHROW(layout_text(spec));
        }
    }
}
