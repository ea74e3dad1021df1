#include "typoflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"
#include "typoflow/errors.hpp"

namespace typoflow {

namespace {

constexpr double kRejectScore = 0.25;  // normalized hamming above this -> '?'
constexpr int kWordGapCols = 12;
constexpr double kBoldInkRatio = 1.15;
constexpr double kItalicSlope = 0.12;

int attr_rank(const std::optional<Attr>& a) { return a ? static_cast<int>(*a) : -1; }

}  // namespace

GlyphAtlas::GlyphAtlas() {
    const std::optional<Attr> attrs[4] = {std::nullopt, Attr::Bold, Attr::Italic, Attr::Underline};
    for (int f = 0; f < SyntheticFont::kFonts; ++f) {
        for (int c = 33; c <= 126; ++c) {
            for (const auto& attr : attrs) {
                WordRaster wr = rasterize_word(f, std::string(1, static_cast<char>(c)), attr);
                AtlasCell cell;
                cell.ch = static_cast<char>(c);
                cell.font = f;
                cell.attr = attr_rank(attr);
                cell.mask = wr.mask;
                cell.x0 = wr.mask.w;
                cell.x1 = -1;
                cell.band_ink = 0;
                for (int x = 0; x < wr.mask.w; ++x)
                    for (int band = 0; band < SyntheticFont::kCellRows; ++band)
                        if (wr.mask.get(x, band - wr.mask.row0)) {
                            cell.x0 = std::min(cell.x0, x);
                            cell.x1 = std::max(cell.x1, x);
                            ++cell.band_ink;
                        }
                if (!attr) plain_ink_[f][c - 32] = cell.band_ink;
                cells_.push_back(std::move(cell));
            }
        }
        plain_ink_[f][0] = 0;  // space
    }
}

const GlyphAtlas& GlyphAtlas::get() {
    static const GlyphAtlas atlas;
    return atlas;
}

int GlyphAtlas::plain_ink(int font, char c) const {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 32 || u > 126) return 0;
    return plain_ink_[font][u - 32];
}

RGB estimate_background(const Image& img) {
    // Per-channel median; robust to generation noise as long as ink stays a
    // minority of the pixels.
    std::vector<uint8_t> ch(static_cast<size_t>(img.width) * img.height);
    RGB bg;
    for (int c = 0; c < 3; ++c) {
        for (size_t i = 0; i < ch.size(); ++i) ch[i] = img.rgb[i * 3 + static_cast<size_t>(c)];
        auto mid = ch.begin() + static_cast<std::ptrdiff_t>(ch.size() / 2);
        std::nth_element(ch.begin(), mid, ch.end());
        const uint8_t v = *mid;
        if (c == 0) bg.r = v;
        else if (c == 1) bg.g = v;
        else bg.b = v;
    }
    return bg;
}

namespace {

struct InkGrid {
    int w, h;
    int band_top;
    std::vector<uint8_t> ink;
    bool get(int x, int y) const {
        if (x < 0 || x >= w || y < 0 || y >= h) return false;
        return ink[static_cast<size_t>(y) * w + x] != 0;
    }
    // band row b of the glyph grid -> canvas row
    bool band(int x, int b) const { return get(x, band_top + b); }
};

InkGrid binarize(const Image& img) {
    InkGrid g;
    g.w = img.width;
    g.h = img.height;
    g.band_top = (img.height - SyntheticFont::kCellRows) / 2;
    g.ink.assign(static_cast<size_t>(g.w) * g.h, 0);
    const RGB bg = estimate_background(img);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x)
            if (color_dist2(img.get(x, y), bg) > kInkDist2)
                g.ink[static_cast<size_t>(y) * g.w + x] = 1;
    return g;
}

bool col_has_band_ink(const InkGrid& g, int x) {
    for (int b = 0; b < SyntheticFont::kCellRows; ++b)
        if (g.band(x, b)) return true;
    return false;
}

struct Run {
    int x0, x1;
};

// Maximal ink column runs over the glyph band, bridging single blank columns.
std::vector<Run> segment_runs(const InkGrid& g) {
    std::vector<Run> runs;
    int x = 0;
    while (x < g.w) {
        if (!col_has_band_ink(g, x)) {
            ++x;
            continue;
        }
        int end = x;
        int cursor = x;
        while (cursor + 1 < g.w) {
            if (col_has_band_ink(g, cursor + 1)) {
                ++cursor;
                end = cursor;
            } else if (cursor + 2 < g.w && col_has_band_ink(g, cursor + 2)) {
                cursor += 2;
                end = cursor;
            } else {
                break;
            }
        }
        runs.push_back(Run{x, end});
        x = end + 1;
    }
    return runs;
}

OcrCell classify_run(const InkGrid& g, const Run& run) {
    OcrCell cell;
    cell.x0 = run.x0;
    cell.x1 = run.x1;
    cell.at_edge = run.x0 <= 1 || run.x1 >= g.w - 2;

    const int obs_w = run.x1 - run.x0 + 1;
    double best = 1e9;
    for (const AtlasCell& ac : GlyphAtlas::get().cells()) {
        const int tw = ac.x1 - ac.x0 + 1;
        if (std::abs(tw - obs_w) > 3) continue;
        const int width = std::max(tw, obs_w);
        int mismatch = 0;
        const int area = width * 15;
        for (int dx = 0; dx < width; ++dx) {
            for (int m = 0; m < 15; ++m) {
                const bool t = ac.mask.get(ac.x0 + dx, m);
                const bool o = g.get(run.x0 + dx, g.band_top + m + ac.mask.row0);
                mismatch += t != o;
            }
        }
        const double score = static_cast<double>(mismatch) / area;
        if (score < best) {
            best = score;
            cell.ch = ac.ch;
            cell.font = ac.font;
        }
    }
    cell.score = best;
    cell.confident = best <= kRejectScore;
    if (!cell.confident) cell.ch = '?';
    return cell;
}

double centroid_slope(const std::function<bool(int, int)>& ink, int x0, int x1) {
    // Least-squares slope of per-row ink centroids over band rows 0..7.
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    int n = 0;
    for (int b = 0; b < SyntheticFont::kBaselineRow; ++b) {
        double sum = 0;
        int cnt = 0;
        for (int x = x0; x <= x1; ++x)
            if (ink(x, b)) {
                sum += x;
                ++cnt;
            }
        if (cnt == 0) continue;
        const double cx = sum / cnt;
        sx += b;
        sy += cx;
        sxy += b * cx;
        sxx += static_cast<double>(b) * b;
        ++n;
    }
    if (n < 2) return 0.0;
    const double denom = n * sxx - sx * sx;
    if (denom == 0) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

}  // namespace

std::string OcrResult::text() const {
    std::string out;
    for (const OcrWord& w : words) {
        if (!out.empty()) out += ' ';
        out += w.text;
    }
    return out;
}

OcrResult ocr_layout(const Image& img) {
    OcrResult res;
    const InkGrid grid = binarize(img);
    res.band_top = grid.band_top;

    std::vector<OcrCell> cells;
    for (const Run& run : segment_runs(grid)) cells.push_back(classify_run(grid, run));

    std::map<int, int> votes;
    for (const OcrCell& c : cells)
        if (c.confident) ++votes[c.font];
    res.font_vote = 0;
    int best_votes = -1;
    for (const auto& [font, n] : votes)
        if (n > best_votes) {
            best_votes = n;
            res.font_vote = font;
        }

    OcrWord cur;
    int prev_x1 = -1;
    auto flush = [&]() {
        if (!cur.cells.empty()) {
            cur.x0 = cur.cells.front().x0;
            cur.x1 = cur.cells.back().x1;
            cur.confident = true;
            for (const OcrCell& c : cur.cells) {
                cur.text += c.ch;
                cur.confident = cur.confident && c.confident;
            }
            res.words.push_back(cur);
        }
        cur = OcrWord{};
    };
    for (const OcrCell& c : cells) {
        if (c.at_edge) {  // clipped by the window; never part of a word
            flush();
            prev_x1 = c.x1;
            continue;
        }
        if (prev_x1 >= 0 && c.x0 - prev_x1 - 1 >= kWordGapCols) flush();
        cur.cells.push_back(c);
        prev_x1 = c.x1;
    }
    flush();
    return res;
}

std::string ocr_decode(const Image& img) { return ocr_layout(img).text(); }

std::vector<std::set<Attr>> detect_attributes(const Image& img, const OcrResult& layout) {
    const InkGrid grid = binarize(img);
    const GlyphAtlas& atlas = GlyphAtlas::get();
    std::vector<std::set<Attr>> out(layout.words.size());

    for (size_t wi = 0; wi < layout.words.size(); ++wi) {
        const OcrWord& word = layout.words[wi];
        if (!word.confident || word.text.empty()) continue;
        const int font = layout.font_vote;

        // bold: band ink against the plain atlas ink of the decoded word
        int expected = 0;
        for (char c : word.text) expected += atlas.plain_ink(font, c);
        int observed = 0;
        for (int x = word.x0; x <= word.x1; ++x)
            for (int b = 0; b < SyntheticFont::kCellRows; ++b)
                if (grid.band(x, b)) ++observed;
        if (expected > 0 && observed >= kBoldInkRatio * expected) out[wi].insert(Attr::Bold);

        // italic: centroid slope relative to the plain reference render
        WordRaster ref = rasterize_word(font, word.text, std::nullopt);
        const double slope_obs = centroid_slope(
            [&](int x, int b) { return grid.band(x, b); }, word.x0, word.x1);
        const double slope_ref = centroid_slope(
            [&](int x, int b) { return ref.mask.get(x, b - ref.mask.row0); }, 0, ref.mask.w - 1);
        if (slope_ref - slope_obs > kItalicSlope) out[wi].insert(Attr::Italic);

        // underline: a high-coverage ink row in the sub-baseline band
        const int baseline = grid.band_top + SyntheticFont::kBaselineRow;
        const int width = word.x1 - word.x0 + 1;
        for (int y = baseline + 1; y <= baseline + 4; ++y) {
            int cov = 0;
            for (int x = word.x0; x <= word.x1; ++x)
                if (grid.get(x, y)) ++cov;
            if (cov * 5 >= width * 4) {
                out[wi].insert(Attr::Underline);
                break;
            }
        }
    }
    return out;
}

namespace {

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) words.push_back(s.substr(i, j - i));
        i = j;
    }
    return words;
}

}  // namespace

EvalReport evaluate_samples(const std::vector<EvalSample>& samples) {
    EvalReport report;
    int64_t ocr_pass = 0, span_pass = 0;

    for (const EvalSample& s : samples) {
        SampleRecord rec;
        rec.prompt = s.prompt;
        rec.truth_stripped = s.truth.stripped;

        OcrResult layout = ocr_layout(s.image);
        rec.decoded = layout.text();
        const auto detected = detect_attributes(s.image, layout);

        std::vector<std::string> decoded_words;
        for (const OcrWord& w : layout.words)
            decoded_words.push_back(w.confident ? w.text : "?");
        rec.ocr_pass = decoded_words == split_words(s.truth.stripped);
        if (rec.ocr_pass) ++ocr_pass;

        for (const auto& d : detected) rec.any_attr_detected = rec.any_attr_detected || !d.empty();

        for (const WordTruth& span : s.truth.spans) {
            ++report.n_truth_spans;
            int match = -1;
            int matches = 0;
            for (size_t wi = 0; wi < layout.words.size(); ++wi)
                if (layout.words[wi].confident && layout.words[wi].text == span.word) {
                    match = static_cast<int>(wi);
                    ++matches;
                }
            bool pass = false;
            if (matches == 1) {
                pass = detected[static_cast<size_t>(match)].count(span.attr) > 0;
                for (size_t wi = 0; pass && wi < detected.size(); ++wi)
                    if (static_cast<int>(wi) != match && detected[wi].count(span.attr) > 0)
                        pass = false;
            }
            if (pass) ++span_pass;
            rec.spans.push_back(SpanRecord{span.word_index, span.attr, span.word, pass});
        }
        report.records.push_back(std::move(rec));
    }

    report.n_samples = static_cast<int64_t>(samples.size());
    report.ocr_acc = report.n_samples ? static_cast<double>(ocr_pass) / report.n_samples : 0.0;
    report.word_acc =
        report.n_truth_spans ? static_cast<double>(span_pass) / report.n_truth_spans : 0.0;
    return report;
}

void write_eval_report(const EvalReport& report, const std::string& path) {
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const SampleRecord& r : report.records) {
        nlohmann::ordered_json spans = nlohmann::ordered_json::array();
        for (const SpanRecord& s : r.spans)
            spans.push_back({{"word", s.word_index},
                             {"attr", attr_name(s.attr)},
                             {"text", s.word},
                             {"pass", s.pass}});
        recs.push_back({{"prompt", r.prompt},
                        {"decoded", r.decoded},
                        {"truth", r.truth_stripped},
                        {"ocr_pass", r.ocr_pass},
                        {"any_attr_detected", r.any_attr_detected},
                        {"spans", spans}});
    }
    nlohmann::ordered_json j = {{"ocr_acc", report.ocr_acc},
                                {"word_acc", report.word_acc},
                                {"style_score", report.style_score},
                                {"n_samples", report.n_samples},
                                {"n_truth_spans", report.n_truth_spans},
                                {"records", recs}};
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write eval report: " + path);
    os << j.dump(2) << "\n";
}

double style_score(const Image& generated, const Image& reference, const StyleEmbedFn& embed) {
    auto pooled = [&](const Image& img) {
        Tensor tokens = embed(img);
        const int64_t k = tokens.dim(0), d = tokens.dim(1);
        std::vector<double> mean(static_cast<size_t>(d), 0.0);
        auto data = tokens.data();
        for (int64_t i = 0; i < k; ++i)
            for (int64_t j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += data[i * d + j];
        for (double& v : mean) v /= static_cast<double>(k);
        return mean;
    };
    const auto a = pooled(generated), b = pooled(reference);
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace typoflow
