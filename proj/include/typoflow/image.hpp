#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "typoflow/rng.hpp"
#include "typoflow/tensor.hpp"

namespace typoflow {

struct RGB {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const RGB&) const = default;
};

// 8-bit luma, integer arithmetic so contrast checks are exact.
inline int luma(RGB c) { return (299 * c.r + 587 * c.g + 114 * c.b) / 1000; }

inline int color_dist2(RGB a, RGB b) {
    const int dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
    return dr * dr + dg * dg + db * db;
}

struct Image {
    int width = 0, height = 0;
    std::vector<uint8_t> rgb;  // row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h, RGB fill = {255, 255, 255});

    RGB get(int x, int y) const {
        const size_t i = 3 * (static_cast<size_t>(y) * width + x);
        return RGB{rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set(int x, int y, RGB c) {
        const size_t i = 3 * (static_cast<size_t>(y) * width + x);
        rgb[i] = c.r;
        rgb[i + 1] = c.g;
        rgb[i + 2] = c.b;
    }

    uint64_t hash() const { return fnv1a64(rgb.data(), rgb.size()); }
    bool operator==(const Image&) const = default;
};

// Binary PPM (P6, maxval 255).
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

// [H,W,3] floats in [0,1] <-> 8-bit image (round-half-up on the way back).
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);

}  // namespace typoflow
