#include "typoflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "typoflow/errors.hpp"

namespace typoflow {

Image::Image(int w, int h, RGB fill) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3) {
    for (size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill.r;
        rgb[i + 1] = fill.g;
        rgb[i + 2] = fill.b;
    }
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write ppm: " + path);
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.rgb.data()),
             static_cast<std::streamsize>(img.rgb.size()));
    if (!os) throw IoError("ppm write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open ppm: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P6") throw IoError("not a P6 ppm: " + path);
    int w, h, maxval;
    is >> w >> h >> maxval;
    if (!is || w <= 0 || h <= 0 || maxval != 255) throw IoError("bad ppm header: " + path);
    is.get();  // single whitespace after header
    Image img(w, h);
    is.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (!is) throw IoError("truncated ppm: " + path);
    return img;
}

Tensor image_to_tensor(const Image& img) {
    Tensor t = Tensor::zeros({img.height, img.width, 3});
    auto d = t.data_mut();
    for (size_t i = 0; i < img.rgb.size(); ++i) d[i] = static_cast<float>(img.rgb[i]) / 255.f;
    return t;
}

Image tensor_to_image(const Tensor& t) {
    if (t.rank() != 3 || t.dim(2) != 3) throw ShapeError("tensor_to_image: expected [H,W,3]");
    Image img(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
    auto d = t.data();
    for (size_t i = 0; i < img.rgb.size(); ++i) {
        const float v = std::clamp(d[i], 0.f, 1.f);
        img.rgb[i] = static_cast<uint8_t>(std::lround(v * 255.f));
    }
    return img;
}

}  // namespace typoflow
