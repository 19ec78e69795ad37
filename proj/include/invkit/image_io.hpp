// Lossless raw image files (magic "IVK1") and 8-bit PGM output for viewing.
#ifndef INVKIT_IMAGE_IO_HPP
#define INVKIT_IMAGE_IO_HPP

#include <cstring>
#include <fstream>

#include "invkit/common.hpp"

namespace invkit::io {

// "IVK1", height u32 LE, width u32 LE, then height*width f64 LE row-major.
inline void write_raw_image(const Image& x, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_raw_image: cannot open " + path);
    f.write("IVK1", 4);
    std::uint32_t h = static_cast<std::uint32_t>(x.height), w = static_cast<std::uint32_t>(x.width);
    f.write(reinterpret_cast<const char*>(&h), 4);
    f.write(reinterpret_cast<const char*>(&w), 4);
    f.write(reinterpret_cast<const char*>(x.data.data()), static_cast<std::streamsize>(x.data.size() * sizeof(double)));
    if (!f) throw IoError("write_raw_image: write failed for " + path);
}

inline Image read_raw_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_raw_image: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "IVK1", 4) != 0) throw IoError("read_raw_image: bad magic in " + path);
    std::uint32_t h = 0, w = 0;
    f.read(reinterpret_cast<char*>(&h), 4);
    f.read(reinterpret_cast<char*>(&w), 4);
    if (!f) throw IoError("read_raw_image: truncated header in " + path);
    Image x(h, w);
    f.read(reinterpret_cast<char*>(x.data.data()), static_cast<std::streamsize>(x.data.size() * sizeof(double)));
    if (!f) throw IoError("read_raw_image: truncated payload in " + path);
    return x;
}

// Measurement vectors travel in the same container with height 1.
inline void write_measurement(const MeasurementVector& y, const std::string& path) {
    write_raw_image(Image(1, y.size(), y.data), path);
}

inline MeasurementVector read_measurement(const std::string& path) {
    Image x = read_raw_image(path);
    return MeasurementVector(std::move(x.data));
}

// P5 binary PGM, values clamped to [0,1] then scaled to 0..255.
inline void write_pgm(const Image& x, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_pgm: cannot open " + path);
    f << "P5\n" << x.width << " " << x.height << "\n255\n";
    for (double v : x.data) {
        double c = std::min(1.0, std::max(0.0, v));
        unsigned char byte = static_cast<unsigned char>(c * 255.0 + 0.5);
        f.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!f) throw IoError("write_pgm: write failed for " + path);
}

// Horizontal side-by-side panel with a thin white separator between images.
inline Image hstack_panel(const std::vector<Image>& images, std::size_t gap = 2) {
    if (images.empty()) throw ValidationError("hstack_panel: no images");
    std::size_t h = images[0].height;
    std::size_t w = 0;
    for (const Image& im : images) {
        if (im.height != h) throw ValidationError("hstack_panel: mismatched heights");
        w += im.width;
    }
    w += gap * (images.size() - 1);
    Image panel(h, w, 1.0);
    std::size_t off = 0;
    for (const Image& im : images) {
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < im.width; ++c) panel.at(r, off + c) = im.at(r, c);
        off += im.width + gap;
    }
    return panel;
}

// Min-max rescale to [0,1] for display of signed images (backprojections).
inline Image normalize_for_display(const Image& x) {
    double lo = x.data.empty() ? 0.0 : x.data[0], hi = lo;
    for (double v : x.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Image out = x;
    double range = hi - lo;
    if (range <= 0.0) range = 1.0;
    for (double& v : out.data) v = (v - lo) / range;
    return out;
}

inline void write_text(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_text: cannot open " + path);
    f << text;
    if (!f) throw IoError("write_text: write failed for " + path);
}

}  // namespace invkit::io

#endif  // INVKIT_IMAGE_IO_HPP
