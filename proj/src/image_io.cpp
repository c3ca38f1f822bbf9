#include "v2xsim/image_io.hpp"

#include "v2xsim/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace v2xsim {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw InvalidInput("cannot open file: " + path.string());
    }
    return f;
}

}  // namespace

Image read_png(const std::filesystem::path& path, bool raw) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("invalid PNG file: " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    const int channels = int(png_get_channels(png, info));
    std::vector<unsigned char> buf(std::size_t(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) {
        rows[y] = buf.data() + std::size_t(y) * w * channels;
    }
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(w, h, channels);
    auto d = img.data();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        d[i] = raw ? double(buf[i]) : double(buf[i]) / 255.0;
    }
    return img;
}

void write_png(const std::filesystem::path& path, const Image& image, bool raw) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw InvalidInput("write_png supports 1 or 3 channels");
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG write failed: " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, png_uint_32(image.width()), png_uint_32(image.height()), 8,
                 image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(std::size_t(image.width()) * image.channels());
    const auto d = image.data();
    for (int y = 0; y < image.height(); ++y) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double v = d[std::size_t(y) * row.size() + i];
            const double scaled = raw ? v : v * 255.0;
            row[i] = static_cast<unsigned char>(std::clamp(std::lround(scaled), 0L, 255L));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open file: " + path.string());
    }
    std::string magic;
    int w = 0, h = 0;
    double scale = 0;
    in >> magic >> w >> h >> scale;
    in.get();
    if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0) {
        throw ParseError("invalid PFM header: " + path.string());
    }
    if (scale > 0) {
        throw ParseError("big-endian PFM not supported: " + path.string());
    }
    const int channels = magic == "PF" ? 3 : 1;
    std::vector<float> buf(std::size_t(w) * h * channels);
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
    if (!in) {
        throw ParseError("truncated PFM: " + path.string());
    }
    Image img(w, h, channels);
    // rows are stored bottom to top
    for (int y = 0; y < h; ++y) {
        const int src = h - 1 - y;
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                img.at(x, y, c) = buf[(std::size_t(src) * w + x) * channels + c];
            }
        }
    }
    return img;
}

void write_pfm(const std::filesystem::path& path, const Image& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw InvalidInput("write_pfm supports 1 or 3 channels");
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write file: " + path.string());
    }
    out << (image.channels() == 3 ? "PF" : "Pf") << "\n" << image.width() << " " << image.height() << "\n-1\n";
    std::vector<float> row(std::size_t(image.width()) * image.channels());
    for (int y = image.height() - 1; y >= 0; --y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < image.channels(); ++c) {
                row[std::size_t(x) * image.channels() + c] = float(image.at(x, y, c));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
    }
}

std::pair<int, int> image_dimensions(const std::filesystem::path& path) {
    if (path.extension() == ".pfm") {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw InvalidInput("cannot open file: " + path.string());
        }
        std::string magic;
        int w = 0, h = 0;
        in >> magic >> w >> h;
        if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0) {
            throw ParseError("invalid PFM header: " + path.string());
        }
        return {w, h};
    }
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("invalid PNG file: " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const std::pair<int, int> wh{int(png_get_image_width(png, info)), int(png_get_image_height(png, info))};
    png_destroy_read_struct(&png, &info, nullptr);
    return wh;
}

}  // namespace v2xsim
