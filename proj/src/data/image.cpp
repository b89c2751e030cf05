#include "genius/data/image.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "genius/error.hpp"

namespace genius::data {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Rgb8Image decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw ParseError("cannot decode PNG " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    Rgb8Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw ParseError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

// P3 / P6 with maxval <= 255. Comments (#...) allowed in the header.
Rgb8Image decode_ppm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::size_t pos = 2;
    auto bad = [&](const char* why) { return ParseError("cannot decode PPM " + path.string() + ": " + why); };
    auto next_int = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw bad("malformed header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > 1 << 20) throw bad("value too large");
        }
        return static_cast<int>(v);
    };
    const bool binary = bytes[1] == '6';
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (w <= 0 || h <= 0) throw bad("empty image");
    if (maxval <= 0 || maxval > 255) throw bad("only 8-bit maxval is supported");
    Rgb8Image out(w, h);
    const std::size_t n = out.pixels.size();
    if (binary) {
        ++pos;  // single whitespace byte after maxval
        if (bytes.size() < pos + n) throw bad("truncated pixel data");
        std::memcpy(out.pixels.data(), bytes.data() + pos, n);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const int v = next_int();
            if (v > maxval) throw bad("sample exceeds maxval");
            out.pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    if (maxval != 255) {
        for (auto& p : out.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
    }
    return out;
}

}  // namespace

Rgb8Image::Rgb8Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

Rgb8Image load_image(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '3')) return decode_ppm(bytes, path);
    throw ParseError("unrecognized image format: " + path.string());
}

void write_png(const Rgb8Image& image, const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + img.message);
    }
}

void write_ppm(const Rgb8Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace genius::data
