/// @file image.hpp
/// @brief 8-bit RGB raster I/O (PNG and binary/ASCII PPM).

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace genius::data {

/// Row-major, 3 bytes per pixel, no padding.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Rgb8Image() = default;
    Rgb8Image(int w, int h, std::uint8_t fill = 0);

    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }

    bool operator==(const Rgb8Image&) const = default;
};

/// Format is detected from the leading bytes, not the extension.
/// IoError if the file cannot be read, ParseError if it cannot be decoded.
/// Grey and alpha PNGs are converted to RGB.
Rgb8Image load_image(const std::filesystem::path& path);

void write_png(const Rgb8Image& image, const std::filesystem::path& path);
void write_ppm(const Rgb8Image& image, const std::filesystem::path& path);  // binary P6

}  // namespace genius::data
