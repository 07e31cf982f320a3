#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fer4d {

// Binary Netpbm images, row-major. Values are in [0, 1] and quantized on write.
struct RasterFile {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<double> values;
};

// P5 with maxval 65535 (big-endian samples).
void write_pgm16(const std::filesystem::path& path, std::size_t width, std::size_t height,
                 std::span<const double> values);
// P6 with maxval 255, interleaved RGB.
void write_ppm8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                std::span<const double> rgb);
// P4, 1 = set (black) pixel.
void write_pbm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> bits);

// Reads P4, P5 (8- or 16-bit) and P6 (8- or 16-bit).
RasterFile read_netpbm(const std::filesystem::path& path);

}  // namespace fer4d
