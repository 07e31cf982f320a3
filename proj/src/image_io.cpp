#include "fer4d/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "fer4d/error.hpp"

namespace fer4d {

namespace {

std::ofstream open_binary(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

unsigned quantize(double v, unsigned maxval) {
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

std::size_t read_header_int(std::istream& in, const std::filesystem::path& path) {
    // Skips whitespace and '#' comments between header fields.
    int ch = in.peek();
    while (ch != EOF && (std::isspace(ch) || ch == '#')) {
        if (ch == '#') {
            std::string ignored;
            std::getline(in, ignored);
        } else {
            in.get();
        }
        ch = in.peek();
    }
    std::size_t value = 0;
    if (!(in >> value)) fail(ErrorKind::ParseError, path.string() + ": malformed Netpbm header");
    return value;
}

}  // namespace

void write_pgm16(const std::filesystem::path& path, std::size_t width, std::size_t height,
                 std::span<const double> values) {
    require(values.size() == width * height, "PGM size mismatch");
    auto out = open_binary(path);
    out << "P5\n" << width << ' ' << height << "\n65535\n";
    std::vector<char> data(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const unsigned q = quantize(values[i], 65535);
        data[2 * i] = static_cast<char>(q >> 8);
        data[2 * i + 1] = static_cast<char>(q & 0xff);
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_ppm8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                std::span<const double> rgb) {
    require(rgb.size() == width * height * 3, "PPM size mismatch");
    auto out = open_binary(path);
    out << "P6\n" << width << ' ' << height << "\n255\n";
    std::vector<char> data(rgb.size());
    for (std::size_t i = 0; i < rgb.size(); ++i) data[i] = static_cast<char>(quantize(rgb[i], 255));
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_pbm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> bits) {
    require(bits.size() == width * height, "PBM size mismatch");
    auto out = open_binary(path);
    out << "P4\n" << width << ' ' << height << '\n';
    const std::size_t stride = (width + 7) / 8;
    std::vector<char> row(stride);
    for (std::size_t r = 0; r < height; ++r) {
        std::fill(row.begin(), row.end(), 0);
        for (std::size_t c = 0; c < width; ++c) {
            if (bits[r * width + c]) row[c / 8] = static_cast<char>(row[c / 8] | (0x80 >> (c % 8)));
        }
        out.write(row.data(), static_cast<std::streamsize>(stride));
    }
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

RasterFile read_netpbm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::MissingFile, path.string());
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P4" && magic != "P5" && magic != "P6") fail(ErrorKind::ParseError, path.string() + ": unsupported Netpbm type");
    RasterFile img;
    img.width = read_header_int(in, path);
    img.height = read_header_int(in, path);
    const std::size_t maxval = magic == "P4" ? 1 : read_header_int(in, path);
    in.get();  // single whitespace before the raster
    if (maxval == 0 || maxval > 65535) fail(ErrorKind::ParseError, path.string() + ": bad maxval");
    img.channels = magic == "P6" ? 3 : 1;
    const std::size_t n = img.width * img.height * img.channels;
    img.values.resize(n);
    if (magic == "P4") {
        const std::size_t stride = (img.width + 7) / 8;
        std::vector<unsigned char> row(stride);
        for (std::size_t r = 0; r < img.height; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(stride));
            for (std::size_t c = 0; c < img.width; ++c) {
                img.values[r * img.width + c] = (row[c / 8] & (0x80 >> (c % 8))) ? 1.0 : 0.0;
            }
        }
    } else {
        const std::size_t bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> data(n * bytes);
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned q = bytes == 2 ? (unsigned{data[2 * i]} << 8) | data[2 * i + 1] : data[i];
            img.values[i] = static_cast<double>(q) / static_cast<double>(maxval);
        }
    }
    if (!in) fail(ErrorKind::ParseError, path.string() + ": truncated raster");
    return img;
}

}  // namespace fer4d
