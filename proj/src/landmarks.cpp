#include "fer4d/landmarks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "fer4d/error.hpp"
#include "fer4d/mesh_io.hpp"

namespace fer4d {

LandmarkBounds landmark_bounds(std::span<const LandmarkSet> frames, const ViewAngle& view) {
    require(!frames.empty() && !frames.front().points.empty(), "landmark bounds need at least one landmark");
    LandmarkBounds b;
    b.pivot = centroid(frames.front().points);
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x, min_y = min_x, max_y = -min_x;
    for (const auto& set : frames) {
        for (const auto& p : rotate_yaw(set.points, view.yaw_degrees, b.pivot)) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    }
    b.center_x = 0.5 * (min_x + max_x);
    b.center_y = 0.5 * (min_y + max_y);
    b.extent = std::max(max_x - min_x, max_y - min_y);
    if (!(b.extent > 0.0)) fail(ErrorKind::DegenerateBounds, "landmark bounding box has zero extent");
    return b;
}

std::size_t LandmarkImage::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::pair<long, long> landmark_pixel(const Vertex3& rotated, const LandmarkBounds& bounds, std::size_t B) {
    const double span = static_cast<double>(B - 1);
    const double col = 0.5 * span + (rotated.x - bounds.center_x) / bounds.extent * span;
    const double row = 0.5 * span - (rotated.y - bounds.center_y) / bounds.extent * span;
    return {static_cast<long>(std::floor(row + 0.5)), static_cast<long>(std::floor(col + 0.5))};
}

LandmarkImage rasterize_landmarks(const LandmarkSet& landmarks, const ViewAngle& view, std::size_t B,
                                  std::size_t radius, const LandmarkBounds& bounds) {
    view.validate();
    require(B >= 8, "landmark image size must be >= 8");
    if (!(bounds.extent > 0.0)) fail(ErrorKind::DegenerateBounds, "landmark bounding box has zero extent");
    LandmarkImage img;
    img.size = B;
    img.view = view;
    img.bits.assign(B * B, 0);
    const long r = static_cast<long>(radius);
    const long size = static_cast<long>(B);
    for (const auto& p : rotate_yaw(landmarks.points, view.yaw_degrees, bounds.pivot)) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(ErrorKind::InvalidArgument, "non-finite landmark");
        const auto [row, col] = landmark_pixel(p, bounds, B);
        for (long dy = -r; dy <= r; ++dy) {
            for (long dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > r * r) continue;
                const long y = row + dy;
                const long x = col + dx;
                if (y < 0 || y >= size || x < 0 || x >= size) continue;
                img.bits[static_cast<std::size_t>(y * size + x)] = 1;
            }
        }
    }
    return img;
}

std::vector<double> describe_frame(const LandmarkImage& img, std::size_t grid) {
    const std::size_t B = img.size;
    require(grid >= 1 && B % grid == 0, "descriptor grid must divide the image size");
    const std::size_t cell = B / grid;
    std::vector<double> d(grid * grid + 4, 0.0);
    double n = 0.0, sum_x = 0.0, sum_y = 0.0, sum_xx = 0.0, sum_yy = 0.0;
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t c = 0; c < B; ++c) {
            if (!img.at(r, c)) continue;
            d[(r / cell) * grid + c / cell] += 1.0;
            const double x = static_cast<double>(c) + 0.5;
            const double y = static_cast<double>(r) + 0.5;
            n += 1.0;
            sum_x += x;
            sum_y += y;
            sum_xx += x * x;
            sum_yy += y * y;
        }
    }
    if (n == 0.0) return d;
    const double cell_area = static_cast<double>(cell * cell);
    for (std::size_t i = 0; i < grid * grid; ++i) d[i] /= cell_area;
    const double mx = sum_x / n;
    const double my = sum_y / n;
    const double size = static_cast<double>(B);
    d[grid * grid + 0] = mx / size;
    d[grid * grid + 1] = my / size;
    d[grid * grid + 2] = std::sqrt(std::max(0.0, sum_xx / n - mx * mx)) / size;
    d[grid * grid + 3] = std::sqrt(std::max(0.0, sum_yy / n - my * my)) / size;
    return d;
}

void LandmarkStreamConfig::validate() const {
    require(image_size >= 8, "landmark image size must be >= 8");
    require(grid >= 1 && image_size % grid == 0, "descriptor grid must divide the landmark image size");
}

FeatureSequence sequence_features(const MeshSequence& seq, const ViewAngle& view, const LandmarkStreamConfig& cfg) {
    cfg.validate();
    require(!seq.frames.empty(), "sequence has no frames");
    std::vector<LandmarkSet> sets;
    sets.reserve(seq.frames.size());
    for (const auto& f : seq.frames) sets.push_back(f.landmarks);
    const auto bounds = landmark_bounds(sets, view);
    FeatureSequence out;
    out.dim = cfg.descriptor_dim();
    out.view = view;
    out.data.reserve(out.dim * sets.size());
    for (const auto& set : sets) {
        const auto row = describe_frame(rasterize_landmarks(set, view, cfg.image_size, cfg.radius, bounds), cfg.grid);
        out.data.insert(out.data.end(), row.begin(), row.end());
    }
    return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureSequence& seq) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    for (std::size_t j = 0; j < seq.dim; ++j) out << (j ? "," : "") << 'f' << j;
    out << '\n';
    for (std::size_t t = 0; t < seq.length(); ++t) {
        const auto row = seq.row(t);
        for (std::size_t j = 0; j < seq.dim; ++j) out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

FeatureSequence read_feature_csv(const std::filesystem::path& path, const ViewAngle& view) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingFile, path.string());
    FeatureSequence seq;
    seq.view = view;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::ParseError, path.string() + ":1:1: missing header");
    seq.dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t fields = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t end = std::min(line.find(',', pos), line.size());
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, v);
            if (ec != std::errc() || ptr != line.data() + end) {
                fail(ErrorKind::ParseError, path.string() + ":" + std::to_string(line_no) + ":" +
                                                std::to_string(pos + 1) + ": bad number");
            }
            seq.data.push_back(v);
            ++fields;
            pos = end + 1;
        }
        if (fields != seq.dim) {
            fail(ErrorKind::ParseError, path.string() + ":" + std::to_string(line_no) + ":1: expected " +
                                            std::to_string(seq.dim) + " fields");
        }
    }
    return seq;
}

}  // namespace fer4d
