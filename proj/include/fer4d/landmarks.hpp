#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fer4d/mesh.hpp"
#include "fer4d/projection.hpp"

namespace fer4d {

// Square image-plane window shared by every frame of one sequence, so that
// landmark motion survives the mapping to pixels.
struct LandmarkBounds {
    Vertex3 pivot;  // rotation center (centroid of the first frame)
    double center_x = 0.0;
    double center_y = 0.0;
    double extent = 0.0;  // side of the square window, world units
};

LandmarkBounds landmark_bounds(std::span<const LandmarkSet> frames, const ViewAngle& view);

struct LandmarkImage {
    std::size_t size = 0;
    std::vector<std::uint8_t> bits;  // row-major, 1 = set
    ViewAngle view;

    bool at(std::size_t row, std::size_t col) const { return bits[row * size + col] != 0; }
    std::size_t count() const;
};

// Grid position of a rotated point: round(offset / extent * (B - 1)) around
// the grid center; rows grow downwards.
std::pair<long, long> landmark_pixel(const Vertex3& rotated, const LandmarkBounds& bounds, std::size_t B);

LandmarkImage rasterize_landmarks(const LandmarkSet& landmarks, const ViewAngle& view, std::size_t B,
                                  std::size_t radius, const LandmarkBounds& bounds);

// grid*grid cell occupancy fractions (row-major), then centroid (x, y) and
// spread (x, y) of the set pixels, normalized by B.
std::vector<double> describe_frame(const LandmarkImage& img, std::size_t grid);

struct FeatureSequence {
    std::size_t dim = 0;
    std::vector<double> data;  // length() rows of dim values
    ViewAngle view;

    std::size_t length() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const double> row(std::size_t t) const { return {data.data() + t * dim, dim}; }
    bool operator==(const FeatureSequence&) const = default;
};

struct LandmarkStreamConfig {
    std::size_t image_size = 64;
    std::size_t radius = 1;
    std::size_t grid = 8;

    std::size_t descriptor_dim() const { return grid * grid + 4; }
    void validate() const;
};

FeatureSequence sequence_features(const MeshSequence& seq, const ViewAngle& view, const LandmarkStreamConfig& cfg = {});

// CSV with a header row, one row per frame.
void write_feature_csv(const std::filesystem::path& path, const FeatureSequence& seq);
FeatureSequence read_feature_csv(const std::filesystem::path& path, const ViewAngle& view);

}  // namespace fer4d
