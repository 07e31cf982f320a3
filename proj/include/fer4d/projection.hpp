#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fer4d/mesh.hpp"

namespace fer4d {

enum class Profile : std::uint8_t { RP, FP, LP };

std::string_view to_string(Profile p);

// Yaw about the vertical axis through the mesh centroid.
struct ViewAngle {
    double yaw_degrees = 0.0;
    Profile profile = Profile::FP;

    // yaw in (-90, 90) and FP <=> yaw == 0.
    void validate() const;
    bool operator==(const ViewAngle&) const = default;
};

// Right, frontal, left profiles at -30, 0, +30 degrees.
std::vector<ViewAngle> default_views();

enum class ImageKind : std::uint8_t { Depth, EnhancedDepth, Texture };

// K x K raster. Depth kinds have one channel, texture three (interleaved RGB).
// Background pixels are 0 in every channel.
struct GeomImage {
    ImageKind kind = ImageKind::Depth;
    std::size_t size = 0;
    std::vector<double> pixels;
    std::vector<std::uint8_t> background;  // 1 = no surface

    std::size_t channels() const { return kind == ImageKind::Texture ? 3 : 1; }
    double at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
        return pixels[(row * size + col) * channels() + ch];
    }
    bool is_background(std::size_t row, std::size_t col) const { return background[row * size + col] != 0; }

    bool operator==(const GeomImage&) const = default;
};

// Maps rotated mesh coordinates to the image plane:
//   col = (x - center_x) * scale + K/2,  row = K/2 - (y - center_y) * scale.
// When depth_near/depth_far are set, depth is normalized against that range
// rather than the per-image covered range.
struct Framing {
    double center_x = 0.0;
    double center_y = 0.0;
    double scale = 1.0;
    std::optional<double> depth_near;
    std::optional<double> depth_far;
    // Rotation center; the mesh centroid when unset.
    std::optional<Vertex3> pivot;
};

inline constexpr double kDefaultFill = 0.9;

// Rotation by yaw about the vertical axis through `pivot` (the vertex
// centroid when unset). yaw == 0 returns the input unchanged.
Mesh rotate_yaw(const Mesh& mesh, double yaw_degrees, const std::optional<Vertex3>& pivot = std::nullopt);
std::vector<Vertex3> rotate_yaw(const std::vector<Vertex3>& points, double yaw_degrees, const Vertex3& pivot);
Vertex3 centroid(const std::vector<Vertex3>& points);

// Framing that fits the bounding box of all (already rotated) meshes into
// `fill` of the image, with the z range of all of them as depth range when
// `fixed_depth` is set.
Framing fit_framing(std::span<const Mesh> rotated_meshes, std::size_t K, bool fixed_depth, double fill = kDefaultFill);

// Per-pixel z-buffer result. Camera looks along +z: the smallest z wins.
struct RasterBuffers {
    std::size_t size = 0;
    std::vector<double> depth;           // +inf where uncovered
    std::vector<std::int32_t> face;      // winning face index or -1
    std::vector<std::array<double, 3>> bary;

    std::size_t covered() const;
};

// Rasterizes an already rotated mesh. A pixel is covered when its center is
// inside a triangle; centers exactly on an edge use the top-left rule.
RasterBuffers rasterize(const Mesh& rotated, std::size_t K, const Framing& framing);

GeomImage render_depth(const Mesh& mesh, const ViewAngle& view, std::size_t K,
                       const std::optional<Framing>& framing = std::nullopt);
GeomImage render_texture(const Mesh& mesh, const ViewAngle& view, std::size_t K,
                         const std::optional<Framing>& framing = std::nullopt);

struct ClaheOptions {
    double clip_limit = 0.01;
    std::size_t tiles = 8;
    std::size_t bins = 256;

    void validate() const;
};

// Per-tile lookup tables (row-major tiles, `bins` entries each); an empty
// tile has an empty table.
std::vector<std::vector<double>> clahe_tile_luts(const GeomImage& depth, const ClaheOptions& options);

GeomImage enhance_depth(const GeomImage& depth, const ClaheOptions& options = {});

struct ViewImages {
    GeomImage depth;
    GeomImage enhanced_depth;
    GeomImage texture;
};

std::vector<ViewImages> render_views(const Mesh& mesh, std::span<const ViewAngle> views, std::size_t K,
                                     const ClaheOptions& clahe = {});

}  // namespace fer4d
