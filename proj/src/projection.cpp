#include "fer4d/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fer4d/error.hpp"

namespace fer4d {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScreenVertex {
    double x;
    double y;
    double z;
};

// Edge function of a->b at p; positive on the interior side once the
// triangle has positive orientation.
double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Top edge (horizontal, interior below) or left edge (going up the screen).
bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

bool inside_edge(double e, const ScreenVertex& a, const ScreenVertex& b) { return e > 0.0 || (e == 0.0 && top_left(a, b)); }

RasterBuffers rasterize_checked(const Mesh& rotated, std::size_t K, const Framing& framing) {
    auto buffers = rasterize(rotated, K, framing);
    if (buffers.covered() == 0) fail(ErrorKind::DegenerateMesh, "no pixel covered by the mesh");
    return buffers;
}

Framing default_framing(const Mesh& rotated, std::size_t K) {
    return fit_framing(std::span<const Mesh>(&rotated, 1), K, false);
}

}  // namespace

std::string_view to_string(Profile p) {
    switch (p) {
        case Profile::RP: return "RP";
        case Profile::FP: return "FP";
        case Profile::LP: return "LP";
    }
    return "?";
}

void ViewAngle::validate() const {
    require(std::isfinite(yaw_degrees) && yaw_degrees > -90.0 && yaw_degrees < 90.0, "yaw must lie in (-90, 90)");
    require((profile == Profile::FP) == (yaw_degrees == 0.0), "FP profile iff yaw is 0");
}

std::vector<ViewAngle> default_views() {
    return {{-30.0, Profile::RP}, {0.0, Profile::FP}, {30.0, Profile::LP}};
}

Vertex3 centroid(const std::vector<Vertex3>& points) {
    Vertex3 c;
    for (const auto& p : points) {
        c.x += p.x;
        c.y += p.y;
        c.z += p.z;
    }
    const double n = static_cast<double>(points.size());
    return {c.x / n, c.y / n, c.z / n};
}

std::vector<Vertex3> rotate_yaw(const std::vector<Vertex3>& points, double yaw_degrees, const Vertex3& pivot) {
    if (yaw_degrees == 0.0) return points;
    const double rad = yaw_degrees * kPi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    std::vector<Vertex3> out = points;
    for (auto& v : out) {
        const double dx = v.x - pivot.x;
        const double dz = v.z - pivot.z;
        v.x = pivot.x + cs * dx + sn * dz;
        v.z = pivot.z - sn * dx + cs * dz;
    }
    return out;
}

Mesh rotate_yaw(const Mesh& mesh, double yaw_degrees, const std::optional<Vertex3>& pivot) {
    if (yaw_degrees == 0.0) return mesh;
    Mesh out = mesh;
    out.vertices = rotate_yaw(mesh.vertices, yaw_degrees, pivot ? *pivot : centroid(mesh.vertices));
    return out;
}

Framing fit_framing(std::span<const Mesh> rotated_meshes, std::size_t K, bool fixed_depth, double fill) {
    double min_x = kInf, max_x = -kInf, min_y = kInf, max_y = -kInf, min_z = kInf, max_z = -kInf;
    for (const auto& m : rotated_meshes) {
        for (const auto& v : m.vertices) {
            min_x = std::min(min_x, v.x);
            max_x = std::max(max_x, v.x);
            min_y = std::min(min_y, v.y);
            max_y = std::max(max_y, v.y);
            min_z = std::min(min_z, v.z);
            max_z = std::max(max_z, v.z);
        }
    }
    const double extent = std::max(max_x - min_x, max_y - min_y);
    if (!(extent > 0.0) || !std::isfinite(extent)) fail(ErrorKind::DegenerateMesh, "mesh has zero image-plane extent");
    Framing f;
    f.center_x = 0.5 * (min_x + max_x);
    f.center_y = 0.5 * (min_y + max_y);
    f.scale = fill * static_cast<double>(K) / extent;
    if (fixed_depth) {
        f.depth_near = min_z;
        f.depth_far = max_z;
    }
    return f;
}

std::size_t RasterBuffers::covered() const {
    return static_cast<std::size_t>(std::count_if(face.begin(), face.end(), [](std::int32_t f) { return f >= 0; }));
}

RasterBuffers rasterize(const Mesh& rotated, std::size_t K, const Framing& framing) {
    require(K >= 1, "image size must be positive");
    RasterBuffers out;
    out.size = K;
    out.depth.assign(K * K, kInf);
    out.face.assign(K * K, -1);
    out.bary.assign(K * K, {0.0, 0.0, 0.0});

    const double half = 0.5 * static_cast<double>(K);
    auto to_screen = [&](const Vertex3& v) {
        return ScreenVertex{(v.x - framing.center_x) * framing.scale + half,
                            half - (v.y - framing.center_y) * framing.scale, v.z};
    };

    for (std::size_t fi = 0; fi < rotated.faces.size(); ++fi) {
        const auto& f = rotated.faces[fi];
        std::array<ScreenVertex, 3> v{to_screen(rotated.vertices[f[0]]), to_screen(rotated.vertices[f[1]]),
                                      to_screen(rotated.vertices[f[2]])};
        std::array<std::size_t, 3> order{0, 1, 2};
        double area = edge(v[0], v[1], v[2].x, v[2].y);
        if (area == 0.0 || !std::isfinite(area)) continue;
        if (area < 0.0) {
            std::swap(v[1], v[2]);
            std::swap(order[1], order[2]);
            area = -area;
        }
        const double lo_x = std::min({v[0].x, v[1].x, v[2].x});
        const double hi_x = std::max({v[0].x, v[1].x, v[2].x});
        const double lo_y = std::min({v[0].y, v[1].y, v[2].y});
        const double hi_y = std::max({v[0].y, v[1].y, v[2].y});
        // Pixel centers sit at integer + 0.5.
        const auto first_col = static_cast<long>(std::max(0.0, std::ceil(lo_x - 0.5)));
        const auto last_col = static_cast<long>(std::min(static_cast<double>(K) - 1.0, std::floor(hi_x - 0.5)));
        const auto first_row = static_cast<long>(std::max(0.0, std::ceil(lo_y - 0.5)));
        const auto last_row = static_cast<long>(std::min(static_cast<double>(K) - 1.0, std::floor(hi_y - 0.5)));

        for (long row = first_row; row <= last_row; ++row) {
            const double py = static_cast<double>(row) + 0.5;
            for (long col = first_col; col <= last_col; ++col) {
                const double px = static_cast<double>(col) + 0.5;
                const double e12 = edge(v[1], v[2], px, py);
                const double e20 = edge(v[2], v[0], px, py);
                const double e01 = edge(v[0], v[1], px, py);
                if (!inside_edge(e12, v[1], v[2]) || !inside_edge(e20, v[2], v[0]) || !inside_edge(e01, v[0], v[1])) {
                    continue;
                }
                const double w0 = e12 / area;
                const double w1 = e20 / area;
                const double w2 = e01 / area;
                // offset form keeps a flat triangle exactly flat
                const double z = v[0].z + w1 * (v[1].z - v[0].z) + w2 * (v[2].z - v[0].z);
                const std::size_t idx = static_cast<std::size_t>(row) * K + static_cast<std::size_t>(col);
                if (z < out.depth[idx]) {
                    out.depth[idx] = z;
                    out.face[idx] = static_cast<std::int32_t>(fi);
                    std::array<double, 3> b{};
                    b[order[0]] = w0;
                    b[order[1]] = w1;
                    b[order[2]] = w2;
                    out.bary[idx] = b;
                }
            }
        }
    }
    return out;
}

GeomImage render_depth(const Mesh& mesh, const ViewAngle& view, std::size_t K, const std::optional<Framing>& framing) {
    view.validate();
    require(K >= 8, "image size must be >= 8");
    const Mesh rotated = rotate_yaw(mesh, view.yaw_degrees, framing ? framing->pivot : std::nullopt);
    const Framing fr = framing ? *framing : default_framing(rotated, K);
    const auto buf = rasterize_checked(rotated, K, fr);

    double near = kInf, far = -kInf;
    if (fr.depth_near && fr.depth_far) {
        near = *fr.depth_near;
        far = *fr.depth_far;
    } else {
        for (std::size_t i = 0; i < buf.depth.size(); ++i) {
            if (buf.face[i] < 0) continue;
            near = std::min(near, buf.depth[i]);
            far = std::max(far, buf.depth[i]);
        }
    }

    GeomImage img;
    img.kind = ImageKind::Depth;
    img.size = K;
    img.pixels.assign(K * K, 0.0);
    img.background.assign(K * K, 1);
    const double range = far - near;
    for (std::size_t i = 0; i < buf.depth.size(); ++i) {
        if (buf.face[i] < 0) continue;
        img.background[i] = 0;
        // Nearest surface maps to 1, farthest to 0.
        img.pixels[i] = range > 0.0 ? std::clamp((far - buf.depth[i]) / range, 0.0, 1.0) : 1.0;
    }
    return img;
}

GeomImage render_texture(const Mesh& mesh, const ViewAngle& view, std::size_t K, const std::optional<Framing>& framing) {
    view.validate();
    require(K >= 8, "image size must be >= 8");
    if (!mesh.has_colors()) fail(ErrorKind::MissingColors, "texture rendering needs per-vertex colors");
    const Mesh rotated = rotate_yaw(mesh, view.yaw_degrees, framing ? framing->pivot : std::nullopt);
    const Framing fr = framing ? *framing : default_framing(rotated, K);
    const auto buf = rasterize_checked(rotated, K, fr);

    GeomImage img;
    img.kind = ImageKind::Texture;
    img.size = K;
    img.pixels.assign(K * K * 3, 0.0);
    img.background.assign(K * K, 1);
    for (std::size_t i = 0; i < buf.face.size(); ++i) {
        if (buf.face[i] < 0) continue;
        img.background[i] = 0;
        const auto& f = mesh.faces[static_cast<std::size_t>(buf.face[i])];
        const auto& b = buf.bary[i];
        const Rgb& c0 = mesh.colors[f[0]];
        const Rgb& c1 = mesh.colors[f[1]];
        const Rgb& c2 = mesh.colors[f[2]];
        // Offsets from c0, so a flat-colored triangle reproduces its color exactly.
        auto lerp = [&](double a0, double a1, double a2) {
            return std::clamp(a0 + b[1] * (a1 - a0) + b[2] * (a2 - a0), 0.0, 1.0);
        };
        img.pixels[3 * i + 0] = lerp(c0.r, c1.r, c2.r);
        img.pixels[3 * i + 1] = lerp(c0.g, c1.g, c2.g);
        img.pixels[3 * i + 2] = lerp(c0.b, c1.b, c2.b);
    }
    return img;
}

void ClaheOptions::validate() const {
    require(tiles >= 1, "CLAHE needs at least one tile");
    require(clip_limit > 0.0 && clip_limit <= 1.0, "CLAHE clip limit must lie in (0, 1]");
    require(bins >= 2, "CLAHE needs at least two bins");
}

namespace {

std::size_t tile_start(std::size_t tile, std::size_t tiles, std::size_t K) { return tile * K / tiles; }

std::size_t bin_of(double v, std::size_t bins) {
    const auto b = static_cast<std::size_t>(std::max(0.0, v) * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

}  // namespace

std::vector<std::vector<double>> clahe_tile_luts(const GeomImage& depth, const ClaheOptions& options) {
    options.validate();
    require(depth.kind == ImageKind::Depth, "CLAHE expects a depth image");
    const std::size_t K = depth.size;
    require(options.tiles <= K, "more CLAHE tiles than pixels");
    const std::size_t T = options.tiles;
    std::vector<std::vector<double>> luts(T * T);
    std::vector<double> hist(options.bins);
    for (std::size_t ty = 0; ty < T; ++ty) {
        for (std::size_t tx = 0; tx < T; ++tx) {
            std::fill(hist.begin(), hist.end(), 0.0);
            std::size_t count = 0;
            for (std::size_t r = tile_start(ty, T, K); r < tile_start(ty + 1, T, K); ++r) {
                for (std::size_t c = tile_start(tx, T, K); c < tile_start(tx + 1, T, K); ++c) {
                    if (depth.is_background(r, c)) continue;
                    hist[bin_of(depth.at(r, c), options.bins)] += 1.0;
                    ++count;
                }
            }
            if (count == 0) continue;
            const double limit = options.clip_limit * static_cast<double>(count);
            double excess = 0.0;
            for (double& h : hist) {
                if (h > limit) {
                    excess += h - limit;
                    h = limit;
                }
            }
            const double share = excess / static_cast<double>(options.bins);
            auto& lut = luts[ty * T + tx];
            lut.resize(options.bins);
            double cdf = 0.0;
            for (std::size_t b = 0; b < options.bins; ++b) {
                cdf += hist[b] + share;
                lut[b] = std::min(1.0, cdf / static_cast<double>(count));
            }
        }
    }
    return luts;
}

GeomImage enhance_depth(const GeomImage& depth, const ClaheOptions& options) {
    const auto luts = clahe_tile_luts(depth, options);
    const std::size_t K = depth.size;
    const std::size_t T = options.tiles;

    std::vector<double> centers(T);
    for (std::size_t t = 0; t < T; ++t) {
        centers[t] = 0.5 * static_cast<double>(tile_start(t, T, K) + tile_start(t + 1, T, K));
    }
    // Neighbouring tile pair and the weight of the second one along one axis.
    auto locate = [&](double pos, std::size_t& lo, std::size_t& hi, double& w) {
        if (T == 1 || pos <= centers.front()) {
            lo = hi = 0;
            w = 0.0;
            return;
        }
        if (pos >= centers.back()) {
            lo = hi = T - 1;
            w = 0.0;
            return;
        }
        std::size_t i = 0;
        while (centers[i + 1] <= pos) ++i;
        lo = i;
        hi = i + 1;
        w = (pos - centers[i]) / (centers[i + 1] - centers[i]);
    };

    GeomImage out = depth;
    out.kind = ImageKind::EnhancedDepth;
    for (std::size_t r = 0; r < K; ++r) {
        std::size_t y0, y1;
        double wy;
        locate(static_cast<double>(r) + 0.5, y0, y1, wy);
        for (std::size_t c = 0; c < K; ++c) {
            if (depth.is_background(r, c)) {
                out.pixels[r * K + c] = 0.0;
                continue;
            }
            std::size_t x0, x1;
            double wx;
            locate(static_cast<double>(c) + 0.5, x0, x1, wx);
            const std::size_t bin = bin_of(depth.at(r, c), options.bins);
            const std::array<std::size_t, 4> tiles{y0 * T + x0, y0 * T + x1, y1 * T + x0, y1 * T + x1};
            const std::array<double, 4> weights{(1 - wy) * (1 - wx), (1 - wy) * wx, wy * (1 - wx), wy * wx};
            double value = 0.0;
            double total = 0.0;
            // Tiles without foreground drop out and the rest are renormalized.
            for (std::size_t i = 0; i < 4; ++i) {
                if (luts[tiles[i]].empty() || weights[i] == 0.0) continue;
                value += weights[i] * luts[tiles[i]][bin];
                total += weights[i];
            }
            if (total == 0.0) {
                // Only reachable when all weight sits on empty tiles; fall back
                // to the pixel's own tile.
                const std::size_t own = (r * T / K) * T + (c * T / K);
                value = luts[own].empty() ? depth.at(r, c) : luts[own][bin];
                total = 1.0;
            }
            out.pixels[r * K + c] = std::clamp(value / total, 0.0, 1.0);
        }
    }
    return out;
}

std::vector<ViewImages> render_views(const Mesh& mesh, std::span<const ViewAngle> views, std::size_t K,
                                     const ClaheOptions& clahe) {
    std::vector<ViewImages> out;
    out.reserve(views.size());
    std::string errors;
    std::optional<ErrorKind> first_kind;
    for (const auto& view : views) {
        try {
            ViewImages vi;
            vi.depth = render_depth(mesh, view, K);
            vi.enhanced_depth = enhance_depth(vi.depth, clahe);
            vi.texture = render_texture(mesh, view, K);
            out.push_back(std::move(vi));
        } catch (const Error& e) {
            if (!first_kind) first_kind = e.kind();
            errors += std::string(errors.empty() ? "" : "; ") + std::string(to_string(view.profile)) + ": " + e.what();
        }
    }
    if (first_kind) throw Error(*first_kind, errors);
    return out;
}

}  // namespace fer4d
