#include "fer4d/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "fer4d/error.hpp"

namespace fer4d {

namespace {

bool finite(const Vertex3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

constexpr std::array<std::string_view, kNumExpressions> kExpressionNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise"};

struct Point2 {
    double x;
    double y;
};

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; counter-clockwise, no repeated end point.
std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - p.x;
    const double ey = a.y + t * dy - p.y;
    return std::sqrt(ex * ex + ey * ey);
}

// Inside the hull, or within `margin` of its boundary. Handles hulls that
// collapsed to a segment or a point.
bool within_inflated_hull(const std::vector<Point2>& hull, const Point2& p, double margin) {
    if (hull.size() >= 3) {
        bool inside = true;
        for (std::size_t i = 0; i < hull.size(); ++i) {
            if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0) {
                inside = false;
                break;
            }
        }
        if (inside) return true;
    }
    if (hull.size() == 1) return segment_distance(p, hull[0], hull[0]) <= margin;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        if (segment_distance(p, hull[i], hull[(i + 1) % hull.size()]) <= margin) return true;
    }
    return false;
}

void check_landmarks_against(const LandmarkSet& landmarks, const LandmarkSchema& schema) {
    if (landmarks.points.size() != schema.total_count) {
        fail(ErrorKind::SchemaMismatch, "landmark count " + std::to_string(landmarks.points.size()) +
                                            " does not match schema count " + std::to_string(schema.total_count));
    }
    auto in_range = [&](std::size_t i) { return i < landmarks.points.size(); };
    if (!std::all_of(schema.border_indices.begin(), schema.border_indices.end(), in_range) ||
        !std::all_of(schema.eyebrow_indices.begin(), schema.eyebrow_indices.end(), in_range) ||
        !in_range(schema.nose_tip_index) || schema.border_indices.empty() || schema.eyebrow_indices.empty()) {
        fail(ErrorKind::SchemaMismatch, "landmark schema indices out of range");
    }
}

}  // namespace

void Mesh::validate() const {
    if (vertices.size() < 3) fail(ErrorKind::DegenerateMesh, "mesh needs at least 3 vertices");
    for (const auto& v : vertices) {
        if (!finite(v)) fail(ErrorKind::InvalidArgument, "non-finite vertex coordinate");
    }
    if (!colors.empty()) {
        if (colors.size() != vertices.size()) fail(ErrorKind::InvalidArgument, "color count differs from vertex count");
        for (const auto& c : colors) {
            if (!(c.r >= 0 && c.r <= 1 && c.g >= 0 && c.g <= 1 && c.b >= 0 && c.b <= 1)) {
                fail(ErrorKind::InvalidArgument, "vertex color outside [0,1]");
            }
        }
    }
    for (const auto& f : faces) {
        for (auto i : f) {
            if (i >= vertices.size()) fail(ErrorKind::InvalidArgument, "face index out of range");
        }
    }
}

LandmarkSchema LandmarkSchema::standard83() {
    LandmarkSchema s;
    s.total_count = 83;
    s.border_indices.resize(15);
    std::iota(s.border_indices.begin(), s.border_indices.end(), 68);
    s.eyebrow_indices.resize(20);
    std::iota(s.eyebrow_indices.begin(), s.eyebrow_indices.end(), 16);
    s.nose_tip_index = 42;
    return s;
}

void LandmarkSchema::validate() const {
    if (total_count == 0) fail(ErrorKind::SchemaMismatch, "schema has no landmarks");
    if (border_indices.empty() || eyebrow_indices.empty()) fail(ErrorKind::SchemaMismatch, "empty landmark group");
    auto in_range = [&](std::size_t i) { return i < total_count; };
    if (!std::all_of(border_indices.begin(), border_indices.end(), in_range) ||
        !std::all_of(eyebrow_indices.begin(), eyebrow_indices.end(), in_range) || !in_range(nose_tip_index)) {
        fail(ErrorKind::SchemaMismatch, "landmark index out of range");
    }
    if (std::find(eyebrow_indices.begin(), eyebrow_indices.end(), nose_tip_index) != eyebrow_indices.end()) {
        fail(ErrorKind::SchemaMismatch, "nose tip listed as an eyebrow landmark");
    }
}

void LandmarkSet::validate(const LandmarkSchema& schema) const {
    if (points.size() != schema.total_count) {
        fail(ErrorKind::SchemaMismatch, "expected " + std::to_string(schema.total_count) + " landmarks, got " +
                                            std::to_string(points.size()));
    }
    for (const auto& p : points) {
        if (!finite(p)) fail(ErrorKind::InvalidArgument, "non-finite landmark");
    }
}

std::string_view to_string(Expression e) { return kExpressionNames[index_of(e)]; }

std::optional<Expression> parse_expression(std::string_view name) {
    for (std::size_t i = 0; i < kExpressionNames.size(); ++i) {
        if (kExpressionNames[i] == name) return expression_at(i);
    }
    return std::nullopt;
}

void MeshSequence::validate(const LandmarkSchema& schema) const {
    if (frames.empty()) fail(ErrorKind::InvalidArgument, "sequence " + subject_id + " has no frames");
    for (const auto& f : frames) {
        f.mesh.validate();
        f.landmarks.validate(schema);
    }
}

void Dataset::validate() const {
    if (samples.empty()) fail(ErrorKind::InvalidArgument, "dataset is empty");
    schema.validate();
    std::set<std::pair<std::string, Expression>> seen;
    for (const auto& s : samples) {
        s.validate(schema);
        if (!seen.emplace(s.subject_id, s.expression).second) {
            fail(ErrorKind::InvalidArgument,
                 "duplicate sample " + s.subject_id + "/" + std::string(to_string(s.expression)));
        }
    }
}

std::vector<std::string> Dataset::subjects() const {
    std::set<std::string> ids;
    for (const auto& s : samples) ids.insert(s.subject_id);
    return {ids.begin(), ids.end()};
}

void PreprocessConfig::validate() const {
    require(outlier_k >= 1, "outlier k must be >= 1");
    require(outlier_stddev_mult > 0, "outlier stddev multiplier must be > 0");
    require(crop.forehead_fraction > 0, "forehead fraction must be > 0");
    require(crop.margin_fraction >= 0, "hull margin must be >= 0");
}

Mesh keep_vertices(const Mesh& mesh, const std::vector<bool>& keep) {
    constexpr auto kDropped = static_cast<std::uint32_t>(-1);
    std::vector<std::uint32_t> remap(mesh.vertices.size(), kDropped);
    Mesh out;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!keep[i]) continue;
        remap[i] = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[i]);
        if (mesh.has_colors()) out.colors.push_back(mesh.colors[i]);
    }
    for (const auto& f : mesh.faces) {
        Face g{remap[f[0]], remap[f[1]], remap[f[2]]};
        if (g[0] != kDropped && g[1] != kDropped && g[2] != kDropped) out.faces.push_back(g);
    }
    return out;
}

double forehead_plane_y(const LandmarkSet& landmarks, const LandmarkSchema& schema, double forehead_fraction) {
    double brow = 0.0;
    for (auto i : schema.eyebrow_indices) brow += landmarks.points[i].y;
    brow /= static_cast<double>(schema.eyebrow_indices.size());
    const double nose = landmarks.points[schema.nose_tip_index].y;
    return brow + forehead_fraction * (brow - nose);
}

Mesh crop_face(const Mesh& mesh, const LandmarkSet& landmarks, const LandmarkSchema& schema,
               const CropOptions& options) {
    require(options.forehead_fraction > 0, "forehead fraction must be > 0");
    check_landmarks_against(landmarks, schema);

    std::vector<Point2> border;
    border.reserve(schema.border_indices.size());
    double min_x = INFINITY, max_x = -INFINITY, min_y = INFINITY, max_y = -INFINITY;
    for (auto i : schema.border_indices) {
        const auto& p = landmarks.points[i];
        border.push_back({p.x, p.y});
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const auto hull = convex_hull(std::move(border));
    const double margin = options.margin_fraction * std::hypot(max_x - min_x, max_y - min_y);
    const double plane_y = forehead_plane_y(landmarks, schema, options.forehead_fraction);

    std::vector<bool> keep(mesh.vertices.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& v = mesh.vertices[i];
        keep[i] = v.y <= plane_y && within_inflated_hull(hull, {v.x, v.y}, margin);
        kept += keep[i];
    }
    if (kept < 3) fail(ErrorKind::EmptyCrop, std::to_string(kept) + " vertices survive cropping");
    return keep_vertices(mesh, keep);
}

// Exact k-NN via a sweep over x-sorted points: a candidate whose x gap alone
// exceeds the current k-th best distance cannot improve the result.
std::vector<double> knn_mean_distances(const std::vector<Vertex3>& points, std::size_t k) {
    const std::size_t n = points.size();
    std::vector<double> out(n, 0.0);
    if (n < 2 || k == 0) return out;
    const std::size_t kk = std::min(k, n - 1);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return points[a].x < points[b].x || (points[a].x == points[b].x && a < b);
    });

    std::vector<double> best;  // max-heap of the kk smallest squared distances
    best.reserve(kk + 1);
    for (std::size_t pos = 0; pos < n; ++pos) {
        const Vertex3& p = points[order[pos]];
        best.clear();
        auto offer = [&](const Vertex3& q) {
            const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
            const double d2 = dx * dx + dy * dy + dz * dz;
            if (best.size() < kk) {
                best.push_back(d2);
                std::push_heap(best.begin(), best.end());
            } else if (d2 < best.front()) {
                std::pop_heap(best.begin(), best.end());
                best.back() = d2;
                std::push_heap(best.begin(), best.end());
            }
        };
        std::size_t lo = pos, hi = pos + 1;
        while (lo > 0 || hi < n) {
            const double gap_lo = lo > 0 ? p.x - points[order[lo - 1]].x : INFINITY;
            const double gap_hi = hi < n ? points[order[hi]].x - p.x : INFINITY;
            const bool take_lo = gap_lo <= gap_hi;
            const double gap = take_lo ? gap_lo : gap_hi;
            if (best.size() == kk && gap * gap > best.front()) break;
            offer(points[order[take_lo ? --lo : hi++]]);
        }
        std::sort(best.begin(), best.end());
        double sum = 0.0;
        for (double d2 : best) sum += std::sqrt(d2);
        out[order[pos]] = sum / static_cast<double>(kk);
    }
    return out;
}

Mesh remove_outliers(const Mesh& mesh, std::size_t k, double stddev_mult) {
    require(k >= 1, "k must be >= 1");
    require(stddev_mult > 0, "stddev multiplier must be > 0");
    if (mesh.vertices.size() < 2) return mesh;

    const auto dist = knn_mean_distances(mesh.vertices, k);
    const double n = static_cast<double>(dist.size());
    const double mean = std::accumulate(dist.begin(), dist.end(), 0.0) / n;
    double var = 0.0;
    for (double d : dist) var += (d - mean) * (d - mean);
    const double stddev = std::sqrt(var / n);
    // Relative slack so rounding noise on a zero-variance cloud removes nothing.
    const double threshold = mean + stddev_mult * stddev + 1e-12 * std::abs(mean);

    std::vector<bool> keep(dist.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        keep[i] = dist[i] <= threshold;
        kept += keep[i];
    }
    if (kept < 3) fail(ErrorKind::EmptyCrop, "outlier removal left " + std::to_string(kept) + " vertices");
    return keep_vertices(mesh, keep);
}

MeshSequence preprocess_sequence(const MeshSequence& seq, const LandmarkSchema& schema, const PreprocessConfig& cfg) {
    cfg.validate();
    MeshSequence out;
    out.subject_id = seq.subject_id;
    out.expression = seq.expression;
    out.frames.reserve(seq.frames.size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto& frame = seq.frames[t];
        try {
            Mesh cleaned = remove_outliers(frame.mesh, cfg.outlier_k, cfg.outlier_stddev_mult);
            out.frames.push_back({crop_face(cleaned, frame.landmarks, schema, cfg.crop), frame.landmarks});
        } catch (const Error& e) {
            throw Error(e.kind(), "sequence " + seq.subject_id + "/" + std::string(to_string(seq.expression)) +
                                      " frame " + std::to_string(t) + ": " + e.detail());
        }
    }
    return out;
}

}  // namespace fer4d
