#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fer4d {

struct Vertex3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vertex3&) const = default;
};

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    bool operator==(const Rgb&) const = default;
};

using Face = std::array<std::uint32_t, 3>;

// Triangle mesh. Colors are either empty or one per vertex.
struct Mesh {
    std::vector<Vertex3> vertices;
    std::vector<Rgb> colors;
    std::vector<Face> faces;

    bool has_colors() const { return !colors.empty(); }
    std::size_t size() const { return vertices.size(); }

    // Throws DegenerateMesh / InvalidArgument when an invariant is broken.
    void validate() const;

    bool operator==(const Mesh&) const = default;
};

// Which of the landmarks outline the face, sit on the eyebrows, and mark the
// nose tip. Index sets come from the dataset manifest.
struct LandmarkSchema {
    std::size_t total_count = 83;
    std::vector<std::size_t> border_indices;
    std::vector<std::size_t> eyebrow_indices;
    std::size_t nose_tip_index = 0;

    // 83-point layout: eyes 0-15, eyebrows 16-35, nose 36-47 (tip 42),
    // mouth 48-67, face contour 68-82.
    static LandmarkSchema standard83();

    void validate() const;
    bool operator==(const LandmarkSchema&) const = default;
};

struct LandmarkSet {
    std::vector<Vertex3> points;

    void validate(const LandmarkSchema& schema) const;
    bool operator==(const LandmarkSet&) const = default;
};

enum class Expression : std::uint8_t { Anger = 0, Disgust, Fear, Happiness, Sadness, Surprise };

inline constexpr std::size_t kNumExpressions = 6;

std::string_view to_string(Expression e);
std::optional<Expression> parse_expression(std::string_view name);
inline std::size_t index_of(Expression e) { return static_cast<std::size_t>(e); }
inline Expression expression_at(std::size_t i) { return static_cast<Expression>(i); }

struct Frame {
    Mesh mesh;
    LandmarkSet landmarks;

    bool operator==(const Frame&) const = default;
};

struct MeshSequence {
    std::string subject_id;
    Expression expression = Expression::Anger;
    std::vector<Frame> frames;

    void validate(const LandmarkSchema& schema) const;
    bool operator==(const MeshSequence&) const = default;
};

struct Dataset {
    std::vector<MeshSequence> samples;
    LandmarkSchema schema;

    void validate() const;
    std::vector<std::string> subjects() const;  // sorted, unique
    bool operator==(const Dataset&) const = default;
};

struct CropOptions {
    double forehead_fraction = 0.6;
    // Hull inflation, as a fraction of the border-landmark bounding-box diagonal.
    double margin_fraction = 0.02;
};

struct PreprocessConfig {
    std::size_t outlier_k = 8;
    double outlier_stddev_mult = 2.0;
    CropOptions crop;

    void validate() const;
};

// Keeps the vertices flagged in `keep`, dropping faces that touch a removed
// vertex and re-indexing the rest.
Mesh keep_vertices(const Mesh& mesh, const std::vector<bool>& keep);

// y coordinate of the forehead cut plane for one landmark set.
double forehead_plane_y(const LandmarkSet& landmarks, const LandmarkSchema& schema, double forehead_fraction);

Mesh crop_face(const Mesh& mesh, const LandmarkSet& landmarks, const LandmarkSchema& schema,
               const CropOptions& options = {});

// Mean distance from each vertex to its k nearest neighbours (exact).
std::vector<double> knn_mean_distances(const std::vector<Vertex3>& points, std::size_t k);

Mesh remove_outliers(const Mesh& mesh, std::size_t k, double stddev_mult);

MeshSequence preprocess_sequence(const MeshSequence& seq, const LandmarkSchema& schema, const PreprocessConfig& cfg);

}  // namespace fer4d
