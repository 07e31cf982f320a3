#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fer4d/mesh.hpp"

namespace fer4d {

struct ManifestSample {
    std::string subject_id;
    Expression expression = Expression::Anger;
    std::vector<std::filesystem::path> mesh_files;      // relative to root
    std::vector<std::filesystem::path> landmark_files;  // same length as mesh_files
};

// Text manifest:
//   format fer4d-manifest 1
//   root <dir>                     (relative to the manifest's directory)
//   landmarks <total_count>
//   border <i> <i> ...
//   eyebrows <i> <i> ...
//   nose_tip <i>
//   sample <subject_id> <expression>
//   frame <mesh file> <landmark file>   (one per frame, in temporal order)
// '#' starts a comment line.
struct Manifest {
    std::filesystem::path root;
    LandmarkSchema schema;
    std::vector<ManifestSample> samples;
};

Manifest parse_manifest(const std::string& text, const std::filesystem::path& manifest_path);
Manifest read_manifest(const std::filesystem::path& manifest_path);

Dataset load_dataset(const std::filesystem::path& manifest_path);

// Materializes sample `index` of a parsed manifest.
MeshSequence load_sample(const Manifest& manifest, std::size_t index);

// Writes the frame and landmark files of one sequence under `root` and
// returns its manifest record (paths relative to `root`).
ManifestSample write_sequence(const std::filesystem::path& root, const MeshSequence& seq);

// Writes a manifest whose root is the manifest's own directory.
void write_manifest(const std::filesystem::path& path, const LandmarkSchema& schema,
                    const std::vector<ManifestSample>& samples);

// Writes `dir`/manifest.txt plus one mesh and one landmark file per frame.
// Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

// "<subject>_<expression>", the identifier used in workspace file names.
std::string sample_name(const MeshSequence& seq);
std::string sample_name(const std::string& subject_id, Expression expression);

}  // namespace fer4d
