#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fer4d/mesh.hpp"

namespace fer4d {

// Mesh frame text format, one record per line:
//   v x y z [r g b]
//   f i j k          (0-based vertex indices)
// Blank lines and lines starting with '#' are ignored. Either every vertex
// carries a color or none does.
Mesh parse_mesh(std::istream& in, const std::string& source_name);
Mesh read_mesh(const std::filesystem::path& path);
void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

// Landmark text format: one "x y z" triple per line, exactly schema.total_count lines.
LandmarkSet parse_landmarks(std::istream& in, const std::string& source_name, const LandmarkSchema& schema);
LandmarkSet read_landmarks(const std::filesystem::path& path, const LandmarkSchema& schema);
void write_landmarks(std::ostream& out, const LandmarkSet& landmarks);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace fer4d
