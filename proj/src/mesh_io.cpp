#include "fer4d/mesh_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "fer4d/error.hpp"

namespace fer4d {

namespace {

struct Token {
    std::string_view text;
    std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) tokens.push_back({line.substr(start, i - start), start + 1});
    }
    return tokens;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, std::size_t column, const std::string& msg) {
    fail(ErrorKind::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg);
}

double to_double(const Token& tok, const std::string& source, std::size_t line) {
    double value = 0.0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        parse_fail(source, line, tok.column, "expected a finite number, got '" + std::string(tok.text) + "'");
    }
    return value;
}

std::uint64_t to_index(const Token& tok, const std::string& source, std::size_t line) {
    std::uint64_t value = 0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        parse_fail(source, line, tok.column, "expected a vertex index, got '" + std::string(tok.text) + "'");
    }
    return value;
}

bool skippable(const std::vector<Token>& tokens) { return tokens.empty() || tokens[0].text.starts_with('#'); }

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingFile, path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

Mesh parse_mesh(std::istream& in, const std::string& source_name) {
    Mesh mesh;
    struct PendingFace {
        Face face;
        std::size_t line;
        std::array<std::size_t, 3> columns;
    };
    std::vector<PendingFace> pending;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = tokenize(line);
        if (skippable(tokens)) continue;
        if (tokens[0].text == "v") {
            if (tokens.size() != 4 && tokens.size() != 7) {
                parse_fail(source_name, line_no, tokens[0].column, "vertex needs 3 or 6 values");
            }
            mesh.vertices.push_back({to_double(tokens[1], source_name, line_no),
                                     to_double(tokens[2], source_name, line_no),
                                     to_double(tokens[3], source_name, line_no)});
            const bool colored = tokens.size() == 7;
            const std::size_t before = mesh.vertices.size() - 1;
            if (before > 0 && colored != (mesh.colors.size() == before)) {
                parse_fail(source_name, line_no, tokens[0].column, "vertex colors must be given for all or no vertices");
            }
            if (colored) {
                Rgb c{to_double(tokens[4], source_name, line_no), to_double(tokens[5], source_name, line_no),
                      to_double(tokens[6], source_name, line_no)};
                for (std::size_t i = 0; i < 3; ++i) {
                    const double ch = i == 0 ? c.r : (i == 1 ? c.g : c.b);
                    if (ch < 0.0 || ch > 1.0) parse_fail(source_name, line_no, tokens[4 + i].column, "color outside [0,1]");
                }
                mesh.colors.push_back(c);
            }
        } else if (tokens[0].text == "f") {
            if (tokens.size() != 4) parse_fail(source_name, line_no, tokens[0].column, "face needs 3 indices");
            PendingFace pf{};
            pf.line = line_no;
            for (std::size_t i = 0; i < 3; ++i) {
                const auto idx = to_index(tokens[i + 1], source_name, line_no);
                if (idx > UINT32_MAX) parse_fail(source_name, line_no, tokens[i + 1].column, "face index too large");
                pf.face[i] = static_cast<std::uint32_t>(idx);
                pf.columns[i] = tokens[i + 1].column;
            }
            pending.push_back(pf);
        } else {
            parse_fail(source_name, line_no, tokens[0].column, "unknown record '" + std::string(tokens[0].text) + "'");
        }
    }
    for (const auto& pf : pending) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (pf.face[i] >= mesh.vertices.size()) {
                parse_fail(source_name, pf.line, pf.columns[i],
                           "face index " + std::to_string(pf.face[i]) + " out of range for " +
                               std::to_string(mesh.vertices.size()) + " vertices");
            }
        }
        mesh.faces.push_back(pf.face);
    }
    if (mesh.vertices.size() < 3) parse_fail(source_name, line_no, 1, "mesh needs at least 3 vertices");
    return mesh;
}

Mesh read_mesh(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_mesh(in, path.string());
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& v = mesh.vertices[i];
        out << "v " << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z);
        if (mesh.has_colors()) {
            const auto& c = mesh.colors[i];
            out << ' ' << format_double(c.r) << ' ' << format_double(c.g) << ' ' << format_double(c.b);
        }
        out << '\n';
    }
    for (const auto& f : mesh.faces) out << "f " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
    auto out = open_output(path);
    write_mesh(out, mesh);
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

LandmarkSet parse_landmarks(std::istream& in, const std::string& source_name, const LandmarkSchema& schema) {
    LandmarkSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = tokenize(line);
        if (skippable(tokens)) continue;
        if (tokens.size() != 3) parse_fail(source_name, line_no, tokens[0].column, "landmark needs 3 values");
        set.points.push_back({to_double(tokens[0], source_name, line_no), to_double(tokens[1], source_name, line_no),
                              to_double(tokens[2], source_name, line_no)});
    }
    if (set.points.size() != schema.total_count) {
        fail(ErrorKind::SchemaMismatch, source_name + ": " + std::to_string(set.points.size()) +
                                            " landmarks, schema expects " + std::to_string(schema.total_count));
    }
    return set;
}

LandmarkSet read_landmarks(const std::filesystem::path& path, const LandmarkSchema& schema) {
    auto in = open_input(path);
    return parse_landmarks(in, path.string(), schema);
}

void write_landmarks(std::ostream& out, const LandmarkSet& landmarks) {
    for (const auto& p : landmarks.points) {
        out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
    }
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
    auto out = open_output(path);
    write_landmarks(out, landmarks);
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace fer4d
