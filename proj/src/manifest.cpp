#include "fer4d/manifest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fer4d/error.hpp"
#include "fer4d/mesh_io.hpp"

namespace fer4d {

namespace {

struct Token {
    std::string text;
    std::size_t column;
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

class ManifestParser {
public:
    explicit ManifestParser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void error(std::size_t column, const std::string& msg) const {
        fail(ErrorKind::ParseError, source_ + ":" + std::to_string(line_) + ":" + std::to_string(column) + ": " + msg);
    }

    std::size_t index(const Token& tok) const {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
        if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
            error(tok.column, "expected a non-negative integer, got '" + tok.text + "'");
        }
        return v;
    }

    void expect_args(const std::vector<Token>& toks, std::size_t n) const {
        if (toks.size() != n + 1) {
            error(toks[0].column, "'" + toks[0].text + "' takes " + std::to_string(n) + " argument(s)");
        }
    }

    Manifest parse(const std::string& text, const std::filesystem::path& base) {
        Manifest m;
        m.root = base;
        m.schema = LandmarkSchema{};
        bool seen_format = false;
        bool seen_count = false;
        bool seen_tip = false;
        std::istringstream in(text);
        std::string line;
        std::size_t sample_line = 0;
        std::size_t sample_col = 0;
        auto close_sample = [&] {
            if (!m.samples.empty() && m.samples.back().mesh_files.empty()) {
                line_ = sample_line;
                error(sample_col, "sample has no frames");
            }
        };
        while (std::getline(in, line)) {
            ++line_;
            const auto toks = tokenize(line);
            if (toks.empty() || toks[0].text.starts_with('#')) continue;
            const std::string& key = toks[0].text;
            if (!seen_format) {
                if (key != "format" || toks.size() != 3 || toks[1].text != "fer4d-manifest") {
                    error(toks[0].column, "expected 'format fer4d-manifest 1'");
                }
                if (toks[2].text != "1") error(toks[2].column, "unsupported manifest version '" + toks[2].text + "'");
                seen_format = true;
            } else if (key == "root") {
                expect_args(toks, 1);
                m.root = base / toks[1].text;
            } else if (key == "landmarks") {
                expect_args(toks, 1);
                m.schema.total_count = index(toks[1]);
                seen_count = true;
            } else if (key == "border" || key == "eyebrows") {
                auto& dst = key == "border" ? m.schema.border_indices : m.schema.eyebrow_indices;
                dst.clear();
                for (std::size_t i = 1; i < toks.size(); ++i) dst.push_back(index(toks[i]));
            } else if (key == "nose_tip") {
                expect_args(toks, 1);
                m.schema.nose_tip_index = index(toks[1]);
                seen_tip = true;
            } else if (key == "sample") {
                expect_args(toks, 2);
                close_sample();
                const auto expr = parse_expression(toks[2].text);
                if (!expr) error(toks[2].column, "unknown expression '" + toks[2].text + "'");
                m.samples.push_back({toks[1].text, *expr, {}, {}});
                sample_line = line_;
                sample_col = toks[0].column;
            } else if (key == "frame") {
                expect_args(toks, 2);
                if (m.samples.empty()) error(toks[0].column, "'frame' before any 'sample'");
                m.samples.back().mesh_files.emplace_back(toks[1].text);
                m.samples.back().landmark_files.emplace_back(toks[2].text);
            } else {
                error(toks[0].column, "unknown directive '" + key + "'");
            }
        }
        close_sample();
        if (!seen_format) error(1, "empty manifest");
        if (!seen_count || !seen_tip) {
            fail(ErrorKind::ParseError, source_ + ": landmark schema incomplete (need 'landmarks' and 'nose_tip')");
        }
        try {
            m.schema.validate();
        } catch (const Error& e) {
            fail(ErrorKind::SchemaMismatch, source_ + ": " + e.detail());
        }
        return m;
    }

private:
    std::string source_;
    std::size_t line_ = 0;
};

void put_indices(std::ostream& out, const char* key, const std::vector<std::size_t>& v) {
    out << key;
    for (auto i : v) out << ' ' << i;
    out << '\n';
}

}  // namespace

std::string sample_name(const std::string& subject_id, Expression expression) {
    return subject_id + "_" + std::string(to_string(expression));
}

std::string sample_name(const MeshSequence& seq) { return sample_name(seq.subject_id, seq.expression); }

Manifest parse_manifest(const std::string& text, const std::filesystem::path& manifest_path) {
    return ManifestParser(manifest_path.string()).parse(text, manifest_path.parent_path());
}

Manifest read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorKind::MissingFile, manifest_path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), manifest_path);
}

MeshSequence load_sample(const Manifest& m, std::size_t index) {
    const ManifestSample& s = m.samples.at(index);
    MeshSequence seq{s.subject_id, s.expression, {}};
    for (std::size_t t = 0; t < s.mesh_files.size(); ++t) {
        const auto mesh_path = m.root / s.mesh_files[t];
        const auto lmk_path = m.root / s.landmark_files[t];
        if (!std::filesystem::exists(mesh_path)) fail(ErrorKind::MissingFile, mesh_path.string());
        if (!std::filesystem::exists(lmk_path)) fail(ErrorKind::MissingFile, lmk_path.string());
        seq.frames.push_back({read_mesh(mesh_path), read_landmarks(lmk_path, m.schema)});
    }
    return seq;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    const Manifest m = read_manifest(manifest_path);
    Dataset ds;
    ds.schema = m.schema;
    for (std::size_t i = 0; i < m.samples.size(); ++i) ds.samples.push_back(load_sample(m, i));
    ds.validate();
    return ds;
}

ManifestSample write_sequence(const std::filesystem::path& root, const MeshSequence& seq) {
    for (char c : seq.subject_id) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '/' || c == '#' || c == ',') {
            fail(ErrorKind::InvalidArgument, "subject id '" + seq.subject_id + "' is not usable as a file name");
        }
    }
    if (seq.subject_id.empty()) fail(ErrorKind::InvalidArgument, "empty subject id");
    std::filesystem::create_directories(root / "meshes");
    std::filesystem::create_directories(root / "landmarks");
    const std::string name = sample_name(seq);
    ManifestSample rec{seq.subject_id, seq.expression, {}, {}};
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_f%03zu", t);
        const std::string mesh_rel = "meshes/" + name + suffix + ".mesh";
        const std::string lmk_rel = "landmarks/" + name + suffix + ".lmk";
        write_mesh(root / mesh_rel, seq.frames[t].mesh);
        write_landmarks(root / lmk_rel, seq.frames[t].landmarks);
        rec.mesh_files.emplace_back(mesh_rel);
        rec.landmark_files.emplace_back(lmk_rel);
    }
    return rec;
}

void write_manifest(const std::filesystem::path& path, const LandmarkSchema& schema,
                    const std::vector<ManifestSample>& samples) {
    std::ostringstream out;
    out << "format fer4d-manifest 1\nroot .\nlandmarks " << schema.total_count << '\n';
    put_indices(out, "border", schema.border_indices);
    put_indices(out, "eyebrows", schema.eyebrow_indices);
    out << "nose_tip " << schema.nose_tip_index << '\n';
    for (const auto& s : samples) {
        out << "sample " << s.subject_id << ' ' << to_string(s.expression) << '\n';
        for (std::size_t t = 0; t < s.mesh_files.size(); ++t) {
            out << "frame " << s.mesh_files[t].generic_string() << ' ' << s.landmark_files[t].generic_string() << '\n';
        }
    }
    std::ofstream f(path);
    if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
    f << out.str();
    if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
    dataset.validate();
    std::vector<ManifestSample> records;
    for (const auto& seq : dataset.samples) records.push_back(write_sequence(dir, seq));
    const auto path = dir / "manifest.txt";
    write_manifest(path, dataset.schema, records);
    return path;
}

}  // namespace fer4d
