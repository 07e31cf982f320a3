#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "fer4d/mesh.hpp"

namespace testutil {

// n x n vertex grid on [0, side]^2 at z = 0, two triangles per cell.
inline fer4d::Mesh grid_mesh(std::size_t n, double side = 1.0, bool colored = false) {
    fer4d::Mesh m;
    const double step = n > 1 ? side / static_cast<double>(n - 1) : 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            m.vertices.push_back({static_cast<double>(c) * step, static_cast<double>(r) * step, 0.0});
            if (colored) m.colors.push_back({0.5, 0.5, 0.5});
        }
    }
    for (std::size_t r = 0; r + 1 < n; ++r) {
        for (std::size_t c = 0; c + 1 < n; ++c) {
            const auto i = static_cast<std::uint32_t>(r * n + c);
            const auto w = static_cast<std::uint32_t>(n);
            m.faces.push_back({i, i + 1, i + w});
            m.faces.push_back({i + 1, i + w + 1, i + w});
        }
    }
    return m;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("fer4d_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testutil
