#pragma once

// Reference implementations used as test oracles. They share no code with
// the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fer4d/fusion.hpp"
#include "fer4d/mesh.hpp"
#include "fer4d/projection.hpp"
#include "fer4d/rng.hpp"

namespace oracle {

// Per-pixel coverage and winning depth of a mesh drawn with the identity
// framing (center 0, scale 1), so pixel (r, c) has its center at world
// x = c + 0.5 - K/2, y = K/2 - r - 0.5. Pixels whose center lies within
// `eps` (in barycentric terms) of some triangle edge are flagged ambiguous.
struct RasterTruth {
    std::vector<int> face;  // -1 = uncovered
    std::vector<double> depth;
    std::vector<bool> ambiguous;
};

inline RasterTruth raster_truth(const fer4d::Mesh& mesh, std::size_t K, double eps = 1e-9) {
    RasterTruth out;
    out.face.assign(K * K, -1);
    out.depth.assign(K * K, std::numeric_limits<double>::infinity());
    out.ambiguous.assign(K * K, false);
    const double half = static_cast<double>(K) / 2.0;
    for (std::size_t r = 0; r < K; ++r) {
        for (std::size_t c = 0; c < K; ++c) {
            const double px = static_cast<double>(c) + 0.5 - half;
            const double py = half - static_cast<double>(r) - 0.5;
            const std::size_t idx = r * K + c;
            for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
                const auto& a = mesh.vertices[mesh.faces[f][0]];
                const auto& b = mesh.vertices[mesh.faces[f][1]];
                const auto& d = mesh.vertices[mesh.faces[f][2]];
                // Cramer's rule for p = a + s (b - a) + t (d - a)
                const double det = (b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y);
                if (det == 0.0) continue;
                const double s = ((px - a.x) * (d.y - a.y) - (d.x - a.x) * (py - a.y)) / det;
                const double t = ((b.x - a.x) * (py - a.y) - (px - a.x) * (b.y - a.y)) / det;
                const double l0 = 1.0 - s - t;
                const double lo = std::min({l0, s, t});
                if (std::abs(lo) <= eps) {
                    out.ambiguous[idx] = true;
                    continue;
                }
                if (lo < 0.0) continue;
                const double z = l0 * a.z + s * b.z + t * d.z;
                if (out.face[idx] >= 0 && std::abs(z - out.depth[idx]) <= eps) out.ambiguous[idx] = true;
                if (z < out.depth[idx]) {
                    out.depth[idx] = z;
                    out.face[idx] = static_cast<int>(f);
                }
            }
        }
    }
    return out;
}

// Random scene of `triangles` triangles inside the image window, each with
// its own depth plane in [1, 3].
inline fer4d::Mesh random_scene(fer4d::Rng& rng, std::size_t K, std::size_t triangles) {
    fer4d::Mesh m;
    const double half = static_cast<double>(K) / 2.0;
    for (std::size_t t = 0; t < triangles; ++t) {
        for (int v = 0; v < 3; ++v) {
            m.vertices.push_back({rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(1.0, 3.0)});
        }
        const auto b = static_cast<std::uint32_t>(3 * t);
        m.faces.push_back({b, b + 1, b + 2});
    }
    return m;
}

// f_t = t v + e_t with |e_t| at most `noise` times |v|, t = 1..T.
inline std::vector<std::vector<double>> monotone_video(fer4d::Rng& rng, std::size_t T, std::size_t d, double noise) {
    std::vector<double> v(d);
    double norm = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<std::vector<double>> frames(T, std::vector<double>(d));
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> e(d);
        double en = 0.0;
        for (auto& x : e) {
            x = rng.normal();
            en += x * x;
        }
        en = std::sqrt(en);
        const double mag = rng.uniform() * noise * norm;
        for (std::size_t i = 0; i < d; ++i) {
            frames[t][i] = static_cast<double>(t + 1) * v[i] + (en > 0 ? e[i] / en * mag : 0.0);
        }
    }
    return frames;
}

// Neumaier-compensated sum in long double; the rounding of a naive double
// sum would otherwise swamp the quantity being measured.
inline double exact_sum(std::span<const double> xs) {
    long double s = 0.0L, c = 0.0L;
    for (double x : xs) {
        const long double t = s + x;
        c += std::fabs(s) >= std::fabs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return static_cast<double>(s + c);
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

// Straight triple loop over (view, stream, label).
inline std::vector<double> fuse(const fer4d::ScoreCube& cube, std::span<const fer4d::Stream> streams,
                                std::span<const std::size_t> views) {
    const std::size_t N = cube.samples(), L = cube.classes();
    std::vector<double> out(N * L, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t l = 0; l < L; ++l) {
            double acc = 0.0;
            for (auto v : views) {
                for (auto s : streams) acc += cube.at(n, s, v, l);
            }
            out[n * L + l] = acc / static_cast<double>(views.size());
        }
    }
    return out;
}

// Random distribution over `L` labels.
inline std::vector<double> random_distribution(fer4d::Rng& rng, std::size_t L) {
    std::vector<double> p(L);
    double sum = 0.0;
    for (auto& x : p) {
        x = rng.uniform(0.01, 1.0);
        sum += x;
    }
    for (auto& x : p) x /= sum;
    return p;
}

inline fer4d::ScoreCube random_cube(fer4d::Rng& rng, std::size_t N) {
    fer4d::ScoreCube cube(N, {fer4d::Profile::RP, fer4d::Profile::FP, fer4d::Profile::LP});
    for (auto s : {fer4d::Stream::DI, fer4d::Stream::LI}) {
        for (std::size_t v = 0; v < 3; ++v) {
            for (std::size_t n = 0; n < N; ++n) cube.set(n, s, v, random_distribution(rng, cube.classes()));
        }
    }
    return cube;
}

}  // namespace oracle
