#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fer4d/error.hpp"
#include "fer4d/image_io.hpp"
#include "fer4d/projection.hpp"
#include "fer4d/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fer4d;

namespace {

const ViewAngle kFront{0.0, Profile::FP};

Framing identity_framing() { return Framing{0.0, 0.0, 1.0, std::nullopt, std::nullopt, std::nullopt}; }

Mesh triangle(Vertex3 a, Vertex3 b, Vertex3 c) {
    Mesh m;
    m.vertices = {a, b, c};
    m.faces = {{0, 1, 2}};
    return m;
}

Mesh append(Mesh a, const Mesh& b) {
    const auto off = static_cast<std::uint32_t>(a.vertices.size());
    a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
    a.colors.insert(a.colors.end(), b.colors.begin(), b.colors.end());
    for (auto f : b.faces) a.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    return a;
}

// Bowl on a square grid split into four triangles per cell around the cell
// center, so the triangulation is mirror symmetric in x. Coordinates are
// dyadic and the mirror pairs exact.
Mesh symmetric_bowl(int n) {
    Mesh m;
    const double h = 1.0 / 8.0;
    auto z_of = [](double x, double y) { return (x * x + y * y) / 4.0; };
    for (int r = -n; r <= n; ++r) {
        for (int c = -n; c <= n; ++c) m.vertices.push_back({c * h, r * h, z_of(c * h, r * h)});
    }
    const int w = 2 * n + 1;
    for (int r = 0; r + 1 < w; ++r) {
        for (int c = 0; c + 1 < w; ++c) {
            const double x = (c - n + 0.5) * h, y = (r - n + 0.5) * h;
            const auto mid = static_cast<std::uint32_t>(m.vertices.size());
            m.vertices.push_back({x, y, z_of(x, y)});
            const auto i = static_cast<std::uint32_t>(r * w + c);
            const auto W = static_cast<std::uint32_t>(w);
            m.faces.push_back({i, i + 1, mid});
            m.faces.push_back({i + 1, i + W + 1, mid});
            m.faces.push_back({i + W + 1, i + W, mid});
            m.faces.push_back({i + W, i, mid});
        }
    }
    for (std::size_t i = 0; i < m.vertices.size(); ++i) m.colors.push_back({0.2, 0.4, 0.6});
    return m;
}

GeomImage depth_image(std::size_t K, const std::vector<double>& values) {
    GeomImage g;
    g.kind = ImageKind::Depth;
    g.size = K;
    g.pixels = values;
    g.background.assign(K * K, 0);
    return g;
}

Mesh small_face() {
    SyntheticSpec spec;
    spec.subjects = 1;
    spec.frames = 2;
    return generate_synthetic(spec).samples.front().frames.back().mesh;
}

}  // namespace

TEST_CASE("rasterizer matches the point-in-triangle oracle") {
    Rng rng(21);
    const std::size_t K = 32;
    std::size_t compared = 0;
    for (int scene = 0; scene < 60; ++scene) {
        const Mesh m = oracle::random_scene(rng, K, scene % 2 == 0 ? 1 : 2);
        const auto buf = rasterize(m, K, identity_framing());
        const auto truth = oracle::raster_truth(m, K);
        for (std::size_t i = 0; i < K * K; ++i) {
            if (truth.ambiguous[i]) continue;
            ++compared;
            CHECK(buf.face[i] == truth.face[i]);
            if (truth.face[i] >= 0) CHECK(buf.depth[i] == doctest::Approx(truth.depth[i]).epsilon(1e-12));
        }
    }
    CHECK(compared > 60 * K * K * 99 / 100);
}

TEST_CASE("flat triangle renders at one depth") {
    const std::size_t K = 32;
    const Mesh tri = triangle({-10.3, -7.1, 2.0}, {11.2, -9.4, 2.0}, {1.7, 12.6, 2.0});
    const auto img = render_depth(tri, kFront, K, identity_framing());
    const auto truth = oracle::raster_truth(tri, K);
    for (std::size_t i = 0; i < K * K; ++i) {
        if (truth.ambiguous[i]) continue;
        CHECK((img.background[i] == 0) == (truth.face[i] >= 0));
        if (img.background[i] == 0) CHECK(img.pixels[i] == 1.0);
        else CHECK(img.pixels[i] == 0.0);
    }
}

TEST_CASE("z-buffer keeps the nearer of two overlapping triangles") {
    const std::size_t K = 32;
    Mesh near = triangle({-12, -12, 1}, {12, -12, 1}, {-12, 12, 1});
    Mesh far = triangle({-4, -4, 2}, {12, -4, 2}, {-4, 12, 2});
    near.colors.assign(3, {1, 0, 0});
    far.colors.assign(3, {0, 0, 1});
    const auto near_only = oracle::raster_truth(near, K);
    const auto far_only = oracle::raster_truth(far, K);
    for (const Mesh& m : {append(near, far), append(far, near)}) {
        const auto truth = oracle::raster_truth(m, K);
        const auto depth = render_depth(m, kFront, K, identity_framing());
        const auto tex = render_texture(m, kFront, K, identity_framing());
        std::size_t overlap = 0;
        for (std::size_t r = 0; r < K; ++r) {
            for (std::size_t c = 0; c < K; ++c) {
                const std::size_t i = r * K + c;
                if (truth.ambiguous[i] || truth.face[i] < 0) continue;
                const bool near_wins = truth.depth[i] < 1.5;
                // nearest surface maps to 1, farthest to 0
                CHECK(depth.at(r, c) == (near_wins ? 1.0 : 0.0));
                CHECK(tex.at(r, c, 0) == (near_wins ? 1.0 : 0.0));
                CHECK(tex.at(r, c, 2) == (near_wins ? 0.0 : 1.0));
                if (near_only.face[i] >= 0 && far_only.face[i] >= 0) {
                    ++overlap;
                    CHECK(near_wins);
                }
            }
        }
        CHECK(overlap > 0);
    }
}

TEST_CASE("texture interpolation") {
    const std::size_t K = 32;
    SUBCASE("constant color") {
        Mesh tri = triangle({-9, -8, 0}, {10, -6, 0.5}, {0, 11, 1});
        tri.colors.assign(3, {1, 0, 0});
        const auto img = render_texture(tri, kFront, K);
        std::size_t covered = 0;
        for (std::size_t r = 0; r < K; ++r) {
            for (std::size_t c = 0; c < K; ++c) {
                if (img.is_background(r, c)) continue;
                ++covered;
                CHECK(img.at(r, c, 0) == 1.0);
                CHECK(img.at(r, c, 1) == 0.0);
                CHECK(img.at(r, c, 2) == 0.0);
            }
        }
        CHECK(covered > 50);
    }
    SUBCASE("barycenter of an RGB triangle") {
        // centroid at world (0.5, -0.5) = center of pixel (16, 16)
        Mesh tri = triangle({0.5 - 6, -0.5 - 4, 1}, {0.5 + 6, -0.5 - 4, 1}, {0.5, -0.5 + 8, 1});
        tri.colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        const auto img = render_texture(tri, kFront, K, identity_framing());
        REQUIRE_FALSE(img.is_background(16, 16));
        for (std::size_t ch = 0; ch < 3; ++ch) CHECK(img.at(16, 16, ch) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    }
}

TEST_CASE("mirror-symmetric mesh renders mirror-symmetric") {
    const std::size_t K = 40;
    const Mesh bowl = symmetric_bowl(12);
    Framing fr{0.0, 0.0, K / 3.4, 0.0, 1.2, std::nullopt};
    const auto img = render_depth(bowl, kFront, K, fr);
    std::size_t mismatched = 0, covered = 0;
    for (std::size_t r = 0; r < K; ++r) {
        for (std::size_t c = 0; c < K; ++c) {
            const std::size_t m = K - 1 - c;
            if (img.is_background(r, c) != img.is_background(r, m)) {
                ++mismatched;
                continue;
            }
            if (img.is_background(r, c)) continue;
            ++covered;
            CHECK(img.at(r, c) == doctest::Approx(img.at(r, m)).epsilon(1e-9));
        }
    }
    // only silhouette pixels may flip under the edge tie rule
    CHECK(covered > 100);
    CHECK(mismatched <= 4 * K);
}

TEST_CASE("depth normalization spans [0, 1]") {
    const Mesh face = small_face();
    for (double yaw : {-30.0, 0.0, 30.0}) {
        const ViewAngle v{yaw, yaw < 0 ? Profile::RP : (yaw > 0 ? Profile::LP : Profile::FP)};
        const auto img = render_depth(face, v, 32);
        double lo = 2, hi = -1;
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            if (img.background[i]) {
                CHECK(img.pixels[i] == 0.0);
                continue;
            }
            lo = std::min(lo, img.pixels[i]);
            hi = std::max(hi, img.pixels[i]);
        }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
}

TEST_CASE("view consistency and shared coverage") {
    const Mesh face = small_face();
    for (double yaw : {-30.0, -12.5, 17.0, 30.0}) {
        const ViewAngle v{yaw, yaw < 0 ? Profile::RP : Profile::LP};
        const Mesh pre = rotate_yaw(face, yaw);
        CHECK(render_depth(face, v, 32) == render_depth(pre, kFront, 32));
        CHECK(render_texture(face, v, 32) == render_texture(pre, kFront, 32));
        CHECK(render_depth(face, v, 32).background == render_texture(face, v, 32).background);
    }
    CHECK(rotate_yaw(face, 0.0) == face);
}

TEST_CASE("render_views composes the three renderers in view order") {
    const Mesh face = small_face();
    const auto views = default_views();
    REQUIRE(views.size() == 3);
    CHECK(views[0].profile == Profile::RP);
    CHECK(views[1].yaw_degrees == 0.0);
    const auto out = render_views(face, views, 32);
    REQUIRE(out.size() == views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        CHECK(out[i].depth == render_depth(face, views[i], 32));
        CHECK(out[i].enhanced_depth == enhance_depth(out[i].depth));
        CHECK(out[i].texture == render_texture(face, views[i], 32));
        CHECK(out[i].enhanced_depth.background == out[i].depth.background);
    }
}

TEST_CASE("render errors") {
    const Mesh flat_line = triangle({0, 0, 0}, {1, 1, 0}, {2, 2, 0});
    try {
        render_depth(flat_line, kFront, 16);
        FAIL("expected DegenerateMesh");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateMesh);
    }
    const Mesh tri = triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
    try {
        render_texture(tri, kFront, 16);
        FAIL("expected MissingColors");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingColors);
    }
    CHECK_THROWS_AS(render_depth(tri, kFront, 4), Error);
    CHECK_THROWS_AS(render_depth(tri, ViewAngle{90.0, Profile::LP}, 16), Error);
    CHECK_THROWS_AS(render_depth(tri, ViewAngle{10.0, Profile::FP}, 16), Error);
}

TEST_CASE("CLAHE on a two-level image") {
    // equal areas at 0.25 and 0.75: the CDF reaches 0.5 then 1
    const std::size_t K = 16;
    std::vector<double> v(K * K);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % K) < K / 2 ? 0.25 : 0.75;
    ClaheOptions opt;
    opt.tiles = 1;
    opt.clip_limit = 1.0;
    const auto out = enhance_depth(depth_image(K, v), opt);
    CHECK(out.kind == ImageKind::EnhancedDepth);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(std::abs(out.pixels[i] - (v[i] < 0.5 ? 0.5 : 1.0)) <= 1.0 / 256);
    }
}

TEST_CASE("CLAHE contracts") {
    Rng rng(8);
    const std::size_t K = 32;
    SUBCASE("constant foreground stays constant") {
        auto img = depth_image(K, std::vector<double>(K * K, 0.37));
        for (std::size_t i = 0; i < K * K; i += 7) {
            img.background[i] = 1;
            img.pixels[i] = 0;
        }
        const auto out = enhance_depth(img);
        double first = -1;
        for (std::size_t i = 0; i < K * K; ++i) {
            if (img.background[i]) {
                CHECK(out.background[i] == 1);
                CHECK(out.pixels[i] == 0.0);
                continue;
            }
            if (first < 0) first = out.pixels[i];
            CHECK(out.pixels[i] == doctest::Approx(first).epsilon(1e-12));
        }
    }
    SUBCASE("range, background and per-tile monotonicity") {
        for (int trial = 0; trial < 10; ++trial) {
            auto img = depth_image(K, {});
            for (std::size_t i = 0; i < K * K; ++i) img.pixels.push_back(rng.uniform());
            for (std::size_t i = 0; i < K * K; ++i) {
                if (rng.uniform() < 0.2) {
                    img.background[i] = 1;
                    img.pixels[i] = 0;
                }
            }
            ClaheOptions opt;
            opt.tiles = 1 + trial % 4;
            opt.clip_limit = rng.uniform(0.005, 1.0);
            const auto out = enhance_depth(img, opt);
            CHECK(out.background == img.background);
            for (double p : out.pixels) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
            }
            for (const auto& lut : clahe_tile_luts(img, opt)) {
                CHECK(std::is_sorted(lut.begin(), lut.end()));
            }
            if (opt.tiles == 1) {
                // one mapping for the whole image: order is preserved globally
                for (std::size_t a = 0; a < K * K; a += 3) {
                    for (std::size_t b = 0; b < K * K; b += 5) {
                        if (img.background[a] || img.background[b]) continue;
                        if (img.pixels[a] <= img.pixels[b]) CHECK(out.pixels[a] <= out.pixels[b]);
                    }
                }
            }
        }
    }
}

TEST_CASE("netpbm round trip") {
    testutil::TempDir dir("netpbm");
    Rng rng(1);
    std::vector<double> gray(6 * 5), rgb(6 * 5 * 3);
    for (auto& x : gray) x = rng.uniform();
    for (auto& x : rgb) x = rng.uniform();
    std::vector<std::uint8_t> bits(6 * 5);
    for (auto& b : bits) b = rng.uniform() < 0.5;

    write_pgm16(dir.path / "a.pgm", 6, 5, gray);
    write_ppm8(dir.path / "a.ppm", 6, 5, rgb);
    write_pbm(dir.path / "a.pbm", 6, 5, bits);
    const auto g = read_netpbm(dir.path / "a.pgm");
    const auto c = read_netpbm(dir.path / "a.ppm");
    const auto p = read_netpbm(dir.path / "a.pbm");
    CHECK(g.width == 6);
    CHECK(g.height == 5);
    CHECK(c.channels == 3);
    for (std::size_t i = 0; i < gray.size(); ++i) CHECK(std::abs(g.values[i] - gray[i]) <= 0.5 / 65535 + 1e-15);
    for (std::size_t i = 0; i < rgb.size(); ++i) CHECK(std::abs(c.values[i] - rgb[i]) <= 0.5 / 255 + 1e-15);
    for (std::size_t i = 0; i < bits.size(); ++i) CHECK(p.values[i] == static_cast<double>(bits[i]));
}
