#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fer4d/error.hpp"
#include "fer4d/landmarks.hpp"
#include "fer4d/rng.hpp"
#include "helpers.hpp"

using namespace fer4d;

namespace {

const ViewAngle kFront{0.0, Profile::FP};

// Window [-1, 1]^2 around the origin.
LandmarkBounds unit_bounds() {
    const std::vector<LandmarkSet> frames{LandmarkSet{{{-1, -1, 0}, {1, 1, 0}}}};
    return landmark_bounds(frames, kFront);
}

LandmarkImage blank(std::size_t B) {
    LandmarkImage img;
    img.size = B;
    img.view = kFront;
    img.bits.assign(B * B, 0);
    return img;
}

MeshSequence sequence_of(const std::vector<LandmarkSet>& sets) {
    MeshSequence seq{"S1", Expression::Surprise, {}};
    for (const auto& s : sets) seq.frames.push_back({testutil::grid_mesh(2), s});
    return seq;
}

LandmarkSet cluster(Rng& rng, std::size_t n, double dx = 0.0) {
    LandmarkSet s;
    for (std::size_t i = 0; i < n; ++i) s.points.push_back({rng.uniform(-0.5, 0.5) + dx, rng.uniform(-0.5, 0.5), 0.0});
    return s;
}

}  // namespace

TEST_CASE("bounds center maps to the grid center") {
    const auto b = unit_bounds();
    CHECK(b.extent == 2.0);
    CHECK(b.center_x == 0.0);
    const auto img = rasterize_landmarks(LandmarkSet{{{0, 0, 0}}}, kFront, 9, 0, b);
    CHECK(img.count() == 1);
    CHECK(img.at(4, 4));
    // corners of the window land on the corner pixels
    const auto corners = rasterize_landmarks(LandmarkSet{{{-1, 1, 0}, {1, -1, 0}}}, kFront, 9, 0, b);
    CHECK(corners.at(0, 0));
    CHECK(corners.at(8, 8));
}

TEST_CASE("pixel mapping matches the closed form") {
    Rng rng(1);
    const auto b = unit_bounds();
    for (int i = 0; i < 200; ++i) {
        const Vertex3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), 0};
        const auto [row, col] = landmark_pixel(p, b, 33);
        // (B - 1) / extent = 16 pixels per unit
        CHECK(std::abs(static_cast<double>(col) - (16.0 + 16.0 * p.x)) <= 0.5);
        CHECK(std::abs(static_cast<double>(row) - (16.0 - 16.0 * p.y)) <= 0.5);
    }
}

TEST_CASE("stamped disks") {
    const auto b = unit_bounds();
    for (std::size_t radius : {0u, 1u, 2u, 3u}) {
        const auto img = rasterize_landmarks(LandmarkSet{{{0, 0, 0}}}, kFront, 33, radius, b);
        std::size_t expect = 0;
        const long r = static_cast<long>(radius);
        for (long dy = -r; dy <= r; ++dy) {
            for (long dx = -r; dx <= r; ++dx) {
                const bool inside = dx * dx + dy * dy <= r * r;
                expect += inside;
                CHECK(img.at(static_cast<std::size_t>(16 + dy), static_cast<std::size_t>(16 + dx)) == inside);
            }
        }
        CHECK(img.count() == expect);
        if (radius == 1) CHECK(expect == 5);
    }
    // a disk at the border is clipped, not wrapped
    const auto edge = rasterize_landmarks(LandmarkSet{{{-1, 0, 0}}}, kFront, 33, 1, b);
    CHECK(edge.count() == 4);
}

TEST_CASE("mirror-symmetric landmarks give a mirrored image") {
    Rng rng(2);
    LandmarkSet set;
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform(0.05, 1.0), y = rng.uniform(-1, 1);
        set.points.push_back({x, y, 0});
        set.points.push_back({-x, y, 0});
    }
    const std::vector<LandmarkSet> frames{set};
    const auto b = landmark_bounds(frames, kFront);
    const std::size_t B = 32;
    const auto img = rasterize_landmarks(set, kFront, B, 1, b);
    // every set pixel has a set pixel within one step of its mirror
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t c = 0; c < B; ++c) {
            if (!img.at(r, c)) continue;
            const long m = static_cast<long>(B - 1 - c);
            bool found = false;
            for (long d = -1; d <= 1 && !found; ++d) {
                const long cc = m + d;
                found = cc >= 0 && cc < static_cast<long>(B) && img.at(r, static_cast<std::size_t>(cc));
            }
            CHECK(found);
        }
    }
}

TEST_CASE("frame descriptor") {
    SUBCASE("empty image") { CHECK(describe_frame(blank(16), 4) == std::vector<double>(20, 0.0)); }
    SUBCASE("full image") {
        auto img = blank(16);
        std::fill(img.bits.begin(), img.bits.end(), 1);
        const auto d = describe_frame(img, 4);
        REQUIRE(d.size() == 20);
        for (std::size_t i = 0; i < 16; ++i) CHECK(d[i] == 1.0);
        CHECK(d[16] == 0.5);
        CHECK(d[17] == 0.5);
        // spread of a uniform grid of 16: sqrt((16^2 - 1) / 12) / 16
        CHECK(d[18] == doctest::Approx(std::sqrt(255.0 / 12.0) / 16.0));
    }
    SUBCASE("single pixel") {
        auto img = blank(16);
        img.bits[5 * 16 + 10] = 1;  // row 5, col 10 -> cell (1, 2) of a 4x4 grid
        const auto d = describe_frame(img, 4);
        for (std::size_t i = 0; i < 16; ++i) CHECK(d[i] == (i == 1 * 4 + 2 ? 1.0 / 16.0 : 0.0));
        CHECK(d[16] == doctest::Approx(10.5 / 16.0));
        CHECK(d[17] == doctest::Approx(5.5 / 16.0));
        CHECK(d[18] == 0.0);
        CHECK(d[19] == 0.0);
    }
    CHECK_THROWS_AS(describe_frame(blank(16), 5), Error);
}

TEST_CASE("translation by one cell shifts cell mass") {
    Rng rng(3);
    const auto b = unit_bounds();
    const std::size_t B = 64, grid = 8;
    const double cell_world = 8.0 * b.extent / static_cast<double>(B - 1);
    for (int trial = 0; trial < 10; ++trial) {
        LandmarkSet set;
        for (int i = 0; i < 15; ++i) set.points.push_back({rng.uniform(-0.8, 0.4), rng.uniform(-0.8, 0.8), 0});
        LandmarkSet moved = set;
        for (auto& p : moved.points) p.x += cell_world;
        const auto d0 = describe_frame(rasterize_landmarks(set, kFront, B, 1, b), grid);
        const auto d1 = describe_frame(rasterize_landmarks(moved, kFront, B, 1, b), grid);
        for (std::size_t r = 0; r < grid; ++r) {
            CHECK(d1[r * grid] == 0.0);
            for (std::size_t c = 0; c + 1 < grid; ++c) CHECK(d1[r * grid + c + 1] == d0[r * grid + c]);
        }
        CHECK(d1[grid * grid] == doctest::Approx(d0[grid * grid] + 8.0 / B));
    }
}

TEST_CASE("sequence features") {
    Rng rng(4);
    SUBCASE("static landmarks give identical rows") {
        const auto s = cluster(rng, 30);
        const auto f = sequence_features(sequence_of({s, s, s, s}), kFront);
        REQUIRE(f.length() == 4);
        for (std::size_t t = 1; t < 4; ++t) {
            CHECK(std::equal(f.row(t).begin(), f.row(t).end(), f.row(0).begin()));
        }
    }
    SUBCASE("rightward motion raises the centroid column") {
        const auto base = cluster(rng, 30);
        std::vector<LandmarkSet> frames;
        for (int t = 0; t < 6; ++t) {
            LandmarkSet s = base;
            for (auto& p : s.points) p.x += 0.5 * t;
            frames.push_back(s);
        }
        const auto f = sequence_features(sequence_of(frames), kFront);
        const std::size_t cx = f.dim - 4;
        for (std::size_t t = 1; t < f.length(); ++t) CHECK(f.row(t)[cx] > f.row(t - 1)[cx]);
    }
    SUBCASE("single frame") {
        const auto f = sequence_features(sequence_of({cluster(rng, 10)}), kFront);
        CHECK(f.length() == 1);
        CHECK(f.dim == 68);
    }
    SUBCASE("dimension is fixed across views, and output is deterministic") {
        std::vector<LandmarkSet> frames;
        for (int t = 0; t < 5; ++t) frames.push_back(cluster(rng, 25, 0.1 * t));
        for (auto& s : frames) {
            for (auto& p : s.points) p.z = rng.uniform(-0.3, 0.3);
        }
        const auto seq = sequence_of(frames);
        for (const auto& v : default_views()) {
            const auto a = sequence_features(seq, v);
            const auto b = sequence_features(seq, v);
            CHECK(a == b);
            CHECK(a.dim == 68);
            CHECK(a.length() == 5);
            for (double x : a.data) CHECK(std::isfinite(x));
        }
    }
    SUBCASE("degenerate bounds") {
        const LandmarkSet same{{{0.3, 0.3, 0}, {0.3, 0.3, 0}}};
        try {
            sequence_features(sequence_of({same, same}), kFront);
            FAIL("expected DegenerateBounds");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateBounds);
        }
    }
}

TEST_CASE("feature CSV round trip") {
    Rng rng(5);
    std::vector<LandmarkSet> frames;
    for (int t = 0; t < 4; ++t) frames.push_back(cluster(rng, 20, 0.05 * t));
    const auto f = sequence_features(sequence_of(frames), kFront);
    testutil::TempDir dir("features");
    write_feature_csv(dir.path / "f.csv", f);
    CHECK(read_feature_csv(dir.path / "f.csv", kFront) == f);
}
