#include "fer4d/synthetic.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "fer4d/rng.hpp"

namespace fer4d {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kGridU = 41;
constexpr std::size_t kGridV = 49;
constexpr std::size_t kStrays = 4;
constexpr double kHairStart = 0.68;
// Landmark localization is noisier than the scanned surface.
constexpr double kLandmarkNoise = 2.0;

struct Uv {
    double u;
    double v;
};

struct SubjectShape {
    double a, b, c;  // head semi-axes
    double nose;     // nose prominence
    double tone;     // skin tone shift
};

// One localized push: displacement (dx, dy, dz) at full strength, Gaussian
// falloff of width sigma around (cu, cv). `mirror` adds the reflected copy
// with dx negated.
struct Bump {
    double cu, cv, sigma;
    double dx, dy, dz;
    bool mirror;
};

// Opens the jaw: everything below the mouth line moves down.
struct Jaw {
    double drop;
};

struct ExpressionField {
    std::vector<Bump> bumps;
    Jaw jaw{0.0};
};

const std::array<ExpressionField, kNumExpressions>& fields() {
    // Regions overlap on purpose: brows move in five classes, mouth corners in four.
    static const std::array<ExpressionField, kNumExpressions> table{{
        // anger: brows down and together, lips pressed
        {{{0.30, 0.37, 0.13, -0.045, -0.07, 0.0, true},
          {0.0, -0.42, 0.07, 0.0, -0.025, -0.01, false},
          {0.0, -0.53, 0.07, 0.0, 0.03, -0.01, false},
          {0.28, -0.46, 0.08, -0.02, 0.0, 0.0, true}},
         {0.0}},
        // disgust: upper lip and nose wrinkle up, brows slightly down
        {{{0.0, -0.38, 0.09, 0.0, 0.07, -0.02, false},
          {0.09, -0.06, 0.07, 0.0, 0.035, -0.025, true},
          {0.30, 0.37, 0.15, 0.0, -0.035, 0.0, true},
          {0.28, -0.46, 0.09, 0.0, -0.03, 0.0, true}},
         {0.0}},
        // fear: brows up and inward, eyes wide, mouth stretched sideways
        {{{0.25, 0.38, 0.13, -0.03, 0.065, 0.0, true},
          {0.34, 0.21, 0.06, 0.0, 0.03, 0.0, true},
          {0.28, -0.46, 0.11, 0.075, -0.025, 0.0, true}},
         {0.04}},
        // happiness: mouth corners out and up, cheeks raised
        {{{0.28, -0.46, 0.11, 0.055, 0.075, -0.02, true},
          {0.32, -0.18, 0.14, 0.0, 0.035, -0.015, true}},
         {0.0}},
        // sadness: corners down, inner brows up
        {{{0.28, -0.46, 0.11, -0.01, -0.07, 0.0, true},
          {0.17, 0.37, 0.09, 0.0, 0.055, 0.0, true},
          {0.0, -0.60, 0.10, 0.0, 0.03, -0.015, false}},
         {0.0}},
        // surprise: jaw open, brows and lids up
        {{{0.33, 0.37, 0.17, 0.0, 0.085, 0.0, true},
          {0.34, 0.21, 0.06, 0.0, 0.025, 0.0, true}},
         {0.16}},
    }};
    return table;
}

double gauss(double du, double dv, double sigma) { return std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma)); }

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Per (subject, expression): overall strength, temporal profile exponent,
// and per-bump strength factors, drawn separately for the two sides of a
// mirrored bump (expressions are rarely symmetric).
struct Style {
    double amplitude;
    double gamma;
    std::vector<double> bump_gain;
    std::vector<double> mirror_gain;
};

Vertex3 displacement(const ExpressionField& field, const Style& style, Uv p) {
    Vertex3 d;
    for (std::size_t i = 0; i < field.bumps.size(); ++i) {
        const Bump& bp = field.bumps[i];
        const double g = style.bump_gain[i];
        double w = gauss(p.u - bp.cu, p.v - bp.cv, bp.sigma);
        d.x += g * w * bp.dx;
        d.y += g * w * bp.dy;
        d.z += g * w * bp.dz;
        if (bp.mirror) {
            const double g = style.mirror_gain[i];
            w = gauss(p.u + bp.cu, p.v - bp.cv, bp.sigma);
            d.x -= g * w * bp.dx;
            d.y += g * w * bp.dy;
            d.z += g * w * bp.dz;
        }
    }
    if (field.jaw.drop > 0) {
        // below the lip line, fading out toward the cheeks
        const double w = smoothstep(-0.44, -0.52, p.v) * std::exp(-p.u * p.u / 0.35);
        d.y -= field.jaw.drop * w;
        d.z += 0.25 * field.jaw.drop * w;
    }
    return d;
}

Vertex3 base_surface(const SubjectShape& s, Uv p) {
    const double r2 = p.u * p.u + p.v * p.v;
    double z = -s.c * std::sqrt(std::max(0.0, 1.0 - 0.8 * r2));
    z -= 0.22 * s.nose * gauss(p.u / 0.8, (p.v + 0.02) / 2.0, 0.06);  // nose ridge
    z -= 0.06 * s.nose * gauss(p.u, p.v + 0.08, 0.07);                // nose tip
    z += 0.05 * (gauss(p.u - 0.34, p.v - 0.17, 0.08) + gauss(p.u + 0.34, p.v - 0.17, 0.08));  // eye sockets
    z -= 0.03 * gauss(p.u / 1.8, p.v + 0.47, 0.07);                   // lips
    z -= 0.025 * (gauss(p.u - 0.33, p.v - 0.4, 0.1) + gauss(p.u + 0.33, p.v - 0.4, 0.1));     // brow ridge
    // hair volume above the forehead
    const double hair = smoothstep(kHairStart - 0.04, kHairStart + 0.08, p.v);
    z -= hair * (0.08 + 0.02 * std::sin(23.0 * p.u) * std::cos(17.0 * p.v));
    return {s.a * p.u, s.b * p.v, z};
}

Rgb colormap(const SubjectShape& s, Uv p) {
    Rgb skin{0.86 + 0.04 * p.u + s.tone, 0.66 + 0.05 * p.v + 0.5 * s.tone, 0.55 + 0.03 * std::sin(3.0 * p.u)};
    auto mix = [](Rgb a, Rgb b, double w) {
        return Rgb{a.r + (b.r - a.r) * w, a.g + (b.g - a.g) * w, a.b + (b.b - a.b) * w};
    };
    // eyebrows: band around an arc
    for (double side : {-1.0, 1.0}) {
        const double du = side * p.u - 0.34;
        if (std::abs(du) < 0.24) {
            const double arc = 0.365 + 0.05 * std::cos(kPi * du / 0.48);
            skin = mix(skin, {0.32, 0.22, 0.16}, std::exp(-std::pow((p.v - arc) / 0.025, 2)) * smoothstep(0.24, 0.18, std::abs(du)));
        }
        // eye: white with a dark iris
        const double e = std::pow((side * p.u - 0.34) / 0.13, 2) + std::pow((p.v - 0.17) / 0.05, 2);
        skin = mix(skin, {0.93, 0.92, 0.9}, smoothstep(1.1, 0.7, e));
        skin = mix(skin, {0.25, 0.3, 0.35}, smoothstep(0.35, 0.15, e));
    }
    // lips: ring between the inner and outer mouth outline
    const double outer = std::pow(p.u / 0.27, 2) + std::pow((p.v + 0.47) / 0.1, 2);
    const double inner = std::pow(p.u / 0.17, 2) + std::pow((p.v + 0.47) / 0.035, 2);
    skin = mix(skin, {0.74, 0.32, 0.32}, smoothstep(1.15, 0.85, outer));
    skin = mix(skin, {0.45, 0.15, 0.15}, smoothstep(1.2, 0.8, inner));
    skin = mix(skin, {0.22, 0.16, 0.11}, smoothstep(kHairStart - 0.02, kHairStart + 0.04, p.v));
    return {std::clamp(skin.r, 0.0, 1.0), std::clamp(skin.g, 0.0, 1.0), std::clamp(skin.b, 0.0, 1.0)};
}

std::vector<Uv> landmark_coords() {
    std::vector<Uv> pts;
    for (double side : {-1.0, 1.0}) {  // eyes, 8 each
        for (int k = 0; k < 8; ++k) {
            const double t = k * kPi / 4.0;
            pts.push_back({side * 0.34 + 0.14 * std::cos(t), 0.17 + 0.055 * std::sin(t)});
        }
    }
    for (double side : {-1.0, 1.0}) {  // eyebrows, 5 upper + 5 lower each
        for (double offset : {0.0, -0.035}) {
            for (int k = 0; k < 5; ++k) {
                const double du = -0.2 + 0.1 * k;
                pts.push_back({side * (0.34 + du), 0.385 + 0.05 * std::cos(kPi * du / 0.48) + offset});
            }
        }
    }
    const std::array<Uv, 12> nose{{{0.0, 0.24},
                                   {0.0, 0.14},
                                   {0.0, 0.05},
                                   {-0.06, -0.01},
                                   {0.06, -0.01},
                                   {-0.11, -0.12},
                                   {0.0, -0.07},  // tip, index 42
                                   {0.11, -0.12},
                                   {-0.06, -0.16},
                                   {0.0, -0.17},
                                   {0.06, -0.16},
                                   {0.0, -0.21}}};
    pts.insert(pts.end(), nose.begin(), nose.end());
    for (int k = 0; k < 12; ++k) {  // outer lip
        const double t = k * kPi / 6.0;
        pts.push_back({0.27 * std::cos(t), -0.47 + 0.1 * std::sin(t)});
    }
    for (int k = 0; k < 8; ++k) {  // inner lip
        const double t = k * kPi / 4.0;
        pts.push_back({0.17 * std::cos(t), -0.47 + 0.035 * std::sin(t)});
    }
    for (int k = 0; k < 15; ++k) {  // face contour, temple to temple through the chin
        const double t = (55.0 - k * 290.0 / 14.0) * kPi / 180.0;
        pts.push_back({0.95 * std::cos(t), 0.95 * std::sin(t)});
    }
    return pts;
}

struct Grid {
    std::vector<Uv> coords;
    std::vector<Face> faces;
};

Grid make_grid() {
    Grid g;
    std::vector<std::int64_t> index(kGridU * kGridV, -1);
    auto uv_at = [](std::size_t i, std::size_t j) {
        return Uv{-1.0 + 2.0 * static_cast<double>(i) / (kGridU - 1), -1.0 + 2.0 * static_cast<double>(j) / (kGridV - 1)};
    };
    for (std::size_t j = 0; j < kGridV; ++j) {
        for (std::size_t i = 0; i < kGridU; ++i) {
            const Uv p = uv_at(i, j);
            if (p.u * p.u + p.v * p.v <= 1.0 + 1e-12) {
                index[j * kGridU + i] = static_cast<std::int64_t>(g.coords.size());
                g.coords.push_back(p);
            }
        }
    }
    for (std::size_t j = 0; j + 1 < kGridV; ++j) {
        for (std::size_t i = 0; i + 1 < kGridU; ++i) {
            const auto a = index[j * kGridU + i], b = index[j * kGridU + i + 1];
            const auto c = index[(j + 1) * kGridU + i], d = index[(j + 1) * kGridU + i + 1];
            if (a < 0 || b < 0 || c < 0 || d < 0) continue;
            auto u32 = [](std::int64_t x) { return static_cast<std::uint32_t>(x); };
            g.faces.push_back({u32(a), u32(b), u32(d)});
            g.faces.push_back({u32(a), u32(d), u32(c)});
        }
    }
    return g;
}

}  // namespace

std::string synthetic_subject_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%03zu", index + 1);
    return buf;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.schema = LandmarkSchema::standard83();
    const Grid grid = make_grid();
    const std::vector<Uv> lmk_uv = landmark_coords();

    for (std::size_t s = 0; s < spec.subjects; ++s) {
        const std::uint64_t subject_seed = mix_seed(spec.seed, s);
        Rng shape_rng(mix_seed(subject_seed, 0));
        const SubjectShape shape{0.8 * shape_rng.uniform(0.9, 1.1), 1.05 * shape_rng.uniform(0.9, 1.1),
                                 0.75 * shape_rng.uniform(0.9, 1.1), shape_rng.uniform(0.8, 1.2),
                                 shape_rng.uniform(-0.06, 0.06)};

        for (std::size_t e = 0; e < kNumExpressions; ++e) {
            const ExpressionField& field = fields()[e];
            Rng style_rng(mix_seed(subject_seed, 100 + e));
            Style style{style_rng.uniform(0.6, 1.3), style_rng.uniform(0.7, 1.5), {}, {}};
            for (std::size_t i = 0; i < field.bumps.size(); ++i) {
                const double gain = style_rng.uniform(0.6, 1.4);
                style.bump_gain.push_back(gain * style_rng.uniform(0.6, 1.4));
                style.mirror_gain.push_back(gain * style_rng.uniform(0.6, 1.4));
            }

            MeshSequence seq{synthetic_subject_id(s), expression_at(e), {}};
            for (std::size_t t = 0; t < spec.frames; ++t) {
                const double progress =
                    spec.frames == 1 ? 0.0 : std::pow(static_cast<double>(t) / static_cast<double>(spec.frames - 1), style.gamma);
                const double strength = style.amplitude * progress;
                auto point_at = [&](Uv p) {
                    Vertex3 v = base_surface(shape, p);
                    if (strength > 0) {
                        const Vertex3 d = displacement(field, style, p);
                        v.x += strength * d.x;
                        v.y += strength * d.y;
                        v.z += strength * d.z;
                    }
                    return v;
                };

                // jitter depends on (subject, frame) only
                Rng jitter(mix_seed(subject_seed, 1000 + t));
                Frame frame;
                frame.mesh.vertices.reserve(grid.coords.size() + kStrays);
                for (const Uv& p : grid.coords) {
                    Vertex3 v = point_at(p);
                    v.x += spec.noise * jitter.normal();
                    v.y += spec.noise * jitter.normal();
                    v.z += spec.noise * jitter.normal();
                    frame.mesh.vertices.push_back(v);
                    frame.mesh.colors.push_back(colormap(shape, p));
                }
                frame.mesh.faces = grid.faces;
                for (std::size_t k = 0; k < kStrays; ++k) {
                    const Uv p{jitter.uniform(-0.5, 0.5), jitter.uniform(-0.6, 0.5)};
                    Vertex3 v = base_surface(shape, p);
                    v.z -= jitter.uniform(0.3, 0.6);
                    frame.mesh.vertices.push_back(v);
                    frame.mesh.colors.push_back({1.0, 1.0, 1.0});
                }
                for (const Uv& p : lmk_uv) {
                    Vertex3 v = point_at(p);
                    v.x += kLandmarkNoise * spec.noise * jitter.normal();
                    v.y += kLandmarkNoise * spec.noise * jitter.normal();
                    v.z += kLandmarkNoise * spec.noise * jitter.normal();
                    frame.landmarks.points.push_back(v);
                }
                seq.frames.push_back(std::move(frame));
            }
            ds.samples.push_back(std::move(seq));
        }
    }
    return ds;
}

}  // namespace fer4d
