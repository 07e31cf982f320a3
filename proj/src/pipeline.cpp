#include "fer4d/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fer4d/error.hpp"
#include "fer4d/fusion.hpp"
#include "fer4d/image_io.hpp"
#include "fer4d/landmarks.hpp"
#include "fer4d/manifest.hpp"
#include "fer4d/mesh_io.hpp"
#include "fer4d/neural.hpp"
#include "fer4d/parallel.hpp"
#include "fer4d/rankpool.hpp"
#include "fer4d/synthetic.hpp"

namespace fer4d {

namespace fs = std::filesystem;

namespace {

struct StageInfo {
    Stage stage;
    const char* name;
    const char* artifact;
    std::vector<std::string> fields;  // config keys (or key prefixes ending in '.')
};

const std::vector<StageInfo>& stage_table() {
    static const std::vector<StageInfo> table{
        {Stage::Synth, "synth", "synth/manifest.txt (synthetic dataset)", {"seed", "synthetic."}},
        {Stage::Preprocess, "preprocess", "preprocess/manifest.txt (cropped meshes)", {"preprocess.", "dataset.manifest"}},
        {Stage::Render, "render", "render/ (geometric images)", {"views", "render.", "clahe."}},
        {Stage::Dynimg, "dynimg", "dynimg/ (dynamic images)", {"pooling."}},
        {Stage::Features, "features", "features/ (landmark feature CSVs)", {"views", "landmarks."}},
        {Stage::TrainCnn, "train-cnn", "train-cnn/ (dynamic-image models)", {"seed", "cnn.", "eval."}},
        {Stage::TrainLstm, "train-lstm", "train-lstm/ (landmark models)", {"seed", "lstm.", "eval."}},
        {Stage::Eval, "eval", "eval/scores.csv (per-fold score cubes)", {}},
        {Stage::Report, "report", "report/report.txt", {}},
    };
    return table;
}

const StageInfo& info(Stage s) { return stage_table()[static_cast<std::size_t>(s)]; }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
}

std::string profile_name(Profile p) { return std::string(to_string(p)); }

std::string frame_file(const char* kind, std::size_t t, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_f%03zu.%s", kind, t, ext);
    return buf;
}

std::string model_file(std::size_t rep, std::size_t fold, Profile view) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "rep%zu_fold%02zu_%s", rep, fold, profile_name(view).c_str());
    return buf;
}

// Area-average downsampling of a [channels, K, K] stack by an integer factor.
std::vector<double> downsample(std::span<const double> planes, std::size_t channels, std::size_t K, std::size_t S) {
    const std::size_t f = K / S;
    std::vector<double> out(channels * S * S, 0.0);
    const double norm = 1.0 / static_cast<double>(f * f);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = 0; y < S; ++y) {
            for (std::size_t x = 0; x < S; ++x) {
                double sum = 0.0;
                for (std::size_t dy = 0; dy < f; ++dy) {
                    for (std::size_t dx = 0; dx < f; ++dx) sum += planes[(c * K + y * f + dy) * K + x * f + dx];
                }
                out[(c * S + y) * S + x] = sum * norm;
            }
        }
    }
    return out;
}

std::uint64_t job_seed(std::uint64_t seed, Stream stream, std::size_t rep, std::size_t fold, std::size_t view) {
    std::uint64_t s = mix_seed(seed, 17 + static_cast<std::uint64_t>(stream));
    s = mix_seed(s, rep);
    s = mix_seed(s, fold);
    return mix_seed(s, view);
}

struct SampleIndex {
    std::vector<std::string> names;
    std::vector<std::string> subjects;
    std::vector<std::size_t> labels;
};

SampleIndex sample_index(const Manifest& m) {
    SampleIndex idx;
    for (const auto& s : m.samples) {
        idx.names.push_back(sample_name(s.subject_id, s.expression));
        idx.subjects.push_back(s.subject_id);
        idx.labels.push_back(index_of(s.expression));
    }
    return idx;
}

std::vector<std::size_t> members(const SampleIndex& idx, const std::vector<std::string>& subjects) {
    const std::set<std::string> wanted(subjects.begin(), subjects.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < idx.subjects.size(); ++i) {
        if (wanted.count(idx.subjects[i])) out.push_back(i);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

// Input standardization fitted on a training fold: x' = (x - mean[i]) * scale[g(i)],
// where the scale is shared within groups of `group` consecutive inputs.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;
    std::size_t group = 1;

    void apply(std::vector<double>& x, std::size_t offset_period) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::size_t k = i % offset_period;
            x[i] = (x[i] - mean[k]) * scale[k / group];
        }
    }
};

// Per-element mean, per-group scale 1/std (1 for constant groups).
Standardizer fit_standardizer(const std::vector<std::span<const double>>& rows, std::size_t width, std::size_t group,
                              double floor = 1e-12) {
    Standardizer st;
    st.group = group;
    st.mean.assign(width, 0.0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < width; ++i) st.mean[i] += r[i];
    }
    for (auto& m : st.mean) m /= static_cast<double>(rows.size());
    const std::size_t groups = width / group;
    std::vector<double> var(groups, 0.0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < width; ++i) {
            const double d = r[i] - st.mean[i];
            var[i / group] += d * d;
        }
    }
    for (std::size_t g = 0; g < groups; ++g) {
        const double sd = std::sqrt(var[g] / static_cast<double>(rows.size() * group));
        st.scale.push_back(sd > 1e-12 ? 1.0 / std::max(sd, floor) : 1.0);
    }
    return st;
}

void save_standardizer(const fs::path& path, const Standardizer& st) {
    std::ostringstream out;
    out << "group," << st.group << "\nmean";
    for (double v : st.mean) out << ',' << format_double(v);
    out << "\nscale";
    for (double v : st.scale) out << ',' << format_double(v);
    out << '\n';
    write_text(path, out.str());
}

Standardizer load_standardizer(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    Standardizer st;
    for (int k = 0; k < 3 && std::getline(in, line); ++k) {
        const auto cells = split_csv(line);
        if (cells.empty()) break;
        if (cells[0] == "group" && cells.size() == 2) {
            st.group = std::stoul(cells[1]);
        } else {
            auto& dst = cells[0] == "mean" ? st.mean : st.scale;
            for (std::size_t i = 1; i < cells.size(); ++i) dst.push_back(std::stod(cells[i]));
        }
    }
    if (st.mean.empty() || st.group == 0 || st.scale.size() * st.group != st.mean.size()) {
        fail(ErrorKind::MissingArtifact, "malformed or missing input statistics " + path.string());
    }
    return st;
}

std::vector<std::span<const double>> stat_rows(const std::vector<Tensor>& xs) {
    std::vector<std::span<const double>> rows;
    for (const auto& x : xs) rows.emplace_back(x.data);
    return rows;
}

std::vector<std::span<const double>> stat_rows(const std::vector<FeatureSequence>& xs) {
    std::vector<std::span<const double>> rows;
    for (const auto& x : xs) {
        for (std::size_t t = 0; t < x.length(); ++t) rows.push_back(x.row(t));
    }
    return rows;
}

// Per-element z-score. Image pixels get a spread floor so that nearly constant
// pixels are not blown up.
Standardizer fit_inputs(const std::vector<Tensor>& xs) {
    return fit_standardizer(stat_rows(xs), xs.front().size(), 1, 0.02);
}

Standardizer fit_inputs(const std::vector<FeatureSequence>& xs) { return fit_standardizer(stat_rows(xs), xs.front().dim, 1); }

void standardize(Tensor& x, const Standardizer& st) { st.apply(x.data, x.size()); }
void standardize(FeatureSequence& x, const Standardizer& st) { st.apply(x.data, x.dim); }

// Trains one classifier per (repetition, fold, view) on the given inputs and
// writes model plus per-epoch log.
template <typename Model, typename Sample, typename MakeModel, typename TrainFn>
void train_all(const PipelineConfig& cfg, std::size_t jobs, const fs::path& out_dir, Stream stream,
               const SampleIndex& idx, const std::vector<std::vector<Sample>>& inputs, const TrainConfig& base,
               MakeModel make_model, TrainFn train_fn) {
    const std::size_t V = cfg.views.size();
    std::vector<FoldSplit> splits;
    std::set<std::string> subjects(idx.subjects.begin(), idx.subjects.end());
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        splits.push_back(make_folds({subjects.begin(), subjects.end()}, cfg.folds, mix_seed(cfg.seed, r)));
    }
    const std::size_t per_rep = cfg.folds * V;
    parallel_for(cfg.repetitions * per_rep, jobs, [&](std::size_t job) {
        const std::size_t r = job / per_rep;
        const std::size_t f = (job % per_rep) / V;
        const std::size_t v = job % V;
        const Fold& fold = splits[r].folds[f];
        auto gather = [&](const std::vector<std::string>& subj, std::vector<Sample>& xs, std::vector<std::size_t>& ys) {
            for (auto i : members(idx, subj)) {
                xs.push_back(inputs[v][i]);
                ys.push_back(idx.labels[i]);
            }
        };
        std::vector<Sample> train_x, val_x;
        std::vector<std::size_t> train_y, val_y;
        gather(fold.train, train_x, train_y);
        gather(fold.validation, val_x, val_y);
        const Standardizer st = fit_inputs(train_x);
        for (auto& x : train_x) standardize(x, st);
        for (auto& x : val_x) standardize(x, st);

        const std::uint64_t seed = job_seed(cfg.seed, stream, r, f, v);
        Model model = make_model();
        model.initialize(seed);
        TrainConfig tc = base;
        tc.seed = mix_seed(seed, 1);
        LabeledSet<Sample> val{val_x, val_y};
        const TrainResult res = train_fn(model, train_x, train_y, tc, &val);

        const std::string stem = model_file(r, f, cfg.views[v].profile);
        save_model(out_dir / (stem + ".mdl"), model);
        save_standardizer(out_dir / (stem + ".norm.csv"), st);
        std::ostringstream log;
        log << "epoch,train_loss,validation_accuracy,selected\n";
        for (std::size_t e = 0; e < res.loss_history.size(); ++e) {
            log << e << ',' << format_double(res.loss_history[e]) << ','
                << (e < res.validation_accuracy.size() ? format_double(res.validation_accuracy[e]) : "") << ','
                << (e == res.selected_epoch ? 1 : 0) << '\n';
        }
        write_text(out_dir / (stem + ".log.csv"), log.str());
    });
}

}  // namespace

std::string_view to_string(Stage s) { return info(s).name; }

std::optional<Stage> parse_stage(std::string_view name) {
    for (const auto& i : stage_table()) {
        if (name == i.name) return i.stage;
    }
    return std::nullopt;
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> order{Stage::Synth,    Stage::Preprocess, Stage::Render,
                                          Stage::Dynimg,   Stage::Features,   Stage::TrainCnn,
                                          Stage::TrainLstm, Stage::Eval,      Stage::Report};
    return order;
}

std::string artifact_name(Stage s) { return info(s).artifact; }

WorkspaceLock::WorkspaceLock(const fs::path& workspace) : path_(workspace / ".lock") {
    fs::create_directories(workspace);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (f == nullptr) {
        if (fs::exists(path_)) {
            fail(ErrorKind::Locked, "workspace " + workspace.string() + " is in use (" + path_.string() +
                                        " exists; delete it if no other run is active)");
        }
        fail(ErrorKind::Io, "cannot create " + path_.string());
    }
    std::fclose(f);
}

WorkspaceLock::~WorkspaceLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

Pipeline::Pipeline(PipelineConfig config, PipelineOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
    config_.validate();
    if (options_.jobs == 0) options_.jobs = 1;
}

fs::path Pipeline::dir(Stage s) const { return options_.workspace / info(s).name; }

void Pipeline::log(Stage s, const std::string& msg) const {
    if (options_.quiet) return;
    std::ostream& out = options_.log ? *options_.log : std::clog;
    out << "[" << to_string(s) << "] " << msg << std::endl;
}

namespace {

// Stages whose artifacts a stage reads directly.
std::vector<Stage> inputs_of(Stage s, bool external_manifest) {
    switch (s) {
        case Stage::Synth: return {};
        case Stage::Preprocess: return external_manifest ? std::vector<Stage>{} : std::vector<Stage>{Stage::Synth};
        case Stage::Render: return {Stage::Preprocess};
        case Stage::Dynimg: return {Stage::Preprocess, Stage::Render};
        case Stage::Features: return {Stage::Preprocess};
        case Stage::TrainCnn: return {Stage::Preprocess, Stage::Dynimg};
        case Stage::TrainLstm: return {Stage::Preprocess, Stage::Features};
        case Stage::Eval: return {Stage::Preprocess, Stage::Dynimg, Stage::Features, Stage::TrainCnn, Stage::TrainLstm};
        case Stage::Report: return {Stage::Eval};
    }
    return {};
}

}  // namespace

std::string Pipeline::stage_key(Stage s) const {
    const auto entries = config_.entries();
    std::string text = "fer4d-stage 2\n" + std::string(info(s).name) + "\n";
    for (const auto& [key, value] : entries) {
        for (const auto& f : info(s).fields) {
            const bool match = f.back() == '.' ? key.starts_with(f) : key == f;
            if (match) {
                text += key + "=" + value + "\n";
                break;
            }
        }
    }
    if (s == Stage::Preprocess && !config_.manifest.empty()) {
        text += "manifest-content=" + hex64(fnv1a(read_text(config_.manifest))) + "\n";
    }
    for (Stage in : inputs_of(s, !config_.manifest.empty())) text += "input:" + std::string(info(in).name) + "=" + stage_key(in) + "\n";
    return hex64(fnv1a(text));
}

bool Pipeline::is_fresh(Stage s) const {
    const auto stored = read_text(dir(s) / "stage.key");
    return !stored.empty() && stored == stage_key(s) + "\n";
}

void Pipeline::require_inputs(Stage s) const {
    for (Stage in : inputs_of(s, !config_.manifest.empty())) {
        if (!is_fresh(in)) {
            fail(ErrorKind::MissingArtifact, std::string(info(s).name) + " needs " + info(in).artifact +
                                                 ", which is missing or was built with a different configuration; run `" +
                                                 info(in).name + "` first");
        }
    }
}

fs::path Pipeline::dataset_manifest() const { return dir(Stage::Preprocess) / "manifest.txt"; }

bool Pipeline::run(Stage s) {
    require_inputs(s);
    const std::string key = stage_key(s);
    if (is_fresh(s)) {
        log(s, "cache hit (key " + key + "), skipping");
        return false;
    }
    const auto start = std::chrono::steady_clock::now();
    fs::remove_all(dir(s));
    fs::create_directories(dir(s));
    switch (s) {
        case Stage::Synth: synth(); break;
        case Stage::Preprocess: preprocess(); break;
        case Stage::Render: render(); break;
        case Stage::Dynimg: dynimg(); break;
        case Stage::Features: features(); break;
        case Stage::TrainCnn: train_cnn(); break;
        case Stage::TrainLstm: train_lstm(); break;
        case Stage::Eval: eval(); break;
        case Stage::Report: report(); break;
    }
    write_text(dir(s) / "stage.key", key + "\n");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "done in %.1f s", secs);
    log(s, buf);
    return true;
}

void Pipeline::run_all() {
    for (Stage s : all_stages()) {
        if (s == Stage::Synth && !config_.manifest.empty()) continue;
        run(s);
    }
}

void Pipeline::synth() {
    SyntheticSpec spec = config_.synthetic;
    spec.seed = config_.seed;
    const Dataset ds = generate_synthetic(spec);
    write_dataset(dir(Stage::Synth), ds);
    log(Stage::Synth, std::to_string(ds.samples.size()) + " sequences");
}

void Pipeline::preprocess() {
    const fs::path source = config_.manifest.empty() ? dir(Stage::Synth) / "manifest.txt" : fs::path(config_.manifest);
    const Manifest m = read_manifest(source);
    std::vector<ManifestSample> records(m.samples.size());
    parallel_for(m.samples.size(), options_.jobs, [&](std::size_t i) {
        const MeshSequence seq = load_sample(m, i);
        seq.validate(m.schema);
        records[i] = write_sequence(dir(Stage::Preprocess), preprocess_sequence(seq, m.schema, config_.preprocess));
    });
    std::set<std::pair<std::string, Expression>> seen;
    for (const auto& r : records) {
        if (!seen.emplace(r.subject_id, r.expression).second) {
            fail(ErrorKind::InvalidArgument, "duplicate sample " + sample_name(r.subject_id, r.expression));
        }
    }
    write_manifest(dataset_manifest(), m.schema, records);
}

void Pipeline::render() {
    const Manifest m = read_manifest(dataset_manifest());
    const std::size_t K = config_.render_size;
    parallel_for(m.samples.size(), options_.jobs, [&](std::size_t i) {
        const MeshSequence seq = load_sample(m, i);
        const Vertex3 pivot = centroid(seq.frames.front().mesh.vertices);
        for (const auto& view : config_.views) {
            // one framing and depth range for the whole sequence, so motion is not normalized away
            std::vector<Mesh> rotated;
            for (const auto& fr : seq.frames) rotated.push_back(rotate_yaw(fr.mesh, view.yaw_degrees, pivot));
            Framing framing = fit_framing(rotated, K, true);
            framing.pivot = pivot;
            const fs::path out = dir(Stage::Render) / sample_name(seq) / profile_name(view.profile);
            fs::create_directories(out);
            for (std::size_t t = 0; t < seq.frames.size(); ++t) {
                const Mesh& mesh = seq.frames[t].mesh;
                const GeomImage depth = render_depth(mesh, view, K, framing);
                const GeomImage enhanced = enhance_depth(depth, config_.clahe);
                const GeomImage texture = render_texture(mesh, view, K, framing);
                write_pgm16(out / frame_file("depth", t, "pgm"), K, K, depth.pixels);
                write_pgm16(out / frame_file("enhanced", t, "pgm"), K, K, enhanced.pixels);
                write_ppm8(out / frame_file("texture", t, "ppm"), K, K, texture.pixels);
            }
        }
    });
}

void Pipeline::dynimg() {
    const Manifest m = read_manifest(dataset_manifest());
    const std::size_t K = config_.render_size;
    parallel_for(m.samples.size(), options_.jobs, [&](std::size_t i) {
        const auto& s = m.samples[i];
        const std::string name = sample_name(s.subject_id, s.expression);
        const std::size_t T = s.mesh_files.size();
        for (const auto& view : config_.views) {
            const fs::path in = dir(Stage::Render) / name / profile_name(view.profile);
            const std::string stem = (dir(Stage::Dynimg) / (name + "_" + profile_name(view.profile))).string();
            for (const char* kind : {"depth", "enhanced", "texture"}) {
                const bool rgb = std::string(kind) == "texture";
                std::vector<FrameVector> frames;
                for (std::size_t t = 0; t < T; ++t) {
                    RasterFile img = read_netpbm(in / frame_file(kind, t, rgb ? "ppm" : "pgm"));
                    if (img.width != K || img.height != K) fail(ErrorKind::ShapeMismatch, "unexpected image size in " + in.string());
                    frames.push_back(std::move(img.values));
                }
                const DynamicImage di = dynamic_image_per_channel(frames, rgb ? 3 : 1, config_.pooling);
                const auto shown = normalize_display(di.values);
                if (rgb) {
                    write_ppm8(stem + "_texture.ppm", K, K, shown);
                } else {
                    write_pgm16(stem + "_" + kind + ".pgm", K, K, shown);
                }
            }
        }
    });
}

void Pipeline::features() {
    const Manifest m = read_manifest(dataset_manifest());
    const auto& lc = config_.landmarks;
    parallel_for(m.samples.size(), options_.jobs, [&](std::size_t i) {
        const MeshSequence seq = load_sample(m, i);
        std::vector<LandmarkSet> marks;
        for (const auto& f : seq.frames) marks.push_back(f.landmarks);
        for (const auto& view : config_.views) {
            const std::string stem = (dir(Stage::Features) / (sample_name(seq) + "_" + profile_name(view.profile))).string();
            write_feature_csv(stem + ".csv", sequence_features(seq, view, lc));
            const LandmarkBounds bounds = landmark_bounds(marks, view);
            const LandmarkImage last = rasterize_landmarks(marks.back(), view, lc.image_size, lc.radius, bounds);
            write_pbm(stem + "_last.pbm", lc.image_size, lc.image_size, last.bits);
        }
    });
}

namespace {

// [5, S, S] network input from the three dynamic images of one sample/view.
Tensor load_di_tensor(const fs::path& dynimg_dir, const std::string& name, Profile view, std::size_t K,
                      std::size_t S) {
    const std::string stem = (dynimg_dir / (name + "_" + profile_name(view))).string();
    std::vector<double> planes(5 * K * K);
    const RasterFile depth = read_netpbm(stem + "_depth.pgm");
    const RasterFile enhanced = read_netpbm(stem + "_enhanced.pgm");
    const RasterFile texture = read_netpbm(stem + "_texture.ppm");
    for (const auto* img : {&depth, &enhanced, &texture}) {
        if (img->width != K || img->height != K) fail(ErrorKind::ShapeMismatch, "unexpected image size for " + stem);
    }
    for (std::size_t p = 0; p < K * K; ++p) {
        planes[p] = depth.values[p];
        planes[K * K + p] = enhanced.values[p];
        for (std::size_t c = 0; c < 3; ++c) planes[(2 + c) * K * K + p] = texture.values[p * 3 + c];
    }
    return Tensor({5, S, S}, downsample(planes, 5, K, S));
}

ConvNetConfig cnn_config(const PipelineConfig& cfg) {
    return ConvNetConfig{5, cfg.cnn_input_size, cfg.cnn_filters, kNumExpressions};
}

BiLstmConfig lstm_config(const PipelineConfig& cfg) {
    return BiLstmConfig{cfg.landmarks.descriptor_dim(), cfg.lstm_hidden, cfg.lstm_dropout, kNumExpressions};
}

std::vector<std::vector<Tensor>> load_di_inputs(const PipelineConfig& cfg, const fs::path& dynimg_dir,
                                                const SampleIndex& idx, std::size_t jobs) {
    std::vector<std::vector<Tensor>> inputs(cfg.views.size(), std::vector<Tensor>(idx.names.size()));
    parallel_for(idx.names.size(), jobs, [&](std::size_t i) {
        for (std::size_t v = 0; v < cfg.views.size(); ++v) {
            inputs[v][i] = load_di_tensor(dynimg_dir, idx.names[i], cfg.views[v].profile, cfg.render_size, cfg.cnn_input_size);
        }
    });
    return inputs;
}

std::vector<std::vector<FeatureSequence>> load_li_inputs(const PipelineConfig& cfg, const fs::path& features_dir,
                                                         const SampleIndex& idx) {
    std::vector<std::vector<FeatureSequence>> inputs(cfg.views.size());
    for (std::size_t v = 0; v < cfg.views.size(); ++v) {
        for (const auto& name : idx.names) {
            const auto path = features_dir / (name + "_" + profile_name(cfg.views[v].profile) + ".csv");
            inputs[v].push_back(read_feature_csv(path, cfg.views[v]));
        }
    }
    return inputs;
}

}  // namespace

void Pipeline::train_cnn() {
    const SampleIndex idx = sample_index(read_manifest(dataset_manifest()));
    const auto inputs = load_di_inputs(config_, dir(Stage::Dynimg), idx, options_.jobs);
    train_all<ConvNet, Tensor>(
        config_, options_.jobs, dir(Stage::TrainCnn), Stream::DI, idx, inputs, config_.cnn_train,
        [&] { return ConvNet(cnn_config(config_)); },
        [](ConvNet& model, const std::vector<Tensor>& x, const std::vector<std::size_t>& y, const TrainConfig& tc,
           const LabeledSet<Tensor>* val) { return convnet_train(model, x, y, tc, val); });
}

void Pipeline::train_lstm() {
    const SampleIndex idx = sample_index(read_manifest(dataset_manifest()));
    const auto inputs = load_li_inputs(config_, dir(Stage::Features), idx);
    train_all<BiLstm, FeatureSequence>(
        config_, options_.jobs, dir(Stage::TrainLstm), Stream::LI, idx, inputs, config_.lstm_train,
        [&] { return BiLstm(lstm_config(config_)); },
        [](BiLstm& model, const std::vector<FeatureSequence>& x, const std::vector<std::size_t>& y,
           const TrainConfig& tc, const LabeledSet<FeatureSequence>* val) { return bilstm_train(model, x, y, tc, val); });
}

void Pipeline::eval() {
    const SampleIndex idx = sample_index(read_manifest(dataset_manifest()));
    const auto di = load_di_inputs(config_, dir(Stage::Dynimg), idx, options_.jobs);
    const auto li = load_li_inputs(config_, dir(Stage::Features), idx);
    const std::set<std::string> subject_set(idx.subjects.begin(), idx.subjects.end());
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    const std::size_t R = config_.repetitions, F = config_.folds, V = config_.views.size();

    std::vector<std::string> rows(R * F);
    std::vector<std::string> fold_rows(R * F);
    parallel_for(R * F, options_.jobs, [&](std::size_t job) {
        const std::size_t r = job / F, f = job % F;
        const Fold fold = make_folds(subjects, F, mix_seed(config_.seed, r)).folds[f];
        const auto test = members(idx, fold.test);
        std::ostringstream out;
        for (Stream stream : {Stream::DI, Stream::LI}) {
            for (std::size_t v = 0; v < V; ++v) {
                const std::string stem = model_file(r, f, config_.views[v].profile);
                const fs::path model_dir = dir(stream == Stream::DI ? Stage::TrainCnn : Stage::TrainLstm);
                const Standardizer st = load_standardizer(model_dir / (stem + ".norm.csv"));
                std::vector<std::vector<double>> probs;
                if (stream == Stream::DI) {
                    const ConvNet model = load_convnet(model_dir / (stem + ".mdl"));
                    for (auto i : test) {
                        Tensor x = di[v][i];
                        standardize(x, st);
                        probs.push_back(model.predict(x));
                    }
                } else {
                    const BiLstm model = load_bilstm(model_dir / (stem + ".mdl"));
                    for (auto i : test) {
                        FeatureSequence x = li[v][i];
                        standardize(x, st);
                        probs.push_back(model.predict(x));
                    }
                }
                for (std::size_t k = 0; k < test.size(); ++k) {
                    const auto i = test[k];
                    out << r << ',' << f << ',' << idx.names[i] << ',' << idx.subjects[i] << ',' << idx.labels[i] << ','
                        << to_string(stream) << ',' << profile_name(config_.views[v].profile);
                    for (double p : probs[k]) out << ',' << format_double(p);
                    out << '\n';
                }
            }
        }
        rows[job] = out.str();
        std::ostringstream fr;
        for (const auto* part : {&fold.train, &fold.validation, &fold.test}) {
            const char* role = part == &fold.train ? "train" : (part == &fold.validation ? "validation" : "test");
            for (const auto& s : *part) fr << r << ',' << f << ',' << role << ',' << s << '\n';
        }
        fold_rows[job] = fr.str();
    });

    std::string scores = "rep,fold,sample,subject,truth,stream,view";
    for (std::size_t c = 0; c < kNumExpressions; ++c) scores += "," + std::string(to_string(expression_at(c)));
    scores += "\n";
    std::string folds = "rep,fold,role,subject\n";
    for (std::size_t j = 0; j < R * F; ++j) {
        scores += rows[j];
        folds += fold_rows[j];
    }
    write_text(dir(Stage::Eval) / "folds.csv", folds);
    write_text(dir(Stage::Eval) / "scores.csv", scores);
}

void Pipeline::report() {
    const fs::path scores_path = dir(Stage::Eval) / "scores.csv";
    std::ifstream in(scores_path);
    if (!in) fail(ErrorKind::MissingArtifact, artifact_name(Stage::Eval));

    std::vector<Profile> profiles;
    for (const auto& v : config_.views) profiles.push_back(v.profile);
    auto view_pos = [&](const std::string& name) -> std::size_t {
        for (std::size_t v = 0; v < profiles.size(); ++v) {
            if (profile_name(profiles[v]) == name) return v;
        }
        fail(ErrorKind::ParseError, scores_path.string() + ": unknown view '" + name + "'");
    };

    struct Row {
        std::string sample;
        std::size_t truth;
        Stream stream;
        std::size_t view;
        std::vector<double> probs;
    };
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Row>> groups;  // (rep, fold) -> rows
    std::string line;
    std::getline(in, line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 7 + kNumExpressions) {
            fail(ErrorKind::ParseError, scores_path.string() + ":" + std::to_string(line_no) + ": wrong column count");
        }
        Row row{cells[2], std::stoul(cells[4]), cells[5] == "DI" ? Stream::DI : Stream::LI, view_pos(cells[6]), {}};
        for (std::size_t c = 0; c < kNumExpressions; ++c) row.probs.push_back(std::stod(cells[7 + c]));
        groups[{std::stoul(cells[0]), std::stoul(cells[1])}].push_back(std::move(row));
    }

    std::map<CellKey, std::vector<std::size_t>> correct;  // per repetition
    std::vector<std::size_t> totals(config_.repetitions, 0);
    ConfusionMatrix confusion;
    const auto combos = table_view_combos();
    for (const auto& [key, rows] : groups) {
        const std::size_t rep = key.first;
        if (rep >= config_.repetitions) fail(ErrorKind::ParseError, scores_path.string() + ": repetition out of range");
        std::vector<std::string> order;
        std::map<std::string, std::size_t> pos;
        std::vector<std::size_t> truth;
        for (const auto& row : rows) {
            if (pos.emplace(row.sample, order.size()).second) {
                order.push_back(row.sample);
                truth.push_back(row.truth);
            }
        }
        ScoreCube cube(order.size(), profiles);
        for (const auto& row : rows) cube.set(pos[row.sample], row.stream, row.view, row.probs);
        totals[rep] += order.size();

        for (Collaborator c : kCollaborators) {
            const auto streams = streams_of(c);
            for (const auto& combo : combos) {
                std::vector<std::size_t> views;
                bool available = true;
                for (Profile p : combo.profiles) {
                    const auto it = std::find(profiles.begin(), profiles.end(), p);
                    if (it == profiles.end()) {
                        available = false;
                        break;
                    }
                    views.push_back(static_cast<std::size_t>(it - profiles.begin()));
                }
                if (!available) continue;
                const auto preds = predict(collaborate(cube, streams, views));
                const Evaluation ev = evaluate(preds, truth);
                auto& counts = correct[{c, combo.label()}];
                counts.resize(config_.repetitions, 0);
                counts[rep] += ev.confusion.trace();
                if (c == Collaborator::LandmarkDynamic && views.size() == profiles.size()) confusion += ev.confusion;
            }
        }
    }

    ResultGrid grid;
    for (const auto& [cell, counts] : correct) {
        double sum = 0.0;
        for (std::size_t r = 0; r < counts.size(); ++r) {
            if (totals[r] == 0) fail(ErrorKind::MissingArtifact, "no scores for repetition " + std::to_string(r));
            sum += static_cast<double>(counts[r]) / static_cast<double>(totals[r]);
        }
        grid[cell] = sum / static_cast<double>(config_.repetitions);
    }
    const Report rep = report_table(grid);
    write_text(dir(Stage::Report) / "report.txt", rep.to_text());
    write_text(dir(Stage::Report) / "report.csv", rep.to_csv());
    write_text(dir(Stage::Report) / "confusion.csv", confusion_csv(confusion));
    write_confusion_ppm(dir(Stage::Report) / "confusion.ppm", confusion);
    if (!options_.quiet) {
        std::ostream& out = options_.log ? *options_.log : std::clog;
        out << rep.to_text();
    }
}

}  // namespace fer4d
