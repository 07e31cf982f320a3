#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fer4d/config.hpp"

namespace fer4d {

enum class Stage : std::uint8_t { Synth, Preprocess, Render, Dynimg, Features, TrainCnn, TrainLstm, Eval, Report };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);
// Execution order of the full chain.
const std::vector<Stage>& all_stages();

struct PipelineOptions {
    std::filesystem::path workspace;
    std::size_t jobs = 1;
    bool quiet = false;
    std::ostream* log = nullptr;  // progress lines; nullptr means std::clog
};

// Exclusive hold on a workspace, released on destruction. Throws Locked when
// another invocation holds it.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const std::filesystem::path& workspace);
    ~WorkspaceLock();
    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
    std::filesystem::path path_;
};

// Staged pipeline over a workspace with one directory per stage. A stage's
// key hashes the configuration fields it reads plus the keys of its inputs;
// the key is stored in <stage>/stage.key once the stage completes, and a
// stage whose stored key matches is not recomputed.
class Pipeline {
public:
    Pipeline(PipelineConfig config, PipelineOptions options);

    const PipelineConfig& config() const { return config_; }
    std::filesystem::path dir(Stage s) const;

    std::string stage_key(Stage s) const;
    bool is_fresh(Stage s) const;

    // Runs one stage. Returns false on a cache hit. Throws MissingArtifact
    // when an input stage has not been run with the current configuration.
    bool run(Stage s);
    void run_all();

private:
    void log(Stage s, const std::string& msg) const;
    void require_inputs(Stage s) const;
    std::filesystem::path dataset_manifest() const;

    void synth();
    void preprocess();
    void render();
    void dynimg();
    void features();
    void train_cnn();
    void train_lstm();
    void eval();
    void report();

    PipelineConfig config_;
    PipelineOptions options_;
};

// Name of the primary artifact of a stage, relative to the workspace.
std::string artifact_name(Stage s);

}  // namespace fer4d
