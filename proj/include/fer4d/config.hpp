#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fer4d/bilstm.hpp"
#include "fer4d/convnet.hpp"
#include "fer4d/landmarks.hpp"
#include "fer4d/mesh.hpp"
#include "fer4d/projection.hpp"
#include "fer4d/rankpool.hpp"
#include "fer4d/training.hpp"

namespace fer4d {

struct SyntheticSpec {
    std::size_t subjects = 10;
    std::size_t frames = 20;
    double noise = 0.004;  // vertex jitter standard deviation, world units
    std::uint64_t seed = 7;

    void validate() const;
};

// Every tunable of the pipeline. Text form is flat `key = value` lines; see
// PipelineConfig::keys() for the accepted keys.
struct PipelineConfig {
    std::uint64_t seed = 7;
    SyntheticSpec synthetic;
    // External dataset manifest; empty means the `synth` stage output.
    std::string manifest;

    PreprocessConfig preprocess;
    std::vector<ViewAngle> views = default_views();
    std::size_t render_size = 64;
    ClaheOptions clahe;
    PoolingConfig pooling;
    LandmarkStreamConfig landmarks;

    std::size_t cnn_input_size = 32;
    std::vector<std::size_t> cnn_filters{8, 16};
    TrainConfig cnn_train{0.02, 60, 6, 0.02, 0};

    std::size_t lstm_hidden = 64;
    double lstm_dropout = 0.5;
    TrainConfig lstm_train{0.1, 30, 6, 1e-4, 0};

    std::size_t folds = 10;
    std::size_t repetitions = 1;

    // Throws InvalidArgument naming the offending key.
    void validate() const;

    // Canonical text for every key, in a fixed order.
    std::map<std::string, std::string> entries() const;
    static std::vector<std::string> keys();

    // Applies one key; throws ParseError on unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);

    std::string to_text() const;
};

PipelineConfig parse_config(const std::string& text, const std::string& source_name = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

// 64-bit FNV-1a, for content-addressed stage keys.
std::uint64_t fnv1a(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace fer4d
