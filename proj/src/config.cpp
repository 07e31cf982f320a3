#include "fer4d/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "fer4d/error.hpp"
#include "fer4d/mesh_io.hpp"

namespace fer4d {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
    fail(ErrorKind::ParseError, key + ": expected " + what + ", got '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) bad_value(key, value, "an unsigned integer");
    return v;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty() || !std::isfinite(v)) {
        bad_value(key, value, "a real number");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}


std::string variant_name(PoolingVariant v) {
    switch (v) {
        case PoolingVariant::LinearArp: return "linear_arp";
        case PoolingVariant::HarmonicArp: return "harmonic_arp";
        case PoolingVariant::ExactRankSvm: return "exact_ranksvm";
    }
    return "?";
}

struct Field {
    std::string key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

#define FER4D_SIZE_FIELD(name, member)                                                   \
    Field {                                                                              \
        name, [](const PipelineConfig& c) { return std::to_string(c.member); },          \
            [](PipelineConfig& c, const std::string& v) { c.member = parse_size(name, v); } \
    }
#define FER4D_REAL_FIELD(name, member)                                                   \
    Field {                                                                              \
        name, [](const PipelineConfig& c) { return format_double(c.member); },           \
            [](PipelineConfig& c, const std::string& v) { c.member = parse_real(name, v); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        Field{"seed", [](const PipelineConfig& c) { return std::to_string(c.seed); },
              [](PipelineConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }},
        FER4D_SIZE_FIELD("synthetic.subjects", synthetic.subjects),
        FER4D_SIZE_FIELD("synthetic.frames", synthetic.frames),
        FER4D_REAL_FIELD("synthetic.noise", synthetic.noise),
        Field{"dataset.manifest", [](const PipelineConfig& c) { return c.manifest; },
              [](PipelineConfig& c, const std::string& v) { c.manifest = v; }},
        FER4D_SIZE_FIELD("preprocess.outlier_k", preprocess.outlier_k),
        FER4D_REAL_FIELD("preprocess.outlier_stddev_mult", preprocess.outlier_stddev_mult),
        FER4D_REAL_FIELD("preprocess.forehead_fraction", preprocess.crop.forehead_fraction),
        FER4D_REAL_FIELD("preprocess.hull_margin", preprocess.crop.margin_fraction),
        Field{"views",
              [](const PipelineConfig& c) {
                  std::string out;
                  for (std::size_t i = 0; i < c.views.size(); ++i) out += (i ? "," : "") + format_double(c.views[i].yaw_degrees);
                  return out;
              },
              [](PipelineConfig& c, const std::string& v) {
                  c.views.clear();
                  for (const auto& item : split_list(v)) {
                      const double yaw = parse_real("views", item);
                      c.views.push_back({yaw, yaw < 0 ? Profile::RP : (yaw > 0 ? Profile::LP : Profile::FP)});
                  }
              }},
        FER4D_SIZE_FIELD("render.size", render_size),
        FER4D_REAL_FIELD("clahe.clip_limit", clahe.clip_limit),
        FER4D_SIZE_FIELD("clahe.tiles", clahe.tiles),
        FER4D_SIZE_FIELD("clahe.bins", clahe.bins),
        Field{"pooling.variant", [](const PipelineConfig& c) { return variant_name(c.pooling.variant); },
              [](PipelineConfig& c, const std::string& v) {
                  if (v == "linear_arp") {
                      c.pooling.variant = PoolingVariant::LinearArp;
                  } else if (v == "harmonic_arp") {
                      c.pooling.variant = PoolingVariant::HarmonicArp;
                  } else if (v == "exact_ranksvm") {
                      c.pooling.variant = PoolingVariant::ExactRankSvm;
                  } else {
                      bad_value("pooling.variant", v, "linear_arp, harmonic_arp or exact_ranksvm");
                  }
              }},
        FER4D_REAL_FIELD("pooling.lambda", pooling.lambda),
        FER4D_SIZE_FIELD("pooling.max_iters", pooling.max_iters),
        FER4D_REAL_FIELD("pooling.step_scale", pooling.step_scale),
        FER4D_SIZE_FIELD("landmarks.image_size", landmarks.image_size),
        FER4D_SIZE_FIELD("landmarks.radius", landmarks.radius),
        FER4D_SIZE_FIELD("landmarks.grid", landmarks.grid),
        FER4D_SIZE_FIELD("cnn.input_size", cnn_input_size),
        Field{"cnn.filters", [](const PipelineConfig& c) { return join_sizes(c.cnn_filters); },
              [](PipelineConfig& c, const std::string& v) {
                  c.cnn_filters.clear();
                  if (trim(v).empty()) return;
                  for (const auto& item : split_list(v)) c.cnn_filters.push_back(parse_size("cnn.filters", item));
              }},
        FER4D_REAL_FIELD("cnn.learning_rate", cnn_train.learning_rate),
        FER4D_SIZE_FIELD("cnn.epochs", cnn_train.epochs),
        FER4D_SIZE_FIELD("cnn.batch_size", cnn_train.batch_size),
        FER4D_REAL_FIELD("cnn.weight_decay", cnn_train.weight_decay),
        FER4D_SIZE_FIELD("lstm.hidden", lstm_hidden),
        FER4D_REAL_FIELD("lstm.dropout", lstm_dropout),
        FER4D_REAL_FIELD("lstm.learning_rate", lstm_train.learning_rate),
        FER4D_SIZE_FIELD("lstm.epochs", lstm_train.epochs),
        FER4D_SIZE_FIELD("lstm.batch_size", lstm_train.batch_size),
        FER4D_REAL_FIELD("lstm.weight_decay", lstm_train.weight_decay),
        FER4D_SIZE_FIELD("eval.folds", folds),
        FER4D_SIZE_FIELD("eval.repetitions", repetitions),
    };
    return table;
}

#undef FER4D_SIZE_FIELD
#undef FER4D_REAL_FIELD

void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidArgument, key + ": " + what);
}

}  // namespace

void SyntheticSpec::validate() const {
    check(subjects >= 1, "synthetic.subjects", "must be >= 1");
    check(frames >= 1, "synthetic.frames", "must be >= 1");
    check(noise >= 0.0, "synthetic.noise", "must be >= 0");
}

void PipelineConfig::validate() const {
    synthetic.validate();
    check(preprocess.outlier_k >= 1, "preprocess.outlier_k", "must be >= 1");
    check(preprocess.outlier_stddev_mult > 0, "preprocess.outlier_stddev_mult", "must be > 0");
    check(preprocess.crop.forehead_fraction > 0, "preprocess.forehead_fraction", "must be > 0");
    check(preprocess.crop.margin_fraction >= 0, "preprocess.hull_margin", "must be >= 0");
    check(!views.empty(), "views", "at least one view angle required");
    for (std::size_t i = 0; i < views.size(); ++i) {
        check(views[i].yaw_degrees > -90 && views[i].yaw_degrees < 90, "views", "yaw must lie in (-90, 90)");
        for (std::size_t j = 0; j < i; ++j) check(views[i].profile != views[j].profile, "views", "one view per profile");
    }
    check(render_size >= 8, "render.size", "must be >= 8");
    check(clahe.tiles >= 1 && clahe.tiles <= render_size, "clahe.tiles", "must lie in [1, render.size]");
    check(clahe.clip_limit > 0 && clahe.clip_limit <= 1, "clahe.clip_limit", "must lie in (0, 1]");
    check(clahe.bins >= 2, "clahe.bins", "must be >= 2");
    if (pooling.variant == PoolingVariant::ExactRankSvm) {
        check(pooling.lambda > 0, "pooling.lambda", "must be > 0");
        check(pooling.max_iters > 0, "pooling.max_iters", "must be > 0");
        check(pooling.step_scale > 0, "pooling.step_scale", "must be > 0");
    }
    check(landmarks.image_size >= 8, "landmarks.image_size", "must be >= 8");
    check(landmarks.grid >= 1 && landmarks.image_size % landmarks.grid == 0, "landmarks.grid",
          "must divide landmarks.image_size");
    check(cnn_input_size >= 1 && render_size % cnn_input_size == 0, "cnn.input_size", "must divide render.size");
    check(cnn_input_size % (std::size_t{1} << cnn_filters.size()) == 0, "cnn.input_size",
          "must be divisible by 2^(number of conv blocks)");
    for (auto f : cnn_filters) check(f >= 1, "cnn.filters", "filter counts must be >= 1");
    check(cnn_train.learning_rate >= 0, "cnn.learning_rate", "must be >= 0");
    check(cnn_train.batch_size >= 1, "cnn.batch_size", "must be >= 1");
    check(cnn_train.weight_decay >= 0, "cnn.weight_decay", "must be >= 0");
    check(lstm_hidden >= 1, "lstm.hidden", "must be >= 1");
    check(lstm_dropout >= 0 && lstm_dropout < 1, "lstm.dropout", "must lie in [0, 1)");
    check(lstm_train.learning_rate >= 0, "lstm.learning_rate", "must be >= 0");
    check(lstm_train.batch_size >= 1, "lstm.batch_size", "must be >= 1");
    check(lstm_train.weight_decay >= 0, "lstm.weight_decay", "must be >= 0");
    check(folds >= 1, "eval.folds", "must be >= 1");
    check(repetitions >= 1, "eval.repetitions", "must be >= 1");
}

std::map<std::string, std::string> PipelineConfig::entries() const {
    std::map<std::string, std::string> out;
    for (const auto& f : fields()) out[f.key] = f.get(*this);
    return out;
}

std::vector<std::string> PipelineConfig::keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(*this, value);
            return;
        }
    }
    fail(ErrorKind::ParseError, "unknown configuration key '" + key + "'");
}

std::string PipelineConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
    return out;
}

PipelineConfig parse_config(const std::string& text, const std::string& source_name) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line.substr(0, line.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::ParseError, source_name + ":" + std::to_string(line_no) + ":1: expected key = value");
        }
        try {
            cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
        } catch (const Error& e) {
            fail(ErrorKind::ParseError, source_name + ":" + std::to_string(line_no) + ":" +
                                            std::to_string(line.find('=') + 2) + ": " + e.detail());
        }
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingFile, path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t hash) {
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    for (int i = 15; i >= 0; --i) {
        buf[i] = "0123456789abcdef"[v & 0xf];
        v >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

}  // namespace fer4d
