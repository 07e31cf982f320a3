#include "fer4d/neural.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "fer4d/error.hpp"

namespace fer4d {

std::vector<double> convnet_forward(const ConvNet& model, const Tensor& image) { return model.predict(image); }

std::vector<double> bilstm_forward(const BiLstm& model, const FeatureSequence& seq) { return model.predict(seq); }

TrainResult convnet_train(ConvNet& model, std::span<const Tensor> images, std::span<const std::size_t> labels,
                          const TrainConfig& cfg, const LabeledSet<Tensor>* validation) {
    const LabeledSet<Tensor> data{images, labels};
    return train_classifier(model, data, cfg, validation);
}

TrainResult bilstm_train(BiLstm& model, std::span<const FeatureSequence> seqs, std::span<const std::size_t> labels,
                         const TrainConfig& cfg, const LabeledSet<FeatureSequence>* validation) {
    const LabeledSet<FeatureSequence> data{seqs, labels};
    return train_classifier(model, data, cfg, validation);
}

namespace {

constexpr char kMagic[8] = {'F', 'E', 'R', '4', 'D', 'M', 'D', 'L'};
constexpr std::uint32_t kKindConvNet = 1;
constexpr std::uint32_t kKindBiLstm = 2;

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) fail(ErrorKind::Io, "cannot write " + path.string());
    }
    void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void finish() {
        out_.flush();
        if (!out_) fail(ErrorKind::Io, "write failed: " + path_.string());
    }

private:
    void le(std::uint64_t v, int n) {
        char buf[8];
        for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        bytes(buf, static_cast<std::size_t>(n));
    }
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) fail(ErrorKind::MissingFile, path.string());
    }
    void bytes(char* data, std::size_t n) {
        in_.read(data, static_cast<std::streamsize>(n));
        if (!in_) fail(ErrorKind::ParseError, path_.string() + ": truncated model file");
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::uint64_t le(int n) {
        unsigned char buf[8];
        bytes(reinterpret_cast<char*>(buf), static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = n; i-- > 0;) v = (v << 8) | buf[i];
        return v;
    }
    std::ifstream in_;
    std::filesystem::path path_;
};

void write_model(const std::filesystem::path& path, std::uint32_t kind, const std::vector<double>& hyper,
                 const std::vector<Tensor>& params) {
    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kModelFormatVersion);
    w.u32(kind);
    w.u32(static_cast<std::uint32_t>(hyper.size()));
    for (double h : hyper) w.f64(h);
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& t : params) {
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) w.u64(d);
        for (double v : t.data) w.f64(v);
    }
    w.finish();
}

struct RawModel {
    std::vector<double> hyper;
    std::vector<Tensor> params;
};

RawModel read_model(const std::filesystem::path& path, std::uint32_t expected_kind) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorKind::ParseError, path.string() + ": not a model file");
    const auto version = r.u32();
    if (version != kModelFormatVersion) {
        fail(ErrorKind::ParseError, path.string() + ": unsupported model format version " + std::to_string(version));
    }
    if (r.u32() != expected_kind) fail(ErrorKind::ParseError, path.string() + ": unexpected model kind");
    RawModel raw;
    raw.hyper.resize(r.u32());
    for (auto& h : raw.hyper) h = r.f64();
    const auto layers = r.u32();
    for (std::uint32_t l = 0; l < layers; ++l) {
        Tensor t;
        t.shape.resize(r.u32());
        for (auto& d : t.shape) d = static_cast<std::size_t>(r.u64());
        t.data.resize(Tensor::element_count(t.shape));
        for (auto& v : t.data) v = r.f64();
        raw.params.push_back(std::move(t));
    }
    return raw;
}

void adopt_parameters(std::vector<Tensor>& target, std::vector<Tensor>&& loaded, const std::filesystem::path& path) {
    if (target.size() != loaded.size()) fail(ErrorKind::ParseError, path.string() + ": layer count mismatch");
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i].shape != loaded[i].shape) fail(ErrorKind::ParseError, path.string() + ": layer shape mismatch");
    }
    target = std::move(loaded);
}

std::size_t as_size(double v) { return static_cast<std::size_t>(v); }

}  // namespace

void save_model(const std::filesystem::path& path, const ConvNet& model) {
    const auto& c = model.config();
    std::vector<double> hyper{static_cast<double>(c.in_channels), static_cast<double>(c.input_size),
                              static_cast<double>(c.num_classes), static_cast<double>(c.filters.size())};
    for (auto f : c.filters) hyper.push_back(static_cast<double>(f));
    write_model(path, kKindConvNet, hyper, model.parameters());
}

void save_model(const std::filesystem::path& path, const BiLstm& model) {
    const auto& c = model.config();
    write_model(path, kKindBiLstm,
                {static_cast<double>(c.input_dim), static_cast<double>(c.hidden), c.dropout,
                 static_cast<double>(c.num_classes)},
                model.parameters());
}

ConvNet load_convnet(const std::filesystem::path& path) {
    auto raw = read_model(path, kKindConvNet);
    if (raw.hyper.size() < 4 || raw.hyper.size() != 4 + as_size(raw.hyper[3])) {
        fail(ErrorKind::ParseError, path.string() + ": bad ConvNet header");
    }
    ConvNetConfig cfg;
    cfg.in_channels = as_size(raw.hyper[0]);
    cfg.input_size = as_size(raw.hyper[1]);
    cfg.num_classes = as_size(raw.hyper[2]);
    cfg.filters.clear();
    for (std::size_t i = 4; i < raw.hyper.size(); ++i) cfg.filters.push_back(as_size(raw.hyper[i]));
    ConvNet model(cfg);
    adopt_parameters(model.parameters(), std::move(raw.params), path);
    return model;
}

BiLstm load_bilstm(const std::filesystem::path& path) {
    auto raw = read_model(path, kKindBiLstm);
    if (raw.hyper.size() != 4) fail(ErrorKind::ParseError, path.string() + ": bad BiLSTM header");
    BiLstmConfig cfg;
    cfg.input_dim = as_size(raw.hyper[0]);
    cfg.hidden = as_size(raw.hyper[1]);
    cfg.dropout = raw.hyper[2];
    cfg.num_classes = as_size(raw.hyper[3]);
    BiLstm model(cfg);
    adopt_parameters(model.parameters(), std::move(raw.params), path);
    return model;
}

}  // namespace fer4d
