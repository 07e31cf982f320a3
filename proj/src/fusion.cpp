#include "fer4d/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

#include "fer4d/error.hpp"
#include "fer4d/image_io.hpp"
#include "fer4d/rng.hpp"

namespace fer4d {

std::string_view to_string(Stream s) { return s == Stream::DI ? "DI" : "LI"; }

ScoreCube::ScoreCube(std::size_t samples, std::vector<Profile> views, std::size_t classes)
    : samples_(samples), views_(std::move(views)), classes_(classes) {
    require(classes_ >= 1, "score cube needs at least one class");
    data_.assign(samples_ * 2 * views_.size() * classes_, 0.0);
    present_.assign(2 * views_.size(), 0);
}

void ScoreCube::set(std::size_t sample, Stream stream, std::size_t view, std::span<const double> probs) {
    require(sample < samples_ && view < views_.size(), "score cube index out of range");
    require(probs.size() == classes_, "probability vector has the wrong length");
    present_[slot(stream, view)] = 1;
    std::copy(probs.begin(), probs.end(), data_.begin() + static_cast<std::ptrdiff_t>((sample * 2 * views_.size() + slot(stream, view)) * classes_));
}

std::span<const double> ScoreCube::at(std::size_t sample, Stream stream, std::size_t view) const {
    return {data_.data() + (sample * 2 * views_.size() + slot(stream, view)) * classes_, classes_};
}

bool ScoreCube::is_valid(double tol) const {
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t v = 0; v < views_.size(); ++v) {
            const auto stream = static_cast<Stream>(s);
            if (!has(stream, v)) continue;
            for (std::size_t n = 0; n < samples_; ++n) {
                double sum = 0.0;
                for (double p : at(n, stream, v)) {
                    if (!(p >= 0.0) || !std::isfinite(p)) return false;
                    sum += p;
                }
                if (std::abs(sum - 1.0) > tol) return false;
            }
        }
    }
    return true;
}

ProbMatrix collaborate(const ScoreCube& cube, std::span<const Stream> streams, std::span<const std::size_t> views) {
    require(!streams.empty() && !views.empty(), "collaboration needs at least one stream and one view");
    for (auto s : streams) {
        for (auto v : views) {
            if (v >= cube.views().size() || !cube.has(s, v)) {
                fail(ErrorKind::MissingSlice, "no scores for stream " + std::string(to_string(s)) + " view " +
                                                  (v < cube.views().size() ? std::string(to_string(cube.views()[v]))
                                                                           : std::to_string(v)));
            }
        }
    }
    ProbMatrix c;
    c.rows = cube.samples();
    c.cols = cube.classes();
    c.data.assign(c.rows * c.cols, 0.0);
    const double inv_views = 1.0 / static_cast<double>(views.size());
    for (std::size_t n = 0; n < c.rows; ++n) {
        for (std::size_t l = 0; l < c.cols; ++l) {
            double sum = 0.0;
            for (auto v : views) {
                for (auto s : streams) sum += cube.at(n, s, v, l);
            }
            c.data[n * c.cols + l] = sum * inv_views;
        }
    }
    return c;
}

std::vector<Prediction> predict(const ProbMatrix& scores) {
    std::vector<Prediction> out;
    out.reserve(scores.rows);
    for (std::size_t n = 0; n < scores.rows; ++n) {
        const auto row = scores.row(n);
        // max_element returns the first maximum, i.e. the lowest label.
        const auto best = std::max_element(row.begin(), row.end());
        out.push_back({static_cast<std::size_t>(best - row.begin()), *best});
    }
    return out;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) {
        for (auto c : row) t += c;
    }
    return t;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < kNumExpressions; ++i) t += counts[i][i];
    return t;
}

std::array<std::array<double, kNumExpressions>, kNumExpressions> ConfusionMatrix::rates() const {
    std::array<std::array<double, kNumExpressions>, kNumExpressions> r{};
    for (std::size_t i = 0; i < kNumExpressions; ++i) {
        std::size_t sum = 0;
        for (auto c : counts[i]) sum += c;
        if (sum == 0) continue;
        for (std::size_t j = 0; j < kNumExpressions; ++j) {
            r[i][j] = static_cast<double>(counts[i][j]) / static_cast<double>(sum);
        }
    }
    return r;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    for (std::size_t i = 0; i < kNumExpressions; ++i) {
        for (std::size_t j = 0; j < kNumExpressions; ++j) counts[i][j] += other.counts[i][j];
    }
    return *this;
}

Evaluation evaluate(std::span<const Prediction> predictions, std::span<const std::size_t> truth) {
    if (predictions.size() != truth.size()) {
        fail(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                            std::to_string(truth.size()) + " labels");
    }
    Evaluation e;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        require(truth[i] < kNumExpressions && predictions[i].label < kNumExpressions, "label out of range");
        ++e.confusion.counts[truth[i]][predictions[i].label];
        correct += truth[i] == predictions[i].label;
    }
    e.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
    return e;
}

FoldSplit make_folds(std::vector<std::string> subjects, std::size_t k, std::uint64_t seed) {
    require(k >= 1, "fold count must be >= 1");
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    const std::size_t n = subjects.size();
    if (n < k || n < 3) {
        fail(ErrorKind::TooFewSubjects, std::to_string(n) + " subjects for " + std::to_string(k) + " folds");
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(subjects));

    const auto share = [n](double fraction) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    };
    const std::size_t n_test = share(0.2);
    const std::size_t n_val = share(0.2);
    if (n_test + n_val >= n) fail(ErrorKind::TooFewSubjects, "no subjects left for training");

    FoldSplit split;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t offset = f * n / k;
        Fold fold;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& id = subjects[(offset + i) % n];
            if (i < n_test) {
                fold.test.push_back(id);
            } else if (i < n_test + n_val) {
                fold.validation.push_back(id);
            } else {
                fold.train.push_back(id);
            }
        }
        std::sort(fold.train.begin(), fold.train.end());
        std::sort(fold.validation.begin(), fold.validation.end());
        std::sort(fold.test.begin(), fold.test.end());
        split.folds.push_back(std::move(fold));
    }
    return split;
}

FoldSplit make_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
    return make_folds(dataset.subjects(), k, seed);
}

std::string_view to_string(Collaborator c) {
    switch (c) {
        case Collaborator::Landmark: return "Landmark Images";
        case Collaborator::Dynamic: return "Dynamic Images";
        case Collaborator::LandmarkDynamic: return "Landmark and Dynamic Images";
    }
    return "?";
}

std::vector<Stream> streams_of(Collaborator c) {
    switch (c) {
        case Collaborator::Landmark: return {Stream::LI};
        case Collaborator::Dynamic: return {Stream::DI};
        case Collaborator::LandmarkDynamic: return {Stream::DI, Stream::LI};
    }
    return {};
}

std::string ViewCombo::label() const {
    std::string out;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (i) out += " + ";
        out += to_string(profiles[i]);
    }
    return out;
}

std::vector<ViewCombo> table_view_combos() {
    using P = Profile;
    return {{{P::LP}}, {{P::FP}}, {{P::RP}}, {{P::RP, P::FP}}, {{P::LP, P::FP}}, {{P::RP, P::LP}}, {{P::RP, P::FP, P::LP}}};
}

double reference_accuracy(Collaborator c, std::string_view combo) {
    static const std::map<std::string_view, std::array<double, 3>> table{
        // Landmark, Dynamic, Landmark + Dynamic
        {"LP", {75.40, 78.30, 83.40}},           {"FP", {78.70, 80.20, 91.40}},
        {"RP", {77.60, 79.20, 87.70}},           {"RP + FP", {85.50, 83.20, 93.60}},
        {"LP + FP", {84.20, 82.10, 92.10}},      {"RP + LP", {83.80, 81.30, 88.80}},
        {"RP + FP + LP", {88.80, 84.70, 96.70}},
    };
    const auto it = table.find(combo);
    return it == table.end() ? 0.0 : it->second[static_cast<std::size_t>(c)];
}

Report report_table(const ResultGrid& results) {
    Report report;
    for (auto c : kCollaborators) {
        const std::size_t first = report.rows.size();
        for (const auto& combo : table_view_combos()) {
            const std::string label = combo.label();
            const auto it = results.find({c, label});
            if (it == results.end()) {
                fail(ErrorKind::MissingCell, "no result for " + std::string(to_string(c)) + " / " + label);
            }
            report.rows.push_back({c, label, it->second, reference_accuracy(c, label), false});
        }
        double best = -1.0;
        for (std::size_t i = first; i < report.rows.size(); ++i) best = std::max(best, report.rows[i].accuracy);
        for (std::size_t i = first; i < report.rows.size(); ++i) report.rows[i].best = report.rows[i].accuracy == best;
    }
    return report;
}

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string Report::to_text() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-28s | %-14s | %12s | %13s\n", "Collaborator(s)", "View(s)", "Accuracy (%)",
                  "Reference (%)");
    out << line << std::string(78, '-') << '\n';
    std::optional<Collaborator> current;
    for (const auto& r : rows) {
        if (current && *current != r.collaborator) out << std::string(78, '-') << '\n';
        const std::string name = current == r.collaborator ? "" : std::string(to_string(r.collaborator));
        current = r.collaborator;
        const std::string acc = fixed2(100.0 * r.accuracy) + (r.best ? " *" : "  ");
        std::snprintf(line, sizeof line, "%-28s | %-14s | %12s | %13s\n", name.c_str(), r.combo.c_str(), acc.c_str(),
                      fixed2(r.reference).c_str());
        out << line;
    }
    out << "* best view combination within the collaborator setting\n";
    return out.str();
}

std::string Report::to_csv() const {
    std::ostringstream out;
    out << "collaborator,views,accuracy_percent,reference_percent,best\n";
    for (const auto& r : rows) {
        out << to_string(r.collaborator) << ',' << r.combo << ',' << fixed2(100.0 * r.accuracy) << ','
            << fixed2(r.reference) << ',' << (r.best ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "truth\\predicted";
    for (std::size_t j = 0; j < kNumExpressions; ++j) out << ',' << to_string(expression_at(j));
    out << ",count\n";
    const auto rates = cm.rates();
    for (std::size_t i = 0; i < kNumExpressions; ++i) {
        out << to_string(expression_at(i));
        std::size_t sum = 0;
        for (std::size_t j = 0; j < kNumExpressions; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", rates[i][j]);
            out << ',' << buf;
            sum += cm.counts[i][j];
        }
        out << ',' << sum << '\n';
    }
    return out.str();
}

void write_confusion_ppm(const std::filesystem::path& path, const ConfusionMatrix& cm, std::size_t cell_pixels) {
    const std::size_t size = kNumExpressions * cell_pixels;
    const auto rates = cm.rates();
    std::vector<double> rgb(size * size * 3);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double r = rates[y / cell_pixels][x / cell_pixels];
            const std::size_t i = (y * size + x) * 3;
            // white (rate 0) to dark blue (rate 1)
            rgb[i] = 1.0 - 0.9 * r;
            rgb[i + 1] = 1.0 - 0.8 * r;
            rgb[i + 2] = 1.0 - 0.4 * r;
        }
    }
    write_ppm8(path, size, size, rgb);
}

}  // namespace fer4d
