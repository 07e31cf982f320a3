#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fer4d/mesh.hpp"
#include "fer4d/projection.hpp"

namespace fer4d {

enum class Stream : std::uint8_t { DI = 0, LI = 1 };
std::string_view to_string(Stream s);

// Class-probability vectors indexed by (sample, stream, view, label). Views
// are positions in `views`. Each (stream, view) slice is either absent or
// filled for every sample.
class ScoreCube {
public:
    ScoreCube(std::size_t samples, std::vector<Profile> views, std::size_t classes = kNumExpressions);

    std::size_t samples() const { return samples_; }
    std::size_t classes() const { return classes_; }
    const std::vector<Profile>& views() const { return views_; }

    // Marks the (stream, view) slice present; every sample's row starts at 0.
    void set(std::size_t sample, Stream stream, std::size_t view, std::span<const double> probs);
    bool has(Stream stream, std::size_t view) const { return present_[slot(stream, view)] != 0; }
    std::span<const double> at(std::size_t sample, Stream stream, std::size_t view) const;
    double at(std::size_t sample, Stream stream, std::size_t view, std::size_t label) const {
        return at(sample, stream, view)[label];
    }

    // Every present slice row is a distribution within `tol`.
    bool is_valid(double tol = 1e-9) const;

private:
    std::size_t slot(Stream s, std::size_t view) const { return static_cast<std::size_t>(s) * views_.size() + view; }

    std::size_t samples_;
    std::vector<Profile> views_;
    std::size_t classes_;
    std::vector<double> data_;
    std::vector<std::uint8_t> present_;
};

// N x classes matrix of fused scores.
struct ProbMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t n) const { return {data.data() + n * cols, cols}; }
    double at(std::size_t n, std::size_t l) const { return data[n * cols + l]; }
};

// C(n, l) = (1/|views|) * sum over views and selected streams of cube(n, s, view, l).
ProbMatrix collaborate(const ScoreCube& cube, std::span<const Stream> streams, std::span<const std::size_t> views);

struct Prediction {
    std::size_t label = 0;  // 0-based expression index
    double score = 0.0;
};

// Arg-max per row; the lowest label wins ties.
std::vector<Prediction> predict(const ProbMatrix& scores);

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumExpressions>, kNumExpressions> counts{};  // [truth][predicted]

    std::size_t total() const;
    std::size_t trace() const;
    // Row-normalized rates; all-zero rows stay zero.
    std::array<std::array<double, kNumExpressions>, kNumExpressions> rates() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

struct Evaluation {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

Evaluation evaluate(std::span<const Prediction> predictions, std::span<const std::size_t> truth);

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

struct FoldSplit {
    std::vector<Fold> folds;
};

// Subject-level k-fold rotation. Subjects are shuffled by `seed`; fold f takes
// round(0.2 N) test subjects starting at offset floor(f N / k) of the shuffled
// ring, the next round(0.2 N) subjects for validation, and the remainder for
// training (each part gets at least one subject).
FoldSplit make_folds(std::vector<std::string> subjects, std::size_t k, std::uint64_t seed);
FoldSplit make_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

// Table layout: collaborator settings x view combinations.
enum class Collaborator : std::uint8_t { Landmark, Dynamic, LandmarkDynamic };
std::string_view to_string(Collaborator c);
std::vector<Stream> streams_of(Collaborator c);

struct ViewCombo {
    std::vector<Profile> profiles;
    std::string label() const;  // e.g. "RP + FP + LP"
};

// LP, FP, RP, RP + FP, LP + FP, RP + LP, RP + FP + LP.
std::vector<ViewCombo> table_view_combos();
inline constexpr std::array<Collaborator, 3> kCollaborators{Collaborator::Landmark, Collaborator::Dynamic,
                                                            Collaborator::LandmarkDynamic};

struct CellKey {
    Collaborator collaborator;
    std::string combo;  // ViewCombo::label()

    auto operator<=>(const CellKey&) const = default;
};

using ResultGrid = std::map<CellKey, double>;  // accuracy in [0, 1]

struct ReportRow {
    Collaborator collaborator;
    std::string combo;
    double accuracy = 0.0;
    double reference = 0.0;  // published accuracy on the BU-4DFE benchmark, percent
    bool best = false;       // highest accuracy within its collaborator setting
};

struct Report {
    std::vector<ReportRow> rows;  // 21 rows in table order

    std::string to_text() const;
    std::string to_csv() const;
};

// Published per-cell accuracies (percent) on BU-4DFE; structural reference only.
double reference_accuracy(Collaborator c, std::string_view combo);

Report report_table(const ResultGrid& results);

std::string confusion_csv(const ConfusionMatrix& cm);
void write_confusion_ppm(const std::filesystem::path& path, const ConfusionMatrix& cm, std::size_t cell_pixels = 32);

}  // namespace fer4d
