#ifndef MOTIFCODE_SIMILARITY_HPP
#define MOTIFCODE_SIMILARITY_HPP

#include <optional>
#include <vector>

#include "motifcode/lexicon.hpp"
#include "motifcode/matrix.hpp"
#include "motifcode/roll.hpp"

namespace motif {

enum class Measure { BACC, ZNCC, RMSE };

inline bool higher_is_better(Measure m) { return m != Measure::RMSE; }

// Is score a better than score b under the measure's polarity?
inline bool better(Measure m, double a, double b) {
    return higher_is_better(m) ? a > b : a < b;
}

inline bool passes_threshold(Measure m, double score, double threshold) {
    return higher_is_better(m) ? score >= threshold : score <= threshold;
}

inline double worst_score(Measure m) {
    return higher_is_better(m) ? -1e300 : 1e300;
}

struct DiffuseConfig {
    int kernel_size = 5;  // odd
    double sigma = 2.0;
};

// Separable Gaussian blur with zero padding; kernel normalized to sum 1.
Mat gaussian_blur(const Mat& m, const DiffuseConfig& cfg);

// ---- direct (per-placement) measures; these are the reference path ----

// Zero-normalized cross-correlation over the template-sized window with
// its origin at (row, col). Zero variance on either side scores 0.
double zncc(const Mat& roll, const Mat& tpl_image, int row, int col);

// Root mean square difference over the window.
double rmse(const Mat& roll, const Mat& tpl_image, int row, int col);

// Basis-average cross-correlation: the window inner product divided by
// (basis count + count of roll notes clipped to the window). Note counts
// may be taken from a different matrix than the match surface so blurred
// matching can keep sharp counts.
double bacc(const Mat& roll, const Mat& tpl_image, int n_bases, int row, int col,
            const Mat* note_source = nullptr);

// ---- sliding evaluation over all valid placements ----

struct ResponseMap {
    Mat values;  // indexed by (P, X) of the template box origin
    Measure measure = Measure::BACC;
    int template_id = 0;
    TransformParams transform;
    int window_height = 0;
    int window_width = 0;
};

// Prefix sums over one matrix, shared by every map evaluated against it.
class ResponseContext {
public:
    explicit ResponseContext(const Mat& m);

    const Mat& matrix() const { return *m_; }
    double box_sum(int r0, int c0, int h, int w) const;
    double box_sum_sq(int r0, int c0, int h, int w) const;
    // Count of maximal positive runs clipped to the window.
    int note_count(int r0, int c0, int h, int w) const;

private:
    const Mat* m_;
    int rows_, cols_;
    std::vector<double> integral_;     // (rows+1)*(cols+1)
    std::vector<double> integral_sq_;  // (rows+1)*(cols+1)
    std::vector<int> run_starts_;      // (rows+1)*(cols+1)
    std::vector<int> cont_prefix_;     // (rows+1)*cols, per-column row prefix
};

// Evaluates `measure` for the transformed template at every valid (P, X).
// With diffuse set, the roll is blurred first (the template stays sharp)
// and BACC note counts still come from the unblurred roll.
// Throws InputError when the template does not fit the roll at all.
ResponseMap response_map(const PianoRoll& roll, const Template& tpl,
                         const TransformParams& transform, Measure measure,
                         const std::optional<DiffuseConfig>& diffuse = std::nullopt);

// Internal fast path: `surface` is what gets matched (possibly blurred),
// `notes` is where BACC counts notes. `transformed` must already carry the
// transform, which is recorded on the map unchecked.
ResponseMap response_map_ctx(const ResponseContext& surface,
                             const ResponseContext& notes,
                             const Template& transformed,
                             const TransformParams& transform, Measure measure);

} // namespace motif

#endif
