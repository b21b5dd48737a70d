#ifndef MOTIFCODE_LEXICON_HPP
#define MOTIFCODE_LEXICON_HPP

#include <string>
#include <vector>

#include "motifcode/matrix.hpp"

namespace motif {

// One note primitive of a template: onset column x, pitch row p, duration
// d columns, and a non-negative intensity weight.
struct Basis {
    int x = 0;
    int p = 0;
    int d = 1;
    double weight = 1.0;

    bool operator==(const Basis&) const = default;
};

// A music-word: a few weighted bases inside a tight bounding box.
struct Template {
    int id = 0;
    std::vector<Basis> bases;
    int height = 0;
    int width = 0;

    bool operator==(const Template&) const = default;
};

enum class Flip : int {
    None = 0,
    Horizontal = 1,  // time reversal
    Vertical = 2,    // pitch inversion
    Diagonal = 3,    // both
};

// Global geometric transform of one template occurrence. X/P position the
// template in the roll; they do not change its internal coordinates.
struct TransformParams {
    int t = 0;  // template id
    int X = 0;  // time offset (columns)
    int P = 0;  // pitch offset (rows)
    Flip F = Flip::None;
    double D = 1.0;  // duration scaling
    double A = 1.0;  // relative time distance scaling

    bool operator==(const TransformParams&) const = default;
};

inline bool is_identity(const TransformParams& t) {
    return t.F == Flip::None && t.D == 1.0 && t.A == 1.0 && t.X == 0 && t.P == 0;
}

// Per-basis fine-tuning of one occurrence, parallel to Template::bases.
struct Delta {
    int dx = 0;
    int dp = 0;
    int dd = 0;

    bool operator==(const Delta&) const = default;
};
using BasisDeltas = std::vector<Delta>;

struct DeltaBounds {
    int max_dx = 2;
    int max_dp = 2;
    int max_dd = 5;
};

inline bool all_zero(const BasisDeltas& deltas) {
    for (const Delta& d : deltas)
        if (d.dx != 0 || d.dp != 0 || d.dd != 0) return false;
    return true;
}

// Shifts bases so the box is tight (min x = 0, min p = 0) and recomputes
// width/height. Throws InvariantError on an empty basis list.
void tighten(Template& tpl);

// Throws InvariantError if the template breaks its type invariants.
void validate_template(const Template& tpl);

// Applies A (onset spacing), then D (durations), then F, in that order.
// X and P stay placement-only. The result has a tight bounding box.
Template apply_transform(const Template& tpl, const TransformParams& params);

// Per-basis x+dx, p+dp, d+dd with d clamped to >= 1; result re-tightened.
// Throws InvariantError when the delta count mismatches or a delta exceeds
// the bounds.
Template apply_deltas(const Template& tpl, const BasisDeltas& deltas,
                      const DeltaBounds& bounds = {});

// Box-origin displacement that apply_deltas normalized away: the minimum
// of x+dx and of p+dp over bases. A placement of the normalized template
// must be offset by this to keep bases at their absolute positions.
std::pair<int, int> delta_origin_shift(const Template& tpl, const BasisDeltas& deltas);

struct RenderResult {
    Mat image;
    bool fully_clipped = false;  // no basis cell landed inside the target
};

// Paints the template into a height x width matrix with its box origin at
// (row, col). Bases outside are clipped; overlaps take the max weight.
RenderResult render(const Template& tpl, int height, int width, int row, int col);

// In-place variant: cell = max(cell, scale * weight). Returns the number
// of cells painted.
int paint_max(const Template& tpl, Mat& target, int row, int col, double scale = 1.0);

// Linear cell indices (r * cols + c) a placement would paint, sorted.
std::vector<int> placed_cells(const Template& tpl, int rows, int cols,
                              int row, int col);

std::string template_to_json(const Template& tpl);
Template template_from_json(const std::string& text);
std::string transform_to_json(const TransformParams& t);
TransformParams transform_from_json(const std::string& text);

} // namespace motif

#endif
