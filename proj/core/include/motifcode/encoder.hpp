#ifndef MOTIFCODE_ENCODER_HPP
#define MOTIFCODE_ENCODER_HPP

#include <string>
#include <vector>

#include "motifcode/dictionary.hpp"
#include "motifcode/lexicon.hpp"
#include "motifcode/roll.hpp"
#include "motifcode/similarity.hpp"

namespace motif {

// One template occurrence selected during encoding.
struct Placement {
    TransformParams transform;
    BasisDeltas deltas;
    double coefficient = 1.0;  // least-squares intensity scale
    double score = 0.0;        // measure value at selection
    std::vector<int> claimed_cells;  // linear indices into the roll, sorted
};

struct CodeStats {
    double rmse = 0.0;
    long code_params = 0;         // per placement: 6 transform + 3*n_t deltas + 1 coef
    long code_params_sparse = 0;  // as above but only non-zero delta triples counted
    long note_params = 0;         // 3 per note of the original roll
};

struct SparseCode {
    int batch = 0;
    std::vector<Placement> placements;
    Mat residual;  // original minus the max-composite, clamped at 0
    CodeStats stats;
};

enum class Strategy { Greedy, Efficient };

struct EncoderConfig {
    Measure measure = Measure::BACC;
    Strategy strategy = Strategy::Efficient;
    double significance_s = 0.5;
    double uniqueness_u = 0.4;
    DiffuseConfig diffuse{};  // used by the efficient strategy
    DeltaBounds delta_bounds{};
    bool refine_deltas = true;
    std::vector<Flip> flips{Flip::None, Flip::Horizontal, Flip::Vertical,
                            Flip::Diagonal};
    std::vector<double> duration_scales{0.5, 0.8, 1.0, 1.2, 1.4};
    std::vector<double> spacing_scales{0.5, 0.8, 1.0, 1.2, 1.4};
    int max_placements = 256;
    int threads = 0;  // 0 = hardware concurrency
};

// Iteratively picks the globally best-scoring placement on the current
// residual, refines its per-basis deltas, and accepts it when the score
// passes s and at least a u fraction of its claimed cells is new.
// Throws InputError on an empty dictionary; an all-zero roll encodes to an
// empty code.
SparseCode encode_greedy(const PianoRoll& roll, const Dictionary& dict,
                         const EncoderConfig& cfg);

// Same contract, but placements are harvested in batches: response maps are
// evaluated on the Gaussian-diffused residual, all local maxima whose sharp
// score passes s are collected in one pass, then accepted in score order
// under the uniqueness filter. Deltas are refined only for accepted
// placements. Rounds repeat until nothing qualifies.
SparseCode encode_efficient(const PianoRoll& roll, const Dictionary& dict,
                            const EncoderConfig& cfg);

SparseCode encode(const PianoRoll& roll, const Dictionary& dict,
                  const EncoderConfig& cfg);

// The delta-adjusted, transformed template of a placement together with the
// roll position of its box origin.
struct PlacedTemplate {
    Template tpl;
    int row = 0;
    int col = 0;
};
PlacedTemplate resolve_placement(const Dictionary& dict, const Placement& pl,
                                 const DeltaBounds& bounds = {});

// Cellwise max of coefficient-scaled placement renders.
Mat reconstruct(const SparseCode& code, const Dictionary& dict, int rows, int cols);

// RMSE between the original matrix and the code's reconstruction.
double reconstruction_error(const Mat& original, const SparseCode& code,
                            const Dictionary& dict);

CodeStats compute_code_stats(const Mat& original, const SparseCode& code,
                             const Dictionary& dict);

// Rebuilds every placement's claimed cells (render support intersected with
// the roll's positive cells). Needed after loading a code from JSON, which
// does not carry claims.
void recompute_claims(SparseCode& code, const Dictionary& dict, const Mat& roll);

std::string code_to_json(const SparseCode& code);
SparseCode code_from_json(const std::string& text, int rows, int cols);

} // namespace motif

#endif
