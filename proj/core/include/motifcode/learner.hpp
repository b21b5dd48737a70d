#ifndef MOTIFCODE_LEARNER_HPP
#define MOTIFCODE_LEARNER_HPP

#include <string>
#include <vector>

#include "motifcode/dictionary.hpp"
#include "motifcode/encoder.hpp"
#include "motifcode/rng.hpp"
#include "motifcode/roll.hpp"
#include "motifcode/statmodel.hpp"

namespace motif {

struct TrainConfig {
    int n_init = 4;
    int init_height = 10;  // rows (pitch)
    int init_width = 20;   // columns (time)
    double gamma = 1.0;    // basis-count penalty
    int epochs = 10;
    EncoderConfig encoder;
    StatConfig stat;
    uint64_t seed = 0;
    int max_new_per_epoch = 4;     // residual-harvested templates per epoch
    int unused_epochs_to_drop = 2;
    int max_bases_per_template = 64;
    int threads = 0;
};

struct EpochStats {
    int epoch = 0;
    double rmse = 0.0;  // mean over batches
    int dict_size = 0;
    int basis_total = 0;
    long code_params = 0;
    long code_params_sparse = 0;
    long note_params = 0;
    double objective = 0.0;  // sum rmse + gamma * basis_total + dict_size
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double total_seconds = 0.0;
};

std::string report_to_csv(const TrainReport& report);

// Samples n_init windows of the initial size at uniformly random positions
// that contain at least two notes and turns each window's notes into bases.
// Throws InputError after 1000 consecutive failed draws.
Dictionary init_random_crop(const std::vector<PianoRoll>& rolls,
                            const TrainConfig& cfg, Rng& rng);

// For every placement, cuts the roll window under it and inverts the
// geometric transform so all instances of a template share canonical
// coordinates. codes[i].batch indexes into rolls. Deltas are per-instance
// jitter and are left in; the relearn step searches over them again.
std::vector<std::vector<Mat>> extract_patches(const std::vector<SparseCode>& codes,
                                              const std::vector<PianoRoll>& rolls,
                                              const Dictionary& dict);

// Rebuilds one template from its aligned patches: candidate bases are
// enumerated over the old box, scored by the summed activation of their
// best local response per patch (deltas within bounds), and added greedily
// while the marginal score exceeds gamma. Per-basis lambdas and the Eq-5
// style log-likelihood land in `info`. An empty patch list keeps the old
// template and marks it stale.
Template relearn_template(const std::vector<Mat>& patches, const Template& old,
                          const ReferenceModel& ref, const TrainConfig& cfg,
                          TemplateInfo& info);

// Drops templates unused for cfg.unused_epochs_to_drop consecutive epochs,
// harvests high-mass residual regions (connected components with >= 2
// notes) as new templates up to the per-epoch cap, and reassigns dense ids.
Dictionary grow_dictionary(Dictionary dict, const std::vector<SparseCode>& codes,
                           const std::vector<PianoRoll>& rolls,
                           const TrainConfig& cfg, Rng& rng, int epoch);

struct TrainResult {
    Dictionary dictionary;
    std::vector<SparseCode> codes;  // from the final epoch
    TrainReport report;
    ReferenceModel reference;
};

// Alternates encoding (one batch at a time, dictionary carried forward)
// with relearning and growth for cfg.epochs epochs. epochs = 0 returns the
// initial dictionary and no codes.
TrainResult train(const std::vector<PianoRoll>& corpus, const TrainConfig& cfg);

} // namespace motif

#endif
