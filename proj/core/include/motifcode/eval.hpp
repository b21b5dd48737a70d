#ifndef MOTIFCODE_EVAL_HPP
#define MOTIFCODE_EVAL_HPP

#include <string>
#include <vector>

#include "motifcode/encoder.hpp"
#include "motifcode/roll.hpp"

namespace motif {

// Ground-truth labels for one batch. instance_id groups the notes of one
// pattern occurrence; class_id names its pattern category; -1 = unlabeled.
struct AnnotatedNote {
    int pitch = 0;
    int onset = 0;     // columns
    int duration = 1;  // columns
    int instance_id = -1;
    int class_id = -1;
};

struct Annotation {
    int batch = 0;
    std::vector<AnnotatedNote> notes;
};

std::string annotation_to_json(const Annotation& ann);
Annotation annotation_from_json(const std::string& text);

// Mean IoU between predicted instances (per-placement claimed note sets)
// and annotated instances, matched one-to-one greedily by descending IoU;
// unmatched instances on either side count as zero.
// Throws InputError when the annotation has no labeled instances.
double note_iou(const SparseCode& code, const Annotation& ann, const PianoRoll& roll);

struct ClusterScores {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
    double ari = 0.0;
};

// Contingency-table clustering scores for parallel label vectors.
ClusterScores clustering_metrics(const std::vector<int>& truth,
                                 const std::vector<int>& predicted);

// Labels every annotated note with the template id of the placement that
// claims most of it (an unclaimed note forms its own "none" cluster), then
// scores against the class labels. Inputs are aligned by batch index.
ClusterScores clustering_metrics(const std::vector<SparseCode>& codes,
                                 const std::vector<Annotation>& anns,
                                 const std::vector<PianoRoll>& rolls);

// Boundary F1 with one-to-one matching within +-tolerance_cols. Predicted
// boundaries are the claimed time extents of the placements.
// Throws InputError on an empty ground-truth boundary set.
double segmentation_f1(const SparseCode& code, const std::vector<int>& true_boundaries,
                       int tolerance_cols);

struct FrequencyHistogram {
    std::vector<std::pair<int, long>> items;  // (template id, count), descending
    double top3_fraction = 0.0;
};

FrequencyHistogram frequency_histogram(const std::vector<SparseCode>& codes);

struct PowerLawFit {
    double alpha = 0.0;    // negated log-log OLS slope
    double p_value = 1.0;  // slope t-test
    std::vector<std::pair<long, long>> rank_frequency;
};

// Ordinary least squares of log(frequency) on log(rank) over ranks with
// frequency >= 1. Throws InputError with fewer than 5 ranks.
PowerLawFit fit_power_law(const FrequencyHistogram& hist);

struct MetricsRow {
    double iou = 0.0;
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
    double rmse = 0.0;
    double ari = 0.0;
    double seconds_per_epoch = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

} // namespace motif

#endif
