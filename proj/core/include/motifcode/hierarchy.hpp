#ifndef MOTIFCODE_HIERARCHY_HPP
#define MOTIFCODE_HIERARCHY_HPP

#include <string>
#include <vector>

#include "motifcode/dictionary.hpp"
#include "motifcode/encoder.hpp"

namespace motif {

// Maximum template widths (columns) per layer, finest first.
struct ScaleSchedule {
    std::vector<int> max_widths;
};

// Throws InputError unless the schedule is non-empty and strictly increasing.
void validate_schedule(const ScaleSchedule& schedule);

// Keeps templates no wider than max_width and reassigns dense ids.
Dictionary filter_by_width(const Dictionary& dict, int max_width);

struct HierarchyNode {
    std::string label;  // "T-{layer}-{class}-{instance}"
    int layer = 1;      // 1-based, layer 1 is the finest scale
    int template_id = 0;
    int instance_index = 0;
    int col_start = 0, col_end = 0;  // claimed time span [start, end)
    int row_start = 0, row_end = 0;
    size_t placement_index = 0;
    std::vector<std::string> children;  // labels one layer finer
};

struct HierarchyLayer {
    int max_width = 0;
    SparseCode code;
    std::vector<HierarchyNode> nodes;
};

struct Hierarchy {
    std::vector<HierarchyLayer> layers;
};

// Encodes the roll once per scale cap with the width-filtered dictionary
// and links each placement to the placements one layer finer whose time
// span lies at least 80% inside it.
Hierarchy parse_hierarchy(const PianoRoll& roll, const Dictionary& dict,
                          const ScaleSchedule& schedule, const EncoderConfig& cfg);

// Same linking, but with a separately learned dictionary per scale.
Hierarchy parse_hierarchy(const PianoRoll& roll,
                          const std::vector<Dictionary>& dict_per_scale,
                          const ScaleSchedule& schedule, const EncoderConfig& cfg);

std::string hierarchy_to_json(const Hierarchy& hierarchy);

} // namespace motif

#endif
