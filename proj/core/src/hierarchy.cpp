#include "motifcode/hierarchy.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <json.hpp>

#include "motifcode/error.hpp"

namespace motif {

namespace {

constexpr double kContainment = 0.8;  // time-span overlap fraction

void node_spans(const SparseCode& code, std::vector<HierarchyNode>& nodes) {
    int cols = code.residual.cols();
    for (size_t i = 0; i < code.placements.size(); ++i) {
        const Placement& pl = code.placements[i];
        HierarchyNode node;
        node.template_id = pl.transform.t;
        node.placement_index = i;
        int min_c = std::numeric_limits<int>::max(), max_c = -1;
        int min_r = std::numeric_limits<int>::max(), max_r = -1;
        for (int cell : pl.claimed_cells) {
            int r = cell / cols, c = cell % cols;
            min_c = std::min(min_c, c);
            max_c = std::max(max_c, c);
            min_r = std::min(min_r, r);
            max_r = std::max(max_r, r);
        }
        if (max_c < 0) continue;  // nothing claimed, nothing to show
        node.col_start = min_c;
        node.col_end = max_c + 1;
        node.row_start = min_r;
        node.row_end = max_r + 1;
        nodes.push_back(std::move(node));
    }
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const HierarchyNode& a, const HierarchyNode& b) {
                         if (a.col_start != b.col_start) return a.col_start < b.col_start;
                         if (a.row_start != b.row_start) return a.row_start < b.row_start;
                         return a.placement_index < b.placement_index;
                     });
}

void assign_labels(HierarchyLayer& layer, int layer_index) {
    std::map<int, int> instance_counter;
    for (HierarchyNode& node : layer.nodes) {
        node.layer = layer_index;
        node.instance_index = instance_counter[node.template_id]++;
        node.label = "T-" + std::to_string(layer_index) + "-" +
                     std::to_string(node.template_id) + "-" +
                     std::to_string(node.instance_index);
    }
}

void link_layers(Hierarchy& hierarchy) {
    for (size_t li = 0; li + 1 < hierarchy.layers.size(); ++li) {
        HierarchyLayer& fine = hierarchy.layers[li];
        HierarchyLayer& coarse = hierarchy.layers[li + 1];
        for (const HierarchyNode& child : fine.nodes) {
            int span = child.col_end - child.col_start;
            if (span <= 0) continue;
            int best = -1;
            double best_overlap = 0.0;
            for (size_t pi = 0; pi < coarse.nodes.size(); ++pi) {
                const HierarchyNode& parent = coarse.nodes[pi];
                int lo = std::max(child.col_start, parent.col_start);
                int hi = std::min(child.col_end, parent.col_end);
                double overlap = double(std::max(0, hi - lo)) / double(span);
                if (overlap >= kContainment && overlap > best_overlap) {
                    best_overlap = overlap;
                    best = static_cast<int>(pi);
                }
            }
            if (best >= 0) coarse.nodes[best].children.push_back(child.label);
        }
    }
}

Hierarchy build(const PianoRoll& roll, const std::vector<Dictionary>& dicts,
                const ScaleSchedule& schedule, const EncoderConfig& cfg) {
    Hierarchy hierarchy;
    for (size_t i = 0; i < schedule.max_widths.size(); ++i) {
        HierarchyLayer layer;
        layer.max_width = schedule.max_widths[i];
        if (dicts[i].empty())
            throw InputError("no templates fit under width cap " +
                             std::to_string(layer.max_width));
        layer.code = encode(roll, dicts[i], cfg);
        node_spans(layer.code, layer.nodes);
        assign_labels(layer, static_cast<int>(i) + 1);
        hierarchy.layers.push_back(std::move(layer));
    }
    link_layers(hierarchy);
    return hierarchy;
}

} // namespace

void validate_schedule(const ScaleSchedule& schedule) {
    if (schedule.max_widths.empty()) throw InputError("empty scale schedule");
    for (size_t i = 1; i < schedule.max_widths.size(); ++i)
        if (schedule.max_widths[i] <= schedule.max_widths[i - 1])
            throw InputError("scale schedule must be strictly increasing");
    if (schedule.max_widths.front() < 1)
        throw InputError("scale caps must be positive");
}

Dictionary filter_by_width(const Dictionary& dict, int max_width) {
    Dictionary out;
    for (size_t i = 0; i < dict.templates.size(); ++i) {
        if (dict.templates[i].width > max_width) continue;
        out.templates.push_back(dict.templates[i]);
        out.templates.back().id = static_cast<int>(out.templates.size()) - 1;
        out.usage.push_back(dict.usage[i]);
        out.info.push_back(dict.info[i]);
    }
    return out;
}

Hierarchy parse_hierarchy(const PianoRoll& roll, const Dictionary& dict,
                          const ScaleSchedule& schedule, const EncoderConfig& cfg) {
    validate_schedule(schedule);
    std::vector<Dictionary> dicts;
    dicts.reserve(schedule.max_widths.size());
    for (int cap : schedule.max_widths) dicts.push_back(filter_by_width(dict, cap));
    return build(roll, dicts, schedule, cfg);
}

Hierarchy parse_hierarchy(const PianoRoll& roll,
                          const std::vector<Dictionary>& dict_per_scale,
                          const ScaleSchedule& schedule, const EncoderConfig& cfg) {
    validate_schedule(schedule);
    if (dict_per_scale.size() != schedule.max_widths.size())
        throw InputError("one dictionary per scale required");
    return build(roll, dict_per_scale, schedule, cfg);
}

std::string hierarchy_to_json(const Hierarchy& hierarchy) {
    nlohmann::json j;
    j["schema"] = "mw/1";
    nlohmann::json layers = nlohmann::json::array();
    for (const HierarchyLayer& layer : hierarchy.layers) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const HierarchyNode& node : layer.nodes) {
            const Placement& pl = layer.code.placements[node.placement_index];
            nodes.push_back({{"label", node.label},
                             {"t", node.template_id},
                             {"instance", node.instance_index},
                             {"span", {node.col_start, node.col_end}},
                             {"pitch_span", {node.row_start, node.row_end}},
                             {"X", pl.transform.X},
                             {"P", pl.transform.P},
                             {"F", static_cast<int>(pl.transform.F)},
                             {"D", pl.transform.D},
                             {"A", pl.transform.A},
                             {"score", pl.score},
                             {"children", node.children}});
        }
        layers.push_back(
            {{"max_width", layer.max_width}, {"nodes", std::move(nodes)}});
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

} // namespace motif
