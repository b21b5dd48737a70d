#ifndef MOTIFCODE_DICTIONARY_HPP
#define MOTIFCODE_DICTIONARY_HPP

#include <string>
#include <vector>

#include "motifcode/lexicon.hpp"

namespace motif {

// Learning provenance carried per template across epochs.
struct TemplateInfo {
    int created_epoch = 0;
    int unused_epochs = 0;  // consecutive epochs with zero usage
    bool stale = false;     // last relearn had no patches for it
    std::vector<double> lambda;  // per-basis exponential-family weights
    double log_likelihood = 0.0;
};

struct Dictionary {
    std::vector<Template> templates;
    std::vector<int> usage;  // placements per template in the last code set
    std::vector<TemplateInfo> info;

    size_t size() const { return templates.size(); }
    bool empty() const { return templates.empty(); }

    const Template& by_id(int id) const;

    // Enforces dense unique ids 0..N-1 and parallel bookkeeping arrays.
    void check() const;
};

std::string dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const std::string& text);

} // namespace motif

#endif
