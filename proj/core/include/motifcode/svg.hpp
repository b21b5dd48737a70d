#ifndef MOTIFCODE_SVG_HPP
#define MOTIFCODE_SVG_HPP

#include <string>

#include "motifcode/dictionary.hpp"
#include "motifcode/encoder.hpp"
#include "motifcode/roll.hpp"

namespace motif {

// Piano-roll drawing: one rectangle per note run, placement outlines in
// per-template colors with labels. Deterministic output for identical input.
std::string roll_svg(const Mat& roll, const SparseCode* code = nullptr);

std::string template_svg(const Template& tpl);

} // namespace motif

#endif
