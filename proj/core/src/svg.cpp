#include "motifcode/svg.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace motif {

namespace {

constexpr int kCell = 6;  // pixels per roll cell

const char* kPalette[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
                          "#46f0f0", "#f032e6", "#bcf60c", "#008080", "#9a6324"};

std::string color_for(int id) {
    return kPalette[id % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

void open_svg(std::ostringstream& os, int width_px, int height_px) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px
       << "\" height=\"" << height_px << "\" viewBox=\"0 0 " << width_px << ' '
       << height_px << "\">\n";
    os << "<rect width=\"" << width_px << "\" height=\"" << height_px
       << "\" fill=\"#fcfcfc\" stroke=\"#ccc\"/>\n";
}

void note_rect(std::ostringstream& os, int rows, const Run& run,
               const std::string& fill, double opacity) {
    // row 0 (lowest pitch) drawn at the bottom
    int y = (rows - 1 - run.row) * kCell;
    os << "<rect x=\"" << run.col * kCell << "\" y=\"" << y << "\" width=\""
       << run.len * kCell << "\" height=\"" << kCell << "\" fill=\"" << fill
       << "\" fill-opacity=\"" << opacity << "\"/>\n";
}

} // namespace

std::string roll_svg(const Mat& roll, const SparseCode* code) {
    std::ostringstream os;
    open_svg(os, roll.cols() * kCell, roll.rows() * kCell);
    for (const Run& run : find_runs(roll))
        note_rect(os, roll.rows(), run, "#333333",
                  std::min(1.0, 0.35 + 0.65 * run.mean_intensity));
    if (code) {
        for (size_t i = 0; i < code->placements.size(); ++i) {
            const Placement& pl = code->placements[i];
            if (pl.claimed_cells.empty()) continue;
            int min_c = std::numeric_limits<int>::max(), max_c = -1;
            int min_r = std::numeric_limits<int>::max(), max_r = -1;
            for (int cell : pl.claimed_cells) {
                int r = cell / roll.cols(), c = cell % roll.cols();
                min_c = std::min(min_c, c);
                max_c = std::max(max_c, c);
                min_r = std::min(min_r, r);
                max_r = std::max(max_r, r);
            }
            std::string color = color_for(pl.transform.t);
            int y = (roll.rows() - 1 - max_r) * kCell;
            os << "<rect x=\"" << min_c * kCell - 1 << "\" y=\"" << y - 1
               << "\" width=\"" << (max_c - min_c + 1) * kCell + 2 << "\" height=\""
               << (max_r - min_r + 1) * kCell + 2 << "\" fill=\"none\" stroke=\""
               << color << "\" stroke-width=\"1.5\"/>\n";
            os << "<text x=\"" << min_c * kCell << "\" y=\"" << y - 3
               << "\" font-size=\"8\" fill=\"" << color << "\">T" << pl.transform.t
               << '.' << i << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string template_svg(const Template& tpl) {
    std::ostringstream os;
    open_svg(os, std::max(1, tpl.width) * kCell, std::max(1, tpl.height) * kCell);
    for (const Basis& b : tpl.bases) {
        Run run{b.p, b.x, b.d, static_cast<float>(b.weight)};
        note_rect(os, tpl.height, run, color_for(tpl.id),
                  std::min(1.0, 0.35 + 0.65 * b.weight));
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace motif
