#ifndef MOTIFCODE_ROLL_HPP
#define MOTIFCODE_ROLL_HPP

#include <string>
#include <vector>

#include "motifcode/matrix.hpp"
#include "motifcode/midi.hpp"

namespace motif {

// Pitch x time intensity matrix for one batch window. Cell values are
// velocity/127; a cell belongs to a note over the note's whole extent.
struct PianoRoll {
    Mat data;                 // 128 rows unless cropped
    int ticks_per_beat = 12;  // resolution of the column axis
    int time_step_ticks = 1;  // original ticks per column
    int origin_tick = 0;      // original-tick offset of column 0
};

// A maximal horizontal run of positive cells on one pitch row.
struct Run {
    int row = 0;
    int col = 0;
    int len = 0;
    float mean_intensity = 0.0f;
};

// Splits quantized events into consecutive batch windows and paints rolls.
// Notes crossing a batch boundary are split at it; channel 9 (percussion)
// is dropped; same-pitch overlap within a channel truncates the earlier
// note, across channels cells take the max intensity.
// Returns an empty list for an empty event list.
std::vector<PianoRoll> build_rolls(const std::vector<NoteEvent>& events,
                                   int source_tpb, const BatchSpec& spec,
                                   int pitch_rows = 128);

// All maximal positive runs of a matrix, row-major order.
std::vector<Run> find_runs(const Mat& m);

// Runs restricted to a window: clipped at the window edges.
std::vector<Run> find_runs_in_window(const Mat& m, int r0, int c0,
                                     int height, int width);

std::string roll_to_json(const PianoRoll& roll);
PianoRoll roll_from_json(const std::string& text);

} // namespace motif

#endif
