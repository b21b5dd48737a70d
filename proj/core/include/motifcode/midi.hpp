#ifndef MOTIFCODE_MIDI_HPP
#define MOTIFCODE_MIDI_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace motif {

struct NoteEvent {
    int pitch = 0;     // MIDI pitch 0-127
    int onset = 0;     // ticks
    int duration = 0;  // ticks, >= 1
    int velocity = 0;  // 0-127
    int channel = 0;   // 0-15

    bool operator==(const NoteEvent&) const = default;
};

struct BatchSpec {
    int batch_length_ticks = 46080;  // in source-resolution ticks
    int target_ticks_per_beat = 12;
};

struct MidiData {
    std::vector<NoteEvent> events;  // sorted by (onset, pitch, channel)
    int ticks_per_beat = 480;       // from the MThd division field
    std::vector<std::string> warnings;
};

// Parses an SMF format-0/1 byte stream. Note-on/note-off pairs are matched
// per channel+pitch (note-on with velocity 0 counts as off), running status
// is honoured, meta and sysex events are skipped. A note-on left hanging at
// end of track is closed there and reported as a warning.
// Throws InputError naming the byte offset on malformed input.
MidiData parse_midi(std::span<const uint8_t> bytes);

// Rescales onsets/durations from source_tpb to spec.target_ticks_per_beat.
// Nearest-integer rounding; durations clamped to >= 1.
std::vector<NoteEvent> quantize(const std::vector<NoteEvent>& events,
                                int source_tpb, const BatchSpec& spec);

} // namespace motif

#endif
