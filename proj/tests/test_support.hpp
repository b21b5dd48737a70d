#ifndef MOTIFCODE_TEST_SUPPORT_HPP
#define MOTIFCODE_TEST_SUPPORT_HPP

// Shared fixtures: a minimal SMF writer for round-trip tests and synthetic
// planted-template corpora used across encoder/learner/acceptance suites.

#include <cstdint>
#include <vector>

#include "motifcode/dictionary.hpp"
#include "motifcode/eval.hpp"
#include "motifcode/lexicon.hpp"
#include "motifcode/midi.hpp"
#include "motifcode/rng.hpp"
#include "motifcode/roll.hpp"

namespace testutil {

// ---------------- SMF writer ----------------

inline void push_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back((v >> 24) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back(v & 0xFF);
}

inline void push_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back((v >> 8) & 0xFF);
    out.push_back(v & 0xFF);
}

inline void push_vlq(std::vector<uint8_t>& out, uint32_t v) {
    uint8_t bytes[4];
    int n = 0;
    do {
        bytes[n++] = v & 0x7F;
        v >>= 7;
    } while (v > 0);
    for (int i = n - 1; i > 0; --i) out.push_back(bytes[i] | 0x80);
    out.push_back(bytes[0]);
}

// One track per call site; events are (tick, status, data1, data2).
struct RawEvent {
    int tick;
    uint8_t status;
    uint8_t data1;
    uint8_t data2;
};

inline std::vector<uint8_t> smf_track(std::vector<RawEvent> events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.tick < b.tick; });
    std::vector<uint8_t> body;
    int last = 0;
    for (const RawEvent& e : events) {
        push_vlq(body, e.tick - last);
        last = e.tick;
        body.push_back(e.status);
        body.push_back(e.data1);
        if ((e.status & 0xF0) != 0xC0 && (e.status & 0xF0) != 0xD0)
            body.push_back(e.data2);
    }
    push_vlq(body, 0);
    body.push_back(0xFF);
    body.push_back(0x2F);
    body.push_back(0x00);

    std::vector<uint8_t> out;
    push_u32(out, 0x4D54726B);
    push_u32(out, static_cast<uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

inline std::vector<uint8_t> smf_file(const std::vector<std::vector<RawEvent>>& tracks,
                                     int ticks_per_beat) {
    std::vector<uint8_t> out;
    push_u32(out, 0x4D546864);
    push_u32(out, 6);
    push_u16(out, tracks.size() > 1 ? 1 : 0);
    push_u16(out, static_cast<uint16_t>(tracks.size()));
    push_u16(out, static_cast<uint16_t>(ticks_per_beat));
    for (const auto& track : tracks) {
        std::vector<uint8_t> t = smf_track(track);
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

// Convenience: one track from NoteEvents.
inline std::vector<uint8_t> smf_from_notes(const std::vector<motif::NoteEvent>& notes,
                                           int ticks_per_beat) {
    std::vector<RawEvent> events;
    for (const motif::NoteEvent& n : notes) {
        events.push_back(RawEvent{n.onset, uint8_t(0x90 | n.channel), uint8_t(n.pitch),
                                  uint8_t(n.velocity)});
        events.push_back(RawEvent{n.onset + n.duration, uint8_t(0x80 | n.channel),
                                  uint8_t(n.pitch), 0});
    }
    return smf_file({events}, ticks_per_beat);
}

// ---------------- direct roll builders ----------------

inline motif::PianoRoll make_roll(int rows, int cols) {
    motif::PianoRoll roll;
    roll.data = motif::Mat(rows, cols);
    roll.ticks_per_beat = 12;
    roll.time_step_ticks = 1;
    roll.origin_tick = 0;
    return roll;
}

inline void add_note(motif::PianoRoll& roll, int pitch, int onset, int duration,
                     float intensity = 1.0f) {
    for (int c = onset; c < onset + duration && c < roll.data.cols(); ++c)
        roll.data.at(pitch, c) = intensity;
}

// ---------------- planted corpora ----------------

struct PlantOptions {
    int n_templates = 3;
    int instances_each = 10;
    int n_batches = 3;
    int rows = 128;
    int cols = 256;
    int min_bases = 3;
    int max_bases = 6;
    int min_duration = 2;
    int max_duration = 4;
    bool allow_flip = true;  // F in {0, 1}
    double noise_fraction = 0.0;  // spurious single notes per true note
};

struct PlantedCorpus {
    std::vector<motif::Template> templates;
    std::vector<motif::PianoRoll> rolls;
    std::vector<motif::Annotation> annotations;  // one per batch
    std::vector<std::pair<int, int>> noise_cells;  // (batch, linear cell)
    int true_note_count = 0;
};

inline motif::Template random_template(motif::Rng& rng, int id,
                                       const PlantOptions& opt) {
    motif::Template tpl;
    tpl.id = id;
    int n = motif::uniform_int(rng, opt.min_bases, opt.max_bases);
    for (int attempts = 0; static_cast<int>(tpl.bases.size()) < n && attempts < 200;
         ++attempts) {
        motif::Basis b;
        b.x = motif::uniform_int(rng, 0, 15);
        b.p = motif::uniform_int(rng, 0, 9);
        b.d = motif::uniform_int(rng, opt.min_duration, opt.max_duration);
        b.weight = 1.0;
        bool clash = false;
        for (const motif::Basis& other : tpl.bases)
            if (other.p == b.p && b.x < other.x + other.d + 1 &&
                other.x < b.x + b.d + 1)
                clash = true;  // keep runs separated so notes stay distinct
        if (!clash) tpl.bases.push_back(b);
    }
    motif::tighten(tpl);
    return tpl;
}

inline PlantedCorpus plant_corpus(motif::Rng& rng, const PlantOptions& opt) {
    PlantedCorpus corpus;
    for (int t = 0; t < opt.n_templates; ++t)
        corpus.templates.push_back(random_template(rng, t, opt));
    for (int b = 0; b < opt.n_batches; ++b) {
        corpus.rolls.push_back(make_roll(opt.rows, opt.cols));
        corpus.annotations.push_back(motif::Annotation{b, {}});
    }

    // occupancy with a 1-cell margin so instances never touch
    std::vector<motif::Mat> occupied;
    for (int b = 0; b < opt.n_batches; ++b)
        occupied.emplace_back(opt.rows, opt.cols);

    int instance_id = 0;
    for (int t = 0; t < opt.n_templates; ++t) {
        for (int k = 0; k < opt.instances_each; ++k) {
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 500) break;
                int b = motif::uniform_int(rng, 0, opt.n_batches - 1);
                motif::TransformParams tf;
                tf.t = t;
                tf.F = (opt.allow_flip && motif::uniform_int(rng, 0, 1) == 1)
                           ? motif::Flip::Horizontal
                           : motif::Flip::None;
                motif::Template placed =
                    motif::apply_transform(corpus.templates[t], tf);
                if (placed.height >= opt.rows || placed.width >= opt.cols) continue;
                int row = motif::uniform_int(rng, 0, opt.rows - placed.height);
                int col = motif::uniform_int(rng, 0, opt.cols - placed.width);
                bool clash = false;
                for (int r = std::max(0, row - 1);
                     r < std::min(opt.rows, row + placed.height + 1) && !clash; ++r)
                    for (int c = std::max(0, col - 1);
                         c < std::min(opt.cols, col + placed.width + 1); ++c)
                        if (occupied[b].at(r, c) > 0.0f) {
                            clash = true;
                            break;
                        }
                if (clash) continue;
                for (int r = row; r < row + placed.height; ++r)
                    for (int c = col; c < col + placed.width; ++c)
                        occupied[b].at(r, c) = 1.0f;
                motif::paint_max(placed, corpus.rolls[b].data, row, col);
                motif::RenderResult rr =
                    motif::render(placed, placed.height, placed.width, 0, 0);
                for (const motif::Run& run : motif::find_runs(rr.image)) {
                    corpus.annotations[b].notes.push_back(motif::AnnotatedNote{
                        row + run.row, col + run.col, run.len, instance_id, t});
                    ++corpus.true_note_count;
                }
                ++instance_id;
                break;
            }
        }
    }

    if (opt.noise_fraction > 0.0) {
        int n_noise = static_cast<int>(corpus.true_note_count * opt.noise_fraction + 0.5);
        for (int i = 0; i < n_noise; ++i) {
            for (int attempt = 0; attempt < 500; ++attempt) {
                int b = motif::uniform_int(rng, 0, opt.n_batches - 1);
                int r = motif::uniform_int(rng, 0, opt.rows - 1);
                int c = motif::uniform_int(rng, 0, opt.cols - 1);
                bool clash = false;
                for (int rr = std::max(0, r - 1);
                     rr < std::min(opt.rows, r + 2) && !clash; ++rr)
                    for (int cc = std::max(0, c - 1); cc < std::min(opt.cols, c + 2);
                         ++cc)
                        if (occupied[b].at(rr, cc) > 0.0f) {
                            clash = true;
                            break;
                        }
                if (clash) continue;
                occupied[b].at(r, c) = 1.0f;
                corpus.rolls[b].data.at(r, c) = 1.0f;
                corpus.noise_cells.push_back({b, r * opt.cols + c});
                break;
            }
        }
    }
    return corpus;
}

// Two bases of duration 2: a perfect BACC match scores exactly 1.0.
inline motif::Template unit_template(int id = 0) {
    motif::Template tpl;
    tpl.id = id;
    tpl.bases = {motif::Basis{0, 0, 2, 1.0}, motif::Basis{3, 2, 2, 1.0}};
    motif::tighten(tpl);
    return tpl;
}

// Dictionary wrapper around explicit templates.
inline motif::Dictionary as_dictionary(std::vector<motif::Template> templates) {
    motif::Dictionary dict;
    for (size_t i = 0; i < templates.size(); ++i) {
        templates[i].id = static_cast<int>(i);
        dict.templates.push_back(std::move(templates[i]));
        dict.usage.push_back(0);
        dict.info.push_back(motif::TemplateInfo{});
    }
    return dict;
}

} // namespace testutil

#endif
