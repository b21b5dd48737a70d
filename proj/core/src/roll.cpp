#include "motifcode/roll.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "motifcode/error.hpp"

namespace motif {

namespace {

// Later onset truncates the earlier note on the same channel+pitch.
// Equal onsets keep the last event only.
std::vector<NoteEvent> resolve_overlaps(std::vector<NoteEvent> events) {
    std::map<int, std::vector<size_t>> by_key;
    for (size_t i = 0; i < events.size(); ++i) {
        const NoteEvent& e = events[i];
        by_key[e.channel * 128 + e.pitch].push_back(i);
    }
    std::vector<bool> dropped(events.size(), false);
    for (auto& [key, idx] : by_key) {
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return events[a].onset < events[b].onset;
        });
        for (size_t j = 0; j + 1 < idx.size(); ++j) {
            NoteEvent& cur = events[idx[j]];
            const NoteEvent& next = events[idx[j + 1]];
            if (cur.onset + cur.duration > next.onset) {
                cur.duration = next.onset - cur.onset;
                if (cur.duration < 1) dropped[idx[j]] = true;
            }
        }
    }
    std::vector<NoteEvent> out;
    out.reserve(events.size());
    for (size_t i = 0; i < events.size(); ++i)
        if (!dropped[i]) out.push_back(events[i]);
    return out;
}

} // namespace

std::vector<PianoRoll> build_rolls(const std::vector<NoteEvent>& events,
                                   int source_tpb, const BatchSpec& spec,
                                   int pitch_rows) {
    if (events.empty()) return {};
    if (source_tpb <= 0 || spec.target_ticks_per_beat <= 0)
        throw InputError("non-positive ticks per beat");
    long long cols_ll = static_cast<long long>(spec.batch_length_ticks) *
                        spec.target_ticks_per_beat;
    if (cols_ll % source_tpb != 0)
        throw InputError("batch length " + std::to_string(spec.batch_length_ticks) +
                         " not divisible by source resolution after resampling");
    int batch_cols = static_cast<int>(cols_ll / source_tpb);
    if (batch_cols <= 0) throw InputError("batch narrower than one column");
    int time_step = static_cast<int>(
        std::lround(double(source_tpb) / spec.target_ticks_per_beat));

    std::vector<NoteEvent> kept;
    kept.reserve(events.size());
    for (const NoteEvent& e : events) {
        if (e.channel == 9) continue;  // percussion
        if (e.pitch < 0 || e.pitch >= pitch_rows) continue;
        kept.push_back(e);
    }
    kept = resolve_overlaps(std::move(kept));
    if (kept.empty()) return {};

    // split notes at batch boundaries
    std::vector<NoteEvent> split;
    int max_col = 0;
    for (const NoteEvent& e : kept) {
        int start = e.onset;
        int remaining = e.duration;
        while (remaining > 0) {
            int batch = start / batch_cols;
            int batch_end = (batch + 1) * batch_cols;
            int len = std::min(remaining, batch_end - start);
            split.push_back(NoteEvent{e.pitch, start, len, e.velocity, e.channel});
            start += len;
            remaining -= len;
        }
        max_col = std::max(max_col, e.onset + e.duration);
    }

    int n_batches = (max_col + batch_cols - 1) / batch_cols;
    std::vector<PianoRoll> rolls(n_batches);
    for (int b = 0; b < n_batches; ++b) {
        rolls[b].data = Mat(pitch_rows, batch_cols);
        rolls[b].ticks_per_beat = spec.target_ticks_per_beat;
        rolls[b].time_step_ticks = time_step;
        rolls[b].origin_tick = b * spec.batch_length_ticks;
    }
    for (const NoteEvent& e : split) {
        int b = e.onset / batch_cols;
        int c0 = e.onset - b * batch_cols;
        float intensity = float(e.velocity) / 127.0f;
        Mat& m = rolls[b].data;
        for (int c = c0; c < c0 + e.duration; ++c)
            m.at(e.pitch, c) = std::max(m.at(e.pitch, c), intensity);
    }
    return rolls;
}

std::vector<Run> find_runs(const Mat& m) {
    return find_runs_in_window(m, 0, 0, m.rows(), m.cols());
}

std::vector<Run> find_runs_in_window(const Mat& m, int r0, int c0,
                                     int height, int width) {
    std::vector<Run> runs;
    int r1 = std::min(m.rows(), r0 + height);
    int c1 = std::min(m.cols(), c0 + width);
    r0 = std::max(0, r0);
    c0 = std::max(0, c0);
    for (int r = r0; r < r1; ++r) {
        const float* row = m.row(r);
        int c = c0;
        while (c < c1) {
            if (row[c] > 0.0f) {
                int start = c;
                double mass = 0.0;
                while (c < c1 && row[c] > 0.0f) {
                    mass += row[c];
                    ++c;
                }
                runs.push_back(Run{r, start, c - start,
                                   static_cast<float>(mass / (c - start))});
            } else {
                ++c;
            }
        }
    }
    return runs;
}

std::string roll_to_json(const PianoRoll& roll) {
    nlohmann::json j;
    j["schema"] = "mw/1";
    j["ticks_per_beat"] = roll.ticks_per_beat;
    j["time_step_ticks"] = roll.time_step_ticks;
    j["origin_tick"] = roll.origin_tick;
    j["shape"] = {roll.data.rows(), roll.data.cols()};
    nlohmann::json cells = nlohmann::json::array();
    for (int r = 0; r < roll.data.rows(); ++r)
        for (int c = 0; c < roll.data.cols(); ++c)
            if (roll.data.at(r, c) > 0.0f)
                cells.push_back({r, c, roll.data.at(r, c)});
    j["cells"] = std::move(cells);
    return j.dump();
}

PianoRoll roll_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PianoRoll roll;
    roll.ticks_per_beat = j.at("ticks_per_beat").get<int>();
    roll.time_step_ticks = j.value("time_step_ticks", 1);
    roll.origin_tick = j.at("origin_tick").get<int>();
    auto shape = j.at("shape");
    roll.data = Mat(shape.at(0).get<int>(), shape.at(1).get<int>());
    for (const auto& cell : j.at("cells"))
        roll.data.at(cell.at(0).get<int>(), cell.at(1).get<int>()) =
            cell.at(2).get<float>();
    return roll;
}

} // namespace motif
