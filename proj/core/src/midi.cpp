#include "motifcode/midi.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "motifcode/error.hpp"

namespace motif {

namespace {

// Cursor over the SMF byte stream; every read checks bounds and reports
// the offending offset.
class ByteReader {
public:
    ByteReader(std::span<const uint8_t> bytes, size_t pos) : b_(bytes), pos_(pos) {}

    size_t pos() const { return pos_; }
    bool at_end(size_t limit) const { return pos_ >= limit; }

    uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    uint8_t peek() const {
        if (pos_ >= b_.size()) fail("unexpected end of file");
        return b_[pos_];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = (uint16_t(b_[pos_]) << 8) | b_[pos_ + 1];
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = (uint32_t(b_[pos_]) << 24) | (uint32_t(b_[pos_ + 1]) << 16) |
                     (uint32_t(b_[pos_ + 2]) << 8) | b_[pos_ + 3];
        pos_ += 4;
        return v;
    }
    // MIDI variable-length quantity, at most 4 bytes.
    uint32_t vlq() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            uint8_t byte = u8();
            v = (v << 7) | (byte & 0x7F);
            if (!(byte & 0x80)) return v;
        }
        fail("variable-length quantity longer than 4 bytes");
        return 0;
    }
    void skip(size_t n) {
        need(n);
        pos_ += n;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("midi parse error at byte " + std::to_string(pos_) + ": " + msg);
    }

private:
    void need(size_t n) const {
        if (pos_ + n > b_.size()) fail("unexpected end of file");
    }
    std::span<const uint8_t> b_;
    size_t pos_;
};

struct OpenNote {
    int onset;
    int velocity;
};

void close_note(std::vector<NoteEvent>& out, int pitch, int channel,
                const OpenNote& open, int off_tick) {
    int duration = off_tick - open.onset;
    if (duration < 1) duration = 1;
    out.push_back(NoteEvent{pitch, open.onset, duration, open.velocity, channel});
}

void parse_track(ByteReader& r, size_t track_end, MidiData& data) {
    // key: channel * 128 + pitch
    std::map<int, OpenNote> open;
    int tick = 0;
    uint8_t running_status = 0;

    while (r.pos() < track_end) {
        tick += static_cast<int>(r.vlq());
        uint8_t status = r.peek();
        if (status & 0x80) {
            status = r.u8();
        } else if (running_status != 0) {
            status = running_status;
        } else {
            r.fail("data byte without running status");
        }

        if (status == 0xFF) {  // meta
            uint8_t type = r.u8();
            uint32_t len = r.vlq();
            r.skip(len);
            if (type == 0x2F) break;  // end of track
            continue;
        }
        if (status == 0xF0 || status == 0xF7) {  // sysex
            uint32_t len = r.vlq();
            r.skip(len);
            running_status = 0;
            continue;
        }
        if (status >= 0xF0) r.fail("unsupported system message");

        running_status = status;
        int kind = status >> 4;
        int channel = status & 0x0F;

        switch (kind) {
        case 0x8: {  // note off
            int pitch = r.u8() & 0x7F;
            r.u8();  // release velocity
            auto it = open.find(channel * 128 + pitch);
            if (it != open.end()) {
                close_note(data.events, pitch, channel, it->second, tick);
                open.erase(it);
            }
            break;
        }
        case 0x9: {  // note on (velocity 0 == off)
            int pitch = r.u8() & 0x7F;
            int velocity = r.u8() & 0x7F;
            int key = channel * 128 + pitch;
            if (velocity == 0) {
                auto it = open.find(key);
                if (it != open.end()) {
                    close_note(data.events, pitch, channel, it->second, tick);
                    open.erase(it);
                }
            } else {
                auto it = open.find(key);
                if (it != open.end()) {
                    // restruck pitch: close the earlier note here
                    close_note(data.events, pitch, channel, it->second, tick);
                }
                open[key] = OpenNote{tick, velocity};
            }
            break;
        }
        case 0xA:
        case 0xB:
        case 0xE:
            r.skip(2);
            break;
        case 0xC:
        case 0xD:
            r.skip(1);
            break;
        default:
            r.fail("unknown event status");
        }
    }

    for (auto& [key, note] : open) {
        int pitch = key % 128;
        int channel = key / 128;
        close_note(data.events, pitch, channel, note, tick);
        data.warnings.push_back("dangling note-on pitch " + std::to_string(pitch) +
                                " channel " + std::to_string(channel) +
                                " closed at track end");
    }
}

} // namespace

MidiData parse_midi(std::span<const uint8_t> bytes) {
    ByteReader r(bytes, 0);

    if (r.u32() != 0x4D546864) r.fail("missing MThd chunk");
    uint32_t header_len = r.u32();
    if (header_len < 6) r.fail("MThd shorter than 6 bytes");
    uint16_t format = r.u16();
    uint16_t ntrks = r.u16();
    uint16_t division = r.u16();
    r.skip(header_len - 6);

    if (format > 1) r.fail("unsupported SMF format " + std::to_string(format));
    if (division & 0x8000) r.fail("SMPTE time division not supported");
    if (division == 0) r.fail("zero ticks per beat");

    MidiData data;
    data.ticks_per_beat = division;

    for (int t = 0; t < ntrks; ++t) {
        if (r.u32() != 0x4D54726B) r.fail("missing MTrk chunk");
        uint32_t len = r.u32();
        size_t track_end = r.pos() + len;
        if (track_end > bytes.size()) r.fail("track length past end of file");
        parse_track(r, track_end, data);
        // tolerate a parser stopping early on end-of-track
        ByteReader skip_to(bytes, track_end);
        r = skip_to;
    }

    std::stable_sort(data.events.begin(), data.events.end(),
                     [](const NoteEvent& a, const NoteEvent& b) {
                         if (a.onset != b.onset) return a.onset < b.onset;
                         if (a.pitch != b.pitch) return a.pitch < b.pitch;
                         return a.channel < b.channel;
                     });
    return data;
}

std::vector<NoteEvent> quantize(const std::vector<NoteEvent>& events,
                                int source_tpb, const BatchSpec& spec) {
    if (source_tpb < spec.target_ticks_per_beat) {
        throw InputError("source resolution " + std::to_string(source_tpb) +
                         " below target " + std::to_string(spec.target_ticks_per_beat));
    }
    double ratio = double(spec.target_ticks_per_beat) / double(source_tpb);
    std::vector<NoteEvent> out;
    out.reserve(events.size());
    for (const NoteEvent& e : events) {
        NoteEvent q = e;
        q.onset = static_cast<int>(std::lround(e.onset * ratio));
        q.duration = std::max(1, static_cast<int>(std::lround(e.duration * ratio)));
        out.push_back(q);
    }
    return out;
}

} // namespace motif
