#include "motifcode/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <json.hpp>

#include "motifcode/error.hpp"
#include "motifcode/parallel.hpp"

namespace motif {

namespace {

// One (template, transform) pair of the search grid, with the transformed
// template precomputed. Pairs whose transformed shape duplicates an earlier
// pair of the same template are skipped; the earlier transform is canonical.
struct GridEntry {
    size_t tpl_index;
    TransformParams transform;
    Template transformed;
};

std::vector<GridEntry> build_grid(const Dictionary& dict, const EncoderConfig& cfg,
                                  int roll_rows, int roll_cols) {
    std::vector<GridEntry> grid;
    for (size_t ti = 0; ti < dict.templates.size(); ++ti) {
        const Template& tpl = dict.templates[ti];
        std::vector<Template> seen;
        for (Flip f : cfg.flips) {
            for (double d : cfg.duration_scales) {
                for (double a : cfg.spacing_scales) {
                    TransformParams tf;
                    tf.t = tpl.id;
                    tf.F = f;
                    tf.D = d;
                    tf.A = a;
                    Template transformed = apply_transform(tpl, tf);
                    if (transformed.height > roll_rows || transformed.width > roll_cols)
                        continue;
                    bool dup = false;
                    for (const Template& s : seen)
                        if (s.bases == transformed.bases) {
                            dup = true;
                            break;
                        }
                    if (dup) continue;
                    seen.push_back(transformed);
                    grid.push_back(GridEntry{ti, tf, std::move(transformed)});
                }
            }
        }
    }
    return grid;
}

struct Candidate {
    double score;
    int row, col;
    size_t grid_index;
    int template_id;
};

bool candidate_order(const Candidate& a, const Candidate& b, Measure m) {
    if (a.score != b.score) return better(m, a.score, b.score);
    if (a.col != b.col) return a.col < b.col;
    if (a.row != b.row) return a.row < b.row;
    if (a.template_id != b.template_id) return a.template_id < b.template_id;
    return a.grid_index < b.grid_index;
}

// Local maxima of a response map under the measure's polarity. Plateaus
// yield only their first cell in raster order.
void collect_local_maxima(const ResponseMap& map, size_t grid_index,
                          std::vector<Candidate>& out,
                          double threshold, bool use_threshold) {
    const Mat& v = map.values;
    double sign = higher_is_better(map.measure) ? 1.0 : -1.0;
    for (int r = 0; r < v.rows(); ++r) {
        for (int c = 0; c < v.cols(); ++c) {
            double g = sign * v.at(r, c);
            if (use_threshold && !passes_threshold(map.measure, v.at(r, c), threshold))
                continue;
            bool is_max = true;
            for (int dr = -1; dr <= 1 && is_max; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    int nr = r + dr, nc = c + dc;
                    if (!v.inside(nr, nc)) continue;
                    double ng = sign * v.at(nr, nc);
                    bool before = (dr < 0) || (dr == 0 && dc < 0);
                    if (before ? ng >= g : ng > g) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max)
                out.push_back(Candidate{v.at(r, c), r, c, grid_index, map.template_id});
        }
    }
}

// Direct evaluation of one placement (with deltas) against `surface`.
// Returns the worst score when the delta-adjusted window leaves the roll.
double evaluate_placement(const Mat& surface, const Template& transformed,
                          const BasisDeltas& deltas, int row, int col,
                          Measure measure, const DeltaBounds& bounds) {
    Template adjusted = transformed;
    int r0 = row, c0 = col;
    if (!all_zero(deltas)) {
        auto [sx, sp] = delta_origin_shift(transformed, deltas);
        adjusted = apply_deltas(transformed, deltas, bounds);
        r0 = row + sp;
        c0 = col + sx;
    }
    if (r0 < 0 || c0 < 0 || r0 + adjusted.height > surface.rows() ||
        c0 + adjusted.width > surface.cols())
        return worst_score(measure);
    RenderResult rr = render(adjusted, adjusted.height, adjusted.width, 0, 0);
    switch (measure) {
    case Measure::BACC:
        return bacc(surface, rr.image, static_cast<int>(adjusted.bases.size()), r0, c0);
    case Measure::ZNCC:
        return zncc(surface, rr.image, r0, c0);
    case Measure::RMSE:
        return rmse(surface, rr.image, r0, c0);
    }
    return worst_score(measure);
}

// Single-pass coordinate ascent: for each basis in order, sweep dx, then
// dp, then dd, keeping each change only when the score improves.
std::pair<BasisDeltas, double> refine_deltas(const Mat& surface,
                                             const Template& transformed,
                                             int row, int col, Measure measure,
                                             const EncoderConfig& cfg) {
    BasisDeltas deltas(transformed.bases.size());
    double best = evaluate_placement(surface, transformed, deltas, row, col,
                                     measure, cfg.delta_bounds);
    if (!cfg.refine_deltas) return {deltas, best};
    const DeltaBounds& b = cfg.delta_bounds;
    for (size_t i = 0; i < deltas.size(); ++i) {
        struct Coord {
            int Delta::*member;
            int bound;
        };
        const Coord coords[3] = {{&Delta::dx, b.max_dx},
                                 {&Delta::dp, b.max_dp},
                                 {&Delta::dd, b.max_dd}};
        for (const Coord& coord : coords) {
            int best_v = deltas[i].*(coord.member);
            for (int v = -coord.bound; v <= coord.bound; ++v) {
                if (v == best_v) continue;
                BasisDeltas trial = deltas;
                trial[i].*(coord.member) = v;
                double score = evaluate_placement(surface, transformed, trial, row,
                                                  col, measure, cfg.delta_bounds);
                if (better(measure, score, best)) {
                    best = score;
                    best_v = v;
                }
            }
            deltas[i].*(coord.member) = best_v;
        }
    }
    return {deltas, best};
}

// Encoding state shared by both strategies.
struct EncodeState {
    const Mat* original;
    Mat residual;
    Mat composite;
    std::vector<uint8_t> claimed_mask;
    std::vector<Placement> placements;

    explicit EncodeState(const Mat& roll)
        : original(&roll), residual(roll), composite(roll.rows(), roll.cols()),
          claimed_mask(roll.size(), 0) {}
};

std::vector<int> claimed_cells_of(const Mat& original, const Template& adjusted,
                                  int row, int col) {
    std::vector<int> cells =
        placed_cells(adjusted, original.rows(), original.cols(), row, col);
    std::vector<int> claimed;
    claimed.reserve(cells.size());
    for (int cell : cells) {
        if (original.data()[cell] > 0.0f) claimed.push_back(cell);
    }
    return claimed;
}

// Tries to turn a candidate into an accepted placement. Returns false when
// a gate rejects it. `gate_before_refine` selects the efficient strategy's
// order (uniqueness on the unrefined support, deltas only after acceptance).
bool try_accept(EncodeState& st, const GridEntry& entry, const Candidate& cand,
                const EncoderConfig& cfg, bool gate_before_refine) {
    const Mat& original = *st.original;
    BasisDeltas deltas(entry.transformed.bases.size());
    double score = cand.score;

    auto uniqueness_ok = [&](const std::vector<int>& claimed) {
        if (claimed.empty()) return false;
        size_t fresh = 0;
        for (int cell : claimed) fresh += st.claimed_mask[cell] ? 0 : 1;
        return double(fresh) / double(claimed.size()) >= cfg.uniqueness_u;
    };

    if (gate_before_refine) {
        std::vector<int> pre_claimed =
            claimed_cells_of(original, entry.transformed, cand.row, cand.col);
        if (!uniqueness_ok(pre_claimed)) return false;
        auto [d, s] = refine_deltas(st.residual, entry.transformed, cand.row,
                                    cand.col, cfg.measure, cfg);
        deltas = std::move(d);
        (void)s;  // selection score is the gate value in this strategy
    } else {
        auto [d, s] = refine_deltas(st.residual, entry.transformed, cand.row,
                                    cand.col, cfg.measure, cfg);
        deltas = std::move(d);
        score = s;
        if (!passes_threshold(cfg.measure, score, cfg.significance_s)) return false;
    }

    Template adjusted = entry.transformed;
    int row = cand.row, col = cand.col;
    if (!all_zero(deltas)) {
        auto [sx, sp] = delta_origin_shift(entry.transformed, deltas);
        adjusted = apply_deltas(entry.transformed, deltas, cfg.delta_bounds);
        row += sp;
        col += sx;
    }
    std::vector<int> claimed = claimed_cells_of(original, adjusted, row, col);
    if (!gate_before_refine && !uniqueness_ok(claimed)) return false;
    if (claimed.empty()) return false;

    // least-squares intensity scale against the claimed cells
    RenderResult rr = render(adjusted, original.rows(), original.cols(), row, col);
    double num = 0.0, den = 0.0;
    for (int cell : claimed) {
        double rv = rr.image.data()[cell];
        num += double(original.data()[cell]) * rv;
        den += rv * rv;
    }
    double coef = den > 0.0 ? num / den : 1.0;

    paint_max(adjusted, st.composite, row, col, coef);
    int r0 = std::max(0, row), r1 = std::min(original.rows(), row + adjusted.height);
    int c0 = std::max(0, col), c1 = std::min(original.cols(), col + adjusted.width);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c)
            st.residual.at(r, c) =
                std::max(0.0f, original.at(r, c) - st.composite.at(r, c));
    for (int cell : claimed) st.claimed_mask[cell] = 1;

    Placement pl;
    pl.transform = entry.transform;
    pl.transform.P = cand.row;
    pl.transform.X = cand.col;
    pl.deltas = std::move(deltas);
    pl.coefficient = coef;
    pl.score = score;
    pl.claimed_cells = std::move(claimed);
    st.placements.push_back(std::move(pl));
    return true;
}

std::vector<Candidate> harvest(const EncodeState& st,
                               const std::vector<GridEntry>& grid,
                               const EncoderConfig& cfg, bool diffused) {
    Mat blurred;
    std::unique_ptr<ResponseContext> surface_ctx;
    ResponseContext note_ctx(st.residual);
    if (diffused) {
        blurred = gaussian_blur(st.residual, cfg.diffuse);
        surface_ctx = std::make_unique<ResponseContext>(blurred);
    }
    const ResponseContext& surface = diffused ? *surface_ctx : note_ctx;

    std::vector<std::vector<Candidate>> slots(grid.size());
    parallel_for(grid.size(), cfg.threads, [&](size_t i) {
        const GridEntry& e = grid[i];
        if (e.transformed.height > st.residual.rows() ||
            e.transformed.width > st.residual.cols())
            return;
        ResponseMap map = response_map_ctx(surface, note_ctx, e.transformed,
                                           e.transform, cfg.measure);
        // On a diffused surface the threshold is applied to the sharp
        // re-scored value below, not to the attenuated blurred response.
        collect_local_maxima(map, i, slots[i], cfg.significance_s, !diffused);
    });

    std::vector<Candidate> all;
    for (size_t i = 0; i < slots.size(); ++i) {
        for (Candidate& cand : slots[i]) {
            if (diffused) {
                // A blurred peak can sit a cell or two off the sharp one
                // (the note-count denominator moves in integer steps), so
                // snap to the best sharp score within the kernel radius.
                const Template& transformed = grid[i].transformed;
                BasisDeltas zero(transformed.bases.size());
                int radius = cfg.diffuse.kernel_size / 2;
                double best = worst_score(cfg.measure);
                int best_r = cand.row, best_c = cand.col;
                for (int dr = -radius; dr <= radius; ++dr) {
                    for (int dc = -radius; dc <= radius; ++dc) {
                        int r = cand.row + dr, c = cand.col + dc;
                        if (r < 0 || c < 0 ||
                            r + transformed.height > st.residual.rows() ||
                            c + transformed.width > st.residual.cols())
                            continue;
                        double sharp = evaluate_placement(st.residual, transformed,
                                                          zero, r, c, cfg.measure,
                                                          cfg.delta_bounds);
                        if (better(cfg.measure, sharp, best) ||
                            (sharp == best && (c < best_c || (c == best_c && r < best_r)))) {
                            best = sharp;
                            best_r = r;
                            best_c = c;
                        }
                    }
                }
                if (!passes_threshold(cfg.measure, best, cfg.significance_s)) continue;
                cand.score = best;
                cand.row = best_r;
                cand.col = best_c;
            }
            all.push_back(cand);
        }
    }
    std::stable_sort(all.begin(), all.end(), [&](const Candidate& a, const Candidate& b) {
        return candidate_order(a, b, cfg.measure);
    });
    all.erase(std::unique(all.begin(), all.end(),
                          [](const Candidate& a, const Candidate& b) {
                              return a.grid_index == b.grid_index && a.row == b.row &&
                                     a.col == b.col;
                          }),
              all.end());
    return all;
}

CodeStats finalize_stats(const Mat& original, SparseCode& code,
                         const Dictionary& dict) {
    code.stats = compute_code_stats(original, code, dict);
    return code.stats;
}

} // namespace

SparseCode encode_greedy(const PianoRoll& roll, const Dictionary& dict,
                         const EncoderConfig& cfg) {
    if (dict.empty()) throw InputError("cannot encode with an empty dictionary");
    dict.check();
    std::vector<GridEntry> grid =
        build_grid(dict, cfg, roll.data.rows(), roll.data.cols());
    EncodeState st(roll.data);

    while (static_cast<int>(st.placements.size()) < cfg.max_placements) {
        std::vector<Candidate> candidates = harvest(st, grid, cfg, false);
        bool accepted = false;
        for (const Candidate& cand : candidates) {
            if (try_accept(st, grid[cand.grid_index], cand, cfg, false)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    SparseCode code;
    code.placements = std::move(st.placements);
    code.residual = std::move(st.residual);
    finalize_stats(roll.data, code, dict);
    return code;
}

SparseCode encode_efficient(const PianoRoll& roll, const Dictionary& dict,
                            const EncoderConfig& cfg) {
    if (dict.empty()) throw InputError("cannot encode with an empty dictionary");
    dict.check();
    std::vector<GridEntry> grid =
        build_grid(dict, cfg, roll.data.rows(), roll.data.cols());
    EncodeState st(roll.data);

    for (;;) {
        std::vector<Candidate> candidates = harvest(st, grid, cfg, true);
        int accepted = 0;
        for (const Candidate& cand : candidates) {
            if (static_cast<int>(st.placements.size()) >= cfg.max_placements) break;
            if (try_accept(st, grid[cand.grid_index], cand, cfg, true)) ++accepted;
        }
        if (accepted == 0 ||
            static_cast<int>(st.placements.size()) >= cfg.max_placements)
            break;
    }

    SparseCode code;
    code.placements = std::move(st.placements);
    code.residual = std::move(st.residual);
    finalize_stats(roll.data, code, dict);
    return code;
}

SparseCode encode(const PianoRoll& roll, const Dictionary& dict,
                  const EncoderConfig& cfg) {
    return cfg.strategy == Strategy::Greedy ? encode_greedy(roll, dict, cfg)
                                            : encode_efficient(roll, dict, cfg);
}

PlacedTemplate resolve_placement(const Dictionary& dict, const Placement& pl,
                                 const DeltaBounds& bounds) {
    const Template& base = dict.by_id(pl.transform.t);
    Template transformed = apply_transform(base, pl.transform);
    PlacedTemplate placed;
    if (all_zero(pl.deltas)) {
        placed.tpl = std::move(transformed);
        placed.row = pl.transform.P;
        placed.col = pl.transform.X;
    } else {
        auto [sx, sp] = delta_origin_shift(transformed, pl.deltas);
        placed.tpl = apply_deltas(transformed, pl.deltas, bounds);
        placed.row = pl.transform.P + sp;
        placed.col = pl.transform.X + sx;
    }
    return placed;
}

Mat reconstruct(const SparseCode& code, const Dictionary& dict, int rows, int cols) {
    Mat out(rows, cols);
    for (const Placement& pl : code.placements) {
        PlacedTemplate placed = resolve_placement(dict, pl);
        paint_max(placed.tpl, out, placed.row, placed.col, pl.coefficient);
    }
    return out;
}

double reconstruction_error(const Mat& original, const SparseCode& code,
                            const Dictionary& dict) {
    Mat recon = reconstruct(code, dict, original.rows(), original.cols());
    double acc = 0.0;
    for (size_t i = 0; i < original.size(); ++i) {
        double d = double(original.data()[i]) - recon.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc / double(original.size()));
}

CodeStats compute_code_stats(const Mat& original, const SparseCode& code,
                             const Dictionary& dict) {
    CodeStats stats;
    stats.rmse = reconstruction_error(original, code, dict);
    for (const Placement& pl : code.placements) {
        long n_t = static_cast<long>(pl.deltas.size());
        stats.code_params += 6 + 3 * n_t + 1;
        long nonzero = 0;
        for (const Delta& d : pl.deltas)
            if (d.dx != 0 || d.dp != 0 || d.dd != 0) ++nonzero;
        stats.code_params_sparse += 6 + 3 * nonzero + 1;
    }
    stats.note_params = 3L * static_cast<long>(find_runs(original).size());
    return stats;
}

void recompute_claims(SparseCode& code, const Dictionary& dict, const Mat& roll) {
    for (Placement& pl : code.placements) {
        PlacedTemplate placed = resolve_placement(dict, pl);
        pl.claimed_cells = claimed_cells_of(roll, placed.tpl, placed.row, placed.col);
    }
}

std::string code_to_json(const SparseCode& code) {
    nlohmann::json j;
    j["schema"] = "mw/1";
    j["batch"] = code.batch;
    nlohmann::json placements = nlohmann::json::array();
    for (const Placement& pl : code.placements) {
        nlohmann::json deltas = nlohmann::json::array();
        for (const Delta& d : pl.deltas) deltas.push_back({d.dx, d.dp, d.dd});
        placements.push_back({{"t", pl.transform.t},
                              {"X", pl.transform.X},
                              {"P", pl.transform.P},
                              {"F", static_cast<int>(pl.transform.F)},
                              {"D", pl.transform.D},
                              {"A", pl.transform.A},
                              {"deltas", std::move(deltas)},
                              {"coef", pl.coefficient},
                              {"score", pl.score}});
    }
    j["placements"] = std::move(placements);
    nlohmann::json residual = nlohmann::json::array();
    for (int r = 0; r < code.residual.rows(); ++r)
        for (int c = 0; c < code.residual.cols(); ++c)
            if (code.residual.at(r, c) > 0.0f)
                residual.push_back({r, c, code.residual.at(r, c)});
    j["residual_sparse"] = std::move(residual);
    j["stats"] = {{"rmse", code.stats.rmse},
                  {"code_params", code.stats.code_params},
                  {"code_params_sparse", code.stats.code_params_sparse},
                  {"note_params", code.stats.note_params}};
    return j.dump();
}

SparseCode code_from_json(const std::string& text, int rows, int cols) {
    nlohmann::json j = nlohmann::json::parse(text);
    SparseCode code;
    code.batch = j.at("batch").get<int>();
    for (const auto& jp : j.at("placements")) {
        Placement pl;
        pl.transform.t = jp.at("t").get<int>();
        pl.transform.X = jp.at("X").get<int>();
        pl.transform.P = jp.at("P").get<int>();
        pl.transform.F = static_cast<Flip>(jp.at("F").get<int>());
        pl.transform.D = jp.at("D").get<double>();
        pl.transform.A = jp.at("A").get<double>();
        for (const auto& jd : jp.at("deltas"))
            pl.deltas.push_back(Delta{jd.at(0).get<int>(), jd.at(1).get<int>(),
                                      jd.at(2).get<int>()});
        pl.coefficient = jp.at("coef").get<double>();
        pl.score = jp.at("score").get<double>();
        code.placements.push_back(std::move(pl));
    }
    code.residual = Mat(rows, cols);
    for (const auto& cell : j.at("residual_sparse"))
        code.residual.at(cell.at(0).get<int>(), cell.at(1).get<int>()) =
            cell.at(2).get<float>();
    if (j.contains("stats")) {
        code.stats.rmse = j["stats"].value("rmse", 0.0);
        code.stats.code_params = j["stats"].value("code_params", 0L);
        code.stats.code_params_sparse = j["stats"].value("code_params_sparse", 0L);
        code.stats.note_params = j["stats"].value("note_params", 0L);
    }
    return code;
}

} // namespace motif
