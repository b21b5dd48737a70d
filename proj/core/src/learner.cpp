#include "motifcode/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "motifcode/error.hpp"
#include "motifcode/parallel.hpp"

namespace motif {

// ---------------- Dictionary ----------------

const Template& Dictionary::by_id(int id) const {
    if (id < 0 || id >= static_cast<int>(templates.size()))
        throw InvariantError("unknown template id " + std::to_string(id));
    const Template& tpl = templates[id];
    if (tpl.id != id) throw InvariantError("dictionary ids not dense");
    return tpl;
}

void Dictionary::check() const {
    if (usage.size() != templates.size() || info.size() != templates.size())
        throw InvariantError("dictionary bookkeeping arrays out of sync");
    for (size_t i = 0; i < templates.size(); ++i)
        if (templates[i].id != static_cast<int>(i))
            throw InvariantError("dictionary ids not dense 0..N-1");
}

std::string dictionary_to_json(const Dictionary& dict) {
    nlohmann::json j;
    j["schema"] = "mw/1";
    nlohmann::json templates = nlohmann::json::array();
    for (size_t i = 0; i < dict.templates.size(); ++i) {
        nlohmann::json jt = nlohmann::json::parse(template_to_json(dict.templates[i]));
        jt["usage"] = dict.usage[i];
        jt["provenance"] = {{"created_epoch", dict.info[i].created_epoch},
                            {"unused_epochs", dict.info[i].unused_epochs},
                            {"stale", dict.info[i].stale},
                            {"lambda", dict.info[i].lambda},
                            {"log_likelihood", dict.info[i].log_likelihood}};
        templates.push_back(std::move(jt));
    }
    j["templates"] = std::move(templates);
    return j.dump();
}

Dictionary dictionary_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Dictionary dict;
    for (const auto& jt : j.at("templates")) {
        dict.templates.push_back(template_from_json(jt.dump()));
        dict.usage.push_back(jt.value("usage", 0));
        TemplateInfo info;
        if (jt.contains("provenance")) {
            const auto& p = jt["provenance"];
            info.created_epoch = p.value("created_epoch", 0);
            info.unused_epochs = p.value("unused_epochs", 0);
            info.stale = p.value("stale", false);
            info.lambda = p.value("lambda", std::vector<double>{});
            info.log_likelihood = p.value("log_likelihood", 0.0);
        }
        dict.info.push_back(std::move(info));
    }
    dict.check();
    return dict;
}

// ---------------- initialization ----------------

namespace {

// Turns the runs inside a window into a template; empty when fewer than
// two runs fall inside.
bool window_to_template(const Mat& m, int r0, int c0, int h, int w, int id,
                        Template& out) {
    std::vector<Run> runs = find_runs_in_window(m, r0, c0, h, w);
    if (runs.size() < 2) return false;
    out = Template{};
    out.id = id;
    for (const Run& run : runs)
        out.bases.push_back(
            Basis{run.col - c0, run.row - r0, run.len, run.mean_intensity});
    tighten(out);
    return true;
}

} // namespace

Dictionary init_random_crop(const std::vector<PianoRoll>& rolls,
                            const TrainConfig& cfg, Rng& rng) {
    if (rolls.empty()) throw InputError("empty corpus");
    Dictionary dict;
    int failures = 0;
    while (static_cast<int>(dict.templates.size()) < cfg.n_init) {
        if (failures >= 1000)
            throw InputError("corpus too sparse: no window with >= 2 notes in 1000 draws");
        const Mat& m = rolls[uniform_int(rng, 0, int(rolls.size()) - 1)].data;
        int h = std::min(cfg.init_height, m.rows());
        int w = std::min(cfg.init_width, m.cols());
        int r0 = uniform_int(rng, 0, m.rows() - h);
        int c0 = uniform_int(rng, 0, m.cols() - w);
        Template tpl;
        if (!window_to_template(m, r0, c0, h, w, int(dict.templates.size()), tpl)) {
            ++failures;
            continue;
        }
        failures = 0;
        dict.templates.push_back(std::move(tpl));
        dict.usage.push_back(0);
        dict.info.push_back(TemplateInfo{});
    }
    return dict;
}

// ---------------- patch extraction ----------------

std::vector<std::vector<Mat>> extract_patches(const std::vector<SparseCode>& codes,
                                              const std::vector<PianoRoll>& rolls,
                                              const Dictionary& dict) {
    dict.check();
    std::vector<std::vector<Mat>> groups(dict.size());
    for (const SparseCode& code : codes) {
        if (code.batch < 0 || code.batch >= static_cast<int>(rolls.size()))
            throw InvariantError("code references unknown batch");
        const Mat& roll = rolls[code.batch].data;
        for (const Placement& pl : code.placements) {
            const Template& base = dict.by_id(pl.transform.t);
            Template transformed = apply_transform(base, pl.transform);
            int H = transformed.height, W = transformed.width;
            int P = pl.transform.P, X = pl.transform.X;
            std::vector<Run> runs = find_runs_in_window(roll, P, X, H, W);

            Mat patch(base.height, base.width);
            for (const Run& run : runs) {
                int x = run.col - X;
                int p = run.row - P;
                int len = run.len;
                // invert the flip within the transformed box
                if (pl.transform.F == Flip::Horizontal ||
                    pl.transform.F == Flip::Diagonal)
                    x = W - (x + len);
                if (pl.transform.F == Flip::Vertical ||
                    pl.transform.F == Flip::Diagonal)
                    p = H - 1 - p;
                // invert duration and spacing scaling
                int d0 = std::max(1, int(std::lround(len / pl.transform.D)));
                int x0 = int(std::lround(x / pl.transform.A));
                if (p < 0 || p >= patch.rows()) continue;
                int c0 = std::max(0, x0);
                int c1 = std::min(patch.cols(), x0 + d0);
                for (int c = c0; c < c1; ++c)
                    patch.at(p, c) = std::max(patch.at(p, c), run.mean_intensity);
            }
            groups[pl.transform.t].push_back(std::move(patch));
        }
    }
    return groups;
}

// ---------------- template relearning ----------------

namespace {

// Per-row prefix sums of one patch for O(1) span means.
struct PatchSums {
    int rows, cols;
    std::vector<double> prefix;  // rows x (cols+1)

    explicit PatchSums(const Mat& m) : rows(m.rows()), cols(m.cols()) {
        prefix.assign(static_cast<size_t>(rows) * (cols + 1), 0.0);
        for (int r = 0; r < rows; ++r) {
            const float* row = m.row(r);
            double acc = 0.0;
            for (int c = 0; c < cols; ++c) {
                acc += row[c];
                prefix[static_cast<size_t>(r) * (cols + 1) + c + 1] = acc;
            }
        }
    }
    double span_mean(int r, int c, int d) const {
        if (r < 0 || r >= rows || c < 0 || c + d > cols || d < 1) return -1.0;
        double mass = prefix[static_cast<size_t>(r) * (cols + 1) + c + d] -
                      prefix[static_cast<size_t>(r) * (cols + 1) + c];
        return mass / d;
    }
};

struct BestResponse {
    double c = 0.0;
    int dx = 0, dp = 0, dd = 0;
};

// 0, +1, -1, +2, -2, ... so ties resolve to the least displacement.
std::vector<int> centered_offsets(int bound) {
    std::vector<int> out{0};
    for (int v = 1; v <= bound; ++v) {
        out.push_back(v);
        out.push_back(-v);
    }
    return out;
}

// Best span mean for basis (p, x, d) in one patch over the delta box.
BestResponse best_local_response(const PatchSums& sums, int p, int x, int d,
                                 const DeltaBounds& b) {
    BestResponse best;
    best.c = -1.0;
    for (int dp : centered_offsets(b.max_dp)) {
        for (int dx : centered_offsets(b.max_dx)) {
            for (int dd : centered_offsets(b.max_dd)) {
                if (d + dd < 1) continue;
                double c = sums.span_mean(p + dp, x + dx, d + dd);
                if (c > best.c) {
                    best = BestResponse{c, dx, dp, dd};
                }
            }
        }
    }
    if (best.c < 0.0) best = BestResponse{};
    return best;
}

} // namespace

Template relearn_template(const std::vector<Mat>& patches, const Template& old,
                          const ReferenceModel& ref, const TrainConfig& cfg,
                          TemplateInfo& info) {
    if (patches.empty()) {
        info.stale = true;
        return old;
    }
    info.stale = false;
    int h = old.height, w = old.width;
    const DeltaBounds& bounds = cfg.encoder.delta_bounds;

    std::vector<Mat> work = patches;  // masked as bases claim cells

    struct Selected {
        Basis basis;
        std::vector<double> responses;  // per patch, at selection time
    };
    std::vector<Selected> selected;

    while (static_cast<int>(selected.size()) < cfg.max_bases_per_template) {
        std::vector<PatchSums> sums;
        sums.reserve(work.size());
        for (const Mat& m : work) sums.emplace_back(m);

        // Ties on the deformable score are resolved by the rigid
        // (zero-delta) score, then by span length, so a basis lands where
        // the data actually is and covers whole notes.
        const double eps = 1e-9;
        double best_score = 0.0, best_zero = -1.0;
        int bp = -1, bx = -1, bd = -1;
        for (int p = 0; p < h; ++p) {
            for (int x = 0; x < w; ++x) {
                bool taken = false;
                for (const Selected& s : selected)
                    if (s.basis.p == p && s.basis.x == x) taken = true;
                if (taken) continue;
                for (int d = 1; d <= w - x; ++d) {
                    double score = 0.0, zero_score = 0.0;
                    for (const PatchSums& ps : sums) {
                        double c = best_local_response(ps, p, x, d, bounds).c;
                        score += activation(c * c, ref.xi());
                        double c0 = std::max(0.0, ps.span_mean(p, x, d));
                        zero_score += activation(c0 * c0, ref.xi());
                    }
                    bool take = false;
                    if (score > best_score + eps)
                        take = true;
                    else if (score > best_score - eps) {
                        if (zero_score > best_zero + eps)
                            take = true;
                        else if (zero_score > best_zero - eps && d > bd)
                            take = true;
                    }
                    if (take) {
                        best_score = score;
                        best_zero = zero_score;
                        bp = p;
                        bx = x;
                        bd = d;
                    }
                }
            }
        }
        if (bp < 0 || best_score - cfg.gamma <= 0.0) break;

        Selected sel;
        std::vector<double> responses;
        for (size_t k = 0; k < work.size(); ++k) {
            BestResponse r = best_local_response(sums[k], bp, bx, bd, bounds);
            responses.push_back(std::max(0.0, r.c));
            // claim the matched span in this patch
            int rr = bp + r.dp;
            if (rr >= 0 && rr < work[k].rows()) {
                int c0 = std::max(0, bx + r.dx);
                int c1 = std::min(work[k].cols(), bx + r.dx + bd + r.dd);
                for (int c = c0; c < c1; ++c) work[k].at(rr, c) = 0.0f;
            }
        }
        sel.basis = Basis{bx, bp, bd, 0.0};
        sel.responses = std::move(responses);
        selected.push_back(std::move(sel));
    }

    if (selected.empty()) {
        info.stale = true;
        return old;
    }

    std::sort(selected.begin(), selected.end(), [](const Selected& a, const Selected& b) {
        if (a.basis.x != b.basis.x) return a.basis.x < b.basis.x;
        if (a.basis.p != b.basis.p) return a.basis.p < b.basis.p;
        return a.basis.d < b.basis.d;
    });

    Template out;
    out.id = old.id;
    info.lambda.clear();
    LambdaEstimate est;
    std::vector<std::vector<double>> by_instance(patches.size());
    for (Selected& sel : selected) {
        BasisFit fit = fit_lambda(sel.responses, ref);
        // weight on the intensity scale: h(c^2) ~ c^2 below saturation
        sel.basis.weight = std::sqrt(std::max(0.0, fit.h_bar));
        out.bases.push_back(sel.basis);
        info.lambda.push_back(fit.lambda);
        est.lambda.push_back(fit.lambda);
        est.h_bar.push_back(fit.h_bar);
        for (size_t k = 0; k < patches.size(); ++k)
            by_instance[k].push_back(sel.responses[k]);
    }
    tighten(out);
    info.log_likelihood = log_likelihood_ratio(by_instance, est, ref);
    return out;
}

// ---------------- dictionary growth ----------------

namespace {

struct Component {
    int batch;
    double mass;
    int min_r, min_c, max_r, max_c;
    int note_count;
};

// Cells within Chebyshev distance 2 count as connected, so the notes of a
// missed motif group into one region even across a skipped pitch row.
constexpr int kLinkRadius = 2;

std::vector<Component> residual_components(const Mat& residual, int batch) {
    std::vector<Component> comps;
    Mat seen(residual.rows(), residual.cols());
    for (int r = 0; r < residual.rows(); ++r) {
        for (int c = 0; c < residual.cols(); ++c) {
            if (residual.at(r, c) <= 0.0f || seen.at(r, c) > 0.0f) continue;
            Component comp{batch, 0.0, r, c, r, c, 0};
            std::vector<std::pair<int, int>> stack{{r, c}};
            seen.at(r, c) = 1.0f;
            while (!stack.empty()) {
                auto [cr, cc] = stack.back();
                stack.pop_back();
                comp.mass += residual.at(cr, cc);
                comp.min_r = std::min(comp.min_r, cr);
                comp.min_c = std::min(comp.min_c, cc);
                comp.max_r = std::max(comp.max_r, cr);
                comp.max_c = std::max(comp.max_c, cc);
                if (cc == 0 || residual.at(cr, cc - 1) <= 0.0f) ++comp.note_count;
                for (int dr = -kLinkRadius; dr <= kLinkRadius; ++dr)
                    for (int dc = -kLinkRadius; dc <= kLinkRadius; ++dc) {
                        int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nc < 0 || nr >= residual.rows() ||
                            nc >= residual.cols())
                            continue;
                        if (residual.at(nr, nc) > 0.0f && seen.at(nr, nc) == 0.0f) {
                            seen.at(nr, nc) = 1.0f;
                            stack.push_back({nr, nc});
                        }
                    }
            }
            comps.push_back(comp);
        }
    }
    return comps;
}

} // namespace

Dictionary grow_dictionary(Dictionary dict, const std::vector<SparseCode>& codes,
                           const std::vector<PianoRoll>& rolls,
                           const TrainConfig& cfg, Rng& rng, int epoch) {
    dict.check();

    // drop templates that sat unused through the grace period
    Dictionary kept;
    for (size_t i = 0; i < dict.templates.size(); ++i) {
        if (dict.info[i].unused_epochs >= cfg.unused_epochs_to_drop) continue;
        kept.templates.push_back(dict.templates[i]);
        kept.usage.push_back(dict.usage[i]);
        kept.info.push_back(dict.info[i]);
    }

    // harvest high-mass residual regions
    std::vector<Component> comps;
    for (const SparseCode& code : codes) {
        for (Component& comp : residual_components(code.residual, code.batch))
            if (comp.note_count >= 2) comps.push_back(comp);
    }
    std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
        if (a.mass != b.mass) return a.mass > b.mass;
        if (a.batch != b.batch) return a.batch < b.batch;
        if (a.min_r != b.min_r) return a.min_r < b.min_r;
        return a.min_c < b.min_c;
    });

    int added = 0;
    for (const Component& comp : comps) {
        if (added >= cfg.max_new_per_epoch) break;
        const Mat& residual = codes[comp.batch].residual;
        int h = std::min(cfg.init_height, residual.rows());
        int w = std::min(cfg.init_width, residual.cols());
        int center_r = (comp.min_r + comp.max_r) / 2;
        int center_c = (comp.min_c + comp.max_c) / 2;
        int r0 = std::clamp(center_r - h / 2 + uniform_int(rng, -2, 2), 0,
                            residual.rows() - h);
        int c0 = std::clamp(center_c - w / 2 + uniform_int(rng, -2, 2), 0,
                            residual.cols() - w);
        Template tpl;
        if (!window_to_template(residual, r0, c0, h, w,
                                int(kept.templates.size()), tpl))
            continue;
        TemplateInfo info;
        info.created_epoch = epoch;
        kept.templates.push_back(std::move(tpl));
        kept.usage.push_back(0);
        kept.info.push_back(std::move(info));
        ++added;
    }

    for (size_t i = 0; i < kept.templates.size(); ++i)
        kept.templates[i].id = static_cast<int>(i);
    kept.check();
    return kept;
}

// ---------------- training loop ----------------

std::string report_to_csv(const TrainReport& report) {
    std::ostringstream os;
    os << "epoch,rmse,dict_size,basis_total,code_params,objective,seconds\n";
    for (const EpochStats& e : report.epochs) {
        os << e.epoch << ',' << e.rmse << ',' << e.dict_size << ',' << e.basis_total
           << ',' << e.code_params << ',' << e.objective << ',' << e.seconds << '\n';
    }
    return os.str();
}

TrainResult train(const std::vector<PianoRoll>& corpus, const TrainConfig& cfg) {
    if (corpus.empty()) throw InputError("empty corpus");
    Rng rng = make_rng(cfg.seed);

    TrainResult result;
    {
        Rng bg_rng = make_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<PianoRoll> background = shuffled_background(corpus, bg_rng);
        result.reference = estimate_reference(background, cfg.stat, bg_rng);
    }
    Dictionary dict = init_random_crop(corpus, cfg, rng);

    auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();

        std::vector<SparseCode> codes(corpus.size());
        for (size_t b = 0; b < corpus.size(); ++b) {
            codes[b] = encode(corpus[b], dict, cfg.encoder);
            codes[b].batch = static_cast<int>(b);
        }

        std::fill(dict.usage.begin(), dict.usage.end(), 0);
        for (const SparseCode& code : codes)
            for (const Placement& pl : code.placements) ++dict.usage[pl.transform.t];
        for (size_t i = 0; i < dict.size(); ++i) {
            if (dict.usage[i] == 0)
                ++dict.info[i].unused_epochs;
            else
                dict.info[i].unused_epochs = 0;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.dict_size = static_cast<int>(dict.size());
        for (const Template& tpl : dict.templates)
            stats.basis_total += static_cast<int>(tpl.bases.size());
        double sum_rmse = 0.0;
        for (const SparseCode& code : codes) {
            sum_rmse += code.stats.rmse;
            stats.code_params += code.stats.code_params;
            stats.code_params_sparse += code.stats.code_params_sparse;
            stats.note_params += code.stats.note_params;
        }
        stats.rmse = sum_rmse / double(corpus.size());
        stats.objective = sum_rmse + cfg.gamma * stats.basis_total + stats.dict_size;
        stats.seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        result.report.epochs.push_back(stats);
        result.codes = std::move(codes);

        if (epoch == cfg.epochs) break;

        std::vector<std::vector<Mat>> groups =
            extract_patches(result.codes, corpus, dict);
        std::vector<Template> relearned(dict.size());
        std::vector<TemplateInfo> new_info = dict.info;
        parallel_for(dict.size(), cfg.threads, [&](size_t i) {
            relearned[i] = relearn_template(groups[i], dict.templates[i],
                                            result.reference, cfg, new_info[i]);
        });
        dict.templates = std::move(relearned);
        dict.info = std::move(new_info);
        dict = grow_dictionary(std::move(dict), result.codes, corpus, cfg, rng, epoch);
        if (dict.empty()) dict = init_random_crop(corpus, cfg, rng);
    }

    result.report.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    result.dictionary = std::move(dict);
    return result;
}

} // namespace motif
