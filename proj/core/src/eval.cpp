#include "motifcode/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "motifcode/error.hpp"

namespace motif {

namespace {

// Which roll note (run index) does each placement claim? A run belongs to a
// placement when at least half of its cells are claimed.
std::vector<std::vector<int>> claimed_note_sets(const SparseCode& code,
                                                const std::vector<Run>& runs,
                                                int cols) {
    std::vector<std::vector<int>> sets(code.placements.size());
    for (size_t p = 0; p < code.placements.size(); ++p) {
        const std::vector<int>& cells = code.placements[p].claimed_cells;
        for (size_t n = 0; n < runs.size(); ++n) {
            const Run& run = runs[n];
            int hit = 0;
            for (int c = run.col; c < run.col + run.len; ++c) {
                int cell = run.row * cols + c;
                if (std::binary_search(cells.begin(), cells.end(), cell)) ++hit;
            }
            if (2 * hit >= run.len) sets[p].push_back(static_cast<int>(n));
        }
    }
    return sets;
}

// Fraction of the run's cells claimed by the placement.
double claim_fraction(const Placement& pl, const Run& run, int cols) {
    int hit = 0;
    for (int c = run.col; c < run.col + run.len; ++c) {
        int cell = run.row * cols + c;
        if (std::binary_search(pl.claimed_cells.begin(), pl.claimed_cells.end(), cell))
            ++hit;
    }
    return double(hit) / double(run.len);
}

// Maps each annotated note to the roll run covering its onset cell, or -1.
int run_for_note(const AnnotatedNote& note, const std::vector<Run>& runs) {
    for (size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].row == note.pitch && runs[i].col <= note.onset &&
            note.onset < runs[i].col + runs[i].len)
            return static_cast<int>(i);
    }
    return -1;
}

double set_iou(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

double entropy(const std::vector<long>& counts, long total) {
    double h = 0.0;
    for (long n : counts) {
        if (n <= 0) continue;
        double p = double(n) / double(total);
        h -= p * std::log(p);
    }
    return h;
}

double comb2(long n) { return 0.5 * double(n) * double(n - 1); }

// Regularized incomplete beta via continued fraction (Lentz's method).
double betacf(double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 1e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a t statistic with df degrees of freedom.
double t_test_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

} // namespace

std::string annotation_to_json(const Annotation& ann) {
    nlohmann::json j;
    j["schema"] = "mw/1";
    j["batch"] = ann.batch;
    nlohmann::json notes = nlohmann::json::array();
    for (const AnnotatedNote& n : ann.notes)
        notes.push_back({{"pitch", n.pitch},
                         {"onset", n.onset},
                         {"duration", n.duration},
                         {"instance_id", n.instance_id},
                         {"class_id", n.class_id}});
    j["notes"] = std::move(notes);
    return j.dump();
}

Annotation annotation_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Annotation ann;
    ann.batch = j.at("batch").get<int>();
    for (const auto& jn : j.at("notes"))
        ann.notes.push_back(AnnotatedNote{jn.at("pitch").get<int>(),
                                          jn.at("onset").get<int>(),
                                          jn.at("duration").get<int>(),
                                          jn.value("instance_id", -1),
                                          jn.value("class_id", -1)});
    return ann;
}

double note_iou(const SparseCode& code, const Annotation& ann, const PianoRoll& roll) {
    std::vector<Run> runs = find_runs(roll.data);

    std::map<int, std::vector<int>> truth;  // instance id -> note ids
    int synthetic_id = static_cast<int>(runs.size());
    for (const AnnotatedNote& note : ann.notes) {
        if (note.instance_id < 0) continue;
        int run = run_for_note(note, runs);
        truth[note.instance_id].push_back(run >= 0 ? run : synthetic_id++);
    }
    if (truth.empty()) throw InputError("annotation has no labeled instances");
    for (auto& [id, notes] : truth) {
        std::sort(notes.begin(), notes.end());
        notes.erase(std::unique(notes.begin(), notes.end()), notes.end());
    }

    std::vector<std::vector<int>> predicted =
        claimed_note_sets(code, runs, roll.data.cols());
    predicted.erase(std::remove_if(predicted.begin(), predicted.end(),
                                   [](const std::vector<int>& s) { return s.empty(); }),
                    predicted.end());

    struct Pair {
        double iou;
        size_t pred, truth;
    };
    std::vector<Pair> pairs;
    std::vector<std::vector<int>> truth_sets;
    truth_sets.reserve(truth.size());
    for (auto& [id, notes] : truth) truth_sets.push_back(notes);
    for (size_t i = 0; i < predicted.size(); ++i)
        for (size_t j = 0; j < truth_sets.size(); ++j) {
            double iou = set_iou(predicted[i], truth_sets[j]);
            if (iou > 0.0) pairs.push_back(Pair{iou, i, j});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.iou > b.iou;
    });

    std::vector<bool> pred_used(predicted.size(), false);
    std::vector<bool> truth_used(truth_sets.size(), false);
    double total = 0.0;
    for (const Pair& pr : pairs) {
        if (pred_used[pr.pred] || truth_used[pr.truth]) continue;
        pred_used[pr.pred] = true;
        truth_used[pr.truth] = true;
        total += pr.iou;
    }
    size_t denom = std::max(predicted.size(), truth_sets.size());
    return denom == 0 ? 0.0 : total / double(denom);
}

ClusterScores clustering_metrics(const std::vector<int>& truth,
                                 const std::vector<int>& predicted) {
    if (truth.size() != predicted.size())
        throw InvariantError("label vectors differ in length");
    long total = static_cast<long>(truth.size());
    ClusterScores scores;
    if (total == 0) return scores;

    std::map<int, int> class_index, cluster_index;
    for (int c : truth)
        class_index.emplace(c, static_cast<int>(class_index.size()));
    for (int k : predicted)
        cluster_index.emplace(k, static_cast<int>(cluster_index.size()));
    size_t nc = class_index.size(), nk = cluster_index.size();

    std::vector<long> joint(nc * nk, 0), class_count(nc, 0), cluster_count(nk, 0);
    for (size_t i = 0; i < truth.size(); ++i) {
        int ci = class_index[truth[i]];
        int ki = cluster_index[predicted[i]];
        ++joint[ci * nk + ki];
        ++class_count[ci];
        ++cluster_count[ki];
    }

    double h_class = entropy(class_count, total);
    double h_cluster = entropy(cluster_count, total);
    double h_class_given = 0.0, h_cluster_given = 0.0;
    for (size_t ci = 0; ci < nc; ++ci)
        for (size_t ki = 0; ki < nk; ++ki) {
            long n = joint[ci * nk + ki];
            if (n <= 0) continue;
            double p = double(n) / double(total);
            h_class_given -= p * std::log(double(n) / double(cluster_count[ki]));
            h_cluster_given -= p * std::log(double(n) / double(class_count[ci]));
        }

    scores.homogeneity = h_class > 0.0 ? 1.0 - h_class_given / h_class : 1.0;
    scores.completeness = h_cluster > 0.0 ? 1.0 - h_cluster_given / h_cluster : 1.0;
    double hc = scores.homogeneity + scores.completeness;
    scores.v_measure = hc > 0.0 ? 2.0 * scores.homogeneity * scores.completeness / hc
                                : 0.0;

    double sum_joint = 0.0;
    for (long n : joint) sum_joint += comb2(n);
    double sum_class = 0.0, sum_cluster = 0.0;
    for (long n : class_count) sum_class += comb2(n);
    for (long n : cluster_count) sum_cluster += comb2(n);
    double n2 = comb2(total);
    double expected = n2 > 0.0 ? sum_class * sum_cluster / n2 : 0.0;
    double max_index = 0.5 * (sum_class + sum_cluster);
    scores.ari = (max_index - expected) != 0.0
                     ? (sum_joint - expected) / (max_index - expected)
                     : 1.0;
    return scores;
}

ClusterScores clustering_metrics(const std::vector<SparseCode>& codes,
                                 const std::vector<Annotation>& anns,
                                 const std::vector<PianoRoll>& rolls) {
    if (codes.size() != anns.size() || codes.size() != rolls.size())
        throw InputError("codes, annotations, and rolls must align");
    std::vector<int> truth, predicted;
    const int none_label = -1;
    for (size_t b = 0; b < codes.size(); ++b) {
        std::vector<Run> runs = find_runs(rolls[b].data);
        for (const AnnotatedNote& note : anns[b].notes) {
            if (note.class_id < 0) continue;
            truth.push_back(note.class_id);
            int run = run_for_note(note, runs);
            int label = none_label;
            if (run >= 0) {
                double best_frac = 0.0;
                for (const Placement& pl : codes[b].placements) {
                    double frac = claim_fraction(pl, runs[run], rolls[b].data.cols());
                    if (frac >= 0.5 && frac > best_frac) {
                        best_frac = frac;
                        label = pl.transform.t;
                    }
                }
            }
            predicted.push_back(label);
        }
    }
    return clustering_metrics(truth, predicted);
}

double segmentation_f1(const SparseCode& code, const std::vector<int>& true_boundaries,
                       int tolerance_cols) {
    if (true_boundaries.empty())
        throw InputError("segmentation requires ground-truth boundaries");
    std::set<int> pred_set;
    for (const Placement& pl : code.placements) {
        if (pl.claimed_cells.empty()) continue;
        // claimed cells are sorted linear indices; recover column extents
        int min_col = std::numeric_limits<int>::max();
        int max_col = -1;
        for (int cell : pl.claimed_cells) {
            int col = cell % code.residual.cols();
            min_col = std::min(min_col, col);
            max_col = std::max(max_col, col);
        }
        pred_set.insert(min_col);
        pred_set.insert(max_col + 1);
    }
    std::vector<int> pred(pred_set.begin(), pred_set.end());
    std::vector<int> truth = true_boundaries;
    std::sort(truth.begin(), truth.end());
    truth.erase(std::unique(truth.begin(), truth.end()), truth.end());

    if (pred.empty()) return 0.0;
    std::vector<bool> used(pred.size(), false);
    int matched = 0;
    for (int t : truth) {
        int best = -1;
        int best_dist = tolerance_cols + 1;
        for (size_t i = 0; i < pred.size(); ++i) {
            if (used[i]) continue;
            int dist = std::abs(pred[i] - t);
            if (dist <= tolerance_cols && dist < best_dist) {
                best_dist = dist;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0) {
            used[best] = true;
            ++matched;
        }
    }
    double precision = double(matched) / double(pred.size());
    double recall = double(matched) / double(truth.size());
    return (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                      : 0.0;
}

FrequencyHistogram frequency_histogram(const std::vector<SparseCode>& codes) {
    std::map<int, long> counts;
    long total = 0;
    for (const SparseCode& code : codes)
        for (const Placement& pl : code.placements) {
            ++counts[pl.transform.t];
            ++total;
        }
    FrequencyHistogram hist;
    hist.items.assign(counts.begin(), counts.end());
    std::stable_sort(hist.items.begin(), hist.items.end(),
                     [](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return a.first < b.first;
                     });
    long top3 = 0;
    for (size_t i = 0; i < hist.items.size() && i < 3; ++i) top3 += hist.items[i].second;
    hist.top3_fraction = total > 0 ? double(top3) / double(total) : 0.0;
    return hist;
}

PowerLawFit fit_power_law(const FrequencyHistogram& hist) {
    std::vector<long> freqs;
    for (const auto& [id, count] : hist.items)
        if (count >= 1) freqs.push_back(count);
    if (freqs.size() < 5)
        throw InputError("power-law fit needs at least 5 nonzero ranks, got " +
                         std::to_string(freqs.size()));

    PowerLawFit fit;
    size_t n = freqs.size();
    std::vector<double> xs(n), ys(n);
    for (size_t i = 0; i < n; ++i) {
        long rank = static_cast<long>(i) + 1;
        fit.rank_frequency.push_back({rank, freqs[i]});
        xs[i] = std::log(double(rank));
        ys[i] = std::log(double(freqs[i]));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    double rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double resid = ys[i] - (intercept + slope * xs[i]);
        rss += resid * resid;
    }
    fit.alpha = -slope;
    double df = double(n) - 2.0;
    double se2 = rss / df / sxx;
    if (se2 <= 0.0) {
        fit.p_value = slope == 0.0 ? 1.0 : 0.0;
    } else {
        double t = slope / std::sqrt(se2);
        fit.p_value = t_test_p(t, df);
    }
    return fit;
}

std::string metrics_csv_header() {
    return "iou,homogeneity,completeness,v_measure,rmse,ari,seconds_per_epoch";
}

std::string metrics_csv_row(const MetricsRow& row) {
    std::ostringstream os;
    os << row.iou << ',' << row.homogeneity << ',' << row.completeness << ','
       << row.v_measure << ',' << row.rmse << ',' << row.ari << ','
       << row.seconds_per_epoch;
    return os.str();
}

} // namespace motif
