#include "motifcode/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "motifcode/error.hpp"

namespace motif {

namespace {

constexpr double kVarEps = 1e-12;

std::vector<double> gaussian_kernel(const DiffuseConfig& cfg) {
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0)
        throw InputError("diffuse kernel size must be odd and positive");
    if (!(cfg.sigma > 0.0)) throw InputError("diffuse sigma must be positive");
    int half = cfg.kernel_size / 2;
    std::vector<double> k(cfg.kernel_size);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        double w = std::exp(-(double(i) * i) / (2.0 * cfg.sigma * cfg.sigma));
        k[i + half] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

} // namespace

Mat gaussian_blur(const Mat& m, const DiffuseConfig& cfg) {
    std::vector<double> k = gaussian_kernel(cfg);
    int half = cfg.kernel_size / 2;
    Mat tmp(m.rows(), m.cols());
    for (int r = 0; r < m.rows(); ++r) {
        const float* src = m.row(r);
        float* dst = tmp.row(r);
        for (int c = 0; c < m.cols(); ++c) {
            double acc = 0.0;
            int lo = std::max(-half, -c);
            int hi = std::min(half, m.cols() - 1 - c);
            for (int i = lo; i <= hi; ++i) acc += k[i + half] * src[c + i];
            dst[c] = static_cast<float>(acc);
        }
    }
    Mat out(m.rows(), m.cols());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) {
            double acc = 0.0;
            int lo = std::max(-half, -r);
            int hi = std::min(half, m.rows() - 1 - r);
            for (int i = lo; i <= hi; ++i) acc += k[i + half] * tmp.at(r + i, c);
            out.at(r, c) = static_cast<float>(acc);
        }
    }
    return out;
}

double zncc(const Mat& roll, const Mat& tpl_image, int row, int col) {
    int h = tpl_image.rows(), w = tpl_image.cols();
    if (row < 0 || col < 0 || row + h > roll.rows() || col + w > roll.cols())
        throw InputError("zncc window outside roll");
    double n = double(h) * w;
    double sm = 0, sm2 = 0, st = 0, st2 = 0, cross = 0;
    for (int r = 0; r < h; ++r) {
        const float* mrow = roll.row(row + r) + col;
        const float* trow = tpl_image.row(r);
        for (int c = 0; c < w; ++c) {
            sm += mrow[c];
            sm2 += double(mrow[c]) * mrow[c];
            st += trow[c];
            st2 += double(trow[c]) * trow[c];
            cross += double(mrow[c]) * trow[c];
        }
    }
    double mu_m = sm / n, mu_t = st / n;
    double var_m = sm2 / n - mu_m * mu_m;
    double var_t = st2 / n - mu_t * mu_t;
    if (var_m <= kVarEps || var_t <= kVarEps) return 0.0;
    return (cross - n * mu_m * mu_t) / (n * std::sqrt(var_m) * std::sqrt(var_t));
}

double rmse(const Mat& roll, const Mat& tpl_image, int row, int col) {
    int h = tpl_image.rows(), w = tpl_image.cols();
    if (row < 0 || col < 0 || row + h > roll.rows() || col + w > roll.cols())
        throw InputError("rmse window outside roll");
    double acc = 0.0;
    for (int r = 0; r < h; ++r) {
        const float* mrow = roll.row(row + r) + col;
        const float* trow = tpl_image.row(r);
        for (int c = 0; c < w; ++c) {
            double d = double(mrow[c]) - trow[c];
            acc += d * d;
        }
    }
    return std::sqrt(acc / (double(h) * w));
}

double bacc(const Mat& roll, const Mat& tpl_image, int n_bases, int row, int col,
            const Mat* note_source) {
    int h = tpl_image.rows(), w = tpl_image.cols();
    if (row < 0 || col < 0 || row + h > roll.rows() || col + w > roll.cols())
        throw InputError("bacc window outside roll");
    const Mat& notes = note_source ? *note_source : roll;
    int n_notes = static_cast<int>(find_runs_in_window(notes, row, col, h, w).size());
    int denom = n_bases + n_notes;
    if (denom == 0) return 0.0;
    double cross = 0.0;
    for (int r = 0; r < h; ++r) {
        const float* mrow = roll.row(row + r) + col;
        const float* trow = tpl_image.row(r);
        for (int c = 0; c < w; ++c) cross += double(mrow[c]) * trow[c];
    }
    return cross / denom;
}

ResponseContext::ResponseContext(const Mat& m)
    : m_(&m), rows_(m.rows()), cols_(m.cols()) {
    size_t stride = static_cast<size_t>(cols_) + 1;
    integral_.assign((rows_ + 1) * stride, 0.0);
    integral_sq_.assign((rows_ + 1) * stride, 0.0);
    run_starts_.assign((rows_ + 1) * stride, 0);
    cont_prefix_.assign((static_cast<size_t>(rows_) + 1) * cols_, 0);

    for (int r = 0; r < rows_; ++r) {
        const float* row = m.row(r);
        double acc = 0.0, acc2 = 0.0;
        int acc_s = 0;
        for (int c = 0; c < cols_; ++c) {
            double v = row[c];
            acc += v;
            acc2 += v * v;
            bool pos = v > 0.0;
            bool start = pos && (c == 0 || row[c - 1] <= 0.0f);
            acc_s += start ? 1 : 0;
            size_t i = (r + 1) * stride + (c + 1);
            integral_[i] = integral_[i - stride] + acc;
            integral_sq_[i] = integral_sq_[i - stride] + acc2;
            run_starts_[i] = run_starts_[i - stride] + acc_s;
            bool cont = pos && !start;
            cont_prefix_[(r + 1) * static_cast<size_t>(cols_) + c] =
                cont_prefix_[r * static_cast<size_t>(cols_) + c] + (cont ? 1 : 0);
        }
    }
}

double ResponseContext::box_sum(int r0, int c0, int h, int w) const {
    size_t stride = static_cast<size_t>(cols_) + 1;
    return integral_[static_cast<size_t>(r0 + h) * stride + (c0 + w)] -
           integral_[static_cast<size_t>(r0) * stride + (c0 + w)] -
           integral_[static_cast<size_t>(r0 + h) * stride + c0] +
           integral_[static_cast<size_t>(r0) * stride + c0];
}

double ResponseContext::box_sum_sq(int r0, int c0, int h, int w) const {
    size_t stride = static_cast<size_t>(cols_) + 1;
    return integral_sq_[static_cast<size_t>(r0 + h) * stride + (c0 + w)] -
           integral_sq_[static_cast<size_t>(r0) * stride + (c0 + w)] -
           integral_sq_[static_cast<size_t>(r0 + h) * stride + c0] +
           integral_sq_[static_cast<size_t>(r0) * stride + c0];
}

int ResponseContext::note_count(int r0, int c0, int h, int w) const {
    size_t stride = static_cast<size_t>(cols_) + 1;
    int starts = run_starts_[static_cast<size_t>(r0 + h) * stride + (c0 + w)] -
                 run_starts_[static_cast<size_t>(r0) * stride + (c0 + w)] -
                 run_starts_[static_cast<size_t>(r0 + h) * stride + c0] +
                 run_starts_[static_cast<size_t>(r0) * stride + c0];
    int crossing = cont_prefix_[static_cast<size_t>(r0 + h) * cols_ + c0] -
                   cont_prefix_[static_cast<size_t>(r0) * cols_ + c0];
    return starts + crossing;
}

ResponseMap response_map_ctx(const ResponseContext& surface,
                             const ResponseContext& notes,
                             const Template& transformed,
                             const TransformParams& transform, Measure measure) {
    const Mat& m = surface.matrix();
    int h = transformed.height, w = transformed.width;
    int mr = m.rows() - h + 1;
    int mc = m.cols() - w + 1;
    if (mr <= 0 || mc <= 0)
        throw InputError("template " + std::to_string(transformed.id) +
                         " larger than roll: empty response map");

    // cross-correlation with the sparse template support
    Mat cross(mr, mc);
    for (const Basis& b : transformed.bases) {
        float lam = static_cast<float>(b.weight);
        for (int dc = b.x; dc < b.x + b.d; ++dc) {
            for (int r = 0; r < mr; ++r) {
                const float* src = m.row(r + b.p) + dc;
                float* dst = cross.row(r);
                for (int c = 0; c < mc; ++c) dst[c] += lam * src[c];
            }
        }
    }
    // overlapping bases paint max, not sum; correct the rare collision cells
    {
        std::vector<std::pair<int, double>> cells;  // (p*w + x, weight)
        for (const Basis& b : transformed.bases)
            for (int dc = b.x; dc < b.x + b.d; ++dc)
                cells.push_back({b.p * w + dc, b.weight});
        std::sort(cells.begin(), cells.end());
        for (size_t i = 0; i + 1 < cells.size(); ++i) {
            if (cells[i].first == cells[i + 1].first) {
                // subtract the smaller of the colliding weights
                double excess = std::min(cells[i].second, cells[i + 1].second);
                cells[i + 1].second = std::max(cells[i].second, cells[i + 1].second);
                int p = cells[i].first / w, x = cells[i].first % w;
                for (int r = 0; r < mr; ++r) {
                    const float* src = m.row(r + p) + x;
                    float* dst = cross.row(r);
                    float e = static_cast<float>(excess);
                    for (int c = 0; c < mc; ++c) dst[c] -= e * src[c];
                }
            }
        }
    }

    ResponseMap map;
    map.values = Mat(mr, mc);
    map.measure = measure;
    map.template_id = transformed.id;
    map.transform = transform;
    map.window_height = h;
    map.window_width = w;

    double n = double(h) * w;
    int n_bases = static_cast<int>(transformed.bases.size());

    // template-side sums over the rendered box
    RenderResult rr = render(transformed, h, w, 0, 0);
    double st = 0, st2 = 0;
    for (float v : rr.image.data()) {
        st += v;
        st2 += double(v) * v;
    }
    double mu_t = st / n;
    double var_t = st2 / n - mu_t * mu_t;
    double sigma_t = var_t > kVarEps ? std::sqrt(var_t) : 0.0;

    for (int r = 0; r < mr; ++r) {
        float* out = map.values.row(r);
        const float* cr = cross.row(r);
        for (int c = 0; c < mc; ++c) {
            switch (measure) {
            case Measure::BACC: {
                int denom = n_bases + notes.note_count(r, c, h, w);
                out[c] = denom == 0 ? 0.0f : static_cast<float>(cr[c] / denom);
                break;
            }
            case Measure::ZNCC: {
                if (var_t <= kVarEps) {
                    out[c] = 0.0f;
                    break;
                }
                double sm = surface.box_sum(r, c, h, w);
                double sm2 = surface.box_sum_sq(r, c, h, w);
                double mu_m = sm / n;
                double var_m = sm2 / n - mu_m * mu_m;
                if (var_m <= kVarEps) {
                    out[c] = 0.0f;
                    break;
                }
                out[c] = static_cast<float>((cr[c] - n * mu_m * mu_t) /
                                            (n * std::sqrt(var_m) * sigma_t));
                break;
            }
            case Measure::RMSE: {
                double sm2 = surface.box_sum_sq(r, c, h, w);
                double sq = sm2 - 2.0 * cr[c] + st2;
                out[c] = static_cast<float>(std::sqrt(std::max(0.0, sq) / n));
                break;
            }
            }
        }
    }
    return map;
}

ResponseMap response_map(const PianoRoll& roll, const Template& tpl,
                         const TransformParams& transform, Measure measure,
                         const std::optional<DiffuseConfig>& diffuse) {
    Template transformed = apply_transform(tpl, transform);
    if (diffuse) {
        Mat blurred = gaussian_blur(roll.data, *diffuse);
        ResponseContext surface(blurred);
        ResponseContext notes(roll.data);
        return response_map_ctx(surface, notes, transformed, transform, measure);
    }
    ResponseContext ctx(roll.data);
    return response_map_ctx(ctx, ctx, transformed, transform, measure);
}

} // namespace motif
