#include "motifcode/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "motifcode/error.hpp"

namespace motif {

namespace {

// Nearest integer, ties away from zero.
int iround(double v) { return static_cast<int>(std::lround(v)); }

} // namespace

void tighten(Template& tpl) {
    if (tpl.bases.empty())
        throw InvariantError("template " + std::to_string(tpl.id) + " has no bases");
    int min_x = std::numeric_limits<int>::max();
    int min_p = std::numeric_limits<int>::max();
    int max_xd = std::numeric_limits<int>::min();
    int max_p = std::numeric_limits<int>::min();
    for (const Basis& b : tpl.bases) {
        min_x = std::min(min_x, b.x);
        min_p = std::min(min_p, b.p);
        max_xd = std::max(max_xd, b.x + b.d);
        max_p = std::max(max_p, b.p);
    }
    for (Basis& b : tpl.bases) {
        b.x -= min_x;
        b.p -= min_p;
    }
    tpl.width = max_xd - min_x;
    tpl.height = max_p - min_p + 1;
}

void validate_template(const Template& tpl) {
    if (tpl.bases.empty())
        throw InvariantError("template " + std::to_string(tpl.id) + " has no bases");
    bool touch_row0 = false, touch_col0 = false;
    for (const Basis& b : tpl.bases) {
        if (b.d < 1) throw InvariantError("basis duration < 1");
        if (b.x < 0 || b.x >= tpl.width || b.p < 0 || b.p >= tpl.height)
            throw InvariantError("basis outside template box");
        if (b.x + b.d > tpl.width) throw InvariantError("basis extends past box");
        if (!(b.weight >= 0.0) || !std::isfinite(b.weight))
            throw InvariantError("basis weight not finite and non-negative");
        touch_row0 |= (b.p == 0);
        touch_col0 |= (b.x == 0);
    }
    if (!touch_row0 || !touch_col0)
        throw InvariantError("template bounding box not tight");
    for (size_t i = 0; i < tpl.bases.size(); ++i)
        for (size_t j = i + 1; j < tpl.bases.size(); ++j) {
            const Basis& a = tpl.bases[i];
            const Basis& b = tpl.bases[j];
            if (a.p == b.p && a.x == b.x)
                throw InvariantError("two bases share an onset cell");
        }
}

Template apply_transform(const Template& tpl, const TransformParams& params) {
    if (params.t != tpl.id)
        throw InvariantError("transform targets template " + std::to_string(params.t) +
                             ", got " + std::to_string(tpl.id));
    Template out = tpl;
    for (Basis& b : out.bases) {
        b.x = iround(params.A * b.x);
        b.d = std::max(1, iround(params.D * b.d));
    }
    tighten(out);
    if (params.F == Flip::Horizontal || params.F == Flip::Diagonal) {
        for (Basis& b : out.bases) b.x = out.width - (b.x + b.d);
        tighten(out);
    }
    if (params.F == Flip::Vertical || params.F == Flip::Diagonal) {
        for (Basis& b : out.bases) b.p = out.height - 1 - b.p;
        tighten(out);
    }
    if (out.width < 1 || out.height < 1)
        throw InvariantError("transform produced a degenerate template");
    return out;
}

Template apply_deltas(const Template& tpl, const BasisDeltas& deltas,
                      const DeltaBounds& bounds) {
    if (deltas.size() != tpl.bases.size())
        throw InvariantError("delta count " + std::to_string(deltas.size()) +
                             " != basis count " + std::to_string(tpl.bases.size()));
    Template out = tpl;
    for (size_t i = 0; i < deltas.size(); ++i) {
        const Delta& d = deltas[i];
        if (std::abs(d.dx) > bounds.max_dx || std::abs(d.dp) > bounds.max_dp ||
            std::abs(d.dd) > bounds.max_dd)
            throw InvariantError("delta out of configured bounds");
        out.bases[i].x += d.dx;
        out.bases[i].p += d.dp;
        out.bases[i].d = std::max(1, out.bases[i].d + d.dd);
    }
    tighten(out);
    return out;
}

std::pair<int, int> delta_origin_shift(const Template& tpl, const BasisDeltas& deltas) {
    int min_x = std::numeric_limits<int>::max();
    int min_p = std::numeric_limits<int>::max();
    for (size_t i = 0; i < tpl.bases.size(); ++i) {
        min_x = std::min(min_x, tpl.bases[i].x + deltas[i].dx);
        min_p = std::min(min_p, tpl.bases[i].p + deltas[i].dp);
    }
    return {min_x, min_p};
}

RenderResult render(const Template& tpl, int height, int width, int row, int col) {
    RenderResult res;
    res.image = Mat(height, width);
    int painted = paint_max(tpl, res.image, row, col);
    res.fully_clipped = (painted == 0);
    return res;
}

int paint_max(const Template& tpl, Mat& target, int row, int col, double scale) {
    int painted = 0;
    for (const Basis& b : tpl.bases) {
        int r = row + b.p;
        if (r < 0 || r >= target.rows()) continue;
        int c0 = std::max(0, col + b.x);
        int c1 = std::min(target.cols(), col + b.x + b.d);
        float v = static_cast<float>(scale * b.weight);
        for (int c = c0; c < c1; ++c) {
            target.at(r, c) = std::max(target.at(r, c), v);
            ++painted;
        }
    }
    return painted;
}

std::vector<int> placed_cells(const Template& tpl, int rows, int cols,
                              int row, int col) {
    std::vector<int> cells;
    for (const Basis& b : tpl.bases) {
        int r = row + b.p;
        if (r < 0 || r >= rows) continue;
        int c0 = std::max(0, col + b.x);
        int c1 = std::min(cols, col + b.x + b.d);
        for (int c = c0; c < c1; ++c) cells.push_back(r * cols + c);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

std::string template_to_json(const Template& tpl) {
    nlohmann::json j;
    j["id"] = tpl.id;
    j["height"] = tpl.height;
    j["width"] = tpl.width;
    nlohmann::json bases = nlohmann::json::array();
    for (const Basis& b : tpl.bases)
        bases.push_back({{"x", b.x}, {"p", b.p}, {"d", b.d}, {"weight", b.weight}});
    j["bases"] = std::move(bases);
    return j.dump();
}

Template template_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Template tpl;
    tpl.id = j.at("id").get<int>();
    tpl.height = j.at("height").get<int>();
    tpl.width = j.at("width").get<int>();
    for (const auto& jb : j.at("bases"))
        tpl.bases.push_back(Basis{jb.at("x").get<int>(), jb.at("p").get<int>(),
                                  jb.at("d").get<int>(), jb.at("weight").get<double>()});
    validate_template(tpl);
    return tpl;
}

std::string transform_to_json(const TransformParams& t) {
    nlohmann::json j;
    j["t"] = t.t;
    j["X"] = t.X;
    j["P"] = t.P;
    j["F"] = static_cast<int>(t.F);
    j["D"] = t.D;
    j["A"] = t.A;
    return j.dump();
}

TransformParams transform_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TransformParams t;
    t.t = j.at("t").get<int>();
    t.X = j.at("X").get<int>();
    t.P = j.at("P").get<int>();
    t.F = static_cast<Flip>(j.at("F").get<int>());
    t.D = j.at("D").get<double>();
    t.A = j.at("A").get<double>();
    return t;
}

} // namespace motif
