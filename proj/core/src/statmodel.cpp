#include "motifcode/statmodel.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "motifcode/error.hpp"

namespace motif {

double activation(double r, double xi) {
    return xi * (2.0 / (1.0 + std::exp(-2.0 * r / xi)) - 1.0);
}

ReferenceModel::ReferenceModel(double xi, double lambda_max, double lambda_step,
                               std::vector<double> log_z)
    : xi_(xi), lambda_max_(lambda_max), lambda_step_(lambda_step),
      log_z_(std::move(log_z)) {
    size_t expected = static_cast<size_t>(std::lround(lambda_max_ / lambda_step_)) + 1;
    if (log_z_.size() != expected)
        throw InvariantError("log Z table size does not match the lambda grid");
}

double ReferenceModel::log_z(double lambda) const {
    if (lambda <= 0.0) return log_z_.front();
    if (lambda >= lambda_max_) return log_z_.back();
    double pos = lambda / lambda_step_;
    size_t i = static_cast<size_t>(pos);
    double frac = pos - i;
    return log_z_[i] * (1.0 - frac) + log_z_[i + 1] * frac;
}

double ReferenceModel::mean_h(double lambda) const {
    size_t n = log_z_.size();
    double pos = std::clamp(lambda / lambda_step_, 0.0, double(n - 1));
    size_t i = static_cast<size_t>(std::min(pos, double(n - 2)));
    return (log_z_[i + 1] - log_z_[i]) / lambda_step_;
}

std::string ReferenceModel::to_json() const {
    nlohmann::json j;
    j["schema"] = "mw/1";
    j["xi"] = xi_;
    j["lambda_max"] = lambda_max_;
    j["lambda_step"] = lambda_step_;
    j["log_z"] = log_z_;
    return j.dump();
}

ReferenceModel ReferenceModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    return ReferenceModel(j.at("xi").get<double>(), j.at("lambda_max").get<double>(),
                          j.at("lambda_step").get<double>(),
                          j.at("log_z").get<std::vector<double>>());
}

ReferenceModel estimate_reference(const std::vector<PianoRoll>& background_rolls,
                                  const StatConfig& cfg, Rng& rng) {
    if (background_rolls.empty())
        throw InputError("empty background corpus");
    if (cfg.q_samples < 1000)
        throw InputError("q_samples must be at least 1000");
    bool any_positive = false;
    for (const PianoRoll& roll : background_rolls)
        any_positive |= (roll.data.count_positive() > 0);
    if (!any_positive)
        throw InputError("degenerate background: all rolls are zero");

    std::vector<double> h_values;
    h_values.reserve(cfg.q_samples);
    for (int s = 0; s < cfg.q_samples; ++s) {
        const Mat& m =
            background_rolls[uniform_int(rng, 0, int(background_rolls.size()) - 1)].data;
        int d = uniform_int(rng, 1, std::min(cfg.max_sample_duration, m.cols()));
        int r = uniform_int(rng, 0, m.rows() - 1);
        int c = uniform_int(rng, 0, m.cols() - d);
        double mass = 0.0;
        for (int i = 0; i < d; ++i) mass += m.at(r, c + i);
        double response = mass / d;
        h_values.push_back(activation(response * response, cfg.xi));
    }

    const double lambda_max = 10.0, lambda_step = 0.01;
    size_t grid = static_cast<size_t>(std::lround(lambda_max / lambda_step)) + 1;
    std::vector<double> log_z(grid);
    for (size_t i = 0; i < grid; ++i) {
        double lambda = i * lambda_step;
        double acc = 0.0;
        for (double h : h_values) acc += std::exp(lambda * h);
        log_z[i] = std::log(acc / h_values.size());
    }
    return ReferenceModel(cfg.xi, lambda_max, lambda_step, std::move(log_z));
}

BasisFit fit_lambda(std::span<const double> responses, const ReferenceModel& ref) {
    if (responses.empty()) throw InputError("fit_lambda: no responses");
    double h_bar = 0.0;
    for (double c : responses) h_bar += activation(c * c, ref.xi());
    h_bar /= responses.size();

    BasisFit fit;
    fit.h_bar = h_bar;
    if (h_bar <= ref.mean_h(0.0)) {
        fit.lambda = 0.0;
        return fit;
    }
    double step = ref.lambda_step();
    size_t n = ref.log_z_table().size();
    // mean_h is non-decreasing in lambda; walk the grid segments
    for (size_t i = 0; i + 1 < n; ++i) {
        double lo = ref.mean_h(i * step);
        double hi = ref.mean_h((i + 1) * step);
        if (h_bar <= hi) {
            double frac = hi > lo ? (h_bar - lo) / (hi - lo) : 0.0;
            fit.lambda = (i + frac) * step;
            return fit;
        }
    }
    fit.lambda = ref.lambda_max();
    return fit;
}

double log_likelihood_ratio(const std::vector<std::vector<double>>& responses,
                            const LambdaEstimate& lambdas, const ReferenceModel& ref) {
    double total = 0.0;
    for (const auto& instance : responses) {
        if (instance.size() != lambdas.lambda.size())
            throw InvariantError("instance response count != basis count");
        for (size_t i = 0; i < instance.size(); ++i) {
            double h = activation(instance[i] * instance[i], ref.xi());
            total += lambdas.lambda[i] * h - ref.log_z(lambdas.lambda[i]);
        }
    }
    return total;
}

std::vector<PianoRoll> shuffled_background(const std::vector<PianoRoll>& rolls,
                                           Rng& rng) {
    std::vector<PianoRoll> out;
    out.reserve(rolls.size());
    for (const PianoRoll& roll : rolls) {
        PianoRoll shuffled = roll;
        shuffled.data = Mat(roll.data.rows(), roll.data.cols());
        for (const Run& run : find_runs(roll.data)) {
            int r = uniform_int(rng, 0, shuffled.data.rows() - 1);
            int c = uniform_int(rng, 0, std::max(0, shuffled.data.cols() - run.len));
            for (int i = 0; i < run.len && c + i < shuffled.data.cols(); ++i)
                shuffled.data.at(r, c + i) =
                    std::max(shuffled.data.at(r, c + i), run.mean_intensity);
        }
        out.push_back(std::move(shuffled));
    }
    return out;
}

} // namespace motif
