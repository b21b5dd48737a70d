#include <doctest.h>

#include <cmath>

#include "motifcode/error.hpp"
#include "motifcode/statmodel.hpp"
#include "test_support.hpp"

using namespace motif;
using namespace testutil;

namespace {

// Reference model built from an explicit background sample set.
ReferenceModel model_from_samples(const std::vector<double>& responses, double xi) {
    const double lambda_max = 10.0, step = 0.01;
    size_t n = static_cast<size_t>(std::lround(lambda_max / step)) + 1;
    std::vector<double> log_z(n);
    for (size_t i = 0; i < n; ++i) {
        double lambda = i * step;
        double acc = 0.0;
        for (double c : responses) acc += std::exp(lambda * activation(c * c, xi));
        log_z[i] = std::log(acc / responses.size());
    }
    return ReferenceModel(xi, lambda_max, step, std::move(log_z));
}

std::vector<PianoRoll> uniform_background(Rng& rng, int n_rolls = 2) {
    std::vector<PianoRoll> rolls;
    for (int i = 0; i < n_rolls; ++i) {
        PianoRoll roll = make_roll(32, 64);
        for (float& v : roll.data.data())
            v = static_cast<float>(uniform_real(rng, 0.0, 1.0));
        rolls.push_back(std::move(roll));
    }
    return rolls;
}

} // namespace

TEST_CASE("activation basics") {
    CHECK(activation(0.0, 6.0) == 0.0);
    CHECK(activation(600.0, 6.0) > 0.999 * 6.0);
    CHECK(activation(6.0, 6.0) == doctest::Approx(6.0 * std::tanh(1.0)));
    // unit slope at the origin
    double eps = 1e-4;
    CHECK(std::fabs((activation(eps, 6.0) - activation(0.0, 6.0)) / eps - 1.0) < 1e-3);
    // strictly increasing and bounded by xi
    double prev = -1.0;
    for (double r = 0.0; r <= 30.0; r += 0.25) {
        double h = activation(r, 6.0);
        CHECK(h > prev);
        CHECK(h < 6.0);
        prev = h;
    }
}

TEST_CASE("estimate_reference: Z(0) = 1 exactly") {
    Rng rng = make_rng(1);
    auto background = uniform_background(rng);
    StatConfig cfg;
    cfg.q_samples = 2000;
    ReferenceModel ref = estimate_reference(background, cfg, rng);
    CHECK(ref.log_z(0.0) == 0.0);
}

TEST_CASE("estimate_reference rejects degenerate input") {
    Rng rng = make_rng(2);
    StatConfig cfg;
    CHECK_THROWS_AS(estimate_reference({}, cfg, rng), InputError);
    std::vector<PianoRoll> zero{make_roll(8, 8)};
    CHECK_THROWS_AS(estimate_reference(zero, cfg, rng), InputError);
    StatConfig small;
    small.q_samples = 10;
    auto background = uniform_background(rng);
    CHECK_THROWS_AS(estimate_reference(background, small, rng), InputError);
}

TEST_CASE("two-point background matches the closed form") {
    // top half of the roll all ones, bottom half silent: responses are an
    // exact Bernoulli(1/2) over {0, 1}
    PianoRoll roll = make_roll(32, 64);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 64; ++c) roll.data.at(r, c) = 1.0f;
    Rng rng = make_rng(3);
    StatConfig cfg;
    cfg.q_samples = 20000;
    ReferenceModel ref = estimate_reference({roll}, cfg, rng);
    double expected = std::log((1.0 + std::exp(activation(1.0, cfg.xi))) / 2.0);
    CHECK(ref.log_z(1.0) == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("Z is monotone and log Z is convex on the grid") {
    Rng rng = make_rng(4);
    auto background = uniform_background(rng);
    StatConfig cfg;
    cfg.q_samples = 5000;
    ReferenceModel ref = estimate_reference(background, cfg, rng);
    CHECK(ref.log_z(2.0) > ref.log_z(1.0));
    const std::vector<double>& table = ref.log_z_table();
    for (size_t i = 0; i + 2 < table.size(); ++i) {
        double second = table[i + 2] - 2.0 * table[i + 1] + table[i];
        CHECK(second >= -1e-9);
    }
}

TEST_CASE("fit_lambda: background responses give lambda near 0") {
    Rng rng = make_rng(5);
    std::vector<double> samples;
    for (int i = 0; i < 20000; ++i) samples.push_back(uniform_real(rng, 0.0, 1.0));
    ReferenceModel ref = model_from_samples(samples, 6.0);
    // a fresh draw from the same distribution
    std::vector<double> responses;
    for (int i = 0; i < 5000; ++i) responses.push_back(uniform_real(rng, 0.0, 1.0));
    BasisFit fit = fit_lambda(responses, ref);
    CHECK(fit.lambda < 0.3);
}

TEST_CASE("fit_lambda clamps at the grid top for saturated responses") {
    Rng rng = make_rng(6);
    std::vector<double> samples;
    for (int i = 0; i < 5000; ++i) samples.push_back(uniform_real(rng, 0.0, 1.0));
    ReferenceModel ref = model_from_samples(samples, 6.0);
    std::vector<double> responses(100, 10.0);  // h(100) ~ xi
    CHECK(fit_lambda(responses, ref).lambda == ref.lambda_max());
}

TEST_CASE("lambda round-trip on an exponentially tilted sample") {
    Rng rng = make_rng(7);
    std::vector<double> background;
    for (int i = 0; i < 20000; ++i) background.push_back(uniform_real(rng, 0.0, 1.1));
    ReferenceModel ref = model_from_samples(background, 6.0);

    const double lambda_star = 1.5;
    std::vector<double> weights;
    for (double c : background)
        weights.push_back(std::exp(lambda_star * activation(c * c, 6.0)));
    std::discrete_distribution<size_t> tilted(weights.begin(), weights.end());
    std::vector<double> responses;
    for (int i = 0; i < 10000; ++i) responses.push_back(background[tilted(rng)]);

    BasisFit fit = fit_lambda(responses, ref);
    CHECK(fit.lambda > lambda_star - 0.2);
    CHECK(fit.lambda < lambda_star + 0.2);
}

TEST_CASE("log-likelihood ratio basics and hand case") {
    // synthetic table with log Z(lambda) = 1.2 * lambda
    const double step = 0.01;
    size_t n = 1001;
    std::vector<double> table(n);
    for (size_t i = 0; i < n; ++i) table[i] = 1.2 * (i * step);
    ReferenceModel ref(6.0, 10.0, step, std::move(table));

    LambdaEstimate lambdas;
    lambdas.lambda = {1.0};
    lambdas.h_bar = {0.0};

    CHECK(log_likelihood_ratio({}, lambdas, ref) == 0.0);

    LambdaEstimate zero;
    zero.lambda = {0.0};
    zero.h_bar = {0.0};
    CHECK(log_likelihood_ratio({{0.7}}, zero, ref) == doctest::Approx(0.0));

    // responses whose activations are exactly 2 and 3
    auto c_for_h = [](double h) { return std::sqrt(6.0 * std::atanh(h / 6.0)); };
    std::vector<std::vector<double>> responses{{c_for_h(2.0)}, {c_for_h(3.0)}};
    CHECK(log_likelihood_ratio(responses, lambdas, ref) ==
          doctest::Approx(2.6).epsilon(1e-9));
}

TEST_CASE("log-likelihood is additive over instance partitions") {
    Rng rng = make_rng(8);
    std::vector<double> samples;
    for (int i = 0; i < 5000; ++i) samples.push_back(uniform_real(rng, 0.0, 1.0));
    ReferenceModel ref = model_from_samples(samples, 6.0);
    LambdaEstimate lambdas;
    lambdas.lambda = {0.8, 2.5};
    lambdas.h_bar = {0.0, 0.0};
    std::vector<std::vector<double>> all, first, second;
    for (int k = 0; k < 9; ++k) {
        std::vector<double> inst{uniform_real(rng, 0, 1), uniform_real(rng, 0, 1)};
        all.push_back(inst);
        (k < 4 ? first : second).push_back(inst);
    }
    CHECK(log_likelihood_ratio(all, lambdas, ref) ==
          doctest::Approx(log_likelihood_ratio(first, lambdas, ref) +
                          log_likelihood_ratio(second, lambdas, ref)));
}

TEST_CASE("reference model JSON round-trip is exact") {
    Rng rng = make_rng(9);
    auto background = uniform_background(rng);
    StatConfig cfg;
    cfg.q_samples = 2000;
    ReferenceModel ref = estimate_reference(background, cfg, rng);
    ReferenceModel back = ReferenceModel::from_json(ref.to_json());
    CHECK(back.xi() == ref.xi());
    CHECK(back.log_z_table() == ref.log_z_table());
    CHECK(back.to_json() == ref.to_json());
}

TEST_CASE("shuffled background keeps mass but destroys placement") {
    Rng rng = make_rng(10);
    PlantOptions opt;
    opt.n_batches = 1;
    PlantedCorpus corpus = plant_corpus(rng, opt);
    auto shuffled = shuffled_background(corpus.rolls, rng);
    REQUIRE(shuffled.size() == corpus.rolls.size());
    // mass within a factor of 2 (overlapping re-placements can only lose mass)
    CHECK(shuffled[0].data.sum() > 0.3 * corpus.rolls[0].data.sum());
    CHECK(shuffled[0].data.sum() <= corpus.rolls[0].data.sum() + 1e-6);
    CHECK(!(shuffled[0].data == corpus.rolls[0].data));
}
