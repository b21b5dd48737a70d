#ifndef MOTIFCODE_STATMODEL_HPP
#define MOTIFCODE_STATMODEL_HPP

#include <span>
#include <string>
#include <vector>

#include "motifcode/rng.hpp"
#include "motifcode/roll.hpp"

namespace motif {

struct StatConfig {
    double xi = 6.0;           // activation saturation level
    int q_samples = 20000;     // background responses used to estimate q(c)
    int max_sample_duration = 8;  // basis durations drawn when sampling q
};

// Saturating activation h(r) = xi * (2 / (1 + e^(-2r/xi)) - 1), r >= 0.
// Equals xi * tanh(r / xi); increasing, h(0) = 0, sup = xi.
double activation(double r, double xi);

// Background response distribution q(c) summarized as a tabulated
// normalizer log Z(lambda) = log E_q[e^(lambda * h(c^2))] on a lambda grid.
class ReferenceModel {
public:
    ReferenceModel() = default;
    ReferenceModel(double xi, double lambda_max, double lambda_step,
                   std::vector<double> log_z);

    double xi() const { return xi_; }
    double lambda_max() const { return lambda_max_; }
    double lambda_step() const { return lambda_step_; }
    const std::vector<double>& log_z_table() const { return log_z_; }

    // log Z with linear interpolation; clamped to the grid ends.
    double log_z(double lambda) const;
    // E_{p(c;lambda)}[h] = d/dlambda log Z, from grid differences.
    double mean_h(double lambda) const;

    std::string to_json() const;
    static ReferenceModel from_json(const std::string& text);

private:
    double xi_ = 6.0;
    double lambda_max_ = 10.0;
    double lambda_step_ = 0.01;
    std::vector<double> log_z_;  // at 0, step, 2*step, ..., lambda_max
};

// Samples single-basis responses (mean intensity over a random horizontal
// span) at random placements in the background rolls and tabulates Z.
// Throws InputError when the background has no positive cells.
ReferenceModel estimate_reference(const std::vector<PianoRoll>& background_rolls,
                                  const StatConfig& cfg, Rng& rng);

// Moment-matched exponential-family fit for one basis.
struct BasisFit {
    double lambda = 0.0;
    double h_bar = 0.0;  // mean activation over the instances
};

// Solves E_{p(c;lambda)}[h] = mean h(|c|^2) on the tabulated grid.
// A mean at or below the background level gives lambda = 0; a mean at or
// above the grid's reachable maximum clamps to lambda_max.
BasisFit fit_lambda(std::span<const double> responses, const ReferenceModel& ref);

struct LambdaEstimate {
    std::vector<double> lambda;
    std::vector<double> h_bar;
};

// Sum over instances and bases of lambda_i * h(c^2) - log Z(lambda_i).
// responses[k][i] is the basis-i response of instance k.
double log_likelihood_ratio(const std::vector<std::vector<double>>& responses,
                            const LambdaEstimate& lambdas, const ReferenceModel& ref);

// Structure-free version of the rolls: every note re-placed uniformly at
// random, keeping durations and intensities. Used as the q(c) background.
std::vector<PianoRoll> shuffled_background(const std::vector<PianoRoll>& rolls,
                                           Rng& rng);

} // namespace motif

#endif
