#pragma once

#include <optional>

#include "herdcrf/inference.hpp"
#include "herdcrf/moments.hpp"

namespace herdcrf {

// One run of the dynamical system: at each iteration, MAP inference on the
// current parameters produces a sample, then constrained blocks move by
// eta * (mu - phi(sample)).
struct HerdingConfig {
    StatVector initial_theta;
    MomentSpec spec;
    int num_samples = 1;
    InferenceSpec inference{};
    std::optional<double> theta_norm_cap;  // explicit radius; overrides spec.normalize_theta
    InferenceFn custom_inference;          // when set, used instead of `inference`

    void validate() const;
};

struct HypothesisSet {
    std::vector<Labeling> samples;
    StatVector running_mean_stats;          // (1/M) sum of phi over samples
    std::vector<double> error_trace;        // weighted squared moment error after each sample
    std::vector<std::uint8_t> condition_trace;
    std::vector<double> energy_trace;       // energy of each sample under the initial theta
    std::vector<StatVector> theta_trace;    // theta_(0) .. theta_(M)
};

// One iteration: sample from `theta`, return (sample, updated theta).
std::pair<Labeling, StatVector> herding_step(const StatVector& theta, const MomentSpec& spec,
                                             const InferenceFn& inference, const CrfGraph& g,
                                             std::optional<double> norm_cap = std::nullopt);

HypothesisSet herding_run(const CrfGraph& g, const LabelSpace& l, const HerdingConfig& cfg);

// The diverse M-best procedure: maximize, then subtract lambda * phi_u(sample)
// from the unary parameters. Pairwise parameters never change.
HypothesisSet divmbest_run(const CrfGraph& g, const LabelSpace& l, const StatVector& theta,
                           double lambda, int num_samples, const InferenceSpec& inference = {},
                           const InferenceFn& custom_inference = {});

// Weighted squared distance between mu and the sample-average statistics,
// over constrained blocks, each block weighted by its update rate.
double reconstruction_error(const StatVector& mu, std::span<const Labeling> samples,
                            const MomentSpec& spec, const CrfGraph& g, const LabelSpace& l);

// The equivalent maximization objective for the next sample given m previous
// ones: initialization pull (1/(eta m)) phi^T Theta, repulsion from previous
// samples, and correlation with the moment target. Scaled so that with a
// single uniform rate it reads exactly as the three-term form; its argmax
// equals the next herding sample for any per-block rates.
double diverse_objective(const Labeling& x, std::span<const Labeling> samples,
                         const StatVector& initial_theta, const MomentSpec& spec,
                         const CrfGraph& g, const LabelSpace& l);

// Per-node empirical label frequencies of a sample set (unary blocks only;
// result has no edges).
StatVector mean_unary_marginals(std::span<const Labeling> samples, int label_count);

}  // namespace herdcrf
