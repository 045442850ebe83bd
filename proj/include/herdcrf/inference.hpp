#pragma once

#include <functional>

#include "herdcrf/crf.hpp"

namespace herdcrf {

struct LbpConfig {
    enum class Schedule { Synchronous };

    int max_iterations = 200;
    double damping = 0.5;            // in [0, 1)
    double convergence_tol = 1e-6;   // L-inf change in messages
    Schedule schedule = Schedule::Synchronous;

    void validate() const;
};

struct MapResult {
    Labeling labeling;
    double energy_value = 0.0;
    bool converged = false;
    int iterations_used = 0;
};

// Exhaustive maximizer. Ties break toward the lexicographically smallest
// labeling. Refuses state spaces above 10^7.
MapResult map_bruteforce(const StatVector& theta, const CrfGraph& g, const LabelSpace& l);

// Max-product loopy BP on the pairwise factor graph, synchronous damped
// schedule, messages kept max-normalized in the log domain. Beliefs are
// decoded each iteration (per-node argmax, lowest-index tie break) and the
// best-energy decode is returned. Non-convergence is reported in the result,
// not an error.
MapResult map_lbp(const StatVector& theta, const CrfGraph& g, const LabelSpace& l,
                  const LbpConfig& cfg = {});

// theta^T mu <= theta^T phi(x) + slack: the relaxed requirement on each
// sample under which the moment-reconstruction guarantee survives
// approximate maximization.
bool check_herding_condition(const StatVector& theta, const StatVector& mu, const CrfGraph& g,
                             const Labeling& x);

using InferenceFn = std::function<MapResult(const StatVector&)>;

enum class InferenceKind { BruteForce, Lbp };

struct InferenceSpec {
    InferenceKind kind = InferenceKind::Lbp;
    LbpConfig lbp{};
};

InferenceFn make_inference(const InferenceSpec& spec, const CrfGraph& g, const LabelSpace& l);

}  // namespace herdcrf
