#pragma once

#include "herdcrf/crf.hpp"

namespace herdcrf {

// Target moments plus per-block update rates. Blocks can be marked
// unconstrained (interactive setting: nodes whose unary term is unknown);
// those blocks are excluded from parameter updates and from the
// reconstruction error.
struct MomentSpec {
    StatVector mu;
    double eta_unary = 0.0;
    double eta_pairwise = 0.0;
    bool in_polytope = false;
    bool normalize_theta = false;  // renormalize theta to a fixed radius after each step
    std::vector<std::uint8_t> unary_constrained;
    std::vector<std::uint8_t> pairwise_constrained;

    void validate() const;

    bool unary_active(int i) const { return eta_unary > 0.0 && unary_constrained[i] != 0; }
    bool pairwise_active(int e) const {
        return eta_pairwise > 0.0 && pairwise_constrained[e] != 0;
    }
};

// mu = 0 everywhere, eta_p = 0: the moment target whose closest reconstructable
// point is the equiprobable marginal on every node.
MomentSpec moments_zero(const CrfGraph& g, const LabelSpace& l, double eta_unary);

// Unary moments from the instance's own unary parameters: mu_u^i =
// softmax(theta_u^i) on observed nodes; unobserved nodes are unconstrained.
// eta_p = 0.
MomentSpec moments_from_unary(const CrfInstance& inst, double eta_unary);

// Unary part as moments_from_unary; pairwise moments are the Potts potential
// (0, -C) exponentiated and normalized to a marginal. Requires the attraction
// convention (PottsAgreement layout, first entry 0, second <= 0).
MomentSpec moments_full(const CrfInstance& inst, double eta_unary, double eta_pairwise);

// Moments from a convex combination of labelings: mu = sum_k w_k phi(x_k),
// weights nonnegative and summing to 1. Every block is constrained. This is
// a certified marginal-polytope point by construction.
MomentSpec moments_from_weighted_labelings(const CrfGraph& g, const LabelSpace& l,
                                           PairwiseLayout layout,
                                           std::span<const Labeling> labelings,
                                           std::span<const double> weights, double eta_unary,
                                           double eta_pairwise);

// Uniform-weight convenience wrapper.
MomentSpec moments_from_sample_average(const CrfGraph& g, const LabelSpace& l,
                                       PairwiseLayout layout, std::span<const Labeling> labelings,
                                       double eta_unary, double eta_pairwise);

// Necessary-condition membership check: every block nonnegative and summing
// to 1 within 1e-9. (Local consistency between unary and pairwise blocks is
// not verified.)
bool validate_polytope(const StatVector& mu);

// Same check restricted to the spec's constrained blocks.
bool validate_polytope(const MomentSpec& spec);

}  // namespace herdcrf
