#include "herdcrf/moments.hpp"

#include <cmath>

namespace herdcrf {

namespace {

constexpr double kSimplexTol = 1e-9;

bool block_on_simplex(std::span<const double> b) {
    double sum = 0.0;
    for (double v : b) {
        if (v < 0.0) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= kSimplexTol;
}

// softmax without the max-shift: unary parameters are log-probabilities
// already, so exp() is safe and the shift would only perturb low bits.
void softmax_into(std::span<const double> in, std::span<double> out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!std::isfinite(in[i])) throw invalid_input_error("non-finite unary parameter");
        out[i] = std::exp(in[i]);
        sum += out[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw invalid_input_error("unary parameters overflow in softmax");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] /= sum;
}

}  // namespace

void MomentSpec::validate() const {
    if (eta_unary < 0.0 || eta_pairwise < 0.0)
        throw invalid_input_error("update rates must be nonnegative");
    if (eta_unary == 0.0 && eta_pairwise == 0.0)
        throw invalid_input_error("at least one update rate must be positive");
    if (static_cast<int>(unary_constrained.size()) != mu.nodes ||
        static_cast<int>(pairwise_constrained.size()) != mu.edge_count)
        throw invalid_input_error("constraint masks do not match moment shape");
}

MomentSpec moments_zero(const CrfGraph& g, const LabelSpace& l, double eta_unary) {
    MomentSpec spec;
    spec.mu = StatVector::zeros(g, l);
    spec.eta_unary = eta_unary;
    spec.eta_pairwise = 0.0;
    spec.in_polytope = false;
    spec.normalize_theta = false;
    spec.unary_constrained.assign(g.node_count, 1);
    spec.pairwise_constrained.assign(g.edge_count(), 0);
    spec.validate();
    return spec;
}

MomentSpec moments_from_unary(const CrfInstance& inst, double eta_unary) {
    inst.validate();
    MomentSpec spec;
    spec.mu = StatVector::zeros(inst.graph, inst.labels, inst.theta.layout);
    spec.eta_unary = eta_unary;
    spec.eta_pairwise = 0.0;
    spec.unary_constrained.assign(inst.graph.node_count, 0);
    spec.pairwise_constrained.assign(inst.graph.edge_count(), 0);
    for (int i = 0; i < inst.graph.node_count; ++i) {
        if (!inst.observed[i]) continue;
        softmax_into(inst.theta.unary_block(i), spec.mu.unary_block(i));
        spec.unary_constrained[i] = 1;
    }
    spec.in_polytope = validate_polytope(spec);
    spec.validate();
    return spec;
}

MomentSpec moments_full(const CrfInstance& inst, double eta_unary, double eta_pairwise) {
    if (inst.theta.layout != PairwiseLayout::PottsAgreement)
        throw invalid_input_error("full moments require the PottsAgreement layout");
    MomentSpec spec = moments_from_unary(inst, eta_unary);
    spec.eta_pairwise = eta_pairwise;
    for (int e = 0; e < inst.graph.edge_count(); ++e) {
        auto tp = inst.theta.pairwise_block(e);
        if (tp[0] != 0.0 || tp[1] > 0.0)
            throw invalid_input_error("pairwise parameters must be (0, -C) with C >= 0");
        double c = -tp[1];
        double z = 1.0 + std::exp(-c);
        auto mp = spec.mu.pairwise_block(e);
        mp[0] = 1.0 / z;
        mp[1] = std::exp(-c) / z;
        spec.pairwise_constrained[e] = 1;
    }
    spec.in_polytope = validate_polytope(spec);
    spec.validate();
    return spec;
}

MomentSpec moments_from_weighted_labelings(const CrfGraph& g, const LabelSpace& l,
                                           PairwiseLayout layout,
                                           std::span<const Labeling> labelings,
                                           std::span<const double> weights, double eta_unary,
                                           double eta_pairwise) {
    if (labelings.empty()) throw invalid_input_error("need at least one labeling");
    if (labelings.size() != weights.size())
        throw invalid_input_error("labelings/weights length mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw invalid_input_error("weights must be nonnegative");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw invalid_input_error("weights must sum to 1");

    MomentSpec spec;
    spec.mu = StatVector::zeros(g, l, layout);
    spec.eta_unary = eta_unary;
    spec.eta_pairwise = eta_pairwise;
    spec.unary_constrained.assign(g.node_count, 1);
    spec.pairwise_constrained.assign(g.edge_count(), 1);
    for (std::size_t k = 0; k < labelings.size(); ++k) {
        const Labeling& x = labelings[k];
        check_labeling(x, g.node_count, l.count);
        for (int i = 0; i < g.node_count; ++i) spec.mu.unary_block(i)[x[i]] += weights[k];
        for (int e = 0; e < g.edge_count(); ++e) {
            auto [i, j] = g.edges[e];
            spec.mu.pairwise_block(e)[pairwise_stat_index(layout, l.count, x[i], x[j])] +=
                weights[k];
        }
    }
    spec.in_polytope = validate_polytope(spec);
    spec.validate();
    return spec;
}

MomentSpec moments_from_sample_average(const CrfGraph& g, const LabelSpace& l,
                                       PairwiseLayout layout, std::span<const Labeling> labelings,
                                       double eta_unary, double eta_pairwise) {
    std::vector<double> w(labelings.size(), 1.0 / static_cast<double>(labelings.size()));
    return moments_from_weighted_labelings(g, l, layout, labelings, w, eta_unary, eta_pairwise);
}

bool validate_polytope(const StatVector& mu) {
    for (int i = 0; i < mu.nodes; ++i)
        if (!block_on_simplex(mu.unary_block(i))) return false;
    for (int e = 0; e < mu.edge_count; ++e)
        if (!block_on_simplex(mu.pairwise_block(e))) return false;
    return true;
}

bool validate_polytope(const MomentSpec& spec) {
    for (int i = 0; i < spec.mu.nodes; ++i)
        if (spec.unary_constrained[i] && !block_on_simplex(spec.mu.unary_block(i))) return false;
    for (int e = 0; e < spec.mu.edge_count; ++e)
        if (spec.pairwise_constrained[e] && !block_on_simplex(spec.mu.pairwise_block(e)))
            return false;
    return true;
}

}  // namespace herdcrf
