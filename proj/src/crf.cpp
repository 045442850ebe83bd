#include "herdcrf/crf.hpp"

#include <algorithm>
#include <unordered_set>

#include "herdcrf/kernels.hpp"

namespace herdcrf {

void LabelSpace::validate() const {
    if (count < 2) throw invalid_input_error("label space needs at least 2 labels");
    if (!names.empty()) {
        if (static_cast<int>(names.size()) != count)
            throw invalid_input_error("label names length does not match label count");
        std::unordered_set<std::string> seen(names.begin(), names.end());
        if (static_cast<int>(seen.size()) != count)
            throw invalid_input_error("label names must be unique");
    }
}

CrfGraph CrfGraph::make(int node_count, std::vector<std::pair<int, int>> raw_edges) {
    if (node_count <= 0) throw invalid_input_error("graph needs a positive node count");
    for (auto& [i, j] : raw_edges) {
        if (i == j) throw invalid_input_error("self-loop edge");
        if (i < 0 || j < 0 || i >= node_count || j >= node_count)
            throw invalid_input_error("edge endpoint out of range");
        if (i > j) std::swap(i, j);
    }
    std::sort(raw_edges.begin(), raw_edges.end());
    if (std::adjacent_find(raw_edges.begin(), raw_edges.end()) != raw_edges.end())
        throw invalid_input_error("duplicate edge");
    CrfGraph g;
    g.node_count = node_count;
    g.edges = std::move(raw_edges);
    return g;
}

StatVector StatVector::zeros(const CrfGraph& g, const LabelSpace& l, PairwiseLayout layout) {
    StatVector v;
    v.layout = layout;
    v.nodes = g.node_count;
    v.labels = l.count;
    v.edge_count = g.edge_count();
    v.unary.assign(static_cast<std::size_t>(v.nodes) * v.labels, 0.0);
    v.pairwise.assign(static_cast<std::size_t>(v.edge_count) * v.pair_arity(), 0.0);
    return v;
}

void CrfInstance::validate() const {
    labels.validate();
    if (theta.nodes != graph.node_count || theta.labels != labels.count ||
        theta.edge_count != graph.edge_count())
        throw invalid_input_error("theta shape does not match graph/labels");
    if (static_cast<int>(observed.size()) != graph.node_count)
        throw invalid_input_error("observed mask length does not match node count");
    if (ground_truth) check_labeling(*ground_truth, graph.node_count, labels.count);
}

void check_labeling(const Labeling& x, int nodes, int labels) {
    if (static_cast<int>(x.size()) != nodes)
        throw invalid_input_error("labeling length does not match node count");
    for (int v : x)
        if (v < 0 || v >= labels) throw invalid_input_error("label index out of range");
}

StatVector sufficient_stats(const CrfGraph& g, const LabelSpace& l, PairwiseLayout layout,
                            const Labeling& x) {
    check_labeling(x, g.node_count, l.count);
    StatVector phi = StatVector::zeros(g, l, layout);
    for (int i = 0; i < g.node_count; ++i) phi.unary_block(i)[x[i]] = 1.0;
    for (int e = 0; e < g.edge_count(); ++e) {
        auto [i, j] = g.edges[e];
        phi.pairwise_block(e)[pairwise_stat_index(layout, l.count, x[i], x[j])] = 1.0;
    }
    return phi;
}

StatVector sufficient_stats(const CrfInstance& inst, const Labeling& x) {
    return sufficient_stats(inst.graph, inst.labels, inst.theta.layout, x);
}

double energy(const StatVector& theta, const CrfGraph& g, const Labeling& x) {
    if (theta.nodes != g.node_count || theta.edge_count != g.edge_count())
        throw invalid_input_error("theta shape does not match graph");
    check_labeling(x, theta.nodes, theta.labels);
    double e = 0.0;
    for (int i = 0; i < theta.nodes; ++i) e += theta.unary_block(i)[x[i]];
    for (int k = 0; k < theta.edge_count; ++k) {
        auto [i, j] = g.edges[k];
        e += theta.pairwise_block(k)[pairwise_stat_index(theta.layout, theta.labels, x[i], x[j])];
    }
    return e;
}

double energy(const CrfInstance& inst, const Labeling& x) {
    return energy(inst.theta, inst.graph, x);
}

double inner_product(const StatVector& a, const StatVector& b) {
    if (!a.same_shape(b)) throw invalid_input_error("stat vector shape/layout mismatch");
    const auto& k = kern::active();
    return k.dot(a.unary.data(), b.unary.data(), a.unary.size()) +
           k.dot(a.pairwise.data(), b.pairwise.data(), a.pairwise.size());
}

int unary_similarity(const Labeling& x, const Labeling& y) {
    if (x.size() != y.size()) throw invalid_input_error("labeling length mismatch");
    int same = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] == y[i]) ++same;
    return same;
}

StatVector potts_to_full(const StatVector& v) {
    if (v.layout != PairwiseLayout::PottsAgreement)
        throw invalid_input_error("potts_to_full expects a PottsAgreement vector");
    StatVector full = v;
    full.layout = PairwiseLayout::Full;
    full.pairwise.assign(static_cast<std::size_t>(v.edge_count) * v.labels * v.labels, 0.0);
    for (int e = 0; e < v.edge_count; ++e) {
        auto src = v.pairwise_block(e);
        auto dst = full.pairwise_block(e);
        for (int a = 0; a < v.labels; ++a)
            for (int b = 0; b < v.labels; ++b) dst[a * v.labels + b] = (a == b) ? src[0] : src[1];
    }
    return full;
}

}  // namespace herdcrf
