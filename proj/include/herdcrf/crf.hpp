#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace herdcrf {

struct invalid_input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a requested computation exceeds a hard size guard
// (e.g. exhaustive MAP on a state space that is too large).
struct capacity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Labeling = std::vector<int>;

struct LabelSpace {
    int count = 2;
    std::vector<std::string> names;  // empty, or `count` unique entries

    void validate() const;
};

// Undirected graph over nodes [0, node_count). Edges are stored canonically:
// (min, max) pairs, sorted, no duplicates, no self-loops. All per-edge blocks
// elsewhere in the library follow this order, which makes serialized vectors
// reproducible.
struct CrfGraph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;

    static CrfGraph make(int node_count, std::vector<std::pair<int, int>> raw_edges);

    int edge_count() const { return static_cast<int>(edges.size()); }
};

enum class PairwiseLayout {
    PottsAgreement,  // per edge: (agree, disagree) statistic
    Full,            // per edge: |L|^2 one-hot over (x_i, x_j)
};

// Flat vector in the sufficient-statistics space. The same shape carries
// phi(x), the parameters theta, and moment targets mu. Unary blocks are
// node-major [N x L]; pairwise blocks edge-major [E x arity].
struct StatVector {
    PairwiseLayout layout = PairwiseLayout::PottsAgreement;
    int nodes = 0;
    int labels = 0;
    int edge_count = 0;
    std::vector<double> unary;
    std::vector<double> pairwise;

    static StatVector zeros(const CrfGraph& g, const LabelSpace& l,
                            PairwiseLayout layout = PairwiseLayout::PottsAgreement);

    int pair_arity() const { return layout == PairwiseLayout::Full ? labels * labels : 2; }
    std::size_t size() const { return unary.size() + pairwise.size(); }

    std::span<double> unary_block(int i) {
        return {unary.data() + static_cast<std::size_t>(i) * labels, static_cast<std::size_t>(labels)};
    }
    std::span<const double> unary_block(int i) const {
        return {unary.data() + static_cast<std::size_t>(i) * labels, static_cast<std::size_t>(labels)};
    }
    std::span<double> pairwise_block(int e) {
        auto a = static_cast<std::size_t>(pair_arity());
        return {pairwise.data() + static_cast<std::size_t>(e) * a, a};
    }
    std::span<const double> pairwise_block(int e) const {
        auto a = static_cast<std::size_t>(pair_arity());
        return {pairwise.data() + static_cast<std::size_t>(e) * a, a};
    }

    bool same_shape(const StatVector& o) const {
        return layout == o.layout && nodes == o.nodes && labels == o.labels &&
               edge_count == o.edge_count;
    }
};

struct CrfInstance {
    CrfGraph graph;
    LabelSpace labels;
    StatVector theta;
    std::vector<std::uint8_t> observed;   // per node: unary term known
    std::optional<Labeling> ground_truth;

    void validate() const;
};

// --- sufficient statistics and energies ------------------------------------

StatVector sufficient_stats(const CrfGraph& g, const LabelSpace& l, PairwiseLayout layout,
                            const Labeling& x);
StatVector sufficient_stats(const CrfInstance& inst, const Labeling& x);

// theta^T phi(x), evaluated by direct indexing (no dense product).
double energy(const StatVector& theta, const CrfGraph& g, const Labeling& x);
double energy(const CrfInstance& inst, const Labeling& x);

double inner_product(const StatVector& a, const StatVector& b);

// Number of positions where the labelings agree (N - Hamming distance).
int unary_similarity(const Labeling& x, const Labeling& y);

// Embed a PottsAgreement parameter vector as the equivalent Full-layout one
// (agreement value on the diagonal, disagreement value off it).
StatVector potts_to_full(const StatVector& v);

void check_labeling(const Labeling& x, int nodes, int labels);

// Index of the pairwise statistic selected by (xi, xj) under a layout.
inline int pairwise_stat_index(PairwiseLayout layout, int labels, int xi, int xj) {
    if (layout == PairwiseLayout::PottsAgreement) return xi == xj ? 0 : 1;
    return xi * labels + xj;
}

}  // namespace herdcrf
