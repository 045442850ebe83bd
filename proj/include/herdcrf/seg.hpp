#pragma once

#include <array>
#include <cstdint>

#include "herdcrf/herding.hpp"

namespace herdcrf {

struct SigmoidParams {
    double a = -7.0;
    double b = 15.0;
};

struct PottsParams {
    double decay = 10.0;   // distance decay factor
    double weight = 0.08;  // pairwise re-weight

    void validate() const;
};

// Defaults tuned for the interactive setting, where label propagation does
// more of the work.
inline PottsParams interactive_potts() { return {1.0, 0.15}; }

double sigmoid_probability(double s, const SigmoidParams& p);

// Color-modulated Potts block (0, -C): C = weight * exp(-decay * d) with d
// the RGB distance normalized to [0, 1]. Similar regions get a strong
// agreement pull, dissimilar ones almost none.
std::array<double, 2> build_potts(const std::array<double, 3>& color_i,
                                  const std::array<double, 3>& color_j, const PottsParams& p);

// --- instance descriptions (mirrors the JSON interchange format) -----------

struct NodeSpec {
    std::optional<std::vector<double>> unary_scores;
    bool observed = false;
    std::optional<int> gt;
    std::optional<std::array<double, 3>> color;
};

struct EdgeSpec {
    int i = 0;
    int j = 0;
    std::optional<double> similarity;  // in [0,1]; overrides color distance
};

struct InstanceSpec {
    int labels = 2;
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;
};

// Turn a description into a ready instance: sigmoid + normalization + clamped
// log on the scores, color-modulated Potts blocks on the edges. Nodes without
// scores get zero unary parameters and count as unobserved.
CrfInstance assemble_instance(const InstanceSpec& spec, const SigmoidParams& sigmoid,
                              const PottsParams& potts);

enum class InstanceKind { GridSemantic, GridInteractive };

// Planted-blob grid: ground truth from a seeded Voronoi partition, per-node
// colors around per-label prototypes, unary scores = planted indicator plus
// additive Gaussian noise (semantic) or absent (interactive).
InstanceSpec generate_grid_spec(InstanceKind kind, int width, int height, int labels,
                                double noise, std::uint64_t seed);

CrfInstance generate_instance(InstanceKind kind, int width, int height, int labels, double noise,
                              std::uint64_t seed);

// Interactive masking: a seeded ceil(fraction*N)-subset of nodes gets its
// unary parameters pinned to the (clamped) log one-hot of the ground truth;
// everything else is unobserved with zero unaries.
CrfInstance mask_unaries(const CrfInstance& inst, double observed_fraction, std::uint64_t seed);

// --- evaluation -------------------------------------------------------------

enum class MetricKind { PerClassAccuracy, Jaccard };

// Macro-averaged score in [0,100] over the classes present in gt.
double score_labeling(const Labeling& pred, const Labeling& gt, int label_count,
                      MetricKind metric);

// Per-class scores (entries for classes absent from gt are -1).
std::vector<double> per_class_scores(const Labeling& pred, const Labeling& gt, int label_count,
                                     MetricKind metric);

std::pair<int, double> oracle_select(const HypothesisSet& hypotheses, const Labeling& gt,
                                     int label_count, MetricKind metric);

// Per-node majority vote; ties toward the lowest label index.
Labeling mode_labeling(std::span<const Labeling> samples, int label_count);

struct EvalReport {
    MetricKind metric_kind = MetricKind::PerClassAccuracy;
    std::vector<double> oracle_accuracy;  // index m-1: best over the first m hypotheses
    std::vector<double> mode_accuracy;    // index m-1: majority vote over the first m
    std::vector<double> per_class;        // of the oracle pick at M_max
    double map_accuracy = 0.0;            // score of the first hypothesis
};

EvalReport evaluate(const HypothesisSet& hypotheses, const CrfInstance& inst, MetricKind metric);

}  // namespace herdcrf
