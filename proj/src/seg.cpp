#include "herdcrf/seg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "herdcrf/rng.hpp"

namespace herdcrf {

namespace {

constexpr double kProbClamp = 1e-8;

const std::array<std::array<double, 3>, 8> kPalette = {{
    {0.85, 0.15, 0.15},
    {0.15, 0.75, 0.20},
    {0.15, 0.25, 0.85},
    {0.90, 0.80, 0.15},
    {0.80, 0.20, 0.80},
    {0.15, 0.80, 0.80},
    {0.85, 0.50, 0.15},
    {0.45, 0.45, 0.45},
}};

std::array<double, 3> label_prototype(int label, Rng& rng) {
    if (label < static_cast<int>(kPalette.size())) return kPalette[label];
    return {rng.next_double(), rng.next_double(), rng.next_double()};
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// normalized sigmoid probabilities -> clamped log
void scores_to_log_probs(std::span<const double> scores, const SigmoidParams& sp,
                         std::span<double> out) {
    double sum = 0.0;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        out[l] = sigmoid_probability(scores[l], sp);
        sum += out[l];
    }
    if (sum <= 0.0) {  // every sigmoid underflowed: fall back to uniform
        double u = std::log(1.0 / static_cast<double>(scores.size()));
        for (std::size_t l = 0; l < scores.size(); ++l) out[l] = u;
        return;
    }
    for (std::size_t l = 0; l < scores.size(); ++l) {
        double p = out[l] / sum;
        out[l] = std::log(p < kProbClamp ? kProbClamp : p);
    }
}

}  // namespace

void PottsParams::validate() const {
    if (!(decay > 0.0) || !(weight > 0.0))
        throw invalid_input_error("potts decay and weight must be positive");
}

double sigmoid_probability(double s, const SigmoidParams& p) {
    if (!std::isfinite(s)) throw invalid_input_error("non-finite classifier score");
    return 1.0 / (1.0 + std::exp(-(p.a + p.b * s)));
}

std::array<double, 2> build_potts(const std::array<double, 3>& color_i,
                                  const std::array<double, 3>& color_j, const PottsParams& p) {
    p.validate();
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
        if (color_i[c] < 0.0 || color_i[c] > 1.0 || color_j[c] < 0.0 || color_j[c] > 1.0)
            throw invalid_input_error("colors must lie in [0,1]");
        double d = color_i[c] - color_j[c];
        d2 += d * d;
    }
    double dist = std::sqrt(d2) / std::sqrt(3.0);
    double c = p.weight * std::exp(-p.decay * dist);
    return {0.0, -c};
}

CrfInstance assemble_instance(const InstanceSpec& spec, const SigmoidParams& sigmoid,
                              const PottsParams& potts) {
    if (spec.labels < 2) throw invalid_input_error("instance needs at least 2 labels");
    const int n = static_cast<int>(spec.nodes.size());
    if (n == 0) throw invalid_input_error("instance has no nodes");

    std::vector<std::pair<int, int>> raw;
    raw.reserve(spec.edges.size());
    for (const auto& e : spec.edges) raw.push_back({e.i, e.j});
    CrfGraph graph = CrfGraph::make(n, raw);

    // Re-associate edge attributes with the canonical order.
    std::vector<const EdgeSpec*> by_edge(graph.edge_count(), nullptr);
    for (const auto& e : spec.edges) {
        std::pair<int, int> key{std::min(e.i, e.j), std::max(e.i, e.j)};
        auto it = std::lower_bound(graph.edges.begin(), graph.edges.end(), key);
        by_edge[it - graph.edges.begin()] = &e;
    }

    LabelSpace labels{spec.labels, {}};
    CrfInstance inst;
    inst.graph = std::move(graph);
    inst.labels = labels;
    inst.theta = StatVector::zeros(inst.graph, labels);
    inst.observed.assign(n, 0);

    bool any_gt = false;
    for (const auto& node : spec.nodes)
        if (node.gt) any_gt = true;
    if (any_gt) inst.ground_truth = Labeling(n, 0);

    for (int i = 0; i < n; ++i) {
        const NodeSpec& node = spec.nodes[i];
        if (node.unary_scores) {
            if (static_cast<int>(node.unary_scores->size()) != spec.labels)
                throw invalid_input_error("unary score vector length mismatch");
            if (node.observed) {
                scores_to_log_probs(*node.unary_scores, sigmoid, inst.theta.unary_block(i));
                inst.observed[i] = 1;
            }
        }
        if (node.gt) {
            if (*node.gt < 0 || *node.gt >= spec.labels)
                throw invalid_input_error("ground-truth label out of range");
            (*inst.ground_truth)[i] = *node.gt;
        } else if (any_gt) {
            throw invalid_input_error("ground truth must cover all nodes or none");
        }
    }

    for (int e = 0; e < inst.graph.edge_count(); ++e) {
        const EdgeSpec& es = *by_edge[e];
        double c;
        if (es.similarity) {
            if (*es.similarity < 0.0 || *es.similarity > 1.0)
                throw invalid_input_error("edge similarity must lie in [0,1]");
            c = potts.weight * *es.similarity;
        } else {
            auto [i, j] = inst.graph.edges[e];
            const auto& ci = spec.nodes[i].color;
            const auto& cj = spec.nodes[j].color;
            if (ci && cj) {
                c = -build_potts(*ci, *cj, potts)[1];
            } else {
                c = potts.weight;  // no similarity information: full attraction
            }
        }
        auto pb = inst.theta.pairwise_block(e);
        pb[0] = 0.0;
        pb[1] = -c;
    }

    inst.validate();
    return inst;
}

InstanceSpec generate_grid_spec(InstanceKind kind, int width, int height, int labels,
                                double noise, std::uint64_t seed) {
    if (width < 1 || height < 1 || width * height > 10000)
        throw invalid_input_error("grid dimensions out of range (w*h <= 1e4)");
    if (labels < 2) throw invalid_input_error("need at least 2 labels");
    if (noise < 0.0) throw invalid_input_error("noise must be nonnegative");

    const int n = width * height;
    Rng rng(seed);

    std::vector<std::array<double, 3>> prototypes;
    prototypes.reserve(labels);
    for (int l = 0; l < labels; ++l) prototypes.push_back(label_prototype(l, rng));

    // Voronoi seeds: one per label, plus extras on larger grids so labels can
    // occupy several blobs.
    int blob_count = labels;
    if (n >= 36) blob_count += labels / 2 + 1;
    blob_count = std::min(blob_count, n);

    std::vector<int> cells(n);
    std::iota(cells.begin(), cells.end(), 0);
    for (int b = 0; b < blob_count; ++b) {
        int j = b + rng.next_int(n - b);
        std::swap(cells[b], cells[j]);
    }

    auto cell_xy = [width](int c) { return std::pair<int, int>{c % width, c / width}; };

    InstanceSpec spec;
    spec.labels = labels;
    spec.nodes.resize(n);

    for (int i = 0; i < n; ++i) {
        auto [x, y] = cell_xy(i);
        int best = 0;
        long best_d = std::numeric_limits<long>::max();
        for (int b = 0; b < blob_count; ++b) {
            auto [sx, sy] = cell_xy(cells[b]);
            long d = static_cast<long>(x - sx) * (x - sx) + static_cast<long>(y - sy) * (y - sy);
            if (d < best_d) {
                best_d = d;
                best = b;
            }
        }
        int gt = best % labels;
        spec.nodes[i].gt = gt;

        // Semantic instances corrupt the classifier scores; interactive ones
        // have no scores, so there `noise` widens the color spread instead
        // (the only evidence left when unaries are missing).
        double color_sigma = kind == InstanceKind::GridInteractive ? 0.08 + noise : 0.08;
        std::array<double, 3> color;
        for (int c = 0; c < 3; ++c)
            color[c] = clamp01(prototypes[gt][c] + color_sigma * rng.next_gaussian());
        spec.nodes[i].color = color;

        if (kind == InstanceKind::GridSemantic) {
            std::vector<double> scores(labels);
            for (int l = 0; l < labels; ++l)
                scores[l] = (l == gt ? 1.0 : 0.0) + noise * rng.next_gaussian();
            spec.nodes[i].unary_scores = std::move(scores);
            spec.nodes[i].observed = true;
        }
    }

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int i = y * width + x;
            if (x + 1 < width) spec.edges.push_back({i, i + 1, std::nullopt});
            if (y + 1 < height) spec.edges.push_back({i, i + width, std::nullopt});
        }

    return spec;
}

CrfInstance generate_instance(InstanceKind kind, int width, int height, int labels, double noise,
                              std::uint64_t seed) {
    PottsParams potts =
        kind == InstanceKind::GridInteractive ? interactive_potts() : PottsParams{};
    return assemble_instance(generate_grid_spec(kind, width, height, labels, noise, seed),
                             SigmoidParams{}, potts);
}

CrfInstance mask_unaries(const CrfInstance& inst, double observed_fraction, std::uint64_t seed) {
    if (!(observed_fraction > 0.0 && observed_fraction <= 1.0))
        throw invalid_input_error("observed fraction must lie in (0,1]");
    if (!inst.ground_truth) throw invalid_input_error("masking requires ground truth");

    const int n = inst.graph.node_count;
    const int k = static_cast<int>(std::ceil(observed_fraction * n));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        int j = i + rng.next_int(n - i);
        std::swap(order[i], order[j]);
    }

    CrfInstance out = inst;
    out.observed.assign(n, 0);
    for (auto& v : out.theta.unary) v = 0.0;

    const int L = inst.labels.count;
    const double lo = std::log(kProbClamp);
    for (int t = 0; t < k; ++t) {
        int i = order[t];
        int gt = (*inst.ground_truth)[i];
        auto ub = out.theta.unary_block(i);
        for (int l = 0; l < L; ++l) ub[l] = (l == gt) ? 0.0 : lo;
        out.observed[i] = 1;
    }
    return out;
}

// --- evaluation -------------------------------------------------------------

std::vector<double> per_class_scores(const Labeling& pred, const Labeling& gt, int label_count,
                                     MetricKind metric) {
    if (pred.size() != gt.size()) throw invalid_input_error("labeling length mismatch");
    std::vector<double> gt_count(label_count, 0), correct(label_count, 0), pred_count(label_count, 0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt_count[gt[i]] += 1;
        pred_count[pred[i]] += 1;
        if (pred[i] == gt[i]) correct[gt[i]] += 1;
    }
    std::vector<double> scores(label_count, -1.0);
    for (int c = 0; c < label_count; ++c) {
        if (gt_count[c] == 0) continue;
        if (metric == MetricKind::PerClassAccuracy) {
            scores[c] = 100.0 * correct[c] / gt_count[c];
        } else {
            double uni = gt_count[c] + pred_count[c] - correct[c];
            scores[c] = 100.0 * correct[c] / uni;
        }
    }
    return scores;
}

double score_labeling(const Labeling& pred, const Labeling& gt, int label_count,
                      MetricKind metric) {
    auto scores = per_class_scores(pred, gt, label_count, metric);
    double sum = 0.0;
    int present = 0;
    for (double s : scores)
        if (s >= 0.0) {
            sum += s;
            ++present;
        }
    return present > 0 ? sum / present : 0.0;
}

std::pair<int, double> oracle_select(const HypothesisSet& hypotheses, const Labeling& gt,
                                     int label_count, MetricKind metric) {
    if (hypotheses.samples.empty()) throw invalid_input_error("empty hypothesis set");
    int best = 0;
    double best_score = -1.0;
    for (std::size_t m = 0; m < hypotheses.samples.size(); ++m) {
        double s = score_labeling(hypotheses.samples[m], gt, label_count, metric);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(m);
        }
    }
    return {best, best_score};
}

Labeling mode_labeling(std::span<const Labeling> samples, int label_count) {
    if (samples.empty()) throw invalid_input_error("empty hypothesis set");
    const int n = static_cast<int>(samples[0].size());
    Labeling mode(n, 0);
    std::vector<int> counts(label_count);
    for (int i = 0; i < n; ++i) {
        std::fill(counts.begin(), counts.end(), 0);
        for (const Labeling& s : samples) ++counts[s[i]];
        int best = 0;
        for (int l = 1; l < label_count; ++l)
            if (counts[l] > counts[best]) best = l;
        mode[i] = best;
    }
    return mode;
}

EvalReport evaluate(const HypothesisSet& hypotheses, const CrfInstance& inst, MetricKind metric) {
    if (hypotheses.samples.empty()) throw invalid_input_error("empty hypothesis set");
    if (!inst.ground_truth) throw invalid_input_error("evaluation requires ground truth");
    const Labeling& gt = *inst.ground_truth;
    const int L = inst.labels.count;

    EvalReport report;
    report.metric_kind = metric;
    const int m_max = static_cast<int>(hypotheses.samples.size());
    report.oracle_accuracy.resize(m_max);
    report.mode_accuracy.resize(m_max);

    double best = -1.0;
    for (int m = 1; m <= m_max; ++m) {
        double s = score_labeling(hypotheses.samples[m - 1], gt, L, metric);
        if (s > best) best = s;
        report.oracle_accuracy[m - 1] = best;
        std::span<const Labeling> prefix(hypotheses.samples.data(), static_cast<std::size_t>(m));
        report.mode_accuracy[m - 1] = score_labeling(mode_labeling(prefix, L), gt, L, metric);
    }
    report.map_accuracy = score_labeling(hypotheses.samples[0], gt, L, metric);

    auto [idx, score] = oracle_select(hypotheses, gt, L, metric);
    (void)score;
    report.per_class = per_class_scores(hypotheses.samples[idx], gt, L, metric);
    return report;
}

}  // namespace herdcrf
