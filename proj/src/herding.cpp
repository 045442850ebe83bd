#include "herdcrf/herding.hpp"

#include <algorithm>
#include <cmath>

#include "herdcrf/kernels.hpp"

namespace herdcrf {

namespace {

double l2_norm(const StatVector& v) {
    const auto& k = kern::active();
    return std::sqrt(k.sqnorm(v.unary.data(), v.unary.size()) +
                     k.sqnorm(v.pairwise.data(), v.pairwise.size()));
}

bool all_set(const std::vector<std::uint8_t>& mask) {
    return std::all_of(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; });
}

// Weighted squared moment error given the running stat sum over m samples.
double error_from_sum(const StatVector& mu, const StatVector& sum, int m, const MomentSpec& spec) {
    const double inv = 1.0 / m;
    double err = 0.0;
    if (spec.eta_unary > 0.0) {
        double acc = 0.0;
        for (int i = 0; i < mu.nodes; ++i) {
            if (!spec.unary_constrained[i]) continue;
            auto mb = mu.unary_block(i);
            auto sb = sum.unary_block(i);
            for (std::size_t t = 0; t < mb.size(); ++t) {
                double d = mb[t] - sb[t] * inv;
                acc += d * d;
            }
        }
        err += spec.eta_unary * acc;
    }
    if (spec.eta_pairwise > 0.0) {
        double acc = 0.0;
        for (int e = 0; e < mu.edge_count; ++e) {
            if (!spec.pairwise_constrained[e]) continue;
            auto mb = mu.pairwise_block(e);
            auto sb = sum.pairwise_block(e);
            for (std::size_t t = 0; t < mb.size(); ++t) {
                double d = mb[t] - sb[t] * inv;
                acc += d * d;
            }
        }
        err += spec.eta_pairwise * acc;
    }
    return err;
}

void add_stats_inplace(StatVector& sum, const CrfGraph& g, const Labeling& x) {
    for (int i = 0; i < sum.nodes; ++i) sum.unary_block(i)[x[i]] += 1.0;
    for (int e = 0; e < sum.edge_count; ++e) {
        auto [i, j] = g.edges[e];
        sum.pairwise_block(e)[pairwise_stat_index(sum.layout, sum.labels, x[i], x[j])] += 1.0;
    }
}

MomentSpec divmbest_spec(const CrfGraph& g, const LabelSpace& l, PairwiseLayout layout,
                         double lambda) {
    // Like moments_zero but tolerates lambda = 0 (no-update runs are legal
    // for divMbest itself).
    MomentSpec spec;
    spec.mu = StatVector::zeros(g, l, layout);
    spec.eta_unary = lambda;
    spec.eta_pairwise = 0.0;
    spec.unary_constrained.assign(g.node_count, 1);
    spec.pairwise_constrained.assign(g.edge_count(), 0);
    return spec;
}

struct TraceBuilder {
    const CrfGraph& g;
    const MomentSpec& spec;
    const StatVector& initial_theta;
    HypothesisSet out;
    StatVector stat_sum;

    TraceBuilder(const CrfGraph& g_, const LabelSpace& l_, const MomentSpec& spec_,
                 const StatVector& initial)
        : g(g_), spec(spec_), initial_theta(initial),
          stat_sum(StatVector::zeros(g_, l_, initial.layout)) {
        out.theta_trace.push_back(initial);
    }

    void record(const StatVector& theta_before, const Labeling& x, StatVector theta_after) {
        add_stats_inplace(stat_sum, g, x);
        out.samples.push_back(x);
        int m = static_cast<int>(out.samples.size());
        out.error_trace.push_back(error_from_sum(spec.mu, stat_sum, m, spec));
        out.condition_trace.push_back(check_herding_condition(theta_before, spec.mu, g, x) ? 1 : 0);
        out.energy_trace.push_back(energy(initial_theta, g, x));
        out.theta_trace.push_back(std::move(theta_after));
    }

    HypothesisSet finish() {
        out.running_mean_stats = stat_sum;
        if (!out.samples.empty()) {
            const auto& k = kern::active();
            double inv = 1.0 / static_cast<double>(out.samples.size());
            k.scale(out.running_mean_stats.unary.data(), inv, out.running_mean_stats.unary.size());
            k.scale(out.running_mean_stats.pairwise.data(), inv,
                    out.running_mean_stats.pairwise.size());
        }
        return std::move(out);
    }
};

}  // namespace

void HerdingConfig::validate() const {
    spec.validate();
    if (!initial_theta.same_shape(spec.mu))
        throw invalid_input_error("initial theta and moment shapes differ");
    if (num_samples < 1) throw invalid_input_error("num_samples must be >= 1");
}

std::pair<Labeling, StatVector> herding_step(const StatVector& theta, const MomentSpec& spec,
                                             const InferenceFn& inference, const CrfGraph& g,
                                             std::optional<double> norm_cap) {
    if (!theta.same_shape(spec.mu)) throw invalid_input_error("theta and moment shapes differ");
    const auto& k = kern::active();

    MapResult map = inference(theta);
    const Labeling& x = map.labeling;

    StatVector next = theta;
    if (spec.eta_unary > 0.0) {
        const double eta = spec.eta_unary;
        if (all_set(spec.unary_constrained)) {
            k.axpy(next.unary.data(), spec.mu.unary.data(), eta, next.unary.size());
            for (int i = 0; i < next.nodes; ++i) next.unary_block(i)[x[i]] -= eta;
        } else {
            for (int i = 0; i < next.nodes; ++i) {
                if (!spec.unary_constrained[i]) continue;
                auto nb = next.unary_block(i);
                auto mb = spec.mu.unary_block(i);
                k.axpy(nb.data(), mb.data(), eta, nb.size());
                nb[x[i]] -= eta;
            }
        }
    }
    if (spec.eta_pairwise > 0.0) {
        const double eta = spec.eta_pairwise;
        for (int e = 0; e < next.edge_count; ++e) {
            if (!spec.pairwise_constrained[e]) continue;
            auto nb = next.pairwise_block(e);
            auto mb = spec.mu.pairwise_block(e);
            k.axpy(nb.data(), mb.data(), eta, nb.size());
            auto [i, j] = g.edges[e];
            nb[pairwise_stat_index(next.layout, next.labels, x[i], x[j])] -= eta;
        }
    }

    if (norm_cap) {
        double norm = l2_norm(next);
        if (norm > *norm_cap) {
            double f = *norm_cap / norm;
            k.scale(next.unary.data(), f, next.unary.size());
            k.scale(next.pairwise.data(), f, next.pairwise.size());
        }
    }
    return {x, std::move(next)};
}

HypothesisSet herding_run(const CrfGraph& g, const LabelSpace& l, const HerdingConfig& cfg) {
    cfg.validate();
    InferenceFn infer =
        cfg.custom_inference ? cfg.custom_inference : make_inference(cfg.inference, g, l);

    std::optional<double> cap = cfg.theta_norm_cap;
    if (!cap && cfg.spec.normalize_theta) cap = std::max(1.0, l2_norm(cfg.initial_theta));

    TraceBuilder trace(g, l, cfg.spec, cfg.initial_theta);
    StatVector theta = cfg.initial_theta;
    for (int m = 0; m < cfg.num_samples; ++m) {
        auto [x, next] = herding_step(theta, cfg.spec, infer, g, cap);
        trace.record(theta, x, next);
        theta = std::move(next);
    }
    return trace.finish();
}

HypothesisSet divmbest_run(const CrfGraph& g, const LabelSpace& l, const StatVector& theta0,
                           double lambda, int num_samples, const InferenceSpec& inference,
                           const InferenceFn& custom_inference) {
    if (lambda < 0.0) throw invalid_input_error("lambda must be nonnegative");
    if (num_samples < 1) throw invalid_input_error("num_samples must be >= 1");
    for (double v : theta0.unary)
        if (!std::isfinite(v)) throw invalid_input_error("non-finite theta");
    for (double v : theta0.pairwise)
        if (!std::isfinite(v)) throw invalid_input_error("non-finite theta");

    InferenceFn infer = custom_inference ? custom_inference : make_inference(inference, g, l);
    MomentSpec spec = divmbest_spec(g, l, theta0.layout, lambda);
    if (!theta0.same_shape(spec.mu))
        throw invalid_input_error("theta shape does not match graph/labels");

    TraceBuilder trace(g, l, spec, theta0);
    StatVector theta = theta0;
    for (int m = 0; m < num_samples; ++m) {
        MapResult map = infer(theta);
        const Labeling x = map.labeling;
        StatVector next = theta;
        for (int i = 0; i < next.nodes; ++i) next.unary_block(i)[x[i]] -= lambda;
        trace.record(theta, x, next);
        theta = std::move(next);
    }
    return trace.finish();
}

double reconstruction_error(const StatVector& mu, std::span<const Labeling> samples,
                            const MomentSpec& spec, const CrfGraph& g, const LabelSpace& l) {
    if (samples.empty()) throw invalid_input_error("reconstruction error needs samples");
    if (!mu.same_shape(spec.mu)) throw invalid_input_error("mu shape mismatch");
    StatVector sum = StatVector::zeros(g, l, mu.layout);
    for (const Labeling& x : samples) {
        check_labeling(x, g.node_count, l.count);
        add_stats_inplace(sum, g, x);
    }
    return error_from_sum(mu, sum, static_cast<int>(samples.size()), spec);
}

double diverse_objective(const Labeling& x, std::span<const Labeling> samples,
                         const StatVector& initial_theta, const MomentSpec& spec,
                         const CrfGraph& g, const LabelSpace& l) {
    if (samples.empty()) throw invalid_input_error("diverse objective needs m >= 1 samples");
    check_labeling(x, g.node_count, l.count);
    const double m = static_cast<double>(samples.size());
    const double eta_ref = spec.eta_unary > 0.0 ? spec.eta_unary : spec.eta_pairwise;
    if (eta_ref <= 0.0) throw invalid_input_error("diverse objective needs a positive rate");
    const double wu = spec.eta_unary / eta_ref;
    const double wp = spec.eta_pairwise / eta_ref;

    double init_term = energy(initial_theta, g, x) / (eta_ref * m);

    double moment_term = 0.0;
    if (spec.eta_unary > 0.0)
        for (int i = 0; i < g.node_count; ++i)
            if (spec.unary_constrained[i]) moment_term += wu * spec.mu.unary_block(i)[x[i]];
    if (spec.eta_pairwise > 0.0)
        for (int e = 0; e < g.edge_count(); ++e) {
            if (!spec.pairwise_constrained[e]) continue;
            auto [i, j] = g.edges[e];
            moment_term +=
                wp * spec.mu.pairwise_block(e)[pairwise_stat_index(spec.mu.layout, l.count, x[i], x[j])];
        }

    double repulsion = 0.0;
    for (const Labeling& s : samples) {
        if (spec.eta_unary > 0.0)
            for (int i = 0; i < g.node_count; ++i)
                if (spec.unary_constrained[i] && x[i] == s[i]) repulsion += wu;
        if (spec.eta_pairwise > 0.0)
            for (int e = 0; e < g.edge_count(); ++e) {
                if (!spec.pairwise_constrained[e]) continue;
                auto [i, j] = g.edges[e];
                int a = pairwise_stat_index(spec.mu.layout, l.count, x[i], x[j]);
                int b = pairwise_stat_index(spec.mu.layout, l.count, s[i], s[j]);
                if (a == b) repulsion += wp;
            }
    }
    repulsion /= m;

    return init_term + moment_term - repulsion;
}

StatVector mean_unary_marginals(std::span<const Labeling> samples, int label_count) {
    if (samples.empty()) throw invalid_input_error("marginals need at least one sample");
    const int n = static_cast<int>(samples[0].size());
    StatVector v;
    v.layout = PairwiseLayout::PottsAgreement;
    v.nodes = n;
    v.labels = label_count;
    v.edge_count = 0;
    v.unary.assign(static_cast<std::size_t>(n) * label_count, 0.0);
    for (const Labeling& x : samples) {
        check_labeling(x, n, label_count);
        for (int i = 0; i < n; ++i) v.unary_block(i)[x[i]] += 1.0;
    }
    kern::active().scale(v.unary.data(), 1.0 / static_cast<double>(samples.size()),
                         v.unary.size());
    return v;
}

}  // namespace herdcrf
