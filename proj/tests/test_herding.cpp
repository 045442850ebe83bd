#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "herdcrf/experiment.hpp"
#include "herdcrf/herding.hpp"
#include "herdcrf/rng.hpp"
#include "oracles.hpp"

using namespace herdcrf;

namespace {

HerdingConfig basic_config(StatVector theta, MomentSpec spec, int m) {
    HerdingConfig cfg;
    cfg.initial_theta = std::move(theta);
    cfg.spec = std::move(spec);
    cfg.num_samples = m;
    cfg.inference.kind = InferenceKind::BruteForce;
    return cfg;
}

MomentSpec zero_target_all_blocks(const CrfGraph& g, const LabelSpace& l, double eta) {
    MomentSpec spec = moments_zero(g, l, eta);
    spec.eta_pairwise = eta;
    spec.pairwise_constrained.assign(g.edge_count(), 1);
    return spec;
}

bool same_bits(const StatVector& a, const StatVector& b) {
    return a.unary == b.unary && a.pairwise == b.pairwise;
}

}  // namespace

TEST_CASE("herding_step: fixed point when mu equals the MAP statistics") {
    Rng rng(1);
    CrfGraph g = CrfGraph::make(4, testo::random_tree_edges(4, rng));
    LabelSpace l{3, {}};
    StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
    MapResult map = map_bruteforce(theta, g, l);

    std::vector<Labeling> pool{map.labeling};
    MomentSpec spec =
        moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 1.0, 1.0);
    InferenceFn infer = make_inference({InferenceKind::BruteForce, {}}, g, l);
    auto [x, next] = herding_step(theta, spec, infer, g);
    CHECK(x == map.labeling);
    CHECK(same_bits(next, theta));
}

TEST_CASE("herding_step: one-node hand run") {
    CrfGraph g = CrfGraph::make(1, {});
    LabelSpace l{2, {}};
    StatVector theta = StatVector::zeros(g, l);
    theta.unary = {1.0, 0.0};
    MomentSpec spec = moments_zero(g, l, 1.0);
    InferenceFn infer = make_inference({InferenceKind::BruteForce, {}}, g, l);
    auto [x, next] = herding_step(theta, spec, infer, g);
    CHECK(x == Labeling{0});
    CHECK(next.unary == std::vector<double>{0.0, 0.0});
}

TEST_CASE("herding_run: one-node label sequence and marginals") {
    CrfGraph g = CrfGraph::make(1, {});
    LabelSpace l{2, {}};
    StatVector theta = StatVector::zeros(g, l);
    theta.unary = {1.0, 0.0};
    HypothesisSet hs = herding_run(g, l, basic_config(theta, moments_zero(g, l, 1.0), 6));

    std::vector<Labeling> expected{{0}, {0}, {1}, {0}, {1}, {0}};
    CHECK(hs.samples == expected);

    StatVector marg = mean_unary_marginals(hs.samples, 2);
    CHECK(marg.unary[0] == doctest::Approx(4.0 / 6.0));

    // longer run converges to the equiprobable marginal
    hs = herding_run(g, l, basic_config(theta, moments_zero(g, l, 1.0), 400));
    marg = mean_unary_marginals(hs.samples, 2);
    CHECK(marg.unary[0] == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("herding_run: M=1 returns the MAP of the initial parameters") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        CrfGraph g = CrfGraph::make(5, testo::random_single_loop_edges(5, rng));
        LabelSpace l{3, {}};
        StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
        HypothesisSet hs = herding_run(g, l, basic_config(theta, moments_zero(g, l, 2.0), 1));
        CHECK(hs.samples[0] == map_bruteforce(theta, g, l).labeling);
    }
}

TEST_CASE("herding_run: stationary when mu matches a reachable fixed point") {
    Rng rng(9);
    CrfGraph g = CrfGraph::make(4, testo::random_tree_edges(4, rng));
    LabelSpace l{2, {}};
    StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
    Labeling xbar = map_bruteforce(theta, g, l).labeling;
    std::vector<Labeling> pool{xbar};
    MomentSpec spec =
        moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 1.0, 1.0);
    HypothesisSet hs = herding_run(g, l, basic_config(theta, spec, 8));
    for (const Labeling& x : hs.samples) CHECK(x == xbar);
    for (double e : hs.error_trace) CHECK(e == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("divmbest: lambda 0 repeats the MAP labeling") {
    Rng rng(12);
    CrfGraph g = CrfGraph::make(5, testo::random_tree_edges(5, rng));
    LabelSpace l{3, {}};
    StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
    HypothesisSet hs =
        divmbest_run(g, l, theta, 0.0, 5, {InferenceKind::BruteForce, {}});
    for (const Labeling& x : hs.samples) CHECK(x == hs.samples[0]);
    CHECK(hs.samples[0] == map_bruteforce(theta, g, l).labeling);
}

TEST_CASE("divmbest: one-node hand sequence") {
    CrfGraph g = CrfGraph::make(1, {});
    LabelSpace l{2, {}};
    StatVector theta = StatVector::zeros(g, l);
    theta.unary = {1.0, 0.0};
    HypothesisSet hs = divmbest_run(g, l, theta, 1.0, 6, {InferenceKind::BruteForce, {}});
    std::vector<Labeling> expected{{0}, {0}, {1}, {0}, {1}, {0}};
    CHECK(hs.samples == expected);
}

TEST_CASE("divmbest equals herding with zero moments, bit for bit") {
    Rng rng(2024);
    for (int rep = 0; rep < 40; ++rep) {
        int n = 2 + rng.next_int(9);  // N <= 10
        int L = 2 + rng.next_int(3);
        auto edges = rep % 2 == 0 ? testo::random_tree_edges(n, rng)
                                  : testo::random_single_loop_edges(n, rng);
        CrfGraph g = CrfGraph::make(n, edges);
        LabelSpace l{L, {}};
        StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
        double lambda = 0.25 + rng.next_double();

        InferenceSpec inf{InferenceKind::Lbp, {}};
        HypothesisSet a = divmbest_run(g, l, theta, lambda, 12, inf);
        HerdingConfig hc = basic_config(theta, moments_zero(g, l, lambda), 12);
        hc.inference = inf;
        HypothesisSet b = herding_run(g, l, hc);

        CHECK(a.samples == b.samples);
        REQUIRE(a.theta_trace.size() == b.theta_trace.size());
        for (std::size_t t = 0; t < a.theta_trace.size(); ++t)
            CHECK(same_bits(a.theta_trace[t], b.theta_trace[t]));
        CHECK(a.error_trace == b.error_trace);
        CHECK(a.condition_trace == b.condition_trace);
    }
}

TEST_CASE("reconstruction error: hand values") {
    CrfGraph g = CrfGraph::make(1, {});
    LabelSpace l{2, {}};
    MomentSpec spec;
    spec.mu = StatVector::zeros(g, l);
    spec.mu.unary = {0.5, 0.5};
    spec.eta_unary = 1.0;
    spec.unary_constrained = {1};
    spec.pairwise_constrained = {};

    std::vector<Labeling> one{{0}};
    CHECK(reconstruction_error(spec.mu, one, spec, g, l) == doctest::Approx(0.5));

    std::vector<Labeling> two{{0}, {1}};
    CHECK(reconstruction_error(spec.mu, two, spec, g, l) == doctest::Approx(0.0));

    CHECK_THROWS_AS(reconstruction_error(spec.mu, std::span<const Labeling>{}, spec, g, l),
                    invalid_input_error);
}

TEST_CASE("error trace matches independent recomputation from stored samples") {
    Rng rng(31);
    CrfGraph g = CrfGraph::make(6, testo::random_single_loop_edges(6, rng));
    LabelSpace l{3, {}};
    StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
    std::vector<Labeling> pool;
    for (int t = 0; t < 7; ++t) {
        Labeling x(6);
        for (int& v : x) v = rng.next_int(3);
        pool.push_back(std::move(x));
    }
    MomentSpec spec =
        moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 0.7, 0.3);
    HypothesisSet hs = herding_run(g, l, basic_config(theta, spec, 40));
    for (std::size_t m = 1; m <= hs.samples.size(); ++m) {
        std::span<const Labeling> prefix(hs.samples.data(), m);
        double recomputed = reconstruction_error(spec.mu, prefix, spec, g, l);
        CHECK(hs.error_trace[m - 1] == doctest::Approx(recomputed).epsilon(1e-9));
    }

    // running mean equals the arithmetic mean of sufficient statistics
    StatVector mean = StatVector::zeros(g, l);
    for (const Labeling& x : hs.samples) {
        StatVector phi = sufficient_stats(g, l, PairwiseLayout::PottsAgreement, x);
        for (std::size_t i = 0; i < mean.unary.size(); ++i) mean.unary[i] += phi.unary[i];
        for (std::size_t i = 0; i < mean.pairwise.size(); ++i) mean.pairwise[i] += phi.pairwise[i];
    }
    for (std::size_t i = 0; i < mean.unary.size(); ++i)
        CHECK(hs.running_mean_stats.unary[i] ==
              doctest::Approx(mean.unary[i] / hs.samples.size()).epsilon(1e-9));
    for (std::size_t i = 0; i < mean.pairwise.size(); ++i)
        CHECK(hs.running_mean_stats.pairwise[i] ==
              doctest::Approx(mean.pairwise[i] / hs.samples.size()).epsilon(1e-9));
}

TEST_CASE("diverse objective: argmax equals the next herding sample") {
    Rng rng(47);
    for (int rep = 0; rep < 60; ++rep) {
        int n = 2 + rng.next_int(5);  // N <= 6
        int L = 2 + rng.next_int(2);  // |L| <= 3
        auto edges = rep % 2 == 0 ? testo::random_tree_edges(n, rng)
                                  : testo::random_single_loop_edges(n, rng);
        CrfGraph g = CrfGraph::make(n, edges);
        LabelSpace l{L, {}};
        StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);

        MomentSpec spec;
        if (rep % 3 == 0) {
            spec = moments_zero(g, l, 0.5 + rng.next_double());
        } else {
            std::vector<Labeling> pool;
            for (int t = 0; t < 4; ++t) {
                Labeling x(n);
                for (int& v : x) v = rng.next_int(L);
                pool.push_back(std::move(x));
            }
            double eta_u = 0.5 + rng.next_double();
            double eta_p = rep % 3 == 1 ? eta_u : 0.25 + 0.5 * rng.next_double();
            spec = moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, eta_u,
                                               eta_p);
        }

        InferenceFn infer = make_inference({InferenceKind::BruteForce, {}}, g, l);
        StatVector cur = theta;
        std::vector<Labeling> samples;
        for (int m = 0; m < 6; ++m) {
            auto [x, next] = herding_step(cur, spec, infer, g);
            if (m >= 1) {
                Labeling via_objective = testo::argmax_exhaustive(n, L, [&](const Labeling& c) {
                    return diverse_objective(c, samples, theta, spec, g, l);
                });
                CHECK(via_objective == x);
            }
            samples.push_back(x);
            cur = std::move(next);
        }
    }
}

TEST_CASE("diverse objective: self-repulsion counts blocks") {
    Rng rng(53);
    CrfGraph g = CrfGraph::make(4, testo::random_tree_edges(4, rng));
    LabelSpace l{3, {}};
    StatVector zero_theta = StatVector::zeros(g, l);
    MomentSpec spec = zero_target_all_blocks(g, l, 1.0);

    Labeling x{0, 1, 2, 0};
    std::vector<Labeling> samples{x};
    double v = diverse_objective(x, samples, zero_theta, spec, g, l);
    CHECK(v == doctest::Approx(-(4.0 + 3.0)));  // -(N + E)/1
}

TEST_CASE("diverse objective: zero moments and zero init leave pure repulsion") {
    Rng rng(59);
    CrfGraph g = CrfGraph::make(3, {{0, 1}, {1, 2}});
    LabelSpace l{2, {}};
    StatVector zero_theta = StatVector::zeros(g, l);
    MomentSpec spec = zero_target_all_blocks(g, l, 1.0);

    std::vector<Labeling> samples{{0, 0, 1}, {1, 0, 1}};
    testo::for_each_labeling(3, 2, [&](const Labeling& c) {
        double expected = 0.0;
        for (const Labeling& s : samples) {
            auto a = sufficient_stats(g, l, PairwiseLayout::PottsAgreement, c);
            auto b = sufficient_stats(g, l, PairwiseLayout::PottsAgreement, s);
            expected -= inner_product(a, b);
        }
        expected /= samples.size();
        CHECK(diverse_objective(c, samples, zero_theta, spec, g, l) ==
              doctest::Approx(expected).epsilon(1e-12));
    });
    (void)rng;
}

TEST_CASE("diverse objective rejects an empty sample set") {
    CrfGraph g = CrfGraph::make(1, {});
    LabelSpace l{2, {}};
    MomentSpec spec = moments_zero(g, l, 1.0);
    StatVector theta = StatVector::zeros(g, l);
    CHECK_THROWS_AS(
        diverse_objective({0}, std::span<const Labeling>{}, theta, spec, g, l),
        invalid_input_error);
}

TEST_CASE("greedy step chases the accumulated moment deficit") {
    // With a zero initialization the sample at step m+1 minimizes
    // || m*mu - sum_k phi(x_k) - phi(c) ||^2 over all candidates c (weighted,
    // constrained blocks). This is the Alg.-2 maximization rewritten; note it
    // is NOT the same as minimizing the normalized error at m+1, whose
    // repulsion term carries 1/(m+1) instead of 1/m.
    Rng rng(61);
    for (int rep = 0; rep < 15; ++rep) {
        int n = 2 + rng.next_int(4);
        int L = 2 + rng.next_int(2);
        CrfGraph g = CrfGraph::make(n, testo::random_tree_edges(n, rng));
        LabelSpace l{L, {}};
        StatVector theta = StatVector::zeros(g, l);  // no initialization pull

        std::vector<Labeling> pool;
        for (int t = 0; t < 5; ++t) {
            Labeling x(n);
            for (int& v : x) v = rng.next_int(L);
            pool.push_back(std::move(x));
        }
        MomentSpec spec =
            moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 1.0, 1.0);

        auto deficit_after = [&](std::span<const Labeling> chosen_samples) {
            // squared distance between m*mu and the statistics accumulated by
            // the m previous samples plus the new one
            const int m = static_cast<int>(chosen_samples.size()) - 1;
            StatVector sum = StatVector::zeros(g, l);
            for (const Labeling& s : chosen_samples) {
                StatVector phi = sufficient_stats(g, l, PairwiseLayout::PottsAgreement, s);
                for (std::size_t i = 0; i < sum.unary.size(); ++i) sum.unary[i] += phi.unary[i];
                for (std::size_t i = 0; i < sum.pairwise.size(); ++i)
                    sum.pairwise[i] += phi.pairwise[i];
            }
            double d = 0.0;
            for (std::size_t i = 0; i < sum.unary.size(); ++i) {
                double v = m * spec.mu.unary[i] - sum.unary[i];
                d += v * v;
            }
            for (std::size_t i = 0; i < sum.pairwise.size(); ++i) {
                double v = m * spec.mu.pairwise[i] - sum.pairwise[i];
                d += v * v;
            }
            return d;
        };

        InferenceFn infer = make_inference({InferenceKind::BruteForce, {}}, g, l);
        StatVector cur = theta;
        std::vector<Labeling> samples;
        for (int m = 0; m < 5; ++m) {
            auto [x, next] = herding_step(cur, spec, infer, g);
            samples.push_back(x);
            double chosen = deficit_after(samples);
            double best = std::numeric_limits<double>::infinity();
            testo::for_each_labeling(n, L, [&](const Labeling& c) {
                auto candidate = samples;
                candidate.back() = c;
                best = std::min(best, deficit_after(candidate));
            });
            CHECK(chosen == doctest::Approx(best).epsilon(1e-12));
            cur = std::move(next);
        }
    }
}

TEST_CASE("4x4 grid run under lbp: error decreases at the expected rate") {
    Rng rng(123);
    CrfGraph g = CrfGraph::make(16, testo::grid_edges(4, 4));
    LabelSpace l{3, {}};
    StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
    std::vector<Labeling> pool;
    for (int t = 0; t < 10; ++t) {
        Labeling x(16);
        for (int& v : x) v = rng.next_int(3);
        pool.push_back(std::move(x));
    }
    MomentSpec spec =
        moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 1.0, 1.0);

    HerdingConfig cfg = basic_config(theta, spec, 256);
    cfg.inference.kind = InferenceKind::Lbp;  // 3^16 exceeds the exhaustive guard
    HypothesisSet hs = herding_run(g, l, cfg);

    CHECK(hs.error_trace[255] < hs.error_trace[15]);

    std::vector<double> ms, dist;
    for (int m = 16; m <= 256; ++m) {
        ms.push_back(m);
        dist.push_back(std::sqrt(hs.error_trace[m - 1]));
    }
    SlopeFit fit = fit_loglog(ms, dist);
    CHECK(fit.slope >= -1.3);
    CHECK(fit.slope <= -0.7);
}

TEST_CASE("condition trace is all-true under exact inference with polytope moments") {
    Rng rng(71);
    for (int rep = 0; rep < 20; ++rep) {
        int n = 2 + rng.next_int(5);
        int L = 2 + rng.next_int(2);
        CrfGraph g = CrfGraph::make(n, testo::random_single_loop_edges(n, rng));
        LabelSpace l{L, {}};
        StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
        std::vector<Labeling> pool;
        for (int t = 0; t < 6; ++t) {
            Labeling x(n);
            for (int& v : x) v = rng.next_int(L);
            pool.push_back(std::move(x));
        }
        MomentSpec spec =
            moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 1.0, 1.0);
        REQUIRE(validate_polytope(spec.mu));
        HypothesisSet hs = herding_run(g, l, basic_config(theta, spec, 30));
        for (auto c : hs.condition_trace) CHECK(c == 1);
    }
}

TEST_CASE("herding runs are deterministic") {
    Rng rng(83);
    CrfGraph g = CrfGraph::make(6, testo::random_single_loop_edges(6, rng));
    LabelSpace l{3, {}};
    StatVector theta = testo::random_theta(g, l, PairwiseLayout::PottsAgreement, rng);
    std::vector<Labeling> pool;
    for (int t = 0; t < 4; ++t) {
        Labeling x(6);
        for (int& v : x) v = rng.next_int(3);
        pool.push_back(std::move(x));
    }
    MomentSpec spec =
        moments_from_sample_average(g, l, PairwiseLayout::PottsAgreement, pool, 1.0, 0.5);
    HerdingConfig cfg = basic_config(theta, spec, 25);
    cfg.inference.kind = InferenceKind::Lbp;
    HypothesisSet a = herding_run(g, l, cfg);
    HypothesisSet b = herding_run(g, l, cfg);
    CHECK(a.samples == b.samples);
    CHECK(a.error_trace == b.error_trace);
    CHECK(a.condition_trace == b.condition_trace);
    CHECK(a.energy_trace == b.energy_trace);
    REQUIRE(a.theta_trace.size() == b.theta_trace.size());
    for (std::size_t t = 0; t < a.theta_trace.size(); ++t)
        CHECK(same_bits(a.theta_trace[t], b.theta_trace[t]));
}

TEST_CASE("norm cap keeps theta bounded and biases the error floor") {
    CrfGraph g = CrfGraph::make(1, {});
    LabelSpace l{3, {}};
    StatVector theta = StatVector::zeros(g, l);
    theta.unary = {0.9, 0.1, -0.4};
    HerdingConfig cfg = basic_config(theta, moments_zero(g, l, 1.0), 600);
    cfg.spec.normalize_theta = true;
    HypothesisSet hs = herding_run(g, l, cfg);

    double cap = std::max(1.0, std::sqrt(0.9 * 0.9 + 0.1 * 0.1 + 0.4 * 0.4));
    for (const StatVector& t : hs.theta_trace) {
        double norm = 0;
        for (double v : t.unary) norm += v * v;
        CHECK(std::sqrt(norm) <= cap + 1e-9);
    }
    // residual error: squared distance from 0 to the equiprobable point
    CHECK(hs.error_trace.back() == doctest::Approx(1.0 / 3.0).epsilon(0.05));
}

TEST_CASE("mean marginals: degenerate cases") {
    std::vector<Labeling> same{{1, 2}, {1, 2}, {1, 2}};
    StatVector m = mean_unary_marginals(same, 3);
    CHECK(m.unary_block(0)[1] == 1.0);
    CHECK(m.unary_block(1)[2] == 1.0);

    std::vector<Labeling> alt{{0}, {1}, {0}, {1}};
    m = mean_unary_marginals(alt, 2);
    CHECK(m.unary_block(0)[0] == doctest::Approx(0.5));
}

TEST_CASE("divmbest pushes unary-only marginals toward uniform") {
    Rng rng(97);
    CrfGraph g = CrfGraph::make(3, {});
    LabelSpace l{3, {}};
    StatVector theta = StatVector::zeros(g, l);
    for (auto& v : theta.unary) v = 2.0 * rng.next_double() - 1.0;
    HypothesisSet hs = divmbest_run(g, l, theta, 2.0, 300, {InferenceKind::BruteForce, {}});
    StatVector marg = mean_unary_marginals(hs.samples, 3);
    for (double v : marg.unary) CHECK(std::abs(v - 1.0 / 3.0) <= 0.05);
}
