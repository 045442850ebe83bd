#include "herdcrf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "herdcrf/kernels.hpp"

namespace herdcrf {

void LbpConfig::validate() const {
    if (max_iterations < 1) throw invalid_input_error("max_iterations must be >= 1");
    if (!(damping >= 0.0 && damping < 1.0)) throw invalid_input_error("damping must be in [0,1)");
    if (!(convergence_tol >= 0.0)) throw invalid_input_error("convergence_tol must be >= 0");
}

MapResult map_bruteforce(const StatVector& theta, const CrfGraph& g, const LabelSpace& l) {
    if (theta.nodes != g.node_count || theta.labels != l.count ||
        theta.edge_count != g.edge_count())
        throw invalid_input_error("theta shape does not match graph/labels");

    double states = 1.0;
    for (int i = 0; i < g.node_count; ++i) {
        states *= l.count;
        if (states > 1e7) throw capacity_error("state space exceeds brute-force guard (1e7)");
    }

    const int n = g.node_count;
    Labeling x(n, 0);
    Labeling best = x;
    double best_e = energy(theta, g, x);

    // Odometer with the rightmost digit fastest enumerates labelings in
    // lexicographic order; strict improvement keeps the smallest maximizer.
    while (true) {
        int pos = n - 1;
        while (pos >= 0 && x[pos] == l.count - 1) {
            x[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++x[pos];
        double e = energy(theta, g, x);
        if (e > best_e) {
            best_e = e;
            best = x;
        }
    }
    return {std::move(best), best_e, true, 1};
}

namespace {

// Messages are stored per directed edge: slot 2e for i->j, 2e+1 for j->i,
// each a length-L vector in the log domain.
struct LbpWorkspace {
    int labels;
    std::vector<double> cur, nxt, computed;
    std::vector<double> h;  // per-node aggregate: theta_u + incoming messages

    std::span<double> msg(std::vector<double>& buf, int slot) {
        return {buf.data() + static_cast<std::size_t>(slot) * labels,
                static_cast<std::size_t>(labels)};
    }
};

}  // namespace

MapResult map_lbp(const StatVector& theta, const CrfGraph& g, const LabelSpace& l,
                  const LbpConfig& cfg) {
    cfg.validate();
    if (theta.nodes != g.node_count || theta.labels != l.count ||
        theta.edge_count != g.edge_count())
        throw invalid_input_error("theta shape does not match graph/labels");

    const auto& k = kern::active();
    const int n = g.node_count;
    const int L = l.count;
    const int E = g.edge_count();

    if (E == 0) {
        Labeling x(n, 0);
        for (int i = 0; i < n; ++i) {
            auto u = theta.unary_block(i);
            x[i] = static_cast<int>(k.argmax(u.data(), u.size()));
        }
        double e = energy(theta, g, x);
        return {std::move(x), e, true, 0};
    }

    // Directed-edge slots incident to each node, and the node at the far end.
    std::vector<std::vector<std::pair<int, int>>> incoming(n);  // node -> (slot, source)
    for (int e = 0; e < E; ++e) {
        auto [i, j] = g.edges[e];
        incoming[j].push_back({2 * e, i});
        incoming[i].push_back({2 * e + 1, j});
    }

    LbpWorkspace ws;
    ws.labels = L;
    ws.cur.assign(static_cast<std::size_t>(2 * E) * L, 0.0);
    ws.nxt.assign(ws.cur.size(), 0.0);
    ws.computed.assign(static_cast<std::size_t>(L), 0.0);
    ws.h.assign(static_cast<std::size_t>(n) * L, 0.0);

    auto node_h = [&](int i) {
        return std::span<double>{ws.h.data() + static_cast<std::size_t>(i) * L,
                                 static_cast<std::size_t>(L)};
    };

    auto accumulate_h = [&](const std::vector<double>& msgs) {
        std::copy(theta.unary.begin(), theta.unary.end(), ws.h.begin());
        for (int i = 0; i < n; ++i) {
            auto hi = node_h(i);
            for (auto [slot, src] : incoming[i])
                k.add(hi.data(), msgs.data() + static_cast<std::size_t>(slot) * L, L);
        }
    };

    // out(xj) = max_xi [ h_i(xi) - m_{j->i}(xi) + theta_p(xi, xj) ]
    auto compute_message = [&](int e, bool forward, std::span<double> out) {
        auto [i, j] = g.edges[e];
        int src = forward ? i : j;
        int reverse_slot = forward ? 2 * e + 1 : 2 * e;
        auto hs = node_h(src);
        auto rev = ws.msg(ws.cur, reverse_slot);
        auto pb = theta.pairwise_block(e);

        double base[64];
        std::vector<double> base_heap;
        double* b = base;
        if (L > 64) {
            base_heap.resize(L);
            b = base_heap.data();
        }
        for (int a = 0; a < L; ++a) b[a] = hs[a] - rev[a];

        if (theta.layout == PairwiseLayout::PottsAgreement) {
            double same = pb[0], diff = pb[1];
            std::size_t i1 = k.argmax(b, L);
            double m1 = b[i1];
            double m2 = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < L; ++a)
                if (a != static_cast<int>(i1) && b[a] > m2) m2 = b[a];
            for (int t = 0; t < L; ++t) {
                double other = (t == static_cast<int>(i1)) ? m2 : m1;
                double v = b[t] + same;
                double w = other + diff;
                out[t] = v > w ? v : w;
            }
        } else {
            for (int t = 0; t < L; ++t) {
                double m = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < L; ++a) {
                    // block index is (x_i, x_j); pick the slice for our direction
                    double p = forward ? pb[a * L + t] : pb[t * L + a];
                    double v = b[a] + p;
                    if (v > m) m = v;
                }
                out[t] = m;
            }
        }
    };

    // Beliefs are decoded every iteration and the best-energy decode wins
    // (strict improvement, so the earliest and therefore lowest-index decode
    // is kept among ties). On frustrated loops the best intermediate decode
    // is often better than the fixed point.
    Labeling best(n, 0);
    double best_energy = -std::numeric_limits<double>::infinity();
    auto decode_current = [&]() {
        Labeling x(n, 0);
        for (int i = 0; i < n; ++i) {
            auto hi = node_h(i);
            x[i] = static_cast<int>(k.argmax(hi.data(), L));
        }
        double e = energy(theta, g, x);
        if (e > best_energy) {
            best_energy = e;
            best = std::move(x);
        }
    };

    bool converged = false;
    int iters = 0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        accumulate_h(ws.cur);
        decode_current();
        for (int e = 0; e < E; ++e) {
            for (int dir = 0; dir < 2; ++dir) {
                int slot = 2 * e + dir;
                compute_message(e, dir == 0, {ws.computed.data(), static_cast<std::size_t>(L)});
                auto old_msg = ws.msg(ws.cur, slot);
                auto new_msg = ws.msg(ws.nxt, slot);
                k.mix(new_msg.data(), old_msg.data(), ws.computed.data(), cfg.damping, L);
                double top = k.max_value(new_msg.data(), L);
                k.add_scalar(new_msg.data(), -top, L);
            }
        }
        double delta = k.max_abs_diff(ws.cur.data(), ws.nxt.data(), ws.cur.size());
        std::swap(ws.cur, ws.nxt);
        iters = it + 1;
        if (delta < cfg.convergence_tol) {
            converged = true;
            break;
        }
    }

    accumulate_h(ws.cur);
    decode_current();
    return {std::move(best), best_energy, converged, iters};
}

bool check_herding_condition(const StatVector& theta, const StatVector& mu, const CrfGraph& g,
                             const Labeling& x) {
    if (!theta.same_shape(mu)) throw invalid_input_error("theta/mu shape mismatch");
    double lhs = inner_product(theta, mu);
    double rhs = energy(theta, g, x);
    return lhs <= rhs + 1e-12;
}

InferenceFn make_inference(const InferenceSpec& spec, const CrfGraph& g, const LabelSpace& l) {
    // captures copy the (small) graph so the closure owns its inputs
    if (spec.kind == InferenceKind::BruteForce)
        return [g, l](const StatVector& theta) { return map_bruteforce(theta, g, l); };
    LbpConfig cfg = spec.lbp;
    return [g, l, cfg](const StatVector& theta) { return map_lbp(theta, g, l, cfg); };
}

}  // namespace herdcrf
