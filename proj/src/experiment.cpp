#include "herdcrf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace herdcrf {

using nlohmann::json;

namespace {

MetricKind parse_metric(const std::string& s) {
    if (s == "per_class_accuracy") return MetricKind::PerClassAccuracy;
    if (s == "jaccard") return MetricKind::Jaccard;
    throw invalid_input_error("unknown metric: " + s);
}

InstanceKind parse_kind(const std::string& s) {
    if (s == "grid_semantic") return InstanceKind::GridSemantic;
    if (s == "grid_interactive") return InstanceKind::GridInteractive;
    throw invalid_input_error("unknown instance kind: " + s);
}

int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HERDCRF_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

SuiteConfig parse_suite_config(const std::string& text) {
    json doc = json::parse(text);
    SuiteConfig cfg;
    cfg.name = doc.value("name", cfg.name);
    if (doc.contains("metric")) cfg.metric = parse_metric(doc["metric"].get<std::string>());
    cfg.m_max = doc.value("m_max", cfg.m_max);
    if (cfg.m_max < 1) throw invalid_input_error("m_max must be >= 1");

    if (doc.contains("inference")) {
        std::string inf = doc["inference"].get<std::string>();
        if (inf == "bruteforce")
            cfg.inference.kind = InferenceKind::BruteForce;
        else if (inf == "lbp")
            cfg.inference.kind = InferenceKind::Lbp;
        else
            throw invalid_input_error("unknown inference: " + inf);
    }
    if (doc.contains("lbp")) {
        const auto& lj = doc["lbp"];
        cfg.inference.lbp.max_iterations = lj.value("max_iterations", cfg.inference.lbp.max_iterations);
        cfg.inference.lbp.damping = lj.value("damping", cfg.inference.lbp.damping);
        cfg.inference.lbp.convergence_tol = lj.value("tol", cfg.inference.lbp.convergence_tol);
    }
    if (doc.contains("sigmoid")) {
        cfg.sigmoid.a = doc["sigmoid"].value("a", cfg.sigmoid.a);
        cfg.sigmoid.b = doc["sigmoid"].value("b", cfg.sigmoid.b);
    }
    if (doc.contains("potts")) {
        cfg.potts.decay = doc["potts"].value("decay", cfg.potts.decay);
        cfg.potts.weight = doc["potts"].value("weight", cfg.potts.weight);
    }
    if (doc.contains("observed_fractions"))
        cfg.observed_fractions = doc["observed_fractions"].get<std::vector<double>>();
    cfg.mask_seed = doc.value("mask_seed", cfg.mask_seed);

    if (!doc.contains("instances") || doc["instances"].empty())
        throw invalid_input_error("suite config needs instances");
    for (const auto& ij : doc["instances"]) {
        SuiteInstanceRef ref;
        if (ij.contains("path")) {
            ref.path = ij["path"].get<std::string>();
        } else if (ij.contains("generate")) {
            const auto& gj = ij["generate"];
            GenerateParams gp;
            gp.kind = parse_kind(gj.value("kind", std::string("grid_semantic")));
            gp.width = gj.value("width", gp.width);
            gp.height = gj.value("height", gp.height);
            gp.labels = gj.value("labels", gp.labels);
            gp.noise = gj.value("noise", gp.noise);
            gp.seed = gj.value("seed", gp.seed);
            ref.generate = gp;
        } else {
            throw invalid_input_error("instance entry needs 'path' or 'generate'");
        }
        cfg.instances.push_back(std::move(ref));
    }

    if (!doc.contains("configs") || doc["configs"].empty())
        throw invalid_input_error("suite config needs method configs");
    for (const auto& cj : doc["configs"]) {
        MethodConfig mc;
        mc.method = cj.value("method", mc.method);
        if (mc.method != "divmbest" && mc.method != "herding")
            throw invalid_input_error("unknown method: " + mc.method);
        mc.moments = cj.value("moments", mc.moments);
        mc.lambda = cj.value("lambda", mc.lambda);
        mc.eta_u = cj.value("eta_u", mc.eta_u);
        mc.eta_p = cj.value("eta_p", mc.eta_p);
        if (cj.contains("norm_cap")) mc.norm_cap = cj["norm_cap"].get<double>();
        mc.normalize_theta = cj.value("normalize_theta", mc.normalize_theta);
        mc.name = cj.value("name", mc.method + "-" + mc.moments);
        cfg.configs.push_back(std::move(mc));
    }
    return cfg;
}

SuiteConfig load_suite_config(const std::string& path) {
    return parse_suite_config(read_file(path));
}

CrfInstance materialize_instance(const SuiteInstanceRef& ref, const SigmoidParams& sigmoid,
                                 const PottsParams& potts) {
    if (ref.generate) {
        const GenerateParams& g = *ref.generate;
        return assemble_instance(
            generate_grid_spec(g.kind, g.width, g.height, g.labels, g.noise, g.seed), sigmoid,
            potts);
    }
    return assemble_instance(load_instance_spec(ref.path), sigmoid, potts);
}

MomentSpec build_moments(const CrfInstance& inst, const MethodConfig& mc) {
    MomentSpec spec;
    if (mc.moments == "zero")
        spec = moments_zero(inst.graph, inst.labels, mc.eta_u);
    else if (mc.moments == "unary")
        spec = moments_from_unary(inst, mc.eta_u);
    else if (mc.moments == "full")
        spec = moments_full(inst, mc.eta_u, mc.eta_p);
    else
        throw invalid_input_error("unknown moments source: " + mc.moments);
    spec.normalize_theta = mc.normalize_theta;
    return spec;
}

HypothesisSet run_method(const CrfInstance& inst, const MethodConfig& mc,
                         const InferenceSpec& inference, int m_max) {
    if (mc.method == "divmbest")
        return divmbest_run(inst.graph, inst.labels, inst.theta, mc.lambda, m_max, inference);

    HerdingConfig hc;
    hc.initial_theta = inst.theta;
    hc.num_samples = m_max;
    hc.inference = inference;
    hc.theta_norm_cap = mc.norm_cap;
    hc.spec = build_moments(inst, mc);
    return herding_run(inst.graph, inst.labels, hc);
}

SuiteResult run_suite(const SuiteConfig& config, int threads) {
    SuiteResult result;
    result.config = config;

    const int fractions =
        config.observed_fractions.empty() ? 1 : static_cast<int>(config.observed_fractions.size());
    const int total = static_cast<int>(config.instances.size()) * fractions *
                      static_cast<int>(config.configs.size());
    result.runs.resize(total);

    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            int job = next.fetch_add(1);
            if (job >= total) break;

            int rest = job;
            const int config_idx = rest % static_cast<int>(config.configs.size());
            rest /= static_cast<int>(config.configs.size());
            const int fraction_idx = rest % fractions;
            const int instance_idx = rest / fractions;

            RunOutcome& out = result.runs[job];
            out.instance_index = instance_idx;
            out.fraction_index = config.observed_fractions.empty() ? -1 : fraction_idx;
            out.config_index = config_idx;
            try {
                CrfInstance inst = materialize_instance(config.instances[instance_idx],
                                                        config.sigmoid, config.potts);
                if (!config.observed_fractions.empty()) {
                    std::uint64_t seed =
                        config.mask_seed + 1000003ull * static_cast<std::uint64_t>(instance_idx) +
                        static_cast<std::uint64_t>(fraction_idx);
                    inst = mask_unaries(inst, config.observed_fractions[fraction_idx], seed);
                }
                HypothesisSet hs = run_method(inst, config.configs[config_idx], config.inference,
                                              config.m_max);
                out.report = evaluate(hs, inst, config.metric);
            } catch (const std::exception& e) {
                out.failed = true;
                out.error = e.what();
            }
        }
    };

    const int pool = std::min(thread_count(threads), total);
    std::vector<std::thread> workers;
    workers.reserve(pool);
    for (int t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

void write_suite_csv(std::ostream& os, const SuiteResult& result) {
    os << "# herdcrf-suite-csv v1\n";
    os << "suite,instance,config,method,moments,eta_u,eta_p,lambda,observed_fraction,M,oracle,mode\n";
    for (const RunOutcome& run : result.runs) {
        if (run.failed) continue;
        const MethodConfig& mc = result.config.configs[run.config_index];
        const bool div = mc.method == "divmbest";
        std::string fraction =
            run.fraction_index < 0 ? ""
                                   : fmt(result.config.observed_fractions[run.fraction_index]);
        for (std::size_t m = 0; m < run.report.oracle_accuracy.size(); ++m) {
            os << result.config.name << ',' << run.instance_index << ',' << mc.name << ','
               << mc.method << ',' << (div ? "zero" : mc.moments) << ','
               << fmt(div ? mc.lambda : mc.eta_u) << ',' << fmt(div ? 0.0 : mc.eta_p) << ','
               << (div ? fmt(mc.lambda) : "") << ',' << fraction << ',' << (m + 1) << ','
               << fmt(run.report.oracle_accuracy[m]) << ',' << fmt(run.report.mode_accuracy[m])
               << "\n";
        }
    }
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return 0.0;
    long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double p = (x[j] - x[i]) * (y[j] - y[i]);
            if (p > 0) ++concordant;
            else if (p < 0) ++discordant;
        }
    double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return (concordant - discordant) / pairs;
}

SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw invalid_input_error("slope fit needs >= 2 points");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(std::max(y[i], 1e-300));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        sse += r * r;
    }
    if (n > 2) fit.stderr_slope = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    return fit;
}

std::string suite_summary_json(const SuiteResult& result) {
    const SuiteConfig& cfg = result.config;
    json doc;
    doc["suite"] = cfg.name;
    doc["m_max"] = cfg.m_max;
    doc["metric"] = cfg.metric == MetricKind::Jaccard ? "jaccard" : "per_class_accuracy";

    json failures = json::array();
    for (const RunOutcome& run : result.runs)
        if (run.failed)
            failures.push_back({{"instance", run.instance_index},
                                {"fraction_index", run.fraction_index},
                                {"config", cfg.configs[run.config_index].name},
                                {"error", run.error}});
    doc["failures"] = std::move(failures);

    json run_rows = json::array();
    for (const RunOutcome& run : result.runs) {
        if (run.failed) continue;
        json row;
        row["instance"] = run.instance_index;
        row["config"] = cfg.configs[run.config_index].name;
        if (run.fraction_index >= 0)
            row["observed_fraction"] = cfg.observed_fractions[run.fraction_index];
        row["map"] = run.report.map_accuracy;
        row["oracle"] = run.report.oracle_accuracy.back();
        row["mode"] = run.report.mode_accuracy.back();
        row["per_class"] = run.report.per_class;
        run_rows.push_back(std::move(row));
    }
    doc["runs"] = std::move(run_rows);

    // suite means per (config, fraction) at M = m_max
    struct Agg {
        double oracle = 0, mode = 0;
        int count = 0;
    };
    std::map<std::pair<int, int>, Agg> agg;
    for (const RunOutcome& run : result.runs) {
        if (run.failed) continue;
        Agg& a = agg[{run.config_index, run.fraction_index}];
        a.oracle += run.report.oracle_accuracy.back();
        a.mode += run.report.mode_accuracy.back();
        a.count += 1;
    }

    doc["runs_total"] = static_cast<int>(result.runs.size());
    json means = json::array();
    for (const auto& [key, a] : agg) {
        const MethodConfig& mc = cfg.configs[key.first];
        json row;
        row["config"] = mc.name;
        row["method"] = mc.method;
        row["moments"] = mc.method == "divmbest" ? "zero" : mc.moments;
        row["eta_u"] = mc.method == "divmbest" ? mc.lambda : mc.eta_u;
        if (key.second >= 0) row["observed_fraction"] = cfg.observed_fractions[key.second];
        row["mean_oracle"] = a.count > 0 ? a.oracle / a.count : 0.0;
        row["mean_mode"] = a.count > 0 ? a.mode / a.count : 0.0;
        row["runs"] = a.count;
        means.push_back(std::move(row));
    }
    doc["means"] = std::move(means);

    // mode-vs-rate sweeps per (method, moments) group, when no masking is active
    if (cfg.observed_fractions.empty()) {
        std::map<std::string, std::vector<std::pair<double, double>>> sweeps;
        for (const auto& [key, a] : agg) {
            const MethodConfig& mc = cfg.configs[key.first];
            std::string group = mc.method + "/" + (mc.method == "divmbest" ? "zero" : mc.moments);
            double eta = mc.method == "divmbest" ? mc.lambda : mc.eta_u;
            sweeps[group].push_back({eta, a.count > 0 ? a.mode / a.count : 0.0});
        }
        json sj = json::array();
        for (auto& [group, pts] : sweeps) {
            if (pts.size() < 2) continue;
            std::sort(pts.begin(), pts.end());
            std::vector<double> etas, modes;
            for (auto& [e, m] : pts) {
                etas.push_back(e);
                modes.push_back(m);
            }
            double lo = *std::min_element(modes.begin(), modes.end());
            double hi = *std::max_element(modes.begin(), modes.end());
            sj.push_back({{"group", group},
                          {"eta", etas},
                          {"mean_mode", modes},
                          {"kendall_tau", kendall_tau(etas, modes)},
                          {"mode_range", hi - lo}});
        }
        doc["mode_vs_eta"] = std::move(sj);
    }

    // oracle gaps between config pairs per observed fraction
    if (!cfg.observed_fractions.empty() && cfg.configs.size() >= 2) {
        json gj = json::array();
        for (std::size_t a = 0; a < cfg.configs.size(); ++a)
            for (std::size_t b = 0; b < cfg.configs.size(); ++b) {
                if (a == b) continue;
                json entry;
                entry["minuend"] = cfg.configs[a].name;
                entry["subtrahend"] = cfg.configs[b].name;
                std::vector<double> fractions, gaps;
                for (std::size_t f = 0; f < cfg.observed_fractions.size(); ++f) {
                    auto ia = agg.find({static_cast<int>(a), static_cast<int>(f)});
                    auto ib = agg.find({static_cast<int>(b), static_cast<int>(f)});
                    if (ia == agg.end() || ib == agg.end() || ia->second.count == 0 ||
                        ib->second.count == 0)
                        continue;
                    fractions.push_back(cfg.observed_fractions[f]);
                    gaps.push_back(ia->second.oracle / ia->second.count -
                                   ib->second.oracle / ib->second.count);
                }
                bool monotone_decreasing = true;
                for (std::size_t f = 1; f < gaps.size(); ++f)
                    if (gaps[f] > gaps[f - 1]) monotone_decreasing = false;
                entry["observed_fractions"] = fractions;
                entry["oracle_gap"] = gaps;
                entry["gap_monotone_decreasing"] = monotone_decreasing;
                gj.push_back(std::move(entry));
            }
        doc["oracle_gaps"] = std::move(gj);
    }

    return doc.dump(2) + "\n";
}

}  // namespace herdcrf
