// Command-line front end: extract hypothesis sets from CRF instances
// (divmbest / herding with configurable moment constraints), run experiment
// sweeps, and trace moment-reconstruction convergence.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "herdcrf/experiment.hpp"
#include "herdcrf/kernels.hpp"
#include "herdcrf/rng.hpp"

using namespace herdcrf;

namespace {

struct CommonModelFlags {
    double sigmoid_a = -7.0;
    double sigmoid_b = 15.0;
    double potts_decay = 10.0;
    double potts_weight = 0.08;

    void attach(CLI::App* cmd) {
        cmd->add_option("--sigmoid-a", sigmoid_a, "Sigmoid offset a");
        cmd->add_option("--sigmoid-b", sigmoid_b, "Sigmoid gain b");
        cmd->add_option("--potts-decay", potts_decay, "Potts similarity decay factor");
        cmd->add_option("--potts-weight", potts_weight, "Potts re-weight");
    }
    SigmoidParams sigmoid() const { return {sigmoid_a, sigmoid_b}; }
    PottsParams potts() const { return {potts_decay, potts_weight}; }
};

InferenceSpec parse_inference_flag(const std::string& s) {
    InferenceSpec spec;
    if (s == "bruteforce")
        spec.kind = InferenceKind::BruteForce;
    else if (s == "lbp")
        spec.kind = InferenceKind::Lbp;
    else
        throw invalid_input_error("unknown inference: " + s);
    return spec;
}

std::string quote_args(int argc, char** argv) {
    std::ostringstream ss;
    for (int i = 0; i < argc; ++i) {
        if (i) ss << ' ';
        ss << argv[i];
    }
    return ss.str();
}

class Stopwatch {
public:
    double elapsed_ms() const {
        auto d = std::chrono::steady_clock::now() - start_;
        return std::chrono::duration<double, std::milli>(d).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_sample(const std::string& instance_path, const std::string& method,
               const std::string& moments, double eta_u, double eta_p, double lambda, int m,
               const std::string& inference, std::optional<double> norm_cap, bool normalize_theta,
               std::optional<double> observed_fraction, std::uint64_t mask_seed,
               const CommonModelFlags& model, const std::string& out_path,
               const std::string& command_line) {
    Stopwatch watch;
    std::string raw = read_file(instance_path);
    InstanceSpec spec = parse_instance_json(raw);
    CrfInstance inst = assemble_instance(spec, model.sigmoid(), model.potts());
    if (observed_fraction) inst = mask_unaries(inst, *observed_fraction, mask_seed);

    MethodConfig mc;
    mc.method = method;
    mc.moments = moments;
    mc.lambda = lambda;
    mc.eta_u = eta_u;
    mc.eta_p = eta_p;
    mc.norm_cap = norm_cap;
    mc.normalize_theta = normalize_theta;
    HypothesisSet hs = run_method(inst, mc, parse_inference_flag(inference), m);

    write_hypotheses_jsonl(out_path, hs);
    if (method == "herding") {
        std::ofstream mj(out_path + ".moments.json", std::ios::binary);
        mj << moment_spec_to_json(build_moments(inst, mc));
    }

    RunManifest manifest;
    manifest.command_line = command_line;
    manifest.instance_digest = hex64(fnv1a(raw));
    std::ostringstream cfg;
    cfg << method << '|' << moments << '|' << eta_u << '|' << eta_p << '|' << lambda << '|' << m
        << '|' << inference << '|' << (norm_cap ? *norm_cap : -1.0) << '|' << normalize_theta
        << '|' << (observed_fraction ? *observed_fraction : -1.0) << '|' << mask_seed << '|'
        << model.sigmoid_a << '|' << model.sigmoid_b << '|' << model.potts_decay << '|'
        << model.potts_weight << '|' << manifest.instance_digest;
    manifest.config_hash = hex64(fnv1a(cfg.str()));
    manifest.duration_ms = watch.elapsed_ms();
    write_manifest(out_path + ".manifest.json", manifest);
    return 0;
}

int cmd_experiment(const std::string& suite_path, const std::string& out_dir, int threads,
                   const std::string& command_line) {
    Stopwatch watch;
    std::string raw = read_file(suite_path);
    SuiteConfig cfg = parse_suite_config(raw);
    SuiteResult result = run_suite(cfg, threads);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir + "/curves.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + out_dir + "/curves.csv");
        write_suite_csv(csv, result);
    }
    {
        std::ofstream sj(out_dir + "/summary.json", std::ios::binary);
        if (!sj) throw std::runtime_error("cannot write " + out_dir + "/summary.json");
        sj << suite_summary_json(result);
    }

    RunManifest manifest;
    manifest.command_line = command_line;
    manifest.instance_digest = hex64(fnv1a(raw));
    manifest.config_hash = hex64(fnv1a(raw));
    manifest.duration_ms = watch.elapsed_ms();
    write_manifest(out_dir + "/manifest.json", manifest);

    int failed = 0;
    for (const auto& run : result.runs) failed += run.failed ? 1 : 0;
    if (failed > 0)
        std::cerr << failed << "/" << result.runs.size() << " runs failed (see summary.json)\n";
    return failed == static_cast<int>(result.runs.size()) ? 2 : 0;
}

int cmd_convergence(const std::string& instance_path, const std::string& moments,
                    int sample_count, std::uint64_t sample_seed, double eta_u, double eta_p,
                    int m_max, const std::string& inference, std::optional<double> norm_cap,
                    bool normalize_theta, const CommonModelFlags& model,
                    const std::string& out_path, const std::string& command_line) {
    Stopwatch watch;
    std::string raw = read_file(instance_path);
    CrfInstance inst = assemble_instance(parse_instance_json(raw), model.sigmoid(), model.potts());

    HerdingConfig hc;
    hc.initial_theta = inst.theta;
    hc.num_samples = m_max;
    hc.inference = parse_inference_flag(inference);
    hc.theta_norm_cap = norm_cap;

    if (moments == "zero")
        hc.spec = moments_zero(inst.graph, inst.labels, eta_u);
    else if (moments == "unary")
        hc.spec = moments_from_unary(inst, eta_u);
    else if (moments == "full")
        hc.spec = moments_full(inst, eta_u, eta_p);
    else if (moments == "samples") {
        Rng rng(sample_seed);
        std::vector<Labeling> pool;
        for (int k = 0; k < sample_count; ++k) {
            Labeling x(inst.graph.node_count);
            for (int& v : x) v = rng.next_int(inst.labels.count);
            pool.push_back(std::move(x));
        }
        hc.spec = moments_from_sample_average(inst.graph, inst.labels, inst.theta.layout, pool,
                                              eta_u, eta_p);
    } else {
        throw invalid_input_error("unknown moments source: " + moments);
    }
    hc.spec.normalize_theta = normalize_theta;

    HypothesisSet hs = herding_run(inst.graph, inst.labels, hc);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "# herdcrf-convergence-csv v1\n";
    out << "M,error,distance\n";
    char buf[128];
    for (std::size_t m = 0; m < hs.error_trace.size(); ++m) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", static_cast<int>(m + 1),
                      hs.error_trace[m], std::sqrt(hs.error_trace[m]));
        out << buf;
    }

    // Slope of the moment distance over the tail M in [max(16, M_max/64), M_max].
    int lo = std::max(16, m_max / 64);
    std::vector<double> ms, dist;
    for (int m = lo; m <= m_max; ++m) {
        ms.push_back(m);
        dist.push_back(std::sqrt(hs.error_trace[m - 1]));
    }
    nlohmann::json summary;
    if (ms.size() >= 2) {
        SlopeFit fit = fit_loglog(ms, dist);
        summary["fit_range"] = {lo, m_max};
        summary["distance_slope"] = fit.slope;
        summary["distance_slope_stderr"] = fit.stderr_slope;
        SlopeFit efit = fit_loglog(ms, std::vector<double>(hs.error_trace.end() - ms.size(),
                                                           hs.error_trace.end()));
        summary["error_slope"] = efit.slope;
        summary["error_slope_stderr"] = efit.stderr_slope;
    }
    summary["final_error"] = hs.error_trace.back();
    summary["condition_all_true"] =
        std::all_of(hs.condition_trace.begin(), hs.condition_trace.end(),
                    [](std::uint8_t b) { return b != 0; });
    std::cout << summary.dump(2) << "\n";

    RunManifest manifest;
    manifest.command_line = command_line;
    manifest.instance_digest = hex64(fnv1a(raw));
    std::ostringstream cfgs;
    cfgs << moments << '|' << sample_count << '|' << sample_seed << '|' << eta_u << '|' << eta_p
         << '|' << m_max << '|' << inference << '|' << manifest.instance_digest;
    manifest.config_hash = hex64(fnv1a(cfgs.str()));
    manifest.duration_ms = watch.elapsed_ms();
    write_manifest(out_path + ".manifest.json", manifest);
    return 0;
}

int cmd_generate(const std::string& kind, int width, int height, int labels, double noise,
                 std::uint64_t seed, const std::string& out_path) {
    InstanceKind k = kind == "interactive" ? InstanceKind::GridInteractive
                                           : InstanceKind::GridSemantic;
    if (kind != "semantic" && kind != "interactive")
        throw invalid_input_error("unknown kind: " + kind);
    save_instance_spec(generate_grid_spec(k, width, height, labels, noise, seed), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"herdcrf: diverse hypothesis extraction from pairwise CRFs"};
    app.require_subcommand(1);
    std::string command_line = quote_args(argc, argv);

    // --- sample ---
    auto* sample = app.add_subcommand("sample", "Extract a hypothesis set from one instance");
    std::string s_instance, s_out, s_method = "divmbest", s_moments = "zero", s_inference = "lbp";
    double s_eta_u = 0.5, s_eta_p = 0.0, s_lambda = 0.5;
    int s_m = 20;
    double s_norm_cap_v = 0.0, s_fraction_v = 0.0;
    bool s_normalize = false;
    std::uint64_t s_mask_seed = 1;
    CommonModelFlags s_model;
    sample->add_option("--instance", s_instance, "Instance JSON path")->required();
    sample->add_option("--method", s_method, "divmbest | herding");
    sample->add_option("--moments", s_moments, "zero | unary | full (herding)");
    sample->add_option("--eta-u", s_eta_u, "Unary update rate");
    sample->add_option("--eta-p", s_eta_p, "Pairwise update rate");
    sample->add_option("--lambda", s_lambda, "divmbest diversity rate");
    sample->add_option("--samples,-M", s_m, "Number of hypotheses");
    sample->add_option("--inference", s_inference, "bruteforce | lbp");
    auto* s_cap_opt = sample->add_option("--norm-cap", s_norm_cap_v, "L2 cap on theta");
    sample->add_flag("--normalize-theta", s_normalize, "Cap theta at max(1, initial L2 norm)");
    auto* s_frac_opt =
        sample->add_option("--observed-fraction", s_fraction_v, "Mask unaries to this fraction");
    sample->add_option("--mask-seed", s_mask_seed, "Seed for the observed-node subset");
    s_model.attach(sample);
    sample->add_option("--out", s_out, "Output JSONL path")->required();

    // --- experiment ---
    auto* experiment = app.add_subcommand("experiment", "Run a suite config");
    std::string e_suite, e_out;
    int e_threads = 0;
    experiment->add_option("--suite", e_suite, "Suite config JSON path")->required();
    experiment->add_option("--out-dir", e_out, "Output directory")->required();
    experiment->add_option("--threads", e_threads, "Worker threads (0: auto)");

    // --- convergence ---
    auto* convergence =
        app.add_subcommand("convergence", "Trace moment reconstruction error over M");
    std::string c_instance, c_out, c_moments = "samples", c_inference = "lbp";
    int c_sample_count = 10, c_m_max = 1024;
    std::uint64_t c_sample_seed = 17;
    double c_eta_u = 1.0, c_eta_p = 1.0, c_norm_cap_v = 0.0;
    bool c_normalize = false;
    CommonModelFlags c_model;
    convergence->add_option("--instance", c_instance, "Instance JSON path")->required();
    convergence->add_option("--moments", c_moments, "zero | unary | full | samples");
    convergence->add_option("--sample-count", c_sample_count,
                            "Labelings averaged into mu (moments=samples)");
    convergence->add_option("--sample-seed", c_sample_seed, "Seed for those labelings");
    convergence->add_option("--eta-u", c_eta_u, "Unary update rate");
    convergence->add_option("--eta-p", c_eta_p, "Pairwise update rate");
    convergence->add_option("--m-max,-M", c_m_max, "Iterations");
    convergence->add_option("--inference", c_inference, "bruteforce | lbp");
    auto* c_cap_opt = convergence->add_option("--norm-cap", c_norm_cap_v, "L2 cap on theta");
    convergence->add_flag("--normalize-theta", c_normalize,
                          "Cap theta at max(1, initial L2 norm)");
    c_model.attach(convergence);
    convergence->add_option("--out", c_out, "Output CSV path")->required();

    // --- generate ---
    auto* generate = app.add_subcommand("generate", "Write a synthetic grid instance");
    std::string g_kind = "semantic", g_out;
    int g_width = 8, g_height = 8, g_labels = 4;
    double g_noise = 0.5;
    std::uint64_t g_seed = 1;
    generate->add_option("--kind", g_kind, "semantic | interactive");
    generate->add_option("--width", g_width, "Grid width");
    generate->add_option("--height", g_height, "Grid height");
    generate->add_option("--labels", g_labels, "Label count");
    generate->add_option("--noise", g_noise, "Score noise sigma");
    generate->add_option("--seed", g_seed, "Generator seed");
    generate->add_option("--out", g_out, "Output JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sample->parsed()) {
            std::optional<double> cap;
            if (s_cap_opt->count() > 0) cap = s_norm_cap_v;
            std::optional<double> fraction;
            if (s_frac_opt->count() > 0) fraction = s_fraction_v;
            return cmd_sample(s_instance, s_method, s_moments, s_eta_u, s_eta_p, s_lambda, s_m,
                              s_inference, cap, s_normalize, fraction, s_mask_seed, s_model, s_out,
                              command_line);
        }
        if (experiment->parsed()) return cmd_experiment(e_suite, e_out, e_threads, command_line);
        if (convergence->parsed()) {
            std::optional<double> cap;
            if (c_cap_opt->count() > 0) cap = c_norm_cap_v;
            return cmd_convergence(c_instance, c_moments, c_sample_count, c_sample_seed, c_eta_u,
                                   c_eta_p, c_m_max, c_inference, cap, c_normalize, c_model, c_out,
                                   command_line);
        }
        if (generate->parsed())
            return cmd_generate(g_kind, g_width, g_height, g_labels, g_noise, g_seed, g_out);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const capacity_error& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const invalid_input_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
