#pragma once

#include <iosfwd>

#include "herdcrf/io.hpp"

namespace herdcrf {

struct GenerateParams {
    InstanceKind kind = InstanceKind::GridSemantic;
    int width = 8;
    int height = 8;
    int labels = 4;
    double noise = 0.5;
    std::uint64_t seed = 0;
};

struct SuiteInstanceRef {
    std::string path;                       // one of path / generate
    std::optional<GenerateParams> generate;
};

struct MethodConfig {
    std::string name;
    std::string method = "divmbest";  // divmbest | herding
    std::string moments = "zero";     // zero | unary | full (herding only)
    double lambda = 0.5;
    double eta_u = 0.5;
    double eta_p = 0.0;
    std::optional<double> norm_cap;
    bool normalize_theta = false;
};

struct SuiteConfig {
    std::string name = "suite";
    MetricKind metric = MetricKind::PerClassAccuracy;
    int m_max = 20;
    InferenceSpec inference{};
    SigmoidParams sigmoid{};
    PottsParams potts{};
    std::vector<double> observed_fractions;  // empty: run instances as-is
    std::uint64_t mask_seed = 20230101;
    std::vector<SuiteInstanceRef> instances;
    std::vector<MethodConfig> configs;
};

SuiteConfig parse_suite_config(const std::string& text);
SuiteConfig load_suite_config(const std::string& path);

struct RunOutcome {
    int instance_index = 0;
    int fraction_index = -1;  // -1 when no masking applies
    int config_index = 0;
    bool failed = false;
    std::string error;
    EvalReport report;
};

struct SuiteResult {
    SuiteConfig config;
    std::vector<RunOutcome> runs;  // deterministic order: instance, fraction, config
};

// Fans runs out across worker threads (HERDCRF_THREADS caps the pool) and
// assembles results in deterministic key order.
SuiteResult run_suite(const SuiteConfig& config, int threads = 0);

// Versioned CSV: one row per (run, M).
void write_suite_csv(std::ostream& os, const SuiteResult& result);

// Aggregate means plus the directional statistics used by the trend checks
// (mode-vs-rate sweeps, oracle-vs-observed-fraction gaps).
std::string suite_summary_json(const SuiteResult& result);

CrfInstance materialize_instance(const SuiteInstanceRef& ref, const SigmoidParams& sigmoid,
                                 const PottsParams& potts);

// The moment target a herding MethodConfig resolves to on a given instance.
MomentSpec build_moments(const CrfInstance& inst, const MethodConfig& mc);

HypothesisSet run_method(const CrfInstance& inst, const MethodConfig& mc,
                         const InferenceSpec& inference, int m_max);

// --- small numeric helpers shared by the CLI and the trend checks ----------

// Kendall rank correlation of y against x (ties contribute zero).
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

// Least-squares fit of log(y) against log(x); y values are floored at 1e-300.
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace herdcrf
