#pragma once

#include <iosfwd>
#include <string>

#include "herdcrf/seg.hpp"

namespace herdcrf {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Instance interchange format:
//   {"labels": K,
//    "nodes": [{"id": n, "unary_scores": [..]|null, "observed": bool,
//               "gt": int|null, "color": [r,g,b]|null}, ...],
//    "edges": [{"i": a, "j": b, "similarity": s|null}, ...]}
// Scores are raw classifier outputs; the sigmoid/Potts mapping is applied at
// assembly time. Colors and similarity are reals in [0,1].
InstanceSpec parse_instance_json(const std::string& text);
InstanceSpec load_instance_spec(const std::string& path);
std::string instance_to_json(const InstanceSpec& spec);
void save_instance_spec(const InstanceSpec& spec, const std::string& path);

// JSON Lines: one record per sample
//   {"m": k, "labeling": [...], "energy": e, "error": eq4, "condition": bool}
void write_hypotheses_jsonl(std::ostream& os, const HypothesisSet& hypotheses);
void write_hypotheses_jsonl(const std::string& path, const HypothesisSet& hypotheses);

// Moment target with rates and constraint masks, for run reproducibility.
std::string moment_spec_to_json(const MomentSpec& spec);
MomentSpec parse_moment_spec_json(const std::string& text, const CrfGraph& g,
                                  const LabelSpace& l);

struct RunManifest {
    std::string command_line;
    std::string config_hash;
    std::string instance_digest;
    std::string version = kLibraryVersion;
    std::string kernels;
    double duration_ms = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

// FNV-1a over bytes; the hex form is used for config hashes and digests.
std::uint64_t fnv1a(const void* data, std::size_t size);
std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);

}  // namespace herdcrf
