#include "herdcrf/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "herdcrf/kernels.hpp"

namespace herdcrf {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

}  // namespace

InstanceSpec parse_instance_json(const std::string& text) {
    json doc = json::parse(text);  // parse_error propagates to the caller

    InstanceSpec spec;
    if (!doc.contains("labels") || !doc["labels"].is_number_integer())
        throw invalid_input_error("instance JSON: missing integer 'labels'");
    spec.labels = doc["labels"].get<int>();

    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        throw invalid_input_error("instance JSON: missing 'nodes' array");
    const auto& nodes = doc["nodes"];
    spec.nodes.resize(nodes.size());
    std::vector<bool> seen(nodes.size(), false);
    for (const auto& nj : nodes) {
        if (!nj.contains("id") || !nj["id"].is_number_integer())
            throw invalid_input_error("instance JSON: node without integer 'id'");
        int id = nj["id"].get<int>();
        if (id < 0 || id >= static_cast<int>(nodes.size()) || seen[id])
            throw invalid_input_error("instance JSON: node ids must cover [0,N) uniquely");
        seen[id] = true;
        NodeSpec& node = spec.nodes[id];
        if (nj.contains("unary_scores") && !nj["unary_scores"].is_null())
            node.unary_scores = nj["unary_scores"].get<std::vector<double>>();
        node.observed = nj.value("observed", node.unary_scores.has_value());
        if (nj.contains("gt") && !nj["gt"].is_null()) node.gt = nj["gt"].get<int>();
        if (nj.contains("color") && !nj["color"].is_null()) {
            auto c = nj["color"].get<std::vector<double>>();
            if (c.size() != 3) throw invalid_input_error("instance JSON: color needs 3 entries");
            node.color = {c[0], c[1], c[2]};
        }
    }

    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) throw invalid_input_error("instance JSON: 'edges' must be an array");
        for (const auto& ej : doc["edges"]) {
            EdgeSpec e;
            e.i = ej.at("i").get<int>();
            e.j = ej.at("j").get<int>();
            if (ej.contains("similarity") && !ej["similarity"].is_null())
                e.similarity = ej["similarity"].get<double>();
            spec.edges.push_back(e);
        }
    }
    return spec;
}

InstanceSpec load_instance_spec(const std::string& path) {
    return parse_instance_json(read_file(path));
}

std::string instance_to_json(const InstanceSpec& spec) {
    json doc;
    doc["labels"] = spec.labels;
    json nodes = json::array();
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const NodeSpec& n = spec.nodes[i];
        json nj;
        nj["id"] = static_cast<int>(i);
        nj["unary_scores"] = n.unary_scores ? json(*n.unary_scores) : json(nullptr);
        nj["observed"] = n.observed;
        nj["gt"] = n.gt ? json(*n.gt) : json(nullptr);
        nj["color"] =
            n.color ? json({(*n.color)[0], (*n.color)[1], (*n.color)[2]}) : json(nullptr);
        nodes.push_back(std::move(nj));
    }
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const EdgeSpec& e : spec.edges) {
        json ej;
        ej["i"] = e.i;
        ej["j"] = e.j;
        ej["similarity"] = e.similarity ? json(*e.similarity) : json(nullptr);
        edges.push_back(std::move(ej));
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

void save_instance_spec(const InstanceSpec& spec, const std::string& path) {
    write_file(path, instance_to_json(spec));
}

void write_hypotheses_jsonl(std::ostream& os, const HypothesisSet& hypotheses) {
    for (std::size_t m = 0; m < hypotheses.samples.size(); ++m) {
        json rec;
        rec["m"] = static_cast<int>(m);
        rec["labeling"] = hypotheses.samples[m];
        rec["energy"] = hypotheses.energy_trace[m];
        rec["error"] = hypotheses.error_trace[m];
        rec["condition"] = hypotheses.condition_trace[m] != 0;
        os << rec.dump() << "\n";
    }
}

void write_hypotheses_jsonl(const std::string& path, const HypothesisSet& hypotheses) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    write_hypotheses_jsonl(out, hypotheses);
}

std::string moment_spec_to_json(const MomentSpec& spec) {
    json doc;
    doc["layout"] = spec.mu.layout == PairwiseLayout::Full ? "full" : "potts_agreement";
    doc["eta_unary"] = spec.eta_unary;
    doc["eta_pairwise"] = spec.eta_pairwise;
    doc["in_polytope"] = spec.in_polytope;
    doc["normalize_theta"] = spec.normalize_theta;
    json unary = json::array();
    for (int i = 0; i < spec.mu.nodes; ++i) {
        auto b = spec.mu.unary_block(i);
        unary.push_back({{"constrained", spec.unary_constrained[i] != 0},
                         {"mu", std::vector<double>(b.begin(), b.end())}});
    }
    doc["unary"] = std::move(unary);
    json pairwise = json::array();
    for (int e = 0; e < spec.mu.edge_count; ++e) {
        auto b = spec.mu.pairwise_block(e);
        pairwise.push_back({{"constrained", spec.pairwise_constrained[e] != 0},
                            {"mu", std::vector<double>(b.begin(), b.end())}});
    }
    doc["pairwise"] = std::move(pairwise);
    return doc.dump(2) + "\n";
}

MomentSpec parse_moment_spec_json(const std::string& text, const CrfGraph& g,
                                  const LabelSpace& l) {
    json doc = json::parse(text);
    MomentSpec spec;
    PairwiseLayout layout = doc.value("layout", std::string("potts_agreement")) == "full"
                                ? PairwiseLayout::Full
                                : PairwiseLayout::PottsAgreement;
    spec.mu = StatVector::zeros(g, l, layout);
    spec.eta_unary = doc.value("eta_unary", 0.0);
    spec.eta_pairwise = doc.value("eta_pairwise", 0.0);
    spec.in_polytope = doc.value("in_polytope", false);
    spec.normalize_theta = doc.value("normalize_theta", false);
    spec.unary_constrained.assign(g.node_count, 0);
    spec.pairwise_constrained.assign(g.edge_count(), 0);

    const auto& unary = doc.at("unary");
    if (static_cast<int>(unary.size()) != g.node_count)
        throw invalid_input_error("moment JSON: unary block count mismatch");
    for (int i = 0; i < g.node_count; ++i) {
        spec.unary_constrained[i] = unary[i].value("constrained", false) ? 1 : 0;
        auto mu = unary[i].at("mu").get<std::vector<double>>();
        if (static_cast<int>(mu.size()) != l.count)
            throw invalid_input_error("moment JSON: unary block length mismatch");
        std::copy(mu.begin(), mu.end(), spec.mu.unary_block(i).begin());
    }
    const auto& pairwise = doc.at("pairwise");
    if (static_cast<int>(pairwise.size()) != g.edge_count())
        throw invalid_input_error("moment JSON: pairwise block count mismatch");
    for (int e = 0; e < g.edge_count(); ++e) {
        spec.pairwise_constrained[e] = pairwise[e].value("constrained", false) ? 1 : 0;
        auto mu = pairwise[e].at("mu").get<std::vector<double>>();
        if (static_cast<int>(mu.size()) != spec.mu.pair_arity())
            throw invalid_input_error("moment JSON: pairwise block length mismatch");
        std::copy(mu.begin(), mu.end(), spec.mu.pairwise_block(e).begin());
    }
    spec.validate();
    return spec;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    json doc;
    doc["command_line"] = manifest.command_line;
    doc["config_hash"] = manifest.config_hash;
    doc["instance_digest"] = manifest.instance_digest;
    doc["version"] = manifest.version;
    doc["kernels"] = manifest.kernels.empty() ? kern::active().name : manifest.kernels;
    doc["duration_ms"] = manifest.duration_ms;
    write_file(path, doc.dump(2) + "\n");
}

std::uint64_t fnv1a(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace herdcrf
