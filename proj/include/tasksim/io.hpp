#pragma once

/// @file io.hpp
/// @brief File formats: partition and distribution JSON, sample CSV, and
/// fitted-model JSON.
///
/// Partition JSON:     {"domain": [xmin, xmax, ymin, ymax], "cells": [[[x, y], ...], ...]}
/// Distribution JSON:  partition fields + "labels": [[p_0, ..., p_{k-1}], ...],
///                     "mass": [...] (optional: defaults to area-proportional),
///                     "name": "..." (optional)
/// Sample CSV:         f0,...,f{d-1},y,t  (optional header row)

#include "tasksim/distributions.hpp"
#include "tasksim/geometry.hpp"
#include "tasksim/learners.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tasksim {

using json = nlohmann::json;

/// Malformed or inconsistent user input (CLI exit code 2).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Round-trippable decimal form (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Partitions and distributions

inline json partition_to_json(const Partition& p) {
    const Box& d = p.domain();
    json cells = json::array();
    for (const auto& c : p.cells()) {
        json poly = json::array();
        for (const auto& v : c.vertices()) poly.push_back({v.x0, v.x1});
        cells.push_back(std::move(poly));
    }
    return {{"domain", {d.xmin, d.xmax, d.ymin, d.ymax}}, {"cells", std::move(cells)}};
}

inline Partition partition_from_json(const json& j) {
    try {
        const auto& dom = j.at("domain");
        if (!dom.is_array() || dom.size() != 4) throw InputError("\"domain\" must be [xmin, xmax, ymin, ymax]");
        const Box box{dom[0].get<double>(), dom[1].get<double>(), dom[2].get<double>(), dom[3].get<double>()};
        std::vector<ConvexPolygon> cells;
        for (const auto& c : j.at("cells")) {
            std::vector<Point2> pts;
            for (const auto& v : c) {
                if (!v.is_array() || v.size() != 2) throw InputError("cell vertices must be [x, y] pairs");
                pts.push_back({v[0].get<double>(), v[1].get<double>()});
            }
            cells.emplace_back(std::move(pts));
        }
        return Partition(box, std::move(cells));
    } catch (const json::exception& e) {
        throw InputError(std::string("bad partition JSON: ") + e.what());
    } catch (const GeometryError& e) {
        throw InputError(std::string("bad partition geometry: ") + e.what());
    }
}

inline json distribution_to_json(const PartitionDistribution& d) {
    json j = partition_to_json(d.partition());
    j["labels"] = d.class_probs();
    j["mass"] = std::vector<double>(d.masses().begin(), d.masses().end());
    if (!d.name().empty()) j["name"] = d.name();
    return j;
}

inline PartitionDistribution distribution_from_json(const json& j, std::string fallback_name = {}) {
    Partition p = partition_from_json(j);
    try {
        auto labels = j.at("labels").get<std::vector<std::vector<double>>>();
        std::vector<double> mass;
        if (j.contains("mass")) {
            mass = j.at("mass").get<std::vector<double>>();
        } else {
            double total = 0.0;
            for (const auto& c : p.cells()) total += c.area();
            for (const auto& c : p.cells()) mass.push_back(c.area() / total);
        }
        std::string name = j.value("name", fallback_name);
        return PartitionDistribution(std::move(p), std::move(labels), std::move(mass), std::move(name));
    } catch (const json::exception& e) {
        throw InputError(std::string("bad distribution JSON: ") + e.what());
    } catch (const DistributionError& e) {
        throw InputError(std::string("invalid distribution: ") + e.what());
    }
}

inline json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError("malformed JSON in '" + path + "': " + e.what());
    }
}

inline PartitionDistribution load_distribution(const std::string& path) {
    auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
    if (auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
    return distribution_from_json(parse_json_file(path), stem);
}

// ---------------------------------------------------------------------------
// Sample CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline bool parse_number(const std::string& s, double& v) {
    std::size_t used = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
    return used == s.size();
}

}  // namespace detail

inline std::vector<LabeledSample> parse_samples_csv(std::istream& in, const std::string& source = "<csv>") {
    std::vector<LabeledSample> out;
    std::string line;
    std::size_t lineno = 0, dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        std::vector<double> vals;
        bool numeric = true;
        for (const auto& f : fields) {
            double v = 0.0;
            if (!detail::parse_number(f, v)) {
                numeric = false;
                break;
            }
            vals.push_back(v);
        }
        if (!numeric) {
            if (out.empty() && lineno == 1) continue;  // header
            throw InputError(source + ":" + std::to_string(lineno) + ": non-numeric field");
        }
        if (vals.size() < 3) throw InputError(source + ":" + std::to_string(lineno) + ": need f0,...,y,t");
        if (dim == 0) dim = vals.size() - 2;
        if (vals.size() - 2 != dim) throw InputError(source + ":" + std::to_string(lineno) + ": dimension mismatch");
        const double y = vals[dim], t = vals[dim + 1];
        if (y < 0 || y != std::floor(y)) throw InputError(source + ":" + std::to_string(lineno) + ": bad label");
        if (t != 0.0 && t != 1.0) throw InputError(source + ":" + std::to_string(lineno) + ": task flag must be 0 or 1");
        vals.resize(dim);
        out.push_back({std::move(vals), static_cast<Label>(y), static_cast<int>(t)});
    }
    return out;
}

inline std::vector<LabeledSample> read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_samples_csv(in, path);
}

inline void write_samples_csv(std::ostream& out, std::span<const LabeledSample> samples) {
    if (samples.empty()) return;
    for (std::size_t j = 0; j < samples.front().x.size(); ++j) out << 'f' << j << ',';
    out << "y,t\n";
    for (const auto& s : samples) {
        for (double v : s.x) out << format_double(v) << ',';
        out << s.y << ',' << s.t << '\n';
    }
}

// ---------------------------------------------------------------------------
// Fitted models

inline json transformer_to_json(const Transformer& u) {
    json dom = json::array();
    const Domain& d = std::visit([](const auto& t) -> const Domain& { return t.domain(); }, u);
    for (const auto& iv : d) dom.push_back({iv.lo, iv.hi});
    if (const auto* h = std::get_if<HistogramTransformer>(&u))
        return {{"kind", "histogram"}, {"domain", dom}, {"bins", h->bins()}};
    const auto& t = std::get<TreeTransformer>(u);
    json nodes = json::array();
    for (const auto& n : t.nodes()) {
        if (n.is_leaf()) nodes.push_back({{"leaf", n.leaf_id}});
        else
            nodes.push_back({{"dim", n.split_dim}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    return {{"kind", "tree"}, {"domain", dom}, {"nodes", std::move(nodes)}};
}

inline Transformer transformer_from_json(const json& j) {
    Domain d;
    for (const auto& iv : j.at("domain")) d.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "histogram") return HistogramTransformer(std::move(d), j.at("bins").get<std::size_t>());
    if (kind != "tree") throw InputError("unknown transformer kind '" + kind + "'");
    std::vector<TreeNode> nodes;
    for (const auto& n : j.at("nodes")) {
        TreeNode t;
        if (n.contains("leaf")) {
            t.leaf_id = n.at("leaf").get<int>();
        } else {
            t.split_dim = n.at("dim").get<int>();
            t.threshold = n.at("threshold").get<double>();
            t.left = n.at("left").get<int>();
            t.right = n.at("right").get<int>();
        }
        nodes.push_back(t);
    }
    return TreeTransformer(std::move(d), std::move(nodes));
}

inline json decision_function_to_json(const ComposeableDecisionFunction& f) {
    json j{{"transformer", transformer_to_json(*f.transformer)},
           {"voter", {{"posteriors", f.voter.posteriors()}, {"counts", f.voter.counts()}}}};
    j["decider"]["empty_region_label"] =
        f.decider.empty_region_label ? json(*f.decider.empty_region_label) : json(nullptr);
    return j;
}

inline ComposeableDecisionFunction decision_function_from_json(const json& j) {
    try {
        auto u = std::make_shared<const Transformer>(transformer_from_json(j.at("transformer")));
        Voter v(j.at("voter").at("posteriors").get<std::vector<std::vector<double>>>(),
                j.at("voter").at("counts").get<std::vector<std::size_t>>());
        if (v.num_regions() != num_regions(*u)) throw InputError("voter table does not match the transformer");
        Decider w;
        const auto& e = j.at("decider").at("empty_region_label");
        if (!e.is_null()) w.empty_region_label = e.get<Label>();
        return {std::move(u), std::move(v), w};
    } catch (const json::exception& e) {
        throw InputError(std::string("bad model JSON: ") + e.what());
    } catch (const LearnerError& e) {
        throw InputError(std::string("invalid model: ") + e.what());
    }
}

inline json model_to_json(const FittedModel& m) {
    json j = decision_function_to_json(m.fn);
    j["learner"] = m.learner;
    j["n_samples"] = m.n_samples;
    j["seed"] = m.seed;
    if (m.learner == "histogram") j["bins"] = m.bins;
    else {
        j["max_depth"] = m.max_depth;
        j["min_leaf"] = m.min_leaf;
    }
    return j;
}

inline FittedModel model_from_json(const json& j) {
    return {decision_function_from_json(j),
            j.value("learner", std::string{}),
            j.value("n_samples", std::size_t{0}),
            j.value("bins", std::size_t{0}),
            j.value("max_depth", std::size_t{0}),
            j.value("min_leaf", std::size_t{0}),
            j.value("seed", std::uint64_t{0})};
}

}  // namespace tasksim
