#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pfb/gvf_learner.hpp"

namespace pfb {

namespace {

std::string real17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_text(const WeightSnapshot& s) {
    std::string out;
    out.reserve(32 * s.weights.size() + 200);
    out += "{\n  \"format_version\": " + std::to_string(WeightSnapshot::kFormatVersion) + ",\n";
    out += "  \"alpha\": " + real17(s.alpha) + ",\n";
    out += "  \"gamma\": " + real17(s.gamma) + ",\n";
    out += std::string("  \"frozen\": ") + (s.frozen ? "true" : "false") + ",\n";
    out += "  \"updates_applied\": " + std::to_string(s.updates_applied) + ",\n";
    out += "  \"length\": " + std::to_string(s.weights.size()) + ",\n";
    out += "  \"weights\": [";
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
        out += (i % 4 == 0) ? "\n    " : " ";
        out += real17(s.weights[i]);
        if (i + 1 < s.weights.size()) out += ",";
    }
    out += "\n  ]\n}\n";
    return out;
}

void write_snapshot(std::ostream& out, const WeightSnapshot& snapshot) { out << to_text(snapshot); }

WeightSnapshot parse_snapshot(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("snapshot: ") + e.what());
    }
    try {
        if (!doc.is_object()) throw ParseError("snapshot: not an object");
        if (doc.at("format_version").get<int>() != WeightSnapshot::kFormatVersion)
            throw ParseError("snapshot: unsupported format_version");
        WeightSnapshot s;
        s.alpha = doc.at("alpha").get<double>();
        s.gamma = doc.at("gamma").get<double>();
        s.frozen = doc.at("frozen").get<bool>();
        s.updates_applied = doc.at("updates_applied").get<std::uint64_t>();
        const auto length = doc.at("length").get<std::size_t>();
        const auto& weights = doc.at("weights");
        if (!weights.is_array()) throw ParseError("snapshot: weights is not an array");
        if (weights.size() != length || length == 0) throw ParseError("snapshot: weights length mismatch");
        s.weights.reserve(length);
        for (const auto& w : weights) {
            if (!w.is_number()) throw ParseError("snapshot: non-numeric weight");
            s.weights.push_back(w.get<double>());
        }
        if (!(s.alpha >= 0.0 && s.alpha <= 1.0) || !(s.gamma >= 0.0 && s.gamma < 1.0))
            throw ParseError("snapshot: hyperparameters out of range");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("snapshot: ") + e.what());
    }
}

WeightSnapshot read_snapshot(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_snapshot(buf.str());
}

WeightSnapshot load_snapshot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("no_snapshot", "cannot open snapshot " + path);
    return read_snapshot(in);
}

void save_snapshot_file(const std::string& path, const WeightSnapshot& snapshot) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("io_error", "cannot write snapshot " + path);
    write_snapshot(out, snapshot);
    if (!out) throw RuntimeError("io_error", "failed writing snapshot " + path);
}

}  // namespace pfb
