#include "pathlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pathlab/torusmap.hpp"

namespace pathlab {

namespace {

using nlohmann::json;

struct SchemaError {
    std::string pointer;
    std::string message;
};

std::string join(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string join(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

void only_keys(const json& j, const std::string& at, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw SchemaError{at, "expected an object"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw SchemaError{join(at, it.key()), "unknown key '" + it.key() + "'"};
    }
}

double number(const json& j, const std::string& at, double lo, double hi, bool open_lo = false) {
    if (!j.is_number()) throw SchemaError{at, "expected a number"};
    const double v = j.get<double>();
    if (!std::isfinite(v) || v > hi || (open_lo ? v <= lo : v < lo)) {
        std::ostringstream os;
        os << "value " << v << " outside " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
        throw SchemaError{at, os.str()};
    }
    return v;
}

std::int64_t integer(const json& j, const std::string& at, std::int64_t lo, std::int64_t hi) {
    if (!j.is_number_integer()) throw SchemaError{at, "expected an integer"};
    const auto v = j.get<std::int64_t>();
    if (v < lo || v > hi) {
        throw SchemaError{at, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]"};
    }
    return v;
}

bool boolean(const json& j, const std::string& at) {
    if (!j.is_boolean()) throw SchemaError{at, "expected true or false"};
    return j.get<bool>();
}

std::vector<double> numbers(const json& j, const std::string& at, double lo, double hi, std::size_t size = 0) {
    if (!j.is_array() || j.empty()) throw SchemaError{at, "expected a nonempty array of numbers"};
    if (size && j.size() != size) throw SchemaError{at, "expected " + std::to_string(size) + " numbers"};
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], join(at, i), lo, hi));
    return out;
}

std::vector<int> selector(const json& j, const std::string& at, int n) {
    if (!j.is_array() || j.empty()) throw SchemaError{at, "expected a nonempty array of 1-based indices"};
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const int v = static_cast<int>(integer(j[i], join(at, i), 1, n));
        if (!out.empty() && v <= out.back()) throw SchemaError{join(at, i), "indices must be increasing"};
        out.push_back(v);
    }
    return out;
}

Estimator estimator(const json& j, const std::string& at) {
    if (!j.is_string()) throw SchemaError{at, "expected \"uniform\" or \"support-adapted\""};
    try {
        return estimator_from_string(j.get<std::string>());
    } catch (const NumericalError& e) {
        throw SchemaError{at, e.what()};
    }
}

void read_alignment(const json& j, const std::string& at, AlignmentOptions& a) {
    if (j.contains("alignment")) a.iterations = static_cast<int>(integer(j["alignment"], join(at, "alignment"), 1, 2000));
    if (j.contains("auto_refine")) a.auto_refine = boolean(j["auto_refine"], join(at, "auto_refine"));
    if (j.contains("alignment_cap")) a.cap = static_cast<int>(integer(j["alignment_cap"], join(at, "alignment_cap"), 1, 5000));
    if (a.cap < a.iterations) throw SchemaError{join(at, "alignment_cap"), "cap must be >= alignment"};
}

LeafSpec read_leaf(const json& j, const std::string& at, int n) {
    only_keys(j, at, {"bundle", "points", "radii", "delta", "steps", "budget", "burn_in"});
    for (const char* key : {"bundle", "points", "radii"}) {
        if (!j.contains(key)) throw SchemaError{at, std::string("missing '") + key + "'"};
    }
    LeafSpec leaf;
    leaf.bundle = selector(j["bundle"], join(at, "bundle"), n);
    if (leaf.bundle.size() > 2) throw SchemaError{join(at, "bundle"), "leaf disks are 1- or 2-dimensional"};
    const json& pts = j["points"];
    if (!pts.is_array() || pts.empty()) throw SchemaError{join(at, "points"), "expected a nonempty array of points"};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        leaf.points.push_back(numbers(pts[i], join(join(at, "points"), i), 0.0, 1.0, static_cast<std::size_t>(n)));
    }
    const std::string rat = join(at, "radii");
    if (!j["radii"].is_array() || j["radii"].empty()) throw SchemaError{rat, "expected a nonempty array"};
    for (std::size_t i = 0; i < j["radii"].size(); ++i) leaf.radii.push_back(number(j["radii"][i], join(rat, i), 0.0, 0.01, true));
    if (j.contains("delta")) leaf.delta = number(j["delta"], join(at, "delta"), 0.0, 1.0, true);
    if (j.contains("steps")) leaf.steps = static_cast<int>(integer(j["steps"], join(at, "steps"), 1, 200));
    if (j.contains("budget")) leaf.budget = static_cast<std::size_t>(integer(j["budget"], join(at, "budget"), 16, 100'000'000));
    if (j.contains("burn_in")) leaf.burn_in = static_cast<int>(integer(j["burn_in"], join(at, "burn_in"), 0, leaf.steps - 1));
    return leaf;
}

ExperimentConfig read(const json& root, int& n) {
    only_keys(root, "", {"map", "splitting", "seed", "leaves", "monte_carlo", "detect", "sweep"});
    if (!root.contains("map")) throw SchemaError{"", "missing 'map'"};
    ExperimentConfig cfg;
    cfg.map = root["map"];
    try {
        n = torus_map_from_json(cfg.map).dim();
    } catch (const ConfigError& e) {
        throw SchemaError{"/map", e.what()};
    } catch (const NumericalError& e) {
        // Spectral problems are not schema problems; commands that need the spectrum report them.
        if (e.kind() != ErrorKind::DegenerateSpectrum && e.kind() != ErrorKind::NonRealSpectrum) {
            throw SchemaError{"/map", e.what()};
        }
        n = static_cast<int>(cfg.map["linear"].size());
    }

    cfg.splitting.assign(static_cast<std::size_t>(n), 1);
    if (root.contains("splitting")) {
        const json& s = root["splitting"];
        if (!s.is_array() || s.empty()) throw SchemaError{"/splitting", "expected block dimensions"};
        cfg.splitting.clear();
        int total = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            cfg.splitting.push_back(static_cast<int>(integer(s[i], join("/splitting", i), 1, n)));
            total += cfg.splitting.back();
        }
        if (total != n) throw SchemaError{"/splitting", "block dimensions must sum to " + std::to_string(n)};
    }
    if (root.contains("seed")) cfg.seed = static_cast<std::uint64_t>(integer(root["seed"], "/seed", 0, INT64_MAX));

    if (root.contains("leaves")) {
        const json& l = root["leaves"];
        if (!l.is_array()) throw SchemaError{"/leaves", "expected an array"};
        for (std::size_t i = 0; i < l.size(); ++i) cfg.leaves.push_back(read_leaf(l[i], join("/leaves", i), n));
    }

    if (root.contains("monte_carlo")) {
        const json& m = root["monte_carlo"];
        const std::string at = "/monte_carlo";
        only_keys(m, at, {"samples", "alignment", "auto_refine", "alignment_cap", "estimator", "orbit_length",
                          "orbit_start", "spectrum_points", "spectrum_steps"});
        auto& mc = cfg.monte_carlo;
        if (m.contains("samples")) mc.samples = integer(m["samples"], join(at, "samples"), 1, 100'000'000);
        read_alignment(m, at, mc.alignment);
        if (m.contains("estimator")) mc.estimator = estimator(m["estimator"], join(at, "estimator"));
        if (m.contains("orbit_length")) mc.orbit_length = integer(m["orbit_length"], join(at, "orbit_length"), 0, 20'000'000);
        if (m.contains("orbit_start")) {
            mc.orbit_start = numbers(m["orbit_start"], join(at, "orbit_start"), 0.0, 1.0, static_cast<std::size_t>(n));
        }
        if (m.contains("spectrum_points")) {
            mc.spectrum_points = static_cast<int>(integer(m["spectrum_points"], join(at, "spectrum_points"), 1, 10'000));
        }
        if (m.contains("spectrum_steps")) {
            mc.spectrum_steps = static_cast<int>(integer(m["spectrum_steps"], join(at, "spectrum_steps"), 1, 10'000'000));
        }
    }

    if (root.contains("detect")) {
        const json& d = root["detect"];
        const std::string at = "/detect";
        only_keys(d, at, {"bundle", "closedness_bundle", "sigma", "floor", "samples", "estimator", "domination_steps",
                          "domination_samples", "closedness_steps", "closedness_samples", "c1_samples",
                          "volume_samples", "cross_check_samples"});
        auto& ds = cfg.detect;
        if (d.contains("bundle")) ds.bundle = selector(d["bundle"], join(at, "bundle"), n);
        if (d.contains("closedness_bundle")) {
            ds.closedness_bundle = selector(d["closedness_bundle"], join(at, "closedness_bundle"), n);
            if (ds.closedness_bundle.size() < 2) {
                throw SchemaError{join(at, "closedness_bundle"), "closedness needs a bundle of dimension >= 2"};
            }
        }
        if (d.contains("sigma")) ds.sigma = number(d["sigma"], join(at, "sigma"), 0.0, 100.0, true);
        if (d.contains("floor")) ds.floor = number(d["floor"], join(at, "floor"), 0.0, 1.0);
        if (d.contains("samples")) ds.samples = integer(d["samples"], join(at, "samples"), 2, 100'000'000);
        if (d.contains("estimator")) ds.estimator = estimator(d["estimator"], join(at, "estimator"));
        if (d.contains("domination_steps")) ds.domination_steps = static_cast<int>(integer(d["domination_steps"], join(at, "domination_steps"), 1, 50));
        if (d.contains("domination_samples")) ds.domination_samples = integer(d["domination_samples"], join(at, "domination_samples"), 1, 10'000'000);
        if (d.contains("closedness_steps")) ds.closedness_steps = static_cast<int>(integer(d["closedness_steps"], join(at, "closedness_steps"), 1, 50));
        if (d.contains("closedness_samples")) ds.closedness_samples = integer(d["closedness_samples"], join(at, "closedness_samples"), 1, 10'000'000);
        if (d.contains("c1_samples")) ds.c1_samples = integer(d["c1_samples"], join(at, "c1_samples"), 1, 10'000'000);
        if (d.contains("volume_samples")) ds.volume_samples = integer(d["volume_samples"], join(at, "volume_samples"), 1, 10'000'000);
        if (d.contains("cross_check_samples")) {
            ds.cross_check_samples = integer(d["cross_check_samples"], join(at, "cross_check_samples"), 0, 100'000'000);
        }
    }

    if (root.contains("sweep")) {
        const json& s = root["sweep"];
        const std::string at = "/sweep";
        only_keys(s, at, {"rotation", "theta_max", "rho"});
        SweepSpec sw;
        const std::size_t rotations = cfg.map.contains("rotations") ? cfg.map["rotations"].size() : 0;
        if (rotations == 0) throw SchemaError{at, "sweep needs a map with at least one rotation"};
        if (s.contains("rotation")) {
            sw.rotation = static_cast<int>(integer(s["rotation"], join(at, "rotation"), 1, static_cast<std::int64_t>(rotations))) - 1;
        }
        for (const char* key : {"theta_max", "rho"}) {
            if (!s.contains(key)) throw SchemaError{at, std::string("missing '") + key + "'"};
        }
        sw.theta_max = numbers(s["theta_max"], join(at, "theta_max"), 0.0, 100.0);
        sw.rho = numbers(s["rho"], join(at, "rho"), 0.0, 0.5);
        for (std::size_t i = 0; i < sw.rho.size(); ++i) {
            if (!(sw.rho[i] > 0)) throw SchemaError{join(join(at, "rho"), i), "rho must be positive"};
        }
        cfg.sweep = sw;
    }
    return cfg;
}

// Minimal scanner used only to map a JSON pointer back to a source line.
class Locator {
public:
    explicit Locator(const std::string& text) : s_(text) {}

    std::size_t find(const std::vector<std::string>& path) {
        pos_ = 0;
        key_hit_ = false;
        skip_ws();
        for (const auto& token : path) {
            if (pos_ >= s_.size()) return std::string::npos;
            if (s_[pos_] == '{') {
                ++pos_;
                bool found = false;
                while (true) {
                    skip_ws();
                    if (pos_ >= s_.size() || s_[pos_] == '}') break;
                    const std::size_t key_at = pos_;
                    const std::string key = read_string();
                    skip_ws();
                    if (pos_ < s_.size() && s_[pos_] == ':') ++pos_;
                    skip_ws();
                    if (key == token) {
                        found = true;
                        last_key_ = key_at;
                        key_hit_ = true;
                        break;
                    }
                    skip_value();
                    skip_ws();
                    if (pos_ < s_.size() && s_[pos_] == ',') ++pos_;
                }
                if (!found) return std::string::npos;
            } else if (s_[pos_] == '[') {
                ++pos_;
                key_hit_ = false;
                const std::size_t index = std::stoul(token);
                for (std::size_t i = 0; i < index; ++i) {
                    skip_ws();
                    skip_value();
                    skip_ws();
                    if (pos_ < s_.size() && s_[pos_] == ',') ++pos_;
                }
                skip_ws();
            } else {
                return std::string::npos;
            }
        }
        return pos_;
    }

    std::size_t last_key() const noexcept { return last_key_; }
    bool ended_on_key() const noexcept { return key_hit_; }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    std::string read_string() {
        std::string out;
        if (pos_ >= s_.size() || s_[pos_] != '"') return out;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\') ++pos_;
            if (pos_ < s_.size()) out += s_[pos_++];
        }
        ++pos_;
        return out;
    }
    void skip_value() {
        if (pos_ >= s_.size()) return;
        const char c = s_[pos_];
        if (c == '"') {
            read_string();
            return;
        }
        if (c == '{' || c == '[') {
            int depth = 0;
            while (pos_ < s_.size()) {
                const char d = s_[pos_];
                if (d == '"') {
                    read_string();
                    continue;
                }
                if (d == '{' || d == '[') ++depth;
                if (d == '}' || d == ']') --depth;
                ++pos_;
                if (depth == 0) return;
            }
            return;
        }
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']') ++pos_;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    std::size_t last_key_ = std::string::npos;
    bool key_hit_ = false;
};

int line_of(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n';
    return line;
}

} // namespace

int locate_line(const std::string& text, const std::string& pointer) {
    std::vector<std::string> path;
    std::size_t i = 0;
    while (i < pointer.size()) {
        const std::size_t next = pointer.find('/', i + 1);
        path.push_back(pointer.substr(i + 1, next == std::string::npos ? std::string::npos : next - i - 1));
        i = next == std::string::npos ? pointer.size() : next;
    }
    Locator loc(text);
    std::size_t at = loc.find(path);
    if (at == std::string::npos && !path.empty()) {
        // The last component may be a key that is absent; point at the enclosing object.
        path.pop_back();
        at = loc.find(path);
    }
    if (at == std::string::npos) return 0;
    // Report unknown or mistyped object members at the key rather than the value.
    if (!path.empty() && loc.ended_on_key()) {
        return line_of(text, loc.last_key());
    }
    return line_of(text, at);
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        const int line = line_of(text, byte);
        const std::size_t line_start = text.rfind('\n', byte == 0 ? 0 : byte - 1);
        const std::size_t column = byte - (line_start == std::string::npos ? 0 : line_start + 1) + 1;
        throw ConfigError("JSON syntax error at column " + std::to_string(column) + ": " + e.what(), line);
    }
    int n = 0;
    try {
        return read(root, n);
    } catch (const SchemaError& e) {
        const std::string where = e.pointer.empty() ? "<root>" : e.pointer;
        throw ConfigError(where + ": " + e.message, locate_line(text, e.pointer));
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace pathlab
