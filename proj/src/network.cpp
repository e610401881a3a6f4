#include "ropf/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ropf {

namespace {

using nlohmann::ordered_json;

std::string bus_tag(BusId b) { return "bus " + std::to_string(b); }

}  // namespace

std::vector<std::string> validation_errors(const RadialNetwork& net) {
    std::vector<std::string> errs;
    const int n = net.n_buses;
    if (n < 1) {
        errs.push_back("network must contain at least the root bus");
        return errs;
    }
    if (static_cast<int>(net.parent.size()) != n ||
        static_cast<int>(net.children.size()) != n ||
        static_cast<int>(net.line.size()) != n ||
        static_cast<int>(net.spec.size()) != n) {
        errs.push_back("inconsistent per-bus array sizes");
        return errs;
    }

    // Tree structure: every non-root bus has a parent in range, no cycles,
    // all buses reachable from the root.
    if (net.parent[0] != -1) errs.push_back("root bus must have no parent");
    for (BusId b = 1; b < n; ++b) {
        if (net.parent[b] < 0 || net.parent[b] >= n) {
            errs.push_back(bus_tag(b) + ": parent out of range");
        } else if (net.parent[b] == b) {
            errs.push_back(bus_tag(b) + ": not a tree (self-loop)");
        }
    }
    if (errs.empty()) {
        std::vector<int> seen(n, 0);
        std::deque<BusId> queue{0};
        seen[0] = 1;
        int reached = 0;
        while (!queue.empty()) {
            BusId b = queue.front();
            queue.pop_front();
            ++reached;
            for (BusId c : net.children[b]) {
                if (c <= 0 || c >= n || net.parent[c] != b) {
                    errs.push_back(bus_tag(b) + ": children list inconsistent with parent map");
                    continue;
                }
                if (seen[c]) {
                    errs.push_back(bus_tag(c) + ": not a tree (visited twice)");
                    continue;
                }
                seen[c] = 1;
                queue.push_back(c);
            }
        }
        if (errs.empty() && reached != n) {
            errs.push_back("not a tree (some buses unreachable from root)");
        }
        for (BusId b = 0; b < n; ++b) {
            if (!std::is_sorted(net.children[b].begin(), net.children[b].end())) {
                errs.push_back(bus_tag(b) + ": children not in ascending order");
            }
        }
    }

    for (BusId b = 1; b < n; ++b) {
        const LineParams& lp = net.line[b];
        if (lp.r < 0 || lp.x < 0) errs.push_back("line " + std::to_string(b) + ": negative impedance");
        if (lp.impedance_sq() <= 0) {
            errs.push_back("line " + std::to_string(b) + ": zero impedance rejected");
        }
    }

    for (BusId b = 0; b < n; ++b) {
        const BusSpec& sp = net.spec[b];
        if (!(sp.v_lo > 0) || !(sp.v_lo <= sp.v_hi)) {
            errs.push_back(bus_tag(b) + ": voltage bounds must satisfy 0 < v_lo <= v_hi");
        }
        if (sp.alpha < 0) errs.push_back(bus_tag(b) + ": alpha must be >= 0");
        if (const auto* box = std::get_if<BoxRegion>(&sp.injection)) {
            if (box->p_lo > box->p_hi) errs.push_back(bus_tag(b) + ": box region has p_lo > p_hi");
            if (box->q_lo > box->q_hi) errs.push_back(bus_tag(b) + ": box region has q_lo > q_hi");
        } else if (const auto* disk = std::get_if<DiskRegion>(&sp.injection)) {
            if (disk->s_max < 0) errs.push_back(bus_tag(b) + ": disk region has s_max < 0");
        }
    }
    if (n >= 1 && net.spec[0].v_lo != net.spec[0].v_hi) {
        errs.push_back("root voltage must be fixed (v_lo == v_hi)");
    }
    return errs;
}

void validate(const RadialNetwork& net) {
    auto errs = validation_errors(net);
    if (errs.empty()) return;
    std::ostringstream msg;
    msg << "invalid network:";
    for (const auto& e : errs) msg << "\n  - " << e;
    throw ValidationError(msg.str());
}

namespace {

double require_number(const ordered_json& j, const char* field, const std::string& ctx) {
    if (!j.contains(field) || !j.at(field).is_number()) {
        throw ParseError(ctx + ": missing or non-numeric field '" + field + "'");
    }
    return j.at(field).get<double>();
}

}  // namespace

RadialNetwork load_network(const std::string& bytes) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed network document: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("network document must be an object");
    if (!doc.contains("version") || doc.at("version") != 1) {
        throw ParseError("unsupported or missing document version (expected 1)");
    }
    if (!doc.contains("buses") || !doc.at("buses").is_array() || doc.at("buses").empty()) {
        throw ParseError("missing 'buses' array");
    }
    if (!doc.contains("lines") || !doc.at("lines").is_array()) {
        throw ParseError("missing 'lines' array");
    }

    const auto& buses = doc.at("buses");
    const int n = static_cast<int>(buses.size());
    RadialNetwork net;
    net.n_buses = n;
    net.parent.assign(n, -1);
    net.children.assign(n, {});
    net.line.assign(n, {});
    net.spec.assign(n, {});

    std::vector<bool> bus_seen(n, false);
    for (const auto& jb : buses) {
        if (!jb.contains("id") || !jb.at("id").is_number_integer()) {
            throw ParseError("bus entry missing integer 'id'");
        }
        const int id = jb.at("id").get<int>();
        if (id < 0 || id >= n) throw ParseError(bus_tag(id) + ": id not in dense range 0..N-1");
        if (bus_seen[id]) throw ParseError(bus_tag(id) + ": duplicate id");
        bus_seen[id] = true;
        const std::string ctx = bus_tag(id);
        BusSpec sp;
        sp.v_lo = require_number(jb, "v_lo", ctx);
        sp.v_hi = require_number(jb, "v_hi", ctx);
        sp.alpha = require_number(jb, "alpha", ctx);
        sp.beta = require_number(jb, "beta", ctx);
        if (!jb.contains("injection") || !jb.at("injection").is_object()) {
            throw ParseError(ctx + ": missing 'injection' object");
        }
        const auto& inj = jb.at("injection");
        const std::string kind = inj.value("kind", "");
        if (kind == "box") {
            BoxRegion box;
            box.p_lo = require_number(inj, "p_lo", ctx);
            box.p_hi = require_number(inj, "p_hi", ctx);
            box.q_lo = require_number(inj, "q_lo", ctx);
            box.q_hi = require_number(inj, "q_hi", ctx);
            sp.injection = box;
        } else if (kind == "disk") {
            DiskRegion disk;
            disk.s_max = require_number(inj, "s_max", ctx);
            sp.injection = disk;
        } else {
            throw ParseError(ctx + ": injection kind must be 'box' or 'disk'");
        }
        net.spec[id] = sp;
    }

    std::vector<bool> line_seen(n, false);
    for (const auto& jl : doc.at("lines")) {
        if (!jl.contains("from") || !jl.at("from").is_number_integer()) {
            throw ParseError("line entry missing integer 'from'");
        }
        const int from = jl.at("from").get<int>();
        if (from <= 0 || from >= n) throw ParseError("line from " + std::to_string(from) + ": id out of range");
        if (line_seen[from]) throw ParseError("line from " + std::to_string(from) + ": duplicate");
        line_seen[from] = true;
        const std::string ctx = "line " + std::to_string(from);
        if (!jl.contains("to") || !jl.at("to").is_number_integer()) {
            throw ParseError(ctx + ": missing integer 'to'");
        }
        net.parent[from] = jl.at("to").get<int>();
        net.line[from].r = require_number(jl, "r", ctx);
        net.line[from].x = require_number(jl, "x", ctx);
    }
    for (BusId b = 1; b < n; ++b) {
        if (!line_seen[b]) throw ParseError(bus_tag(b) + ": missing line impedance entry");
    }
    for (BusId b = 1; b < n; ++b) {
        if (net.parent[b] >= 0 && net.parent[b] < n) net.children[net.parent[b]].push_back(b);
    }
    for (auto& ch : net.children) std::sort(ch.begin(), ch.end());

    validate(net);
    return net;
}

std::string save_network(const RadialNetwork& net) {
    ordered_json doc;
    doc["version"] = 1;
    doc["buses"] = ordered_json::array();
    for (BusId b = 0; b < net.n_buses; ++b) {
        const BusSpec& sp = net.spec[b];
        ordered_json jb;
        jb["id"] = b;
        jb["v_lo"] = sp.v_lo;
        jb["v_hi"] = sp.v_hi;
        jb["alpha"] = sp.alpha;
        jb["beta"] = sp.beta;
        ordered_json inj;
        if (const auto* box = std::get_if<BoxRegion>(&sp.injection)) {
            inj["kind"] = "box";
            inj["p_lo"] = box->p_lo;
            inj["p_hi"] = box->p_hi;
            inj["q_lo"] = box->q_lo;
            inj["q_hi"] = box->q_hi;
        } else {
            const auto& disk = std::get<DiskRegion>(sp.injection);
            inj["kind"] = "disk";
            inj["s_max"] = disk.s_max;
        }
        jb["injection"] = inj;
        doc["buses"].push_back(jb);
    }
    doc["lines"] = ordered_json::array();
    for (BusId b = 1; b < net.n_buses; ++b) {
        ordered_json jl;
        jl["from"] = b;
        jl["to"] = net.parent[b];
        jl["r"] = net.line[b].r;
        jl["x"] = net.line[b].x;
        doc["lines"].push_back(jl);
    }
    return doc.dump(2) + "\n";
}

RadialNetwork load_network_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open network file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_network(ss.str());
}

void save_network_file(const RadialNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write network file: " + path);
    out << save_network(net);
}

namespace {

// Fills loads, impedances and cost coefficients for a network whose
// parent/children structure is already in place. Per-bus draws happen in a
// fixed order so generation is deterministic in the seed.
void fill_profile(RadialNetwork& net, const LoadProfile& profile) {
    const int n = net.n_buses;
    std::mt19937_64 rng(profile.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Loads and impedances shrink with size so large instances remain
    // voltage-feasible under the fixed [0.95^2, 1.05^2] limits.
    const double scale = 10.0 / std::max(10, n);

    BusSpec root;
    root.v_lo = root.v_hi = 1.0;
    root.injection = BoxRegion{-10.0, 10.0, -10.0, 10.0};
    root.alpha = profile.alpha;
    root.beta = profile.beta;
    net.spec[0] = root;

    for (BusId b = 1; b < n; ++b) {
        const double jitter = 0.5 + unit(rng);  // [0.5, 1.5]
        net.line[b].r = profile.base_r * jitter * scale;
        net.line[b].x = profile.base_x * jitter * scale;

        BusSpec sp;
        sp.v_lo = 0.95 * 0.95;
        sp.v_hi = 1.05 * 1.05;
        sp.alpha = profile.alpha;
        sp.beta = profile.beta;
        const bool is_pv = unit(rng) < profile.pv_fraction;
        const double up = unit(rng);
        const double uq = unit(rng);
        if (is_pv) {
            sp.injection = DiskRegion{profile.pv_s_max * scale};
        } else {
            // Inelastic consumption: a point box drawn from the profile range.
            const double p = -profile.load_p_max * (0.2 + 0.8 * up) * scale;
            const double q = -profile.load_q_max * (0.2 + 0.8 * uq) * scale;
            sp.injection = BoxRegion{p, p, q, q};
        }
        net.spec[b] = sp;
    }
}

RadialNetwork from_parents(std::vector<BusId> parent, const LoadProfile& profile) {
    RadialNetwork net;
    net.n_buses = static_cast<int>(parent.size());
    net.parent = std::move(parent);
    net.children.assign(net.n_buses, {});
    net.line.assign(net.n_buses, {});
    net.spec.assign(net.n_buses, {});
    for (BusId b = 1; b < net.n_buses; ++b) net.children[net.parent[b]].push_back(b);
    for (auto& ch : net.children) std::sort(ch.begin(), ch.end());
    fill_profile(net, profile);
    validate(net);
    return net;
}

void require_size(int n) {
    if (n < 2) throw ValidationError("generated networks need at least 2 buses");
}

}  // namespace

RadialNetwork gen_line(int n, const LoadProfile& profile) {
    require_size(n);
    std::vector<BusId> parent(n);
    parent[0] = -1;
    for (BusId b = 1; b < n; ++b) parent[b] = b - 1;
    return from_parents(std::move(parent), profile);
}

RadialNetwork gen_fat_tree(int n, const LoadProfile& profile) {
    require_size(n);
    std::vector<BusId> parent(n, 0);
    parent[0] = -1;
    return from_parents(std::move(parent), profile);
}

RadialNetwork gen_random_tree(int n, const LoadProfile& profile) {
    require_size(n);
    std::mt19937_64 rng(profile.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<BusId> parent(n);
    parent[0] = -1;
    for (BusId b = 1; b < n; ++b) {
        parent[b] = static_cast<BusId>(rng() % static_cast<std::uint64_t>(b));
    }
    return from_parents(std::move(parent), profile);
}

namespace {

// Returns (farthest bus, hop distance) from `start`.
std::pair<BusId, int> bfs_farthest(const RadialNetwork& net, BusId start) {
    std::vector<int> dist(net.n_buses, -1);
    std::deque<BusId> queue{start};
    dist[start] = 0;
    BusId far = start;
    while (!queue.empty()) {
        BusId b = queue.front();
        queue.pop_front();
        if (dist[b] > dist[far]) far = b;
        auto visit = [&](BusId nb) {
            if (nb >= 0 && dist[nb] < 0) {
                dist[nb] = dist[b] + 1;
                queue.push_back(nb);
            }
        };
        visit(net.parent[b]);
        for (BusId c : net.children[b]) visit(c);
    }
    return {far, dist[far]};
}

}  // namespace

int diameter(const RadialNetwork& net) {
    if (net.n_buses <= 1) return 0;
    auto [far, d0] = bfs_farthest(net, 0);
    auto [far2, d] = bfs_farthest(net, far);
    (void)far2;
    return d;
}

}  // namespace ropf
