#include "midnet/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace midnet::sim {

const char* to_string(Mode m) { return m == Mode::Mobile ? "mobile" : "fixed"; }

Mode parse_mode(const std::string& s) {
    if (s == "mobile") return Mode::Mobile;
    if (s == "fixed") return Mode::Fixed;
    throw InvalidArgument("mode must be 'mobile' or 'fixed', got '" + s + "'");
}

namespace {

std::string format_error(const std::string& key, int line, const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!key.empty()) out += key + ": ";
    return out + message;
}

[[noreturn]] void fail(const std::string& key, const std::string& message) { throw ScenarioError(key, 0, message); }

std::string indexed(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

} // namespace

ScenarioError::ScenarioError(std::string key, int line, const std::string& message)
    : InvalidArgument(format_error(key, line, message)), key_(std::move(key)), line_(line), message_(message) {}

int ScenarioConfig::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (agents[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

routing::TeamConfig ScenarioConfig::team_at(double t) const {
    routing::TeamConfig team;
    for (const auto& a : agents) {
        team.kinds.push_back(a.kind);
        team.active.push_back(a.active_at(t));
    }
    return team;
}

void ScenarioConfig::validate() const {
    if (dimension != 2 && dimension != 3) fail("dimension", "must be 2 or 3");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) fail("duration_s", "must be a finite value > 0");
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) fail("dt_s", "must be > 0");
    if (!(planner.plan_period_s > 0.0)) fail("planner.plan_period_s", "must be > 0");
    if (dt_s > planner.plan_period_s + 1e-12) fail("dt_s", "must not exceed planner.plan_period_s");
    if (!(planner.trust_region_m > 0.0)) fail("planner.trust_region_m", "must be > 0");
    if (!(v_max > 0.0) || !std::isfinite(v_max)) fail("planner.v_max", "must be a finite value > 0");
    if (!(table_period_s > 0.0)) fail("planner.table_period_s", "must be > 0");

    const auto& ch = planner.channel;
    if (!std::isfinite(ch.tx_power_dbm)) fail("channel.tx_power_dbm", "must be finite");
    if (!std::isfinite(ch.noise_floor_dbm)) fail("channel.noise_floor_dbm", "must be finite");
    if (!(ch.path_loss_exp > 0.0)) fail("channel.path_loss_exp", "must be > 0");
    if (!(ch.var_scale >= 0.0)) fail("channel.var_scale", "must be >= 0");
    if (!(ch.var_saturation > 0.0)) fail("channel.var_saturation", "must be > 0");
    if (!(ch.min_distance > 0.0)) fail("channel.min_distance", "must be > 0");

    if (agents.size() < 2) fail("agents", "at least two agents are required");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i];
        const std::string key = indexed("agents", i);
        if (a.id.empty()) fail(key + ".id", "must be nonempty");
        if (!ids.insert(a.id).second) fail(key + ".id", "duplicate id '" + a.id + "'");
        if (a.position.size() != dimension) fail(key + ".position", "must have " + std::to_string(dimension) + " coordinates");
        if (!a.position.allFinite()) fail(key + ".position", "must be finite");
        if (!(a.t_on >= 0.0) || !(a.t_off > a.t_on)) fail(key + ".active", "needs 0 <= t_on < t_off");
        if (a.kind == routing::AgentKind::Network && !std::holds_alternative<Hover>(a.trajectory)) {
            fail(key + ".trajectory", "network agents are planner-driven and take no trajectory");
        }
        try {
            const Trajectory traj(a.trajectory, a.position);
            if (traj.max_speed() > v_max + 1e-12) {
                fail(key + ".trajectory", "speed " + std::to_string(traj.max_speed()) + " exceeds v_max " +
                                              std::to_string(v_max));
            }
        } catch (const ScenarioError&) {
            throw;
        } catch (const InvalidArgument& e) {
            fail(key + ".trajectory", e.what());
        }
    }

    if (flows.empty()) fail("flows", "at least one flow is required");
    const int n = static_cast<int>(agents.size());
    for (std::size_t k = 0; k < flows.size(); ++k) {
        const auto& f = flows[k];
        const std::string key = indexed("flows", k);
        if (f.destination < 0 || f.destination >= n) fail(key + ".destination", "unknown agent");
        if (f.demands.empty()) fail(key + ".demands", "at least one demand is required");
        std::set<int> nodes;
        for (std::size_t d = 0; d < f.demands.size(); ++d) {
            const auto& dm = f.demands[d];
            const std::string dkey = indexed(key + ".demands", d);
            if (dm.node < 0 || dm.node >= n) fail(dkey + ".node", "unknown agent");
            if (dm.node == f.destination) fail(dkey + ".node", "a flow's destination cannot carry a demand");
            if (agents[static_cast<std::size_t>(dm.node)].kind != routing::AgentKind::Task) {
                fail(dkey + ".node", "only task agents carry demands");
            }
            if (!nodes.insert(dm.node).second) fail(dkey + ".node", "duplicate demand node");
            if (!(dm.margin >= 0.0 && dm.margin <= 1.0)) fail(dkey + ".margin", "must lie in [0, 1]");
            if (!(dm.confidence >= 0.5 && dm.confidence < 1.0)) fail(dkey + ".confidence", "must lie in [0.5, 1)");
        }
    }
}

namespace {

/// Walks a YAML document, tracking the dotted key path and the line of each
/// key so that semantic errors can point back into the file.
class Parser {
public:
    explicit Parser(std::map<std::string, int>& lines) : lines_(lines) {}

    [[noreturn]] void error(const YAML::Node& node, const std::string& key, const std::string& message) const {
        throw ScenarioError(key, node.Mark().line >= 0 ? node.Mark().line + 1 : 0, message);
    }

    void expect_map(const YAML::Node& node, const std::string& key, std::initializer_list<const char*> allowed) {
        if (!node.IsMap()) error(node, key, "expected a mapping");
        for (const auto& kv : node) {
            const auto name = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : allowed) ok = ok || name == a;
            const std::string child = key.empty() ? name : key + "." + name;
            if (!ok) error(kv.first, child, "unknown key");
            lines_[child] = kv.first.Mark().line + 1;
        }
    }

    double real(const YAML::Node& node, const std::string& key) const {
        if (!node.IsScalar()) error(node, key, "expected a number");
        try {
            return node.as<double>();
        } catch (const YAML::Exception&) {
            error(node, key, "expected a number, got '" + node.Scalar() + "'");
        }
    }

    std::string text(const YAML::Node& node, const std::string& key) const {
        if (!node.IsScalar()) error(node, key, "expected a string");
        return node.Scalar();
    }

    bool boolean(const YAML::Node& node, const std::string& key) const {
        try {
            return node.as<bool>();
        } catch (const YAML::Exception&) {
            error(node, key, "expected true or false");
        }
    }

    Position vector(const YAML::Node& node, const std::string& key) const {
        if (!node.IsSequence()) error(node, key, "expected a coordinate list");
        Position p(static_cast<Eigen::Index>(node.size()));
        for (std::size_t i = 0; i < node.size(); ++i) p(static_cast<Eigen::Index>(i)) = real(node[i], indexed(key, i));
        return p;
    }

    frames::Geodetic geodetic(const YAML::Node& node, const std::string& key) const {
        const Position v = vector(node, key);
        if (v.size() != 3) error(node, key, "expected [lat, lon, alt]");
        frames::Geodetic g{v(0), v(1), v(2)};
        try {
            g.validate();
        } catch (const InvalidArgument& e) {
            error(node, key, e.what());
        }
        return g;
    }

    int line(const std::string& key) const {
        const auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }

private:
    std::map<std::string, int>& lines_;
};

TrajectorySpec parse_trajectory(Parser& ps, const YAML::Node& node, const std::string& key, const Position& position) {
    if (!node.IsMap() || !node["type"]) ps.error(node, key, "expected a mapping with a 'type'");
    const std::string type = ps.text(node["type"], key + ".type");
    if (type == "hover") {
        ps.expect_map(node, key, {"type"});
        return Hover{};
    }
    if (type == "waypoints") {
        ps.expect_map(node, key, {"type", "points", "speed", "loop"});
        WaypointPath w;
        const auto pts = node["points"];
        if (!pts || !pts.IsSequence()) ps.error(node, key + ".points", "expected a list of points");
        for (std::size_t i = 0; i < pts.size(); ++i) w.points.push_back(ps.vector(pts[i], indexed(key + ".points", i)));
        if (!node["speed"]) ps.error(node, key + ".speed", "missing");
        w.speed = ps.real(node["speed"], key + ".speed");
        if (node["loop"]) w.loop = ps.boolean(node["loop"], key + ".loop");
        return w;
    }
    if (type == "square_wave") {
        ps.expect_map(node, key, {"type", "width", "pitch", "extent", "speed"});
        SquareWave q;
        for (const char* f : {"width", "pitch", "extent", "speed"}) {
            if (!node[f]) ps.error(node, key + "." + f, "missing");
        }
        q.width = ps.real(node["width"], key + ".width");
        q.pitch = ps.real(node["pitch"], key + ".pitch");
        q.extent = ps.real(node["extent"], key + ".extent");
        q.speed = ps.real(node["speed"], key + ".speed");
        return q;
    }
    if (type == "rose") {
        ps.expect_map(node, key, {"type", "amplitude", "angular_rate", "phase", "center"});
        Rose r;
        for (const char* f : {"amplitude", "angular_rate"}) {
            if (!node[f]) ps.error(node, key + "." + f, "missing");
        }
        r.amplitude = ps.real(node["amplitude"], key + ".amplitude");
        r.angular_rate = ps.real(node["angular_rate"], key + ".angular_rate");
        if (node["phase"]) r.phase = ps.real(node["phase"], key + ".phase");
        r.center = node["center"] ? ps.vector(node["center"], key + ".center") : position;
        return r;
    }
    if (type == "scripted") {
        ps.expect_map(node, key, {"type", "table"});
        Scripted s;
        const auto table = node["table"];
        if (!table || !table.IsSequence()) ps.error(node, key + ".table", "expected rows of [t, x, y(, z)]");
        for (std::size_t i = 0; i < table.size(); ++i) {
            const Position row = ps.vector(table[i], indexed(key + ".table", i));
            if (row.size() != position.size() + 1) {
                ps.error(table[i], indexed(key + ".table", i), "expected [t, x, y(, z)] matching the dimension");
            }
            s.times.push_back(row(0));
            s.points.push_back(row.tail(row.size() - 1));
        }
        return s;
    }
    ps.error(node["type"], key + ".type", "unknown trajectory type '" + type + "'");
}

// Local-frame geometry is rigidly mapped into the common frame; the height
// coordinate is dropped again for planar scenarios.
Position map_point(const frames::RigidTransform& h, const Position& p) {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    x.head(p.size()) = p;
    const Eigen::Vector3d y = h.apply(x);
    return y.head(p.size());
}

void map_trajectory(const frames::RigidTransform& h, TrajectorySpec& spec) {
    if (auto* w = std::get_if<WaypointPath>(&spec)) {
        for (auto& p : w->points) p = map_point(h, p);
    } else if (auto* r = std::get_if<Rose>(&spec)) {
        r->center = map_point(h, r->center);
    } else if (auto* s = std::get_if<Scripted>(&spec)) {
        for (auto& p : s->points) p = map_point(h, p);
    }
}

ScenarioConfig parse_root(Parser& ps, const YAML::Node& root) {
    ScenarioConfig cfg;
    ps.expect_map(root, "", {"name", "dimension", "duration_s", "dt_s", "seed", "mode", "channel", "planner", "agents", "flows"});
    for (const char* f : {"dimension", "duration_s", "dt_s", "agents", "flows"}) {
        if (!root[f]) ps.error(root, f, "missing required key");
    }
    if (root["name"]) cfg.name = ps.text(root["name"], "name");
    {
        const double d = ps.real(root["dimension"], "dimension");
        if (d != 2.0 && d != 3.0) ps.error(root["dimension"], "dimension", "must be 2 or 3");
        cfg.dimension = static_cast<int>(d);
    }
    cfg.duration_s = ps.real(root["duration_s"], "duration_s");
    cfg.dt_s = ps.real(root["dt_s"], "dt_s");
    if (root["seed"]) {
        try {
            cfg.seed = root["seed"].as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            ps.error(root["seed"], "seed", "expected an unsigned 64-bit integer");
        }
    }
    if (root["mode"]) {
        try {
            cfg.mode = parse_mode(ps.text(root["mode"], "mode"));
        } catch (const ScenarioError&) {
            throw;
        } catch (const InvalidArgument& e) {
            ps.error(root["mode"], "mode", e.what());
        }
    }

    if (const auto ch = root["channel"]) {
        ps.expect_map(ch, "channel", {"tx_power_dbm", "noise_floor_dbm", "path_loss_exp", "var_scale", "var_saturation", "min_distance"});
        auto& p = cfg.planner.channel;
        if (ch["tx_power_dbm"]) p.tx_power_dbm = ps.real(ch["tx_power_dbm"], "channel.tx_power_dbm");
        if (ch["noise_floor_dbm"]) p.noise_floor_dbm = ps.real(ch["noise_floor_dbm"], "channel.noise_floor_dbm");
        if (ch["path_loss_exp"]) p.path_loss_exp = ps.real(ch["path_loss_exp"], "channel.path_loss_exp");
        if (ch["var_scale"]) p.var_scale = ps.real(ch["var_scale"], "channel.var_scale");
        if (ch["var_saturation"]) p.var_saturation = ps.real(ch["var_saturation"], "channel.var_saturation");
        if (ch["min_distance"]) p.min_distance = ps.real(ch["min_distance"], "channel.min_distance");
    }
    if (const auto pl = root["planner"]) {
        ps.expect_map(pl, "planner", {"plan_period_s", "trust_region_m", "v_max", "table_period_s"});
        if (pl["plan_period_s"]) cfg.planner.plan_period_s = ps.real(pl["plan_period_s"], "planner.plan_period_s");
        if (pl["trust_region_m"]) cfg.planner.trust_region_m = ps.real(pl["trust_region_m"], "planner.trust_region_m");
        if (pl["v_max"]) cfg.v_max = ps.real(pl["v_max"], "planner.v_max");
        if (pl["table_period_s"]) cfg.table_period_s = ps.real(pl["table_period_s"], "planner.table_period_s");
    }

    const auto agents = root["agents"];
    if (!agents.IsSequence()) ps.error(agents, "agents", "expected a list");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto node = agents[i];
        const std::string key = indexed("agents", i);
        ps.expect_map(node, key, {"id", "kind", "position", "trajectory", "active", "frame"});
        for (const char* f : {"id", "kind", "position"}) {
            if (!node[f]) ps.error(node, key + "." + f, "missing required key");
        }
        AgentSpec a;
        a.id = ps.text(node["id"], key + ".id");
        const std::string kind = ps.text(node["kind"], key + ".kind");
        if (kind == "task") {
            a.kind = routing::AgentKind::Task;
        } else if (kind == "network") {
            a.kind = routing::AgentKind::Network;
        } else {
            ps.error(node["kind"], key + ".kind", "must be 'task' or 'network'");
        }
        a.position = ps.vector(node["position"], key + ".position");
        if (a.position.size() != cfg.dimension) {
            ps.error(node["position"], key + ".position", "must have " + std::to_string(cfg.dimension) + " coordinates");
        }
        if (node["trajectory"]) a.trajectory = parse_trajectory(ps, node["trajectory"], key + ".trajectory", a.position);
        if (const auto act = node["active"]) {
            if (!act.IsSequence() || act.size() != 2) ps.error(act, key + ".active", "expected [t_on, t_off]");
            a.t_on = ps.real(act[0], key + ".active[0]");
            a.t_off = act[1].IsNull() ? std::numeric_limits<double>::infinity() : ps.real(act[1], key + ".active[1]");
        }
        if (const auto fr = node["frame"]) {
            ps.expect_map(fr, key + ".frame", {"ref_geodetic", "init_geodetic"});
            if (!fr["ref_geodetic"] || !fr["init_geodetic"]) ps.error(fr, key + ".frame", "needs ref_geodetic and init_geodetic");
            AgentFrame f{ps.geodetic(fr["ref_geodetic"], key + ".frame.ref_geodetic"),
                         ps.geodetic(fr["init_geodetic"], key + ".frame.init_geodetic")};
            const auto h = frames::enu_change(f.init_geodetic, f.ref_geodetic);
            a.position = map_point(h, a.position);
            map_trajectory(h, a.trajectory);
            a.frame = f;
        }
        cfg.agents.push_back(std::move(a));
    }

    const auto flows = root["flows"];
    if (!flows.IsSequence()) ps.error(flows, "flows", "expected a list");
    auto resolve = [&](const YAML::Node& n, const std::string& key) {
        const std::string id = ps.text(n, key);
        const int idx = cfg.index_of(id);
        if (idx < 0) ps.error(n, key, "unknown agent id '" + id + "'");
        return idx;
    };
    for (std::size_t k = 0; k < flows.size(); ++k) {
        const auto node = flows[k];
        const std::string key = indexed("flows", k);
        ps.expect_map(node, key, {"destination", "demands"});
        if (!node["destination"]) ps.error(node, key + ".destination", "missing required key");
        if (!node["demands"] || !node["demands"].IsSequence()) ps.error(node, key + ".demands", "expected a list");
        routing::FlowSpec f;
        f.destination = resolve(node["destination"], key + ".destination");
        const auto demands = node["demands"];
        for (std::size_t d = 0; d < demands.size(); ++d) {
            const std::string dkey = indexed(key + ".demands", d);
            ps.expect_map(demands[d], dkey, {"node", "margin", "confidence"});
            for (const char* fld : {"node", "margin", "confidence"}) {
                if (!demands[d][fld]) ps.error(demands[d], dkey + "." + fld, "missing required key");
            }
            routing::Demand dm;
            dm.node = resolve(demands[d]["node"], dkey + ".node");
            dm.margin = ps.real(demands[d]["margin"], dkey + ".margin");
            dm.confidence = ps.real(demands[d]["confidence"], dkey + ".confidence");
            f.demands.push_back(dm);
        }
        cfg.flows.push_back(std::move(f));
    }
    return cfg;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError("", e.mark.line + 1, source_name + ": " + e.msg);
    }
    std::map<std::string, int> lines;
    Parser ps(lines);
    ScenarioConfig cfg = parse_root(ps, root);
    try {
        cfg.validate();
    } catch (const ScenarioError& e) {
        // Point at the deepest key of the path that appeared in the file.
        std::string key = e.key();
        int line = 0;
        while (!key.empty() && (line = ps.line(key)) == 0) {
            const auto cut = key.find_last_of(".[");
            key = cut == std::string::npos ? std::string() : key.substr(0, cut);
        }
        throw ScenarioError(e.key(), line, e.message());
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("", 0, "cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

} // namespace midnet::sim
