#include "vvccs/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace vvccs::sim {

using nlohmann::json;

Algorithm parse_algorithm(const std::string& name) {
    if (name == "lease") return Algorithm::Lease;
    if (name == "lock") return Algorithm::Lock;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

const char* algorithm_name(Algorithm a) { return a == Algorithm::Lease ? "lease" : "lock"; }

namespace {

geom::Rect parse_rect(const json& j) {
    return {j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("x1").get<double>(),
            j.at("y1").get<double>()};
}

void parse_geometry(const json& j, geom::GeometryConfig& g) {
    g.preset = j.value("preset", "four_way");
    g.canvas = j.value("canvas", g.canvas);
    g.block_size = j.value("block", g.block_size);
    g.lane_width = j.value("lane_width", g.lane_width);
    g.grid = j.value("grid", g.grid);
    g.stop_line_offset = j.value("stop_line_offset", g.stop_line_offset);
    if (j.contains("blocks")) {
        for (const auto& b : j.at("blocks"))
            g.blocks.push_back({b.at("id").get<std::string>(), parse_rect(b.at("region"))});
    }
    if (j.contains("paths")) {
        for (const auto& p : j.at("paths")) {
            geom::GeometryConfig::PathSpec spec;
            spec.id = p.at("id").get<std::string>();
            for (const auto& pt : p.at("polyline"))
                spec.polyline.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
            g.paths.push_back(std::move(spec));
        }
    }
}

void parse_params(const json& j, dyn::VehicleParams& p) {
    p.k_ff = j.value("k_ff", p.k_ff);
    p.k_p = j.value("k_p", p.k_p);
    p.k_i = j.value("k_i", p.k_i);
    p.v_max = j.value("v_max", p.v_max);
    p.a_max = j.value("a_max", p.a_max);
    p.a_min = j.value("a_min", p.a_min);
    p.motor_lag_tau = j.value("motor_lag_tau", p.motor_lag_tau);
    p.length = j.value("length", p.length);
    p.width = j.value("width", p.width);
}

void parse_net(const json& j, net::NetParams& n) {
    n.msg_size = j.value("msg_size", n.msg_size);
    n.update_period = j.value("update_period", n.update_period);
    n.sync_latency = j.value("sync_latency", n.sync_latency);
    n.lognormal_sigma = j.value("lognormal_sigma", n.lognormal_sigma);
    n.capacity = j.value("capacity", n.capacity);
    n.loss_prob = j.value("loss_prob", n.loss_prob);
    n.overhead_fraction = j.value("overhead_fraction", n.overhead_fraction);
    if (j.contains("latency_mode"))
        n.latency_mode = net::parse_latency_mode(j.at("latency_mode").get<std::string>());
}

void parse_sched(const json& j, lease::SchedulerParams& s) {
    s.margin = j.value("margin", s.margin);
    s.grace = j.value("grace", s.grace);
    s.extension_threshold = j.value("extension_threshold", s.extension_threshold);
    s.extension_quantum = j.value("extension_quantum", s.extension_quantum);
    s.proxy_lead = j.value("proxy_lead", s.proxy_lead);
    s.v_advised = j.value("v_advised", s.v_advised);
    s.max_retries = j.value("max_retries", s.max_retries);
}

void parse_sensors(const json& j, percep::SensorParams& s) {
    s.cam_range = j.value("cam_range", s.cam_range);
    s.cam_min_range = j.value("cam_min_range", s.cam_min_range);
    s.cam_fov_half = j.value("cam_fov_half", s.cam_fov_half);
    s.lidar_range = j.value("lidar_range", s.lidar_range);
    s.lidar_res_deg = j.value("lidar_res_deg", s.lidar_res_deg);
    s.px_sigma = j.value("px_sigma", s.px_sigma);
    s.range_sigma = j.value("range_sigma", s.range_sigma);
    s.dropout_prob = j.value("dropout_prob", s.dropout_prob);
}

} // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario is not valid JSON: ") + e.what());
    }

    Scenario sc;
    sc.name = j.value("name", "scenario");
    if (j.contains("geometry")) parse_geometry(j.at("geometry"), sc.geometry);
    if (j.contains("net")) parse_net(j.at("net"), sc.net);
    if (j.contains("scheduler")) parse_sched(j.at("scheduler"), sc.sched);
    if (j.contains("sensors")) parse_sensors(j.at("sensors"), sc.sensors);
    if (j.contains("algorithm")) sc.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    sc.seed = j.value("seed", sc.seed);
    sc.duration = j.value("duration", sc.duration);
    sc.spawn_jitter = j.value("spawn_jitter", sc.spawn_jitter);
    sc.speed_jitter = j.value("speed_jitter", sc.speed_jitter);
    sc.debug_invariants = j.value("debug_invariants", sc.debug_invariants);
    if (j.contains("no_v2v"))
        for (const auto& id : j.at("no_v2v")) sc.no_v2v.push_back(id.get<std::string>());

    std::set<std::string> ids;
    for (const auto& v : j.value("vehicles", json::array())) {
        VehicleSpec spec;
        spec.id = v.at("id").get<std::string>();
        spec.path_id = v.at("path").get<std::string>();
        spec.spawn_time = v.value("spawn_time", 0.0);
        spec.initial_s = v.value("initial_s", 0.0);
        spec.initial_speed = v.value("initial_speed", 0.0);
        spec.is_v2v = v.value("v2v", true);
        if (v.contains("params")) parse_params(v.at("params"), spec.params);
        if (!ids.insert(spec.id).second)
            throw std::invalid_argument("duplicate vehicle id '" + spec.id + "'");
        if (spec.spawn_time < 0 || spec.spawn_time > sc.duration)
            throw std::invalid_argument("vehicle '" + spec.id + "' spawn time outside duration");
        sc.vehicles.push_back(std::move(spec));
    }

    for (const auto& o : j.value("obstacles", json::array())) {
        ObstacleSpec spec;
        spec.path_id = o.at("path").get<std::string>();
        spec.s = o.at("s").get<double>();
        spec.appear_time = o.value("appear_time", 0.0);
        spec.clear_time = o.value("clear_time", sc.duration);
        spec.radius = o.value("radius", spec.radius);
        sc.obstacles.push_back(spec);
    }
    for (const auto& o : j.value("occluders", json::array())) sc.occluders.push_back(parse_rect(o));

    if (sc.vehicles.empty()) throw std::invalid_argument("scenario has no vehicles");
    if (sc.duration <= 0) throw std::invalid_argument("duration must be positive");
    auto model = geom::IntersectionModel::build(sc.geometry);
    for (const auto& v : sc.vehicles)
        if (!model.has_path(v.path_id))
            throw std::invalid_argument("vehicle '" + v.id + "' uses unknown path '" +
                                        v.path_id + "'");
    for (const auto& o : sc.obstacles)
        if (!model.has_path(o.path_id))
            throw std::invalid_argument("obstacle uses unknown path '" + o.path_id + "'");
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario sc = parse_scenario(buf.str());
    if (sc.name == "scenario") {
        auto slash = path.find_last_of('/');
        sc.name = slash == std::string::npos ? path : path.substr(slash + 1);
    }
    return sc;
}

} // namespace vvccs::sim
