#include "vvccs/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "vvccs/lease.hpp"
#include "vvccs/planner.hpp"

namespace vvccs::sim {

using geom::Vec2;
using nlohmann::ordered_json;

namespace {

constexpr double kDt = 0.01;
constexpr double kObstacleGate = 0.20;   // lateral distance that puts an object on our path
constexpr double kObstacleStandoff = 0.45; // nose half-length + object extent + margin
constexpr double kLookahead = 2.0;       // m of path scanned for obstacles
constexpr double kPathMatchDist = 0.12;  // max track-to-path distance for proxy matching
constexpr double kPeerMatchDist = 0.4;   // track within this of a published peer is that peer
constexpr double kProxySpeedMin = 0.08;  // slower tracks are treated as static
constexpr int kProxyMissLimit = 3;       // consecutive decision misses before a proxy drop
constexpr double kEntryTolerance = 0.05; // s of slack on the entry-inside-window invariant

TraceLevel trace_max(TraceLevel a, TraceLevel b) { return a > b ? a : b; }

struct OBB {
    Vec2 c;
    Vec2 ux; // unit heading
    double hl = 0.0, hw = 0.0;
};

OBB vehicle_obb(const geom::Path& path, double s, const dyn::VehicleParams& p) {
    Vec2 u = path.tangent_at(s);
    return {path.point_at(s), u, p.length / 2.0, p.width / 2.0};
}

bool obb_overlap(const OBB& a, const OBB& b) {
    Vec2 axes[4] = {a.ux, {-a.ux.y, a.ux.x}, b.ux, {-b.ux.y, b.ux.x}};
    Vec2 d = b.c - a.c;
    for (const Vec2& n : axes) {
        double ra = a.hl * std::abs(a.ux.dot(n)) + a.hw * std::abs(Vec2{-a.ux.y, a.ux.x}.dot(n));
        double rb = b.hl * std::abs(b.ux.dot(n)) + b.hw * std::abs(Vec2{-b.ux.y, b.ux.x}.dot(n));
        if (std::abs(d.dot(n)) > ra + rb) return false;
    }
    return true;
}

bool obb_circle_overlap(const OBB& a, const Vec2& c, double r) {
    Vec2 d = c - a.c;
    double lx = d.dot(a.ux);
    double ly = d.dot({-a.ux.y, a.ux.x});
    double qx = std::clamp(lx, -a.hl, a.hl);
    double qy = std::clamp(ly, -a.hw, a.hw);
    double dx = lx - qx, dy = ly - qy;
    return dx * dx + dy * dy <= r * r;
}

const char* phase_name(plan::Phase p) {
    switch (p) {
        case plan::Phase::Planning: return "planning";
        case plan::Phase::Crossing: return "crossing";
        case plan::Phase::PostCrossing: return "post_crossing";
    }
    return "unknown";
}

struct Agent {
    VehicleSpec spec;
    const geom::Path* path = nullptr;
    bool coordinated = false; // takes part in the lease/lock protocol
    bool has_sensors = false;
    double spawn_time = 0.0;
    double cruise = 0.9; // target speed when uncoordinated

    bool spawned = false;
    bool done = false; // reached the end of the path
    bool crashed = false;
    dyn::MotorState motor;
    double s = 0.0, prev_s = 0.0;
    double v_target = 0.0;
    plan::Phase phase = plan::Phase::Planning;
    bool moving = false; // for stop counting

    std::vector<lease::Lease> my_leases;
    bool holds_lock = false;
    percep::Tracker tracker;
    std::mt19937_64 prng;
    std::map<std::string, int> proxy_miss; // proxied path -> consecutive misses

    double first_enter = 0.0, last_exit = 0.0, stop_line = 0.0;
};

struct ActiveObstacle {
    const ObstacleSpec* spec;
    Vec2 pos;
};

class Engine {
public:
    Engine(const Scenario& sc, const RunOptions& opts)
        : sc_(sc),
          model_(geom::IntersectionModel::build(sc.geometry)),
          sched_(&model_, sc.sched),
          opts_(opts) {
        if (!opts_.trace_out) opts_.trace = TraceLevel::None;
        net_rng_.seed(sc_.seed ^ 0x6e65740ULL);
        store_.set_latency_fn([this] { return net::sample_latency(sc_.net, net_rng_); });
        setup_agents();
        for (const auto& o : sc_.obstacles)
            obstacle_pos_.push_back(model_.path(o.path_id).point_at(o.s));
        metrics_.scenario = sc_.name;
        metrics_.algorithm = algorithm_name(sc_.algorithm);
        metrics_.seed = sc_.seed;
        metrics_.duration = sc_.duration;
    }

    RunMetrics run() {
        int ticks = static_cast<int>(std::llround(sc_.duration / kDt));
        int tpd = std::max(1, static_cast<int>(std::llround(sc_.net.update_period / kDt)));
        for (int tick = 0; tick <= ticks; ++tick) {
            double now = tick * kDt;
            for (auto& a : agents_)
                if (!a.spawned && now >= a.spawn_time) spawn(a, now);
            for (std::size_t i = 0; i < agents_.size(); ++i) {
                if (static_cast<int>(i % tpd) != tick % tpd) continue;
                if (agents_[i].spawned) decide(agents_[i], now);
            }
            for (auto& a : agents_) step_physics(a, now);
            detect_collisions(now);
            if (opts_.trace == TraceLevel::Full) emit_tick_state(now);
        }
        finalize();
        return metrics_;
    }

private:
    void setup_agents() {
        std::set<std::string> forced(sc_.no_v2v.begin(), sc_.no_v2v.end());
        forced.insert(opts_.extra_no_v2v.begin(), opts_.extra_no_v2v.end());
        std::mt19937_64 jrng(sc_.seed ^ 0x9e3779b97f4a7c15ULL);
        for (const auto& spec : sc_.vehicles) {
            Agent a;
            a.spec = spec;
            a.path = &model_.path(spec.path_id);
            a.coordinated = spec.is_v2v && !forced.count(spec.id);
            a.has_sensors = spec.is_v2v; // a disabled link does not remove the sensors
            a.spawn_time = spec.spawn_time;
            a.cruise = spec.initial_speed > 0 ? spec.initial_speed : sc_.sched.v_advised;
            if (sc_.spawn_jitter > 0) {
                std::uniform_real_distribution<double> d(-sc_.spawn_jitter, sc_.spawn_jitter);
                a.spawn_time = std::max(0.0, a.spawn_time + d(jrng));
            }
            if (sc_.speed_jitter > 0) {
                std::uniform_real_distribution<double> d(-sc_.speed_jitter, sc_.speed_jitter);
                double j = d(jrng);
                if (!a.coordinated) a.cruise = std::max(0.1, a.cruise + j);
            }
            a.first_enter = model_.first_enter_s(spec.path_id);
            a.last_exit = model_.last_exit_s(spec.path_id);
            a.stop_line = a.first_enter - model_.stop_line_offset();
            agents_.push_back(std::move(a));
        }
        std::sort(agents_.begin(), agents_.end(),
                  [](const Agent& x, const Agent& y) { return x.spec.id < y.spec.id; });
        for (std::size_t i = 0; i < agents_.size(); ++i)
            agents_[i].prng.seed(sc_.seed * 1000003ULL + i);
    }

    void spawn(Agent& a, double now) {
        a.spawned = true;
        a.s = a.prev_s = a.spec.initial_s;
        a.motor.v_current = std::min(a.spec.initial_speed, a.spec.params.v_max);
        a.v_target = a.motor.v_current;
        auto& vm = metrics_.vehicles[a.spec.id];
        vm.spawn_time = now;
    }

    // ---- per-decision step ----

    void decide(Agent& a, double now) {
        std::vector<PeerState> peers;
        if (a.coordinated) {
            publish_state(a, now); // keeps going after a crash so readers stay fresh
            peers = read_peers(a, now);
        }
        if (a.crashed || a.done) {
            flush_store_ops();
            return;
        }

        std::optional<double> obstacle;
        std::vector<percep::FusedObject> fused;
        if (a.has_sensors) {
            fused = perceive(a, now);
            obstacle = nearest_on_path(a, fused);
        }

        plan::PlanInput in;
        in.phase = a.phase;
        in.s = a.s;
        in.speed = a.motor.v_current;
        in.enter_s = a.first_enter;
        in.stop_line_s = a.stop_line;
        in.obstacle_ahead = obstacle;
        in.now = now;
        in.v_advised = sc_.sched.v_advised;

        if (!a.coordinated) {
            in.lease_window = lease::Interval{now - 1.0, 1e18};
            in.v_advised = a.cruise;
        } else if (sc_.algorithm == Algorithm::Lease) {
            lease_lifecycle(a, now);
            if (!a.my_leases.empty()) {
                const lease::Lease* rel = relevant_lease(a);
                if (rel) {
                    in.lease_window = lease::Interval{rel->t_start, rel->t_end};
                    in.lease_preempted =
                        a.phase == plan::Phase::Crossing && rel->t_start > now + 0.02;
                }
            }
            if (a.has_sensors) manage_proxies(a, fused, peers, now);
        } else {
            lock_lifecycle(a, now);
            if (a.holds_lock) in.lease_window = lease::Interval{now - 1.0, 1e18};
        }

        auto d = plan::plan_speed(in, a.spec.params);
        a.v_target = d.v_target;
        if (opts_.trace >= TraceLevel::Events) {
            emit({{"kind", "directive"},
                  {"t", now},
                  {"agent", a.spec.id},
                  {"phase", phase_name(a.phase)},
                  {"reason", plan::reason_name(d.reason)},
                  {"v_target", d.v_target}});
        }
        flush_store_ops();
    }

    void publish_state(Agent& a, double now) {
        if (sc_.net.loss_prob > 0) {
            std::uniform_real_distribution<double> d(0.0, 1.0);
            if (d(net_rng_) < sc_.net.loss_prob) return;
        }
        Vec2 p = a.path->point_at(a.s);
        ordered_json j{{"t", now},           {"s", a.s},
                       {"v", a.motor.v_current}, {"x", p.x},
                       {"y", p.y},           {"path", a.spec.path_id},
                       {"phase", phase_name(a.phase)}};
        store_.put("vehicles/" + a.spec.id + "/state", j.dump(), a.spec.id, now);
    }

    struct PeerState {
        std::string id;
        Vec2 pos;
    };

    std::vector<PeerState> read_peers(Agent& a, double now) {
        std::vector<PeerState> out;
        for (const auto& e : store_.range_read_stale("vehicles/", now)) {
            auto j = nlohmann::json::parse(e.value);
            double ts = j.at("t").get<double>();
            metrics_.max_state_staleness = std::max(metrics_.max_state_staleness, now - ts);
            std::string id = e.key.substr(std::string("vehicles/").size());
            id = id.substr(0, id.find('/'));
            if (id != a.spec.id)
                out.push_back({id, {j.at("x").get<double>(), j.at("y").get<double>()}});
        }
        return out;
    }

    std::vector<percep::FusedObject> perceive(Agent& a, double now) {
        std::vector<percep::WorldTarget> targets;
        for (const auto& o : agents_) {
            if (&o == &a || !o.spawned || o.done) continue;
            targets.push_back({"car", o.path->point_at(o.s), o.spec.params.length / 2.0});
        }
        for (std::size_t i = 0; i < sc_.obstacles.size(); ++i) {
            const auto& o = sc_.obstacles[i];
            if (now >= o.appear_time && now < o.clear_time)
                targets.push_back({"person", obstacle_pos_[i], o.radius});
        }
        percep::EgoPose ego{a.path->point_at(a.s), heading_deg(a)};
        auto sensed = percep::sense(targets, ego, sc_.occluders, sc_.sensors, now, a.prng);
        return percep::run_pipeline(sensed, ego, rig_, a.tracker, now);
    }

    double heading_deg(const Agent& a) const {
        Vec2 u = a.path->tangent_at(a.s);
        return std::atan2(u.y, u.x) * 180.0 / M_PI;
    }

    std::optional<double> nearest_on_path(const Agent& a, const std::vector<percep::FusedObject>& objs) {
        if (objs.empty()) return std::nullopt;
        double limit = std::min(a.path->length(), a.s + kLookahead);
        for (double s = a.s + 0.05; s <= limit; s += 0.02) {
            Vec2 p = a.path->point_at(s);
            for (const auto& o : objs) {
                if ((o.world_pos - p).norm() < kObstacleGate)
                    return std::max(0.0, s - a.s - kObstacleStandoff);
            }
        }
        return std::nullopt;
    }

    // ---- lease lifecycle ----

    const lease::Lease* relevant_lease(const Agent& a) const {
        if (a.my_leases.empty()) return nullptr;
        if (a.phase == plan::Phase::Planning) {
            const lease::Lease* best = &a.my_leases.front();
            for (const auto& l : a.my_leases)
                if (l.t_start < best->t_start) best = &l;
            return best;
        }
        for (const auto& span : a.path->block_spans)
            if (a.s >= span.enter_s && a.s < span.exit_s)
                for (const auto& l : a.my_leases)
                    if (l.block_id == span.block_id) return &l;
        return nullptr;
    }

    void refresh_my_leases(Agent& a) {
        std::vector<lease::Lease> mine;
        for (const auto& l : lease::read_all_leases(store_))
            if (l.holder_id == a.spec.id && l.status == lease::Status::Active) mine.push_back(l);
        a.my_leases = std::move(mine);
    }

    void lease_lifecycle(Agent& a, double now) {
        const auto& params = a.spec.params;
        if (a.phase == plan::Phase::Planning) {
            // track postponements even when already committed to entering
            if (!a.my_leases.empty()) refresh_my_leases(a);
            if (a.s >= a.first_enter - 0.05) return; // too close to re-plan
            auto occ = lease::estimate_occupancy(a.s, a.motor.v_current, params, *a.path, model_,
                                                 now, sc_.sched);
            if (a.my_leases.empty()) {
                auto got = sched_.apply_for_lease(store_, a.spec.id, a.spec.path_id, occ, now);
                if (got) {
                    a.my_leases = *got;
                    metrics_.lease_applications++;
                    lease_event(now, a.spec.id, "apply", *got);
                }
                return;
            }
            if (a.my_leases.empty()) return; // re-applies next decision
            const lease::Lease* first = relevant_lease(a);
            double achievable = occ.t_enter;
            if (sched_.check_feasibility(*first, achievable, now) ==
                lease::Scheduler::Feasibility::Infeasible) {
                auto got = sched_.cancel_and_reapply(store_, a.spec.id, a.my_leases, occ, now);
                if (got) {
                    a.my_leases = *got;
                    metrics_.lease_cancellations++;
                    lease_event(now, a.spec.id, "cancel-reapply", *got);
                }
            } else if (achievable < first->t_start - 0.05) {
                auto got = sched_.try_bring_forward(store_, a.spec.id, a.my_leases, achievable, now);
                if (got) {
                    a.my_leases = *got;
                    metrics_.lease_bring_forwards++;
                    lease_event(now, a.spec.id, "bring-forward", *got);
                }
            }
        } else if (a.phase == plan::Phase::Crossing) {
            refresh_my_leases(a);
            for (const auto& span : a.path->block_spans) {
                if (a.s < span.enter_s || a.s >= span.exit_s) continue;
                auto got = sched_.extend_if_expiring(store_, a.spec.id, a.my_leases,
                                                     span.block_id, now);
                if (got) {
                    a.my_leases = *got;
                    metrics_.lease_extensions++;
                    lease_event(now, a.spec.id, "extend", *got);
                }
                break;
            }
        } else if (!a.my_leases.empty() &&
                   a.s >= a.last_exit + a.spec.params.length / 2.0 + 0.05) {
            if (sched_.release_after_exit(store_, a.spec.id, a.my_leases, now)) {
                metrics_.lease_releases++;
                lease_event(now, a.spec.id, "release", a.my_leases);
            }
            a.my_leases.clear();
        }
    }

    void lock_lifecycle(Agent& a, double now) {
        (void)now;
        if (a.phase == plan::Phase::Planning && !a.holds_lock) {
            double d_line = a.stop_line - a.s;
            if (d_line < 0.07 && a.motor.v_current < 0.05)
                a.holds_lock = lease::lock_acquire(a.spec.id, lock_);
        } else if (a.phase == plan::Phase::PostCrossing && a.holds_lock &&
                   a.s >= a.last_exit + a.spec.params.length / 2.0 + 0.05) {
            lease::lock_release(a.spec.id, lock_);
            a.holds_lock = false;
        }
    }

    // ---- non-V2V proxies ----

    struct PathMatch {
        const geom::Path* path = nullptr;
        double s = 0.0;
        double dist = 1e18;
    };

    std::optional<PathMatch> match_track(const Vec2& pos, const Vec2& vel) const {
        double speed = vel.norm();
        if (speed < kProxySpeedMin) return std::nullopt;
        Vec2 vhat = vel * (1.0 / speed);
        std::optional<PathMatch> best;
        for (const auto& p : model_.paths()) {
            double bd = 1e18, bs = 0.0;
            for (double s = 0.0; s <= p.length(); s += 0.02) {
                double d = (p.point_at(s) - pos).norm();
                if (d < bd) {
                    bd = d;
                    bs = s;
                }
            }
            if (bd > kPathMatchDist) continue;
            if (p.tangent_at(bs).dot(vhat) < 0.7) continue;
            if (!best || bd < best->dist - 1e-9 ||
                (std::abs(bd - best->dist) <= 1e-9 && p.id < best->path->id))
                best = PathMatch{&p, bs, bd};
        }
        return best;
    }

    void manage_proxies(Agent& a, const std::vector<percep::FusedObject>& fused,
                        const std::vector<PeerState>& peers, double now) {
        std::set<std::string> seen;
        for (const auto& f : fused) {
            Vec2 vel = f.world_vel;
            bool is_peer = false;
            for (const auto& p : peers)
                if ((p.pos - f.world_pos).norm() < kPeerMatchDist) is_peer = true;
            if (is_peer) continue;
            auto m = match_track(f.world_pos, vel);
            if (!m) continue;
            const geom::Path& p = *m->path;
            seen.insert(p.id);
            a.proxy_miss[p.id] = 0;
            double speed = vel.norm();
            double first_enter = p.block_spans.front().enter_s;
            double last_exit = p.block_spans.back().exit_s;
            if (m->s >= last_exit) {
                retire_proxy(a, p.id, now);
                continue;
            }
            if (m->s >= first_enter) continue; // reservations only make sense ahead of the entry
            double t_enter = now + (first_enter - m->s) / speed;
            auto got = sched_.upsert_proxy(store_, a.spec.id, p.id, t_enter, speed, now);
            if (got) {
                metrics_.proxy_upserts++;
                lease_event(now, a.spec.id, "proxy-upsert", *got);
            }
        }
        std::vector<std::string> gone;
        for (auto& [pid, misses] : a.proxy_miss) {
            if (seen.count(pid)) continue;
            if (++misses >= kProxyMissLimit) gone.push_back(pid);
        }
        for (const auto& pid : gone) retire_proxy(a, pid, now);

        // expired proxies left behind by vehicles that stopped observing
        for (const auto& l : lease::read_all_leases(store_)) {
            if (l.kind != lease::Kind::NonV2VProxy) continue;
            if (l.t_end < now - 0.5) store_.erase(lease::lease_key(l), a.spec.id, now);
        }
    }

    void retire_proxy(Agent& a, const std::string& path_id, double now) {
        a.proxy_miss.erase(path_id);
        if (sched_.drop_proxy(store_, a.spec.id, path_id, now)) {
            metrics_.proxy_drops++;
            if (opts_.trace >= TraceLevel::Events)
                emit({{"kind", "lease-event"},
                      {"t", now},
                      {"agent", a.spec.id},
                      {"event", "proxy-drop"},
                      {"path", path_id}});
        }
    }

    // ---- physics ----

    void step_physics(Agent& a, double now) {
        if (!a.spawned || a.done || a.crashed) return;
        double v_before = a.motor.v_current;
        auto res = dyn::controller_step(a.spec.params, a.motor, a.v_target, kDt);
        a.motor = dyn::plant_step(a.spec.params, res.motor, res.duty_cycle, kDt);
        a.prev_s = a.s;
        a.s = dyn::localize(a.motor, a.spec.initial_s);

        auto& vm = metrics_.vehicles[a.spec.id];
        vm.energy += std::abs(a.motor.v_current - v_before);
        vm.distance += a.s - a.prev_s;
        if (a.motor.v_current >= 0.05) a.moving = true;
        if (a.moving && a.motor.v_current < 0.02) {
            vm.stops++;
            a.moving = false;
        }

        check_block_entries(a, now);
        if (sc_.debug_invariants && a.s - a.prev_s > a.spec.params.v_max * kDt + 1e-6)
            violation(now, a.spec.id + " moved faster than v_max allows");
        if (sc_.debug_invariants && a.s < a.prev_s - 1e-9)
            violation(now, a.spec.id + " moved backwards");

        plan::Phase next = a.phase;
        if (a.s >= a.last_exit)
            next = plan::Phase::PostCrossing;
        else if (a.s >= a.first_enter)
            next = plan::Phase::Crossing;
        if (next != a.phase) {
            if (static_cast<int>(next) < static_cast<int>(a.phase))
                violation(now, a.spec.id + " phase moved backwards");
            if (next == plan::Phase::Crossing && vm.enter_time < 0) vm.enter_time = now;
            if (next == plan::Phase::PostCrossing && vm.complete_time < 0) {
                vm.complete_time = now;
                vm.crossing_time = now - vm.enter_time;
                vm.crossed = true;
            }
            a.phase = next;
        }
        if (a.s >= a.path->length() - 1e-6) a.done = true;
    }

    void check_block_entries(Agent& a, double now) {
        if (!sc_.debug_invariants || !a.coordinated) return;
        for (const auto& span : a.path->block_spans) {
            if (!(a.prev_s < span.enter_s && a.s >= span.enter_s)) continue;
            if (sc_.algorithm == Algorithm::Lock) {
                if (!a.holds_lock)
                    violation(now, a.spec.id + " entered " + span.block_id + " without the lock");
                continue;
            }
            bool covered = false;
            for (const auto& l : a.my_leases)
                if (l.block_id == span.block_id && now >= l.t_start - kEntryTolerance &&
                    now < l.t_end)
                    covered = true;
            if (!covered)
                violation(now, a.spec.id + " entered " + span.block_id +
                                   " outside its lease window");
        }
    }

    void detect_collisions(double now) {
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            Agent& a = agents_[i];
            if (!a.spawned || a.done) continue;
            OBB oa = vehicle_obb(*a.path, a.s, a.spec.params);
            for (std::size_t j = i + 1; j < agents_.size(); ++j) {
                Agent& b = agents_[j];
                if (!b.spawned || b.done) continue;
                if (a.crashed && b.crashed) continue;
                if (!obb_overlap(oa, vehicle_obb(*b.path, b.s, b.spec.params))) continue;
                record_collision(now, a, b.spec.id);
                b.crashed = true;
                metrics_.vehicles[b.spec.id].crashed = true;
            }
            for (std::size_t k = 0; k < sc_.obstacles.size(); ++k) {
                const auto& o = sc_.obstacles[k];
                if (now < o.appear_time || now >= o.clear_time) continue;
                if (a.crashed) break;
                if (obb_circle_overlap(oa, obstacle_pos_[k], o.radius))
                    record_collision(now, a, "obstacle:" + o.path_id + ":" + std::to_string(k));
            }
        }
    }

    void record_collision(double now, Agent& a, const std::string& other) {
        a.crashed = true;
        metrics_.vehicles[a.spec.id].crashed = true;
        metrics_.collisions.push_back({now, a.spec.id, other});
        if (opts_.trace >= TraceLevel::Events)
            emit({{"kind", "collision"}, {"t", now}, {"a", a.spec.id}, {"b", other}});
    }

    // ---- wrap-up ----

    void finalize() {
        bool all = !agents_.empty();
        double first_spawn = 1e18, last_complete = -1e18;
        for (const auto& a : agents_) {
            const auto& vm = metrics_.vehicles[a.spec.id];
            if (!vm.crossed) all = false;
            first_spawn = std::min(first_spawn, a.spawn_time);
            last_complete = std::max(last_complete, vm.complete_time);
        }
        metrics_.all_crossed = all;
        metrics_.total_completion_time =
            all ? last_complete - first_spawn : sc_.duration;
        if (sc_.debug_invariants) {
            auto audit = audit_lease_log(store_.op_log(), model_);
            metrics_.store_commits_audited = audit.commits_audited;
            for (const auto& v : audit.violations) metrics_.invariant_violations.push_back(v);
        }
    }

    // ---- tracing ----

    void emit(const ordered_json& j) { (*opts_.trace_out) << j.dump() << "\n"; }

    void emit_tick_state(double now) {
        ordered_json vs = ordered_json::array();
        for (const auto& a : agents_) {
            if (!a.spawned || a.done) continue;
            Vec2 p = a.path->point_at(a.s);
            vs.push_back({{"id", a.spec.id},
                          {"s", a.s},
                          {"v", a.motor.v_current},
                          {"x", p.x},
                          {"y", p.y},
                          {"phase", phase_name(a.phase)},
                          {"v_target", a.v_target},
                          {"crashed", a.crashed}});
        }
        emit({{"kind", "tick-state"}, {"t", now}, {"vehicles", vs}});
    }

    void lease_event(double now, const std::string& agent, const char* event,
                     const std::vector<lease::Lease>& leases) {
        if (opts_.trace < TraceLevel::Events) return;
        ordered_json ls = ordered_json::array();
        for (const auto& l : leases)
            ls.push_back({{"block", l.block_id}, {"t_start", l.t_start}, {"t_end", l.t_end}});
        emit({{"kind", "lease-event"},
              {"t", now},
              {"agent", agent},
              {"event", event},
              {"leases", ls}});
    }

    void flush_store_ops() {
        const auto& log = store_.op_log();
        for (; op_cursor_ < log.size(); ++op_cursor_) {
            if (opts_.trace < TraceLevel::Events) continue;
            const auto& r = log[op_cursor_];
            emit({{"kind", "store-op"},
                  {"t", r.t},
                  {"writer", r.writer},
                  {"op", r.op},
                  {"key", r.key},
                  {"version", r.version},
                  {"ok", r.ok}});
        }
    }

    void violation(double now, const std::string& what) {
        std::ostringstream ss;
        ss << "t=" << now << " " << what;
        metrics_.invariant_violations.push_back(ss.str());
    }

    Scenario sc_;
    geom::IntersectionModel model_;
    lease::Scheduler sched_;
    RunOptions opts_;
    store::Store store_;
    lease::LockState lock_;
    std::vector<Agent> agents_;
    std::vector<Vec2> obstacle_pos_;
    std::vector<percep::CameraCalib> rig_ = percep::default_camera_rig();
    std::mt19937_64 net_rng_;
    std::size_t op_cursor_ = 0;
    RunMetrics metrics_;
};

} // namespace

TraceLevel parse_trace_level(const std::string& name) {
    if (name == "none") return TraceLevel::None;
    if (name == "events") return TraceLevel::Events;
    if (name == "full") return TraceLevel::Full;
    throw std::invalid_argument("unknown trace level '" + name + "'");
}

RunMetrics run_scenario(const Scenario& sc, const RunOptions& opts) {
    return Engine(sc, opts).run();
}

CompareResult compare_algorithms(const Scenario& sc, const RunOptions& opts) {
    CompareResult res;
    Scenario s = sc;
    s.algorithm = Algorithm::Lease;
    res.lease = run_scenario(s, opts);
    s.algorithm = Algorithm::Lock;
    res.lock = run_scenario(s, opts);
    res.completion_ratio = res.lock.total_completion_time > 0
                               ? res.lease.total_completion_time / res.lock.total_completion_time
                               : 0.0;
    return res;
}

AuditResult audit_lease_log(const std::vector<store::OpRecord>& log,
                            const geom::IntersectionModel& model) {
    AuditResult res;
    std::map<std::string, std::string> state;
    bool lease_dirty = false;
    auto is_member = [](const std::string& op) { return op == "txn-put" || op == "txn-delete"; };

    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& r = log[i];
        if (r.ok) {
            bool lease_key = r.key.find("/leases/") != std::string::npos;
            if (r.op == "put" || r.op == "cas" || r.op == "txn-put") {
                state[r.key] = r.value;
                lease_dirty = lease_dirty || lease_key;
            } else if (r.op == "delete" || r.op == "txn-delete") {
                state.erase(r.key);
                lease_dirty = lease_dirty || lease_key;
            }
        }
        bool boundary = (i + 1 == log.size()) || !is_member(log[i + 1].op);
        if (!boundary || !lease_dirty) continue;
        lease_dirty = false;
        res.commits_audited++;

        std::vector<lease::Lease> active;
        for (const auto& [k, v] : state) {
            if (k.find("/leases/") == std::string::npos) continue;
            lease::Lease l = lease::parse_lease(v);
            if (l.status == lease::Status::Active) active.push_back(std::move(l));
        }
        for (std::size_t x = 0; x < active.size(); ++x) {
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                const auto& a = active[x];
                const auto& b = active[y];
                if (a.block_id != b.block_id) continue;
                if (a.holder_id == b.holder_id) continue;
                if (!model.paths_conflict(a.path_id, b.path_id)) continue;
                if (a.t_start < b.t_end - 1e-9 && b.t_start < a.t_end - 1e-9) {
                    std::ostringstream ss;
                    ss << "t=" << r.t << " overlapping leases on " << a.block_id << ": "
                       << a.lease_id << " [" << a.t_start << "," << a.t_end << ") vs "
                       << b.lease_id << " [" << b.t_start << "," << b.t_end << ")";
                    res.violations.push_back(ss.str());
                }
            }
        }
    }
    return res;
}

std::string metrics_to_json(const RunMetrics& m) {
    ordered_json j;
    j["scenario"] = m.scenario;
    j["algorithm"] = m.algorithm;
    j["seed"] = m.seed;
    j["duration"] = m.duration;
    j["all_crossed"] = m.all_crossed;
    j["total_completion_time"] = m.total_completion_time;
    j["max_state_staleness"] = m.max_state_staleness;
    ordered_json vs;
    for (const auto& [id, vm] : m.vehicles) {
        vs[id] = {{"spawn_time", vm.spawn_time},   {"enter_time", vm.enter_time},
                  {"complete_time", vm.complete_time}, {"crossing_time", vm.crossing_time},
                  {"stops", vm.stops},             {"energy", vm.energy},
                  {"distance", vm.distance},       {"crossed", vm.crossed},
                  {"crashed", vm.crashed}};
    }
    j["vehicles"] = vs;
    ordered_json cs = ordered_json::array();
    for (const auto& c : m.collisions) cs.push_back({{"t", c.t}, {"a", c.a}, {"b", c.b}});
    j["collisions"] = cs;
    j["lease_events"] = {{"applications", m.lease_applications},
                         {"bring_forwards", m.lease_bring_forwards},
                         {"cancellations", m.lease_cancellations},
                         {"extensions", m.lease_extensions},
                         {"releases", m.lease_releases},
                         {"proxy_upserts", m.proxy_upserts},
                         {"proxy_drops", m.proxy_drops}};
    j["store_commits_audited"] = m.store_commits_audited;
    j["invariant_violations"] = m.invariant_violations;
    return j.dump(2);
}

} // namespace vvccs::sim
