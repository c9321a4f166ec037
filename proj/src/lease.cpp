#include "vvccs/lease.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace vvccs::lease {

namespace {
constexpr double kEps = 1e-9;

double duration_of(const Lease& l) { return l.t_end - l.t_start; }

bool overlaps(const Interval& a, double b_start, double b_end) {
    return a.start < b_end && b_start < a.end;
}

const char* kind_name(Kind k) { return k == Kind::V2V ? "v2v" : "nonv2v_proxy"; }
const char* status_name(Status s) { return s == Status::Active ? "active" : "cancelled"; }
} // namespace

std::string serialize(const Lease& l) {
    nlohmann::json j; // sorted field names keep the record byte-stable
    j["lease_id"] = l.lease_id;
    j["holder_id"] = l.holder_id;
    j["block_id"] = l.block_id;
    j["path_id"] = l.path_id;
    j["t_start"] = l.t_start;
    j["t_end"] = l.t_end;
    j["kind"] = kind_name(l.kind);
    j["status"] = status_name(l.status);
    return j.dump();
}

Lease parse_lease(const std::string& value) {
    auto j = nlohmann::json::parse(value);
    Lease l;
    l.lease_id = j.at("lease_id").get<std::string>();
    l.holder_id = j.at("holder_id").get<std::string>();
    l.block_id = j.at("block_id").get<std::string>();
    l.path_id = j.at("path_id").get<std::string>();
    l.t_start = j.at("t_start").get<double>();
    l.t_end = j.at("t_end").get<double>();
    l.kind = j.at("kind").get<std::string>() == "v2v" ? Kind::V2V : Kind::NonV2VProxy;
    l.status = j.at("status").get<std::string>() == "active" ? Status::Active : Status::Cancelled;
    return l;
}

std::string lease_key(const Lease& l) {
    return "intersection/" + l.block_id + "/leases/" + l.lease_id;
}

std::string regseq_key() { return "intersection/regseq"; }

double earliest_arrival(double dist, double v0, double v_cruise, double a_max, double a_min) {
    if (dist <= 0) return 0.0;
    if (v0 < v_cruise) {
        double t_a = (v_cruise - v0) / a_max;
        double d_a = 0.5 * (v0 + v_cruise) * t_a;
        if (d_a <= dist) return t_a + (dist - d_a) / v_cruise;
        // reaches the point still accelerating
        return (-v0 + std::sqrt(v0 * v0 + 2.0 * a_max * dist)) / a_max;
    }
    if (v0 > v_cruise) {
        double t_d = (v0 - v_cruise) / std::abs(a_min);
        double d_d = 0.5 * (v0 + v_cruise) * t_d;
        if (d_d <= dist) return t_d + (dist - d_d) / v_cruise;
        return dist / v0;
    }
    return dist / v_cruise;
}

Occupancy estimate_occupancy(double s, double speed, const dyn::VehicleParams& params,
                             const geom::Path& path, const geom::IntersectionModel& model,
                             double now, const SchedulerParams& sp) {
    (void)model;
    const geom::BlockSpan& first = path.block_spans.front();
    if (s >= first.enter_s)
        throw std::invalid_argument("estimate_occupancy: vehicle already at or inside the block");
    double dist = first.enter_s - s;
    double t_enter = now + earliest_arrival(dist, speed, sp.v_advised, params.a_max, params.a_min);
    double dur = (first.exit_s - first.enter_s + sp.clearance) / sp.v_advised * sp.margin;
    return {t_enter, t_enter + dur};
}

std::vector<Lease> find_conflicts(const Interval& candidate, const std::string& path_id,
                                  const std::string& block_id, const std::vector<Lease>& leases,
                                  const geom::IntersectionModel& model) {
    if (candidate.start >= candidate.end)
        throw std::invalid_argument("find_conflicts: candidate interval must be non-empty");
    std::vector<Lease> out;
    for (const auto& l : leases) {
        if (l.status != Status::Active || l.block_id != block_id) continue;
        if (!model.paths_conflict(path_id, l.path_id)) continue;
        if (overlaps(candidate, l.t_start, l.t_end)) out.push_back(l);
    }
    return out;
}

Interval earliest_slot(double duration, double not_before, const std::vector<Lease>& existing,
                       const std::string& path_id, const std::string& block_id,
                       const geom::IntersectionModel& model) {
    if (duration <= 0) throw std::invalid_argument("earliest_slot: duration must be positive");
    double t = not_before;
    for (int iter = 0; iter < 10000; ++iter) {
        auto conflicts = find_conflicts({t, t + duration}, path_id, block_id, existing, model);
        if (conflicts.empty()) return {t, t + duration};
        double next = t;
        for (const auto& c : conflicts) next = std::max(next, c.t_end);
        t = next;
    }
    throw std::runtime_error("earliest_slot: did not converge");
}

std::vector<Lease> read_all_leases(const store::Store& st) {
    std::vector<Lease> out;
    for (const auto& e : st.range_read("intersection/")) {
        if (e.key.find("/leases/") == std::string::npos) continue;
        out.push_back(parse_lease(e.value));
    }
    return out;
}

std::vector<Lease> Scheduler::plan_windows(const std::string& holder, const std::string& path_id,
                                           double t_enter, Kind kind) const {
    const geom::Path& p = model_->path(path_id);
    double first_enter = p.block_spans.front().enter_s;
    std::vector<Lease> out;
    for (const auto& span : p.block_spans) {
        Lease l;
        l.block_id = span.block_id;
        l.path_id = path_id;
        l.holder_id = holder;
        l.kind = kind;
        l.status = Status::Active;
        l.lease_id = (kind == Kind::NonV2VProxy ? "proxy@" + path_id : holder) + "@" + span.block_id;
        l.t_start = t_enter + (span.enter_s - first_enter) / sp_.v_advised;
        l.t_end = l.t_start +
                  (span.exit_s - span.enter_s + sp_.clearance) / sp_.v_advised * sp_.margin;
        out.push_back(std::move(l));
    }
    return out;
}

double Scheduler::earliest_offset(const std::vector<Lease>& windows,
                                  const std::vector<Lease>& existing,
                                  const std::string& holder) const {
    std::vector<Lease> others;
    for (const auto& l : existing)
        if (l.holder_id != holder && l.status == Status::Active) others.push_back(l);

    double offset = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        double delta = 0.0;
        for (const auto& w : windows) {
            Interval cand{w.t_start + offset, w.t_end + offset};
            for (const auto& c : find_conflicts(cand, w.path_id, w.block_id, others, *model_))
                delta = std::max(delta, c.t_end - cand.start);
        }
        if (delta <= kEps) return offset;
        offset += delta;
    }
    throw std::runtime_error("earliest_offset: did not converge");
}

std::optional<std::vector<Lease>> Scheduler::apply_for_lease(store::Store& st,
                                                             const std::string& agent,
                                                             const std::string& path_id,
                                                             const Occupancy& occ, double now) {
    for (int attempt = 0; attempt < sp_.max_retries; ++attempt) {
        std::int64_t regv = st.version_of(regseq_key());
        auto existing = read_all_leases(st);
        auto windows = plan_windows(agent, path_id, occ.t_enter, Kind::V2V);
        double off = earliest_offset(windows, existing, agent);
        for (auto& w : windows) {
            w.t_start += off;
            w.t_end += off;
        }
        std::vector<store::TxnOp> ops;
        for (const auto& w : windows)
            ops.push_back({store::TxnOp::Kind::Put, lease_key(w), serialize(w)});
        if (st.txn(regseq_key(), regv, ops, agent, now)) return windows;
    }
    return std::nullopt;
}

std::optional<std::vector<Lease>> Scheduler::try_bring_forward(store::Store& st,
                                                               const std::string& agent,
                                                               const std::vector<Lease>& mine,
                                                               double achievable_t_enter,
                                                               double now) {
    if (mine.empty()) return std::nullopt;
    double current_start = mine.front().t_start;
    for (const auto& l : mine) current_start = std::min(current_start, l.t_start);
    if (achievable_t_enter >= current_start - kEps) return std::nullopt; // cannot arrive earlier

    std::int64_t regv = st.version_of(regseq_key());
    auto existing = read_all_leases(st);
    auto windows = plan_windows(agent, mine.front().path_id, achievable_t_enter, mine.front().kind);
    double off = earliest_offset(windows, existing, agent);
    for (auto& w : windows) {
        w.t_start += off;
        w.t_end += off;
    }
    if (windows.front().t_start >= current_start - kEps) return std::nullopt;

    std::vector<store::TxnOp> ops;
    for (const auto& w : windows)
        ops.push_back({store::TxnOp::Kind::Put, lease_key(w), serialize(w)});
    if (!st.txn(regseq_key(), regv, ops, agent, now)) return std::nullopt; // retry next tick
    return windows;
}

Scheduler::Feasibility Scheduler::check_feasibility(const Lease& first_block_lease,
                                                    double achievable_t_enter, double now) const {
    if (now >= first_block_lease.t_end) return Feasibility::Infeasible;
    if (achievable_t_enter > first_block_lease.t_start + sp_.grace) return Feasibility::Infeasible;
    return Feasibility::Feasible;
}

std::optional<std::vector<Lease>> Scheduler::cancel_and_reapply(store::Store& st,
                                                                const std::string& agent,
                                                                const std::vector<Lease>& mine,
                                                                const Occupancy& occ, double now) {
    for (int attempt = 0; attempt < sp_.max_retries; ++attempt) {
        std::int64_t regv = st.version_of(regseq_key());
        auto existing = read_all_leases(st);
        auto windows = plan_windows(agent, mine.front().path_id, occ.t_enter, Kind::V2V);
        double off = earliest_offset(windows, existing, agent);
        for (auto& w : windows) {
            w.t_start += off;
            w.t_end += off;
        }
        std::vector<store::TxnOp> ops;
        for (const auto& old : mine) ops.push_back({store::TxnOp::Kind::Delete, lease_key(old), ""});
        for (const auto& w : windows)
            ops.push_back({store::TxnOp::Kind::Put, lease_key(w), serialize(w)});
        if (st.txn(regseq_key(), regv, ops, agent, now)) return windows;
    }
    return std::nullopt;
}

std::vector<store::TxnOp> Scheduler::postpone_ops(const std::vector<Lease>& all,
                                                  const std::vector<Lease>& placed,
                                                  const std::string& skip_holder) const {
    // working view: skip_holder's leases replaced by `placed`
    std::vector<Lease> working;
    for (const auto& l : all)
        if (l.holder_id != skip_holder && l.status == Status::Active) working.push_back(l);

    std::vector<Lease> affected;
    for (const auto& l : working) {
        for (const auto& w : placed) {
            if (l.block_id != w.block_id) continue;
            if (!model_->paths_conflict(l.path_id, w.path_id)) continue;
            if (overlaps({w.t_start, w.t_end}, l.t_start, l.t_end)) {
                affected.push_back(l);
                break;
            }
        }
    }
    std::sort(affected.begin(), affected.end(), [](const Lease& a, const Lease& b) {
        return a.t_start != b.t_start ? a.t_start < b.t_start : a.lease_id < b.lease_id;
    });

    std::vector<Lease> constraints = placed;
    for (const auto& l : working) {
        bool is_affected = std::any_of(affected.begin(), affected.end(), [&](const Lease& a) {
            return a.lease_id == l.lease_id && a.block_id == l.block_id;
        });
        if (!is_affected) constraints.push_back(l);
    }

    std::vector<store::TxnOp> ops;
    for (auto l : affected) {
        Interval slot =
            earliest_slot(duration_of(l), l.t_start, constraints, l.path_id, l.block_id, *model_);
        l.t_start = slot.start;
        l.t_end = slot.end;
        constraints.push_back(l);
        ops.push_back({store::TxnOp::Kind::Put, lease_key(l), serialize(l)});
    }
    return ops;
}

std::optional<std::vector<Lease>> Scheduler::extend_if_expiring(store::Store& st,
                                                                const std::string& agent,
                                                                const std::vector<Lease>& mine,
                                                                const std::string& crossing_block,
                                                                double now) {
    const Lease* target = nullptr;
    for (const auto& l : mine)
        if (l.block_id == crossing_block) target = &l;
    if (!target) return std::nullopt;
    if (target->t_end - now >= sp_.extension_threshold) return std::nullopt;

    std::vector<Lease> updated = mine;
    for (auto& l : updated) {
        if (l.block_id == crossing_block) {
            l.t_end += sp_.extension_quantum;
        } else if (l.t_start >= target->t_end - kEps) {
            // later blocks of the same crossing shift with the extension
            l.t_start += sp_.extension_quantum;
            l.t_end += sp_.extension_quantum;
        }
    }

    for (int attempt = 0; attempt < sp_.max_retries; ++attempt) {
        std::int64_t regv = st.version_of(regseq_key());
        auto existing = read_all_leases(st);
        std::vector<store::TxnOp> ops;
        for (const auto& l : updated)
            ops.push_back({store::TxnOp::Kind::Put, lease_key(l), serialize(l)});
        auto shifts = postpone_ops(existing, updated, agent);
        ops.insert(ops.end(), shifts.begin(), shifts.end());
        if (st.txn(regseq_key(), regv, ops, agent, now)) return updated;
    }
    return std::nullopt;
}

bool Scheduler::release_after_exit(store::Store& st, const std::string& agent,
                                   const std::vector<Lease>& mine, double now) {
    bool any = false;
    for (const auto& l : mine) any = st.erase(lease_key(l), agent, now) || any;
    return any;
}

std::optional<std::vector<Lease>> Scheduler::upsert_proxy(store::Store& st,
                                                          const std::string& observer,
                                                          const std::string& path_id,
                                                          double t_enter, double speed,
                                                          double now) {
    if (speed <= 0.05) return std::nullopt;
    const geom::Path& p = model_->path(path_id);
    double first_enter = p.block_spans.front().enter_s;
    std::string holder = "nonv2v@" + path_id;

    std::vector<Lease> windows;
    for (const auto& span : p.block_spans) {
        Lease l;
        l.block_id = span.block_id;
        l.path_id = path_id;
        l.holder_id = holder;
        l.kind = Kind::NonV2VProxy;
        l.status = Status::Active;
        l.lease_id = "proxy@" + path_id + "@" + span.block_id;
        l.t_start = t_enter + (span.enter_s - first_enter) / speed - sp_.proxy_lead;
        l.t_end = t_enter + (span.exit_s - span.enter_s + sp_.clearance) / speed * sp_.margin;
        l.t_end += (span.enter_s - first_enter) / speed;
        windows.push_back(std::move(l));
    }

    for (int attempt = 0; attempt < sp_.max_retries; ++attempt) {
        std::int64_t regv = st.version_of(regseq_key());
        auto existing = read_all_leases(st);
        // skip the write when the registered window is already close enough
        const Lease* current = nullptr;
        for (const auto& l : existing)
            if (l.lease_id == windows.front().lease_id && l.block_id == windows.front().block_id)
                current = &l;
        if (current && std::abs(current->t_start - windows.front().t_start) < 0.05 &&
            std::abs(current->t_end - windows.front().t_end) < 0.05)
            return std::nullopt;

        std::vector<store::TxnOp> ops;
        for (const auto& w : windows)
            ops.push_back({store::TxnOp::Kind::Put, lease_key(w), serialize(w)});
        auto shifts = postpone_ops(existing, windows, holder);
        ops.insert(ops.end(), shifts.begin(), shifts.end());
        if (st.txn(regseq_key(), regv, ops, observer, now)) return windows;
    }
    return std::nullopt;
}

bool Scheduler::drop_proxy(store::Store& st, const std::string& observer,
                           const std::string& path_id, double now) {
    const geom::Path& p = model_->path(path_id);
    bool any = false;
    for (const auto& span : p.block_spans) {
        std::string key =
            "intersection/" + span.block_id + "/leases/proxy@" + path_id + "@" + span.block_id;
        any = st.erase(key, observer, now) || any;
    }
    return any;
}

bool lock_acquire(const std::string& agent, LockState& lock) {
    if (lock.holder == agent) return true;
    auto pos = std::find(lock.fifo_queue.begin(), lock.fifo_queue.end(), agent);
    if (!lock.holder.has_value()) {
        if (lock.fifo_queue.empty()) {
            lock.holder = agent;
            return true;
        }
        if (lock.fifo_queue.front() == agent) {
            lock.fifo_queue.pop_front();
            lock.holder = agent;
            return true;
        }
    }
    if (pos == lock.fifo_queue.end()) lock.fifo_queue.push_back(agent);
    return false;
}

void lock_release(const std::string& agent, LockState& lock) {
    if (lock.holder != agent) throw std::logic_error("lock_release by non-holder '" + agent + "'");
    lock.holder.reset();
    if (!lock.fifo_queue.empty()) {
        lock.holder = lock.fifo_queue.front();
        lock.fifo_queue.pop_front();
    }
}

} // namespace vvccs::lease
