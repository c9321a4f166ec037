#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "vvccs/dynamics.hpp"
#include "vvccs/geometry.hpp"
#include "vvccs/store.hpp"

namespace vvccs::lease {

enum class Kind { V2V, NonV2VProxy };
enum class Status { Active, Cancelled };

/// Half-open occupancy window [t_start, t_end) of one block.
struct Lease {
    std::string lease_id;
    std::string holder_id;
    std::string block_id;
    std::string path_id;
    double t_start = 0.0;
    double t_end = 0.0;
    Kind kind = Kind::V2V;
    Status status = Status::Active;
};

std::string serialize(const Lease& l);
Lease parse_lease(const std::string& value);
std::string lease_key(const Lease& l);
/// Guard key whose version is CASed on every lease registration.
std::string regseq_key();

struct Interval {
    double start = 0.0;
    double end = 0.0;
};

struct SchedulerParams {
    double margin = 1.2;              // occupancy duration inflation
    // Extra distance the occupancy covers beyond the block span: the holder
    // keeps the block until its tail clears, i.e. half a vehicle length plus
    // the release margin.
    double clearance = 0.2625;
    // Feasibility slack. Must exceed the ramp-up time from the pre-entry
    // hold position, or a vehicle waiting for its window churns through
    // cancel-and-reapply cycles instead of simply entering.
    double grace = 0.6;
    double extension_threshold = 0.5; // s remaining that triggers an extension
    double extension_quantum = 0.5;   // s added per extension
    double proxy_lead = 0.2;          // s the proxy window opens early
    double v_advised = 0.9;           // m/s
    int max_retries = 8;
};

/// Earliest arrival time at a point `dist` ahead: accelerate toward v_cruise
/// at the acceleration bound, then hold.
double earliest_arrival(double dist, double v0, double v_cruise, double a_max, double a_min);

struct Occupancy {
    double t_enter = 0.0;
    double t_exit = 0.0;
};

/// Expected entry/exit times for the path's first block, duration inflated by
/// the margin factor. Throws if the vehicle is already at or inside the block.
Occupancy estimate_occupancy(double s, double speed, const dyn::VehicleParams& params,
                             const geom::Path& path, const geom::IntersectionModel& model,
                             double now, const SchedulerParams& sp);

/// Active leases on the block whose path conflicts with path_id and whose
/// window intersects the candidate (half-open semantics).
std::vector<Lease> find_conflicts(const Interval& candidate, const std::string& path_id,
                                  const std::string& block_id, const std::vector<Lease>& leases,
                                  const geom::IntersectionModel& model);

/// Minimal t_start >= not_before such that [t_start, t_start+duration) is
/// conflict-free.
Interval earliest_slot(double duration, double not_before, const std::vector<Lease>& existing,
                       const std::string& path_id, const std::string& block_id,
                       const geom::IntersectionModel& model);

std::vector<Lease> read_all_leases(const store::Store& st);

/// Lease lifecycle over the coordination store. Handles multi-block paths by
/// leasing every crossed block in one guarded transaction.
class Scheduler {
public:
    Scheduler(const geom::IntersectionModel* model, SchedulerParams params)
        : model_(model), sp_(params) {}

    const SchedulerParams& params() const { return sp_; }

    /// Per-block windows for a crossing that enters the first block at
    /// t_enter and proceeds at the advised speed; durations carry the margin.
    std::vector<Lease> plan_windows(const std::string& holder, const std::string& path_id,
                                    double t_enter, Kind kind) const;

    /// Smallest shift >= 0 of the window set that clears all conflicts with
    /// `existing` (leases held by `holder` are ignored).
    double earliest_offset(const std::vector<Lease>& windows, const std::vector<Lease>& existing,
                           const std::string& holder) const;

    /// Registers leases at the earliest conflict-free slot at/after the
    /// occupancy estimate. nullopt when the CAS retry budget is exhausted.
    std::optional<std::vector<Lease>> apply_for_lease(store::Store& st, const std::string& agent,
                                                      const std::string& path_id,
                                                      const Occupancy& occ, double now);

    /// Moves the lease set earlier if a conflict-free earlier slot exists and
    /// the vehicle can physically reach it. Returns the new leases if moved.
    std::optional<std::vector<Lease>> try_bring_forward(store::Store& st, const std::string& agent,
                                                        const std::vector<Lease>& mine,
                                                        double achievable_t_enter, double now);

    enum class Feasibility { Feasible, Infeasible };
    Feasibility check_feasibility(const Lease& first_block_lease, double achievable_t_enter,
                                  double now) const;

    /// Cancels the agent's leases and registers replacements in one commit.
    std::optional<std::vector<Lease>> cancel_and_reapply(store::Store& st,
                                                         const std::string& agent,
                                                         const std::vector<Lease>& mine,
                                                         const Occupancy& occ, double now);

    /// Extends the window of the block being crossed when it is about to
    /// expire; conflicting leases starting inside the new window are shifted
    /// after it in their original order. Returns the extended lease set.
    std::optional<std::vector<Lease>> extend_if_expiring(store::Store& st,
                                                         const std::string& agent,
                                                         const std::vector<Lease>& mine,
                                                         const std::string& crossing_block,
                                                         double now);

    /// Post-crossing cleanup; returns whether anything was removed.
    bool release_after_exit(store::Store& st, const std::string& agent,
                            const std::vector<Lease>& mine, double now);

    /// Registers or refreshes a proxy lease set for an observed non-V2V
    /// participant on `path_id`, postponing overlapping V2V leases. Returns
    /// the proxy leases, or nullopt on CAS loss / nothing to do.
    std::optional<std::vector<Lease>> upsert_proxy(store::Store& st, const std::string& observer,
                                                   const std::string& path_id, double t_enter,
                                                   double speed, double now);

    /// Deletes the proxy lease set for a path (track exited or went stale).
    bool drop_proxy(store::Store& st, const std::string& observer, const std::string& path_id,
                    double now);

private:
    std::vector<store::TxnOp> postpone_ops(const std::vector<Lease>& all,
                                           const std::vector<Lease>& placed,
                                           const std::string& skip_holder) const;

    const geom::IntersectionModel* model_;
    SchedulerParams sp_;
};

/// Lock-based FIFO baseline: one holder, queued grants in arrival order.
struct LockState {
    std::optional<std::string> holder;
    std::deque<std::string> fifo_queue;
};

/// Grants the lock iff it is free and the agent heads the queue; otherwise
/// enqueues the agent. Returns whether the agent holds the lock afterwards.
bool lock_acquire(const std::string& agent, LockState& lock);
/// Throws std::logic_error when called by a non-holder; promotes the next
/// queued agent.
void lock_release(const std::string& agent, LockState& lock);

} // namespace vvccs::lease
