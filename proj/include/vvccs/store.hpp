#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vvccs::store {

class AccessError : public std::runtime_error {
public:
    explicit AccessError(const std::string& what) : std::runtime_error(what) {}
};

struct Entry {
    std::string key;
    std::string value;
    std::int64_t version = 0;
    double mod_time = 0.0;
};

enum class ChangeKind { Put, Delete };

struct WatchEvent {
    std::string key;
    ChangeKind kind = ChangeKind::Put;
    std::int64_t version = 0;
    std::string value;
    double commit_time = 0.0;
    double delivery_time = 0.0;
};

struct CasResult {
    bool ok = false;
    std::int64_t version = 0; // new version on ok, current version on conflict
};

struct TxnOp {
    enum class Kind { Put, Delete };
    Kind kind = Kind::Put;
    std::string key;
    std::string value;
};

struct OpRecord {
    double t = 0.0;
    std::string writer;
    std::string op; // put | cas | delete | txn-put | txn-delete
    std::string key;
    std::int64_t version = 0;
    std::string value;
    bool ok = true;
};

/// Single-authority simulated linearizable key-value store. Writes commit
/// instantly; watch delivery and serializable (stale) reads see the state
/// delayed by the configured synchronization latency. Writers may only touch
/// their own vehicles/<id>/* keys or shared intersection/* keys.
class Store {
public:
    using LatencyFn = std::function<double()>;

    Store() = default;
    void set_latency_fn(LatencyFn fn) { latency_fn_ = std::move(fn); }

    std::int64_t put(const std::string& key, const std::string& value, const std::string& writer,
                     double now);
    /// expected_version 0 means "key absent".
    CasResult compare_and_swap(const std::string& key, std::int64_t expected_version,
                               const std::string& value, const std::string& writer, double now);
    bool erase(const std::string& key, const std::string& writer, double now);
    /// Atomic multi-op commit guarded by a version check on guard_key; on
    /// success the guard key is bumped as part of the same commit.
    bool txn(const std::string& guard_key, std::int64_t expected_guard_version,
             const std::vector<TxnOp>& ops, const std::string& writer, double now);

    /// Linearizable snapshot of all live keys under prefix.
    std::vector<Entry> range_read(const std::string& prefix) const;
    /// Serializable read: store state as of (now - sync latency).
    std::vector<Entry> range_read_stale(const std::string& prefix, double now);
    std::optional<Entry> get(const std::string& key) const;
    std::int64_t version_of(const std::string& key) const;

    std::int64_t watch(const std::string& prefix, const std::string& subscriber);
    /// Events committed under the watched prefix whose delivery time has
    /// arrived, in commit order, each delivered exactly once.
    std::vector<WatchEvent> poll_events(std::int64_t watch_id, double now);

    const std::vector<OpRecord>& op_log() const { return op_log_; }

private:
    struct VersionRec {
        std::int64_t version = 0;
        std::string value;
        double commit_time = 0.0;
        bool deleted = false;
    };
    struct Watcher {
        std::string prefix;
        std::string subscriber;
        std::vector<WatchEvent> pending;
        std::size_t delivered = 0;
    };

    void check_access(const std::string& key, const std::string& writer) const;
    std::int64_t commit_put(const std::string& key, const std::string& value, double now);
    bool commit_delete(const std::string& key, double now);
    void notify(const std::string& key, ChangeKind kind, std::int64_t version,
                const std::string& value, double now);
    double latency() { return latency_fn_ ? latency_fn_() : 0.0; }

    LatencyFn latency_fn_;
    std::map<std::string, std::vector<VersionRec>> history_;
    std::vector<OpRecord> op_log_;
    std::vector<Watcher> watchers_;
};

} // namespace vvccs::store
