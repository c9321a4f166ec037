#include "vvccs/store.hpp"

#include <algorithm>

namespace vvccs::store {

namespace {
bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}
} // namespace

void Store::check_access(const std::string& key, const std::string& writer) const {
    if (starts_with(key, "intersection/")) return;
    if (starts_with(key, "vehicles/" + writer + "/")) return;
    throw AccessError("writer '" + writer + "' may not write key '" + key + "'");
}

std::int64_t Store::commit_put(const std::string& key, const std::string& value, double now) {
    auto& hist = history_[key];
    std::int64_t version = 1;
    if (!hist.empty() && !hist.back().deleted) version = hist.back().version + 1;
    hist.push_back({version, value, now, false});
    notify(key, ChangeKind::Put, version, value, now);
    return version;
}

bool Store::commit_delete(const std::string& key, double now) {
    auto it = history_.find(key);
    if (it == history_.end() || it->second.back().deleted) return false;
    it->second.push_back({0, "", now, true});
    notify(key, ChangeKind::Delete, 0, "", now);
    return true;
}

void Store::notify(const std::string& key, ChangeKind kind, std::int64_t version,
                   const std::string& value, double now) {
    for (auto& w : watchers_) {
        if (!starts_with(key, w.prefix)) continue;
        WatchEvent ev;
        ev.key = key;
        ev.kind = kind;
        ev.version = version;
        ev.value = value;
        ev.commit_time = now;
        ev.delivery_time = now + latency();
        w.pending.push_back(ev);
    }
}

std::int64_t Store::put(const std::string& key, const std::string& value,
                        const std::string& writer, double now) {
    check_access(key, writer);
    std::int64_t version = commit_put(key, value, now);
    op_log_.push_back({now, writer, "put", key, version, value, true});
    return version;
}

CasResult Store::compare_and_swap(const std::string& key, std::int64_t expected_version,
                                  const std::string& value, const std::string& writer,
                                  double now) {
    check_access(key, writer);
    std::int64_t current = version_of(key);
    if (current != expected_version) {
        op_log_.push_back({now, writer, "cas", key, current, value, false});
        return {false, current};
    }
    std::int64_t version = commit_put(key, value, now);
    op_log_.push_back({now, writer, "cas", key, version, value, true});
    return {true, version};
}

bool Store::erase(const std::string& key, const std::string& writer, double now) {
    check_access(key, writer);
    bool existed = commit_delete(key, now);
    op_log_.push_back({now, writer, "delete", key, 0, "", existed});
    return existed;
}

bool Store::txn(const std::string& guard_key, std::int64_t expected_guard_version,
                const std::vector<TxnOp>& ops, const std::string& writer, double now) {
    check_access(guard_key, writer);
    for (const auto& op : ops) check_access(op.key, writer);
    std::int64_t current = version_of(guard_key);
    if (current != expected_guard_version) {
        op_log_.push_back({now, writer, "txn-guard", guard_key, current, "", false});
        return false;
    }
    std::int64_t guard_version = commit_put(guard_key, std::to_string(current + 1), now);
    op_log_.push_back({now, writer, "txn-guard", guard_key, guard_version, "", true});
    for (const auto& op : ops) {
        if (op.kind == TxnOp::Kind::Put) {
            std::int64_t v = commit_put(op.key, op.value, now);
            op_log_.push_back({now, writer, "txn-put", op.key, v, op.value, true});
        } else {
            bool existed = commit_delete(op.key, now);
            op_log_.push_back({now, writer, "txn-delete", op.key, 0, "", existed});
        }
    }
    return true;
}

std::vector<Entry> Store::range_read(const std::string& prefix) const {
    std::vector<Entry> out;
    for (auto it = history_.lower_bound(prefix); it != history_.end(); ++it) {
        if (!starts_with(it->first, prefix)) break;
        const VersionRec& rec = it->second.back();
        if (rec.deleted) continue;
        out.push_back({it->first, rec.value, rec.version, rec.commit_time});
    }
    return out;
}

std::vector<Entry> Store::range_read_stale(const std::string& prefix, double now) {
    double as_of = now - latency();
    std::vector<Entry> out;
    for (auto it = history_.lower_bound(prefix); it != history_.end(); ++it) {
        if (!starts_with(it->first, prefix)) break;
        const VersionRec* latest = nullptr;
        for (const auto& rec : it->second) {
            if (rec.commit_time <= as_of) latest = &rec;
        }
        if (!latest || latest->deleted) continue;
        out.push_back({it->first, latest->value, latest->version, latest->commit_time});
    }
    return out;
}

std::optional<Entry> Store::get(const std::string& key) const {
    auto it = history_.find(key);
    if (it == history_.end() || it->second.back().deleted) return std::nullopt;
    const VersionRec& rec = it->second.back();
    return Entry{key, rec.value, rec.version, rec.commit_time};
}

std::int64_t Store::version_of(const std::string& key) const {
    auto it = history_.find(key);
    if (it == history_.end() || it->second.back().deleted) return 0;
    return it->second.back().version;
}

std::int64_t Store::watch(const std::string& prefix, const std::string& subscriber) {
    watchers_.push_back({prefix, subscriber, {}, 0});
    return static_cast<std::int64_t>(watchers_.size()) - 1;
}

std::vector<WatchEvent> Store::poll_events(std::int64_t watch_id, double now) {
    auto& w = watchers_.at(static_cast<std::size_t>(watch_id));
    std::vector<WatchEvent> out;
    while (w.delivered < w.pending.size() && w.pending[w.delivered].delivery_time <= now) {
        out.push_back(w.pending[w.delivered]);
        ++w.delivered;
    }
    return out;
}

} // namespace vvccs::store
