#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vvccs/store.hpp"

using namespace vvccs::store;

TEST_CASE("put, get, versioning, delete and recreate") {
    Store st;
    CHECK(st.version_of("intersection/x") == 0);
    CHECK(st.put("intersection/x", "a", "w1", 0.0) == 1);
    CHECK(st.put("intersection/x", "b", "w1", 0.1) == 2);
    auto e = st.get("intersection/x");
    REQUIRE(e.has_value());
    CHECK(e->value == "b");
    CHECK(e->version == 2);

    CHECK(st.erase("intersection/x", "w1", 0.2));
    CHECK_FALSE(st.get("intersection/x").has_value());
    CHECK(st.version_of("intersection/x") == 0);
    CHECK_FALSE(st.erase("intersection/x", "w1", 0.3));
    // versions restart after recreation
    CHECK(st.put("intersection/x", "c", "w1", 0.4) == 1);
}

TEST_CASE("compare-and-swap with expected version 0 meaning absent") {
    Store st;
    auto r = st.compare_and_swap("intersection/k", 0, "v1", "w", 0.0);
    CHECK(r.ok);
    CHECK(r.version == 1);
    r = st.compare_and_swap("intersection/k", 0, "v2", "w", 0.1);
    CHECK_FALSE(r.ok);
    CHECK(r.version == 1); // reports the current version on conflict
    r = st.compare_and_swap("intersection/k", 1, "v2", "w", 0.2);
    CHECK(r.ok);
    CHECK(r.version == 2);
}

TEST_CASE("guarded transactions commit atomically and bump the guard") {
    Store st;
    std::int64_t g0 = st.version_of("intersection/regseq");
    std::vector<TxnOp> ops{{TxnOp::Kind::Put, "intersection/a", "1"},
                           {TxnOp::Kind::Put, "intersection/b", "2"}};
    CHECK(st.txn("intersection/regseq", g0, ops, "w", 0.0));
    CHECK(st.get("intersection/a")->value == "1");
    std::int64_t g1 = st.version_of("intersection/regseq");
    CHECK(g1 == g0 + 1);

    // stale guard: nothing applies
    std::vector<TxnOp> ops2{{TxnOp::Kind::Delete, "intersection/a", ""},
                            {TxnOp::Kind::Put, "intersection/c", "3"}};
    CHECK_FALSE(st.txn("intersection/regseq", g0, ops2, "w", 0.1));
    CHECK(st.get("intersection/a").has_value());
    CHECK_FALSE(st.get("intersection/c").has_value());

    CHECK(st.txn("intersection/regseq", g1, ops2, "w", 0.2));
    CHECK_FALSE(st.get("intersection/a").has_value());
    CHECK(st.get("intersection/c")->value == "3");
}

TEST_CASE("writers may only touch their own subtree or shared keys") {
    Store st;
    CHECK_NOTHROW(st.put("vehicles/car1/state", "{}", "car1", 0.0));
    CHECK_NOTHROW(st.put("intersection/main/leases/l1", "{}", "car1", 0.0));
    CHECK_THROWS_AS(st.put("vehicles/car2/state", "{}", "car1", 0.0), AccessError);
    CHECK_THROWS_AS(st.erase("vehicles/car2/state", "car1", 0.0), AccessError);
    std::vector<TxnOp> ops{{TxnOp::Kind::Put, "vehicles/car2/x", "v"}};
    CHECK_THROWS_AS(st.txn("intersection/regseq", 0, ops, "car1", 0.0), AccessError);
}

TEST_CASE("stale range reads see the state as of now minus latency") {
    Store st;
    st.set_latency_fn([] { return 0.05; });
    st.put("vehicles/a/state", "old", "a", 0.0);
    st.put("vehicles/a/state", "new", "a", 1.0);

    auto stale = st.range_read_stale("vehicles/", 1.02); // as of 0.97
    REQUIRE(stale.size() == 1);
    CHECK(stale[0].value == "old");
    stale = st.range_read_stale("vehicles/", 1.08); // as of 1.03
    CHECK(stale[0].value == "new");
    // linearizable read always sees the latest commit
    CHECK(st.range_read("vehicles/")[0].value == "new");
    // a key committed after the cutoff is invisible
    st.put("vehicles/b/state", "x", "b", 2.0);
    CHECK(st.range_read_stale("vehicles/", 2.01).size() == 1);
}

TEST_CASE("watch delivers committed events after the latency delay, in order") {
    Store st;
    st.set_latency_fn([] { return 0.1; });
    auto id = st.watch("intersection/", "sub");
    st.put("intersection/a", "1", "w", 0.0);
    st.put("intersection/b", "2", "w", 0.02);
    st.erase("intersection/a", "w", 0.04);
    st.put("vehicles/w/other", "x", "w", 0.05); // outside the prefix

    CHECK(st.poll_events(id, 0.05).empty());
    auto evs = st.poll_events(id, 0.11);
    REQUIRE(evs.size() == 1);
    CHECK(evs[0].key == "intersection/a");
    CHECK(evs[0].kind == ChangeKind::Put);

    evs = st.poll_events(id, 1.0);
    REQUIRE(evs.size() == 2);
    CHECK(evs[0].key == "intersection/b");
    CHECK(evs[1].kind == ChangeKind::Delete);
    CHECK(st.poll_events(id, 2.0).empty()); // each event exactly once
}

TEST_CASE("operation log replay reproduces the final state") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> key_pick(0, 5);
    std::uniform_int_distribution<int> op_pick(0, 3);
    for (int round = 0; round < 50; ++round) {
        Store st;
        double t = 0.0;
        for (int i = 0; i < 200; ++i) {
            t += 0.01;
            std::string key = "intersection/k" + std::to_string(key_pick(rng));
            std::string val = "v" + std::to_string(i);
            switch (op_pick(rng)) {
                case 0: st.put(key, val, "w", t); break;
                case 1: st.compare_and_swap(key, key_pick(rng), val, "w", t); break;
                case 2: st.erase(key, "w", t); break;
                default: {
                    std::vector<TxnOp> ops{{TxnOp::Kind::Put, key, val}};
                    std::int64_t g = st.version_of("intersection/regseq");
                    if (i % 3 == 0) g += 1; // sometimes doomed
                    st.txn("intersection/regseq", g, ops, "w", t);
                }
            }
        }
        auto replayed = oracles::replay_log(st.op_log());
        auto live = st.range_read("");
        CHECK(live.size() == replayed.size());
        for (const auto& e : live) {
            REQUIRE(replayed.count(e.key) == 1);
            CHECK(replayed[e.key] == e.value);
        }
    }
}
