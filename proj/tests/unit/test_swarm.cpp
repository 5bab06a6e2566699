#include "error.hpp"
#include "metainfo.hpp"
#include "swarm_observer.hpp"

#include <doctest.h>

#include <thread>

using namespace tg;

TEST_SUITE("swarm") {

TEST_CASE("unique downloads ignore ports and respect the cut time") {
    SwarmObserver obs;
    auto h = compute_infohash("s");
    obs.record_sample(h, {{"10.0.0.1", 1}, {"10.0.0.1", 2}, {"10.0.0.2", 1}}, 100);
    obs.record_sample(h, {{"10.0.0.2", 9}, {"10.0.0.3", 1}}, 200);
    obs.record_sample(h, {{"10.0.0.4", 1}}, 300);
    CHECK(obs.unique_downloads(h, 99) == 0);
    CHECK(obs.unique_downloads(h, 100) == 2);
    CHECK(obs.unique_downloads(h, 250) == 3);
    CHECK(obs.unique_downloads(h, 300) == 4);
    CHECK(obs.unique_downloads(compute_infohash("other"), 1000) == 0);
    auto cut = obs.cut_points(h, 200, 1000);
    CHECK(cut.until_removal == 3);
    CHECK(cut.until_end == 4);
}

TEST_CASE("samples must not go back in time") {
    SwarmObserver obs;
    auto h = compute_infohash("t");
    obs.record_sample(h, {}, 50);
    obs.record_sample(h, {}, 50);
    try {
        obs.record_sample(h, {}, 49);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::time_regression);
    }
    CHECK(obs.logs().at(0).samples.size() == 2);
}

TEST_CASE("concurrent appends to different torrents") {
    SwarmObserver obs;
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&obs, i] {
            auto h = compute_infohash("c" + std::to_string(i));
            for (int t = 0; t < 500; ++t) obs.record_sample(h, {{"10.1.0." + std::to_string(t % 250 + 1), 1}}, t);
        });
    for (auto& t : threads) t.join();
    auto logs = obs.logs();
    REQUIRE(logs.size() == 8);
    for (auto& l : logs) {
        CHECK(l.samples.size() == 500);
        CHECK(unique_downloads(l, 1000) == 250);
    }
}

}
