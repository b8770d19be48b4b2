#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "lwsim/engine.hpp"

using namespace lwsim;

TEST_CASE("SimTime units and arithmetic") {
  CHECK(SimTime::seconds(1.5).to_ms() == doctest::Approx(1500.0));
  CHECK(SimTime::minutes(2).to_seconds() == doctest::Approx(120.0));
  CHECK(SimTime::days(1).to_ms() == doctest::Approx(86'400'000.0));
  CHECK(SimTime::days(2).to_days() == doctest::Approx(2.0));
  CHECK((SimTime::ms(10) + SimTime::ms(5)).to_ms() == doctest::Approx(15.0));
  CHECK((SimTime::ms(10) - SimTime::ms(4)).to_ms() == doctest::Approx(6.0));
  CHECK((SimTime::ms(10) * 3.0).to_ms() == doctest::Approx(30.0));
  CHECK(SimTime::ms(1) < SimTime::ms(2));
  CHECK(SimTime::ms(2) >= SimTime::ms(2));
  SimTime t = SimTime::ms(1);
  t += SimTime::ms(2);
  CHECK(t == SimTime::ms(3));
}

TEST_CASE("EventQueue dispatches in time order with FIFO ties") {
  EventQueue q;
  std::vector<int64_t> order;
  q.schedule(SimTime::ms(5), EventKind::SimEnd, 0, 1);
  q.schedule(SimTime::ms(1), EventKind::SimEnd, 0, 2);
  q.schedule(SimTime::ms(5), EventKind::SimEnd, 0, 3);  // same time as payload 1
  q.schedule(SimTime::ms(3), EventKind::SimEnd, 0, 4);
  const size_t n = q.run_until(SimTime::ms(10), [&](const Event& ev) {
    order.push_back(ev.payload);
    CHECK(q.now() == ev.fire_at);
  });
  CHECK(n == 4);
  CHECK(order == std::vector<int64_t>{2, 4, 1, 3});  // 5 ms ties keep insertion order
  CHECK(q.now() == SimTime::ms(10));                 // clock advances to the end of the window
}

TEST_CASE("EventQueue allows zero-delay events and rejects the past") {
  EventQueue q;
  std::vector<int64_t> order;
  q.schedule(SimTime::ms(2), EventKind::SimEnd, 0, 1);
  q.run_until(SimTime::ms(5), [&](const Event& ev) {
    order.push_back(ev.payload);
    if (ev.payload == 1) {
      q.schedule(q.now(), EventKind::SimEnd, 0, 2);  // fires later this same instant
      CHECK_THROWS_AS(q.schedule(q.now() - SimTime::ms(1), EventKind::SimEnd, 0, 9),
                      std::invalid_argument);
    }
  });
  CHECK(order == std::vector<int64_t>{1, 2});
}

TEST_CASE("EventQueue cancellation is lazy and exact") {
  EventQueue q;
  const EventHandle a = q.schedule(SimTime::ms(1), EventKind::SimEnd, 0, 1);
  const EventHandle b = q.schedule(SimTime::ms(2), EventKind::SimEnd, 0, 2);
  CHECK(q.pending() == 2);
  CHECK(q.cancel(a));
  CHECK_FALSE(q.cancel(a));  // second cancel is a no-op
  CHECK(q.pending() == 1);
  std::vector<int64_t> order;
  const size_t n = q.run_until(SimTime::ms(5), [&](const Event& ev) { order.push_back(ev.payload); });
  CHECK(n == 1);  // cancelled events do not count as dispatched
  CHECK(order == std::vector<int64_t>{2});
  CHECK_FALSE(q.cancel(b));  // already dispatched
}

TEST_CASE("EventQueue dispatches events at exactly the window end") {
  EventQueue q;
  q.schedule(SimTime::ms(10), EventKind::SimEnd, 0, 1);
  size_t n = q.run_until(SimTime::ms(10), [](const Event&) {});
  CHECK(n == 1);
}

TEST_CASE("RngStream is deterministic per (seed, purpose, index)") {
  RngStream a(42, "traffic", 3);
  RngStream b(42, "traffic", 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42, "traffic", 4), d(42, "backoff", 3), e(43, "traffic", 3);
  RngStream f(42, "traffic", 3);
  CHECK(f.next_u64() != c.next_u64());
  CHECK(RngStream(42, "traffic", 3).next_u64() != d.next_u64());
  CHECK(RngStream(42, "traffic", 3).next_u64() != e.next_u64());
  CHECK(RngStream(42, "traffic", 3).stream_id() == "traffic#3");
  CHECK(RngStream(42, "traffic").stream_id() == "traffic");
}

TEST_CASE("RngStream uniform01 stays in [0,1) and looks uniform") {
  RngStream r(7, "u");
  double sum = 0.0;
  for (int i = 0; i < 100'000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100'000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("RngStream uniform_int covers the range and rejects 0") {
  RngStream r(7, "ui");
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 50'000; ++i) {
    const uint32_t v = r.uniform_int(5);
    REQUIRE(v < 5);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 9'000);  // ~10000 each; 3 sigma ~ 270
  CHECK_THROWS_AS(r.uniform_int(0), std::invalid_argument);
}

TEST_CASE("RngStream exponential has the requested mean") {
  RngStream r(11, "exp");
  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const double x = r.exponential(1000.0);
    REQUIRE(x >= 0.0);
    sum += x;
  }
  CHECK(sum / n == doctest::Approx(1000.0).epsilon(0.01));  // within 1%
  CHECK_THROWS_AS(r.exponential(0.0), std::invalid_argument);
  CHECK_THROWS_AS(r.exponential(-1.0), std::invalid_argument);
}

TEST_CASE("RngStream normal has the requested moments") {
  RngStream r(13, "norm");
  const int n = 200'000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(5.0, 3.0);
    sum += x;
    sq += (x - 5.0) * (x - 5.0);
  }
  CHECK(sum / n == doctest::Approx(5.0).epsilon(0.01));
  CHECK(std::sqrt(sq / n) == doctest::Approx(3.0).epsilon(0.02));
  // sigma 0 still consumes draws but returns the mean exactly
  RngStream z1(13, "norm"), z2(13, "norm");
  CHECK(z1.normal(2.0, 0.0) == 2.0);
  z2.normal(0.0, 1.0);
  CHECK(z1.next_u64() == z2.next_u64());  // both consumed the same number of raws
}

TEST_CASE("RngStream uniform(a,b) respects bounds") {
  RngStream r(17, "ab");
  for (int i = 0; i < 10'000; ++i) {
    const double x = r.uniform(1000.0, 3000.0);
    CHECK(x >= 1000.0);
    CHECK(x < 3000.0);
  }
}
