#include <doctest.h>

#include "run_helpers.hpp"
#include "sraf/agents.hpp"

using namespace sraf;

TEST_CASE("camera hits need a full 2x2 block inside the window") {
  Image img(64, 64, 0);
  CHECK_FALSE(camera_forward_hit(img, 0.5, 224, 255, 1.5, 30).has_value());
  img.at(31, 21) = 255;
  CHECK_FALSE(camera_forward_hit(img, 0.5, 224, 255, 1.5, 30).has_value());
  img.at(32, 21) = img.at(31, 20) = img.at(32, 20) = 255;
  const auto hit = camera_forward_hit(img, 0.5, 224, 255, 1.5, 30);
  REQUIRE(hit.has_value());
  CHECK(*hit == doctest::Approx((32 - 21 - 0.5) * 0.5));
  CHECK_FALSE(camera_forward_hit(img, 0.5, 224, 255, 1.5, 4.0).has_value());

  Image side(64, 64, 0);
  for (int c : {2, 3})
    for (int r : {20, 21}) side.at(c, r) = 255;
  CHECK_FALSE(camera_forward_hit(side, 0.5, 224, 255, 1.5, 30).has_value());
}

TEST_CASE("route tracking prefers the leg inside the window") {
  // Loop that returns through its start.
  const RouteTrack track({{0, 0}, {10, 0}, {10, 10}, {0, 10}, {0, 0.5}, {10, 0.5}});
  const auto early = track.locate({5, 0.2}, 0, 2);
  CHECK(early.segment == 0);
  const auto late = track.locate({5, 0.4}, 4, 2);
  CHECK(late.segment == 4);
  CHECK(late.arc > early.arc);
}

TEST_CASE("privileged builtin finishes the quiet loop cleanly") {
  fixture::Bench bench(fixture::short_config("routes = clear\n"));
  const RouteResult r = bench.baseline("builtin:privileged");
  CHECK(r.termination == "COMPLETED");
  CHECK(r.completion == 100.0);
  CHECK(r.penalty == 1.0);
}

TEST_CASE("sensor builtin stops behind the slow car it can see") {
  fixture::Bench bench(fixture::short_config());
  const RouteResult r = bench.baseline("builtin:sensor");
  CHECK(r.penalty == 1.0);
  CHECK(r.completion == 100.0);
}

TEST_CASE("sensor policy degrades to dead reckoning without GNSS") {
  const WorldMap map = load_world(oracle::data_dir() / "maps" / "town_desk_1.map");
  SimContext ctx{&map, map.find_route("clear"), {}};
  SimState s = init_state(ctx);
  const AgentBrief brief = make_brief(ctx);
  SensorMemory memory;
  const SensorSuite suite{.speedometer = true};
  for (int i = 0; i < 200; ++i) {
    const auto obs = synthesize_observation(ctx, s, suite, RngStream(1));
    s = step(ctx, s, sensor_policy(obs, brief, memory), ctx.params.dt);
  }
  CHECK(s.ego().speed > 1.0);
  CHECK(route_completion(ctx, s) > 0.0);
}
