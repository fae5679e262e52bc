#include <doctest.h>

#include <cstring>
#include <limits>
#include <sstream>

#include "swarmsim/errors.hpp"
#include "swarmsim/record.hpp"
#include "swarmsim/world.hpp"

using namespace swarmsim;

namespace {

WorldConfig small_config(std::uint64_t seed) {
  WorldConfig c;
  c.n_agents = 5;
  c.seed = seed;
  c.population.speed_factor = {1.0, 0.04};
  c.controller_assignments[2] = {ControllerTag::SelfCentering, 0.25, 0.785};
  return c;
}

template <class T>
T read_le(const std::string& bytes, std::size_t offset) {
  T v{};
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

}  // namespace

TEST_CASE("simulate records the initial state plus one entry per tick") {
  World w(small_config(4));
  const RunRecord r = simulate(w, 25);
  REQUIRE(r.ticks.size() == 26);
  CHECK(r.ticks.front().tick == 0);
  CHECK(r.ticks.back().tick == 25);
  CHECK(w.tick() == 25);
  CHECK(r.header.n_agents == 5);
  CHECK(r.header.seed == 4);
  CHECK(r.ticks[3].agents[2].controller == ControllerTag::SelfCentering);
  CHECK(r.ticks.back().agents[1] == sample_of(w.agents()[1]));
}

TEST_CASE("zero ticks records the initial state only") {
  World w(small_config(4));
  const RunRecord r = simulate(w, 0);
  CHECK(r.ticks.size() == 1);
}

TEST_CASE("agent recording can be switched off") {
  World w(small_config(4));
  const RunRecord r = simulate(w, 10, {false, {}});
  for (const auto& t : r.ticks) CHECK(t.agents.empty());
}

TEST_CASE("JSON lines round-trip is lossless") {
  World w(small_config(8));
  const RunRecord r = simulate(w, 120);
  std::stringstream buf;
  write_jsonl(buf, r, classify_run(r));
  const std::string text = buf.str();
  const RunRecord back = read_jsonl(buf);
  CHECK(back == r);
  std::stringstream again;
  write_jsonl(again, back, classify_run(back));
  CHECK(again.str() == text);
}

TEST_CASE("non-finite metrics survive JSON as null") {
  RunRecord r;
  r.header.n_agents = 1;
  TickRecord t;
  t.metrics.circliness = std::numeric_limits<double>::infinity();
  r.ticks.push_back(t);
  std::stringstream buf;
  write_jsonl(buf, r);
  CHECK(buf.str().find("null") != std::string::npos);
  CHECK(read_jsonl(buf) == r);
}

TEST_CASE("malformed JSON lines report every bad line") {
  std::stringstream bad;
  bad << R"({"type":"header","schema":"swarmsim.run/1","seed":1,"dt_s":0.022,"n_agents":1,)"
      << R"("mean_vision_distance_m":1.1,"body_radius_m":0.0975})" << '\n'
      << "not json\n"
      << R"({"type":"bogus"})" << '\n';
  try {
    read_jsonl(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    REQUIRE(e.rows().size() == 2);
    CHECK(e.rows()[0].line == 2);
    CHECK(e.rows()[1].line == 3);
  }
  std::stringstream empty;
  CHECK_THROWS_AS(read_jsonl(empty), ParseError);
}

TEST_CASE("binary trace round-trip and layout") {
  World w(small_config(12));
  const RunRecord r = simulate(w, 30);
  std::stringstream buf;
  write_binary(buf, r);
  const std::string bytes = buf.str();

  // 56-byte header, 40 bytes per tick, 32 bytes per agent sample.
  CHECK(bytes.size() == 56 + 31 * (40 + 5 * 32));
  CHECK(bytes.substr(0, 4) == "SWTR");
  CHECK(read_le<std::uint32_t>(bytes, 4) == kBinaryTraceVersion);
  CHECK(read_le<std::uint64_t>(bytes, 8) == 12);
  CHECK(read_le<double>(bytes, 16) == 0.022);
  CHECK(read_le<std::uint32_t>(bytes, 24) == 5);
  CHECK(read_le<std::uint32_t>(bytes, 28) == 1);
  CHECK(read_le<std::uint64_t>(bytes, 48) == 31);
  const std::size_t first_agent = 56 + 40;
  CHECK(read_le<std::uint32_t>(bytes, first_agent) == 0);
  CHECK(read_le<double>(bytes, first_agent + 8) == r.ticks[0].agents[0].x);

  std::stringstream in(bytes);
  CHECK(read_binary(in) == r);
}

TEST_CASE("binary traces without agents") {
  World w(small_config(12));
  const RunRecord r = simulate(w, 5, {false, {}});
  std::stringstream buf;
  write_binary(buf, r);
  CHECK(buf.str().size() == 56 + 6 * 40);
  CHECK(read_binary(buf) == r);
}

TEST_CASE("bad binary input") {
  std::stringstream junk("JUNKJUNKJUNK");
  CHECK_THROWS_AS(read_binary(junk), ParseError);
  World w(small_config(1));
  const RunRecord r = simulate(w, 3);
  std::stringstream buf;
  write_binary(buf, r);
  std::stringstream cut(buf.str().substr(0, buf.str().size() - 7));
  CHECK_THROWS_AS(read_binary(cut), ParseError);
}
