#include "swarmsim/record.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "swarmsim/errors.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

using ojson = nlohmann::ordered_json;

AgentSample sample_of(const AgentState& s) {
  return {s.id, s.x, s.y, s.heading, s.last_sensor, s.controller.tag};
}

namespace {

TickRecord capture(const World& world, const RecordOptions& options) {
  TickRecord t;
  t.tick = world.tick();
  if (options.record_agents) {
    t.agents.reserve(world.size());
    for (const auto& a : world.agents()) t.agents.push_back(sample_of(a));
  }
  t.metrics = measure(world, options.classifier);
  return t;
}

ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

double number_or_inf(const ojson& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

RunRecord simulate(World& world, std::uint64_t ticks, const RecordOptions& options) {
  RunRecord record;
  record.header = {world.config().seed, world.config().dt, static_cast<std::uint32_t>(world.size()),
                   mean_vision_distance(world), world.config().body_radius};
  record.ticks.reserve(ticks + 1);
  record.ticks.push_back(capture(world, options));
  for (std::uint64_t k = 0; k < ticks; ++k) {
    world.step();
    record.ticks.push_back(capture(world, options));
  }
  return record;
}

void write_jsonl(std::ostream& out, const RunRecord& record, const std::optional<Classification>& summary) {
  const auto& h = record.header;
  ojson header = {{"type", "header"},
                  {"schema", kRunRecordSchema},
                  {"seed", h.seed},
                  {"dt_s", h.dt},
                  {"n_agents", h.n_agents},
                  {"mean_vision_distance_m", h.mean_vision_distance},
                  {"body_radius_m", h.body_radius}};
  out << header.dump() << '\n';

  for (const auto& t : record.ticks) {
    ojson agents = ojson::array();
    for (const auto& a : t.agents) {
      agents.push_back({{"id", a.id},
                        {"x", a.x},
                        {"y", a.y},
                        {"heading", a.heading},
                        {"sensor", a.sensor ? 1 : 0},
                        {"controller", to_string(a.controller)}});
    }
    const auto& m = t.metrics;
    ojson line = {{"type", "tick"},
                  {"tick", t.tick},
                  {"agents", std::move(agents)},
                  {"metrics",
                   {{"circliness", finite_or_null(m.circliness)},
                    {"diffusion", finite_or_null(m.diffusion)},
                    {"min_pairwise_distance_m", finite_or_null(m.min_pairwise_distance)},
                    {"n_components", m.n_components},
                    {"collisions", m.collisions}}}};
    out << line.dump() << '\n';
  }

  if (summary) {
    ojson s = {{"type", "summary"},
               {"label", to_string(summary->label)},
               {"mean_circliness", finite_or_null(summary->mean_circliness)},
               {"final_diffusion", finite_or_null(summary->final_diffusion)},
               {"final_components", summary->final_components},
               {"window_collisions", summary->window_collisions},
               {"window_ticks", summary->window_ticks}};
    out << s.dump() << '\n';
  }
}

RunRecord read_jsonl(std::istream& in) {
  RunRecord record;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<RowError> errors;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.at("schema").get<std::string>() != kRunRecordSchema) {
          throw std::runtime_error("unsupported schema " + j.at("schema").get<std::string>());
        }
        record.header = {j.at("seed").get<std::uint64_t>(), j.at("dt_s").get<double>(),
                         j.at("n_agents").get<std::uint32_t>(), j.at("mean_vision_distance_m").get<double>(),
                         j.at("body_radius_m").get<double>()};
        have_header = true;
      } else if (type == "tick") {
        TickRecord t;
        t.tick = j.at("tick").get<std::uint64_t>();
        for (const auto& a : j.at("agents")) {
          const auto tag = parse_controller_tag(a.at("controller").get<std::string>());
          if (!tag) throw std::runtime_error("unknown controller tag");
          t.agents.push_back({a.at("id").get<AgentId>(), a.at("x").get<double>(), a.at("y").get<double>(),
                              a.at("heading").get<double>(), a.at("sensor").get<int>() != 0, *tag});
        }
        const auto& m = j.at("metrics");
        t.metrics = {t.tick,
                     number_or_inf(m.at("circliness")),
                     number_or_inf(m.at("diffusion")),
                     number_or_inf(m.at("min_pairwise_distance_m")),
                     m.at("n_components").get<std::uint32_t>(),
                     m.at("collisions").get<std::uint32_t>()};
        record.ticks.push_back(std::move(t));
      } else if (type != "summary") {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      errors.push_back({line_no, e.what()});
    }
  }
  if (!have_header) errors.push_back({0, "missing header line"});
  if (!errors.empty()) throw ParseError("malformed run record", std::move(errors));
  return record;
}

namespace {

class LittleEndianWriter {
 public:
  explicit LittleEndianWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

 private:
  void put(std::uint64_t v, int bytes) {
    std::array<char, 8> buf{};
    for (int i = 0; i < bytes; ++i) buf[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf.data(), bytes);
  }
  std::ostream& out_;
};

class LittleEndianReader {
 public:
  explicit LittleEndianReader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }

 private:
  std::uint64_t get(int bytes) {
    std::array<unsigned char, 8> buf{};
    in_.read(reinterpret_cast<char*>(buf.data()), bytes);
    if (in_.gcount() != bytes) throw ParseError("truncated binary trace", {});
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | buf[static_cast<std::size_t>(i)];
    return v;
  }
  std::istream& in_;
};

constexpr std::array<char, 4> kMagic{'S', 'W', 'T', 'R'};

}  // namespace

void write_binary(std::ostream& out, const RunRecord& record) {
  bool with_agents = !record.ticks.empty() && !record.ticks.front().agents.empty();
  for (const auto& t : record.ticks) {
    const std::size_t expected = with_agents ? record.header.n_agents : 0;
    if (t.agents.size() != expected) throw std::invalid_argument("binary traces need a fixed agent count per tick");
  }
  LittleEndianWriter w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kBinaryTraceVersion);
  w.u64(record.header.seed);
  w.f64(record.header.dt);
  w.u32(record.header.n_agents);
  w.u32(with_agents ? 1u : 0u);
  w.f64(record.header.mean_vision_distance);
  w.f64(record.header.body_radius);
  w.u64(record.ticks.size());
  for (const auto& t : record.ticks) {
    w.u64(t.tick);
    w.f64(t.metrics.circliness);
    w.f64(t.metrics.diffusion);
    w.f64(t.metrics.min_pairwise_distance);
    w.u32(t.metrics.n_components);
    w.u32(t.metrics.collisions);
    for (const auto& a : t.agents) {
      w.u32(a.id);
      w.u8(a.sensor ? 1 : 0);
      w.u8(static_cast<std::uint8_t>(a.controller));
      w.u16(0);
      w.f64(a.x);
      w.f64(a.y);
      w.f64(a.heading);
    }
  }
}

RunRecord read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw ParseError("not a swarmsim binary trace", {});
  LittleEndianReader r(in);
  if (r.u32() != kBinaryTraceVersion) throw ParseError("unsupported binary trace version", {});
  RunRecord record;
  record.header.seed = r.u64();
  record.header.dt = r.f64();
  record.header.n_agents = r.u32();
  const bool with_agents = (r.u32() & 1u) != 0;
  record.header.mean_vision_distance = r.f64();
  record.header.body_radius = r.f64();
  const std::uint64_t n_ticks = r.u64();
  for (std::uint64_t k = 0; k < n_ticks; ++k) {
    TickRecord t;
    t.tick = r.u64();
    t.metrics.tick = t.tick;
    t.metrics.circliness = r.f64();
    t.metrics.diffusion = r.f64();
    t.metrics.min_pairwise_distance = r.f64();
    t.metrics.n_components = r.u32();
    t.metrics.collisions = r.u32();
    if (with_agents) {
      for (std::uint32_t i = 0; i < record.header.n_agents; ++i) {
        AgentSample a;
        a.id = r.u32();
        a.sensor = r.u8() != 0;
        const std::uint8_t tag = r.u8();
        if (tag > 2) throw ParseError("bad controller tag in binary trace", {});
        a.controller = static_cast<ControllerTag>(tag);
        r.u16();
        a.x = r.f64();
        a.y = r.f64();
        a.heading = r.f64();
        t.agents.push_back(a);
      }
    }
    record.ticks.push_back(std::move(t));
  }
  return record;
}

}  // namespace swarmsim
