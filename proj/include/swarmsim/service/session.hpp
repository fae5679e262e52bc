#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "swarmsim/config_io.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim::service {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kProtocolName = "swarmsim.session/1";
inline constexpr double kMaxFrameRate = 60.0;  // frames per wall second

/// One session: a single authoritative world plus run controls. Not thread
/// safe; the server serializes every call onto its simulation loop.
class Session {
 public:
  explicit Session(RunConfig config);

  struct Reply {
    bool ok = true;
    Json message;                  // ack or error, echoing the command
    std::optional<Json> frame;     // new frame to broadcast, if the command made one
  };

  /// Parses and applies one command atomically. Invalid commands change
  /// nothing and produce an error reply.
  Reply handle_text(std::string_view text);
  Reply handle(const Json& command);

  /// Advances one tick while running. On a simulation error the session
  /// pauses and the error is returned instead of throwing.
  std::optional<std::string> tick();

  Json frame() const;
  Json snapshot() const;
  Json config_json() const;

  const World& world() const { return world_; }
  const RunConfig& run_config() const { return config_; }
  bool running() const { return running_; }
  double speed() const { return speed_; }
  double frame_rate() const { return frame_rate_; }
  /// Incremented by Reset and LoadConfig; frames order by (epoch, tick).
  std::uint64_t epoch() const { return epoch_; }

 private:
  Json apply(const Json& command, std::optional<Json>& frame);
  void replace(RunConfig config);

  RunConfig config_;
  World world_;
  bool running_ = false;
  double speed_ = 1.0;
  double frame_rate_ = kMaxFrameRate;
  std::uint64_t epoch_ = 0;
};

Json error_message(std::string_view reason, const Json& echo);

}  // namespace swarmsim::service
