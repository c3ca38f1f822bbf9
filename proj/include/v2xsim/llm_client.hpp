#pragma once

#include "v2xsim/lane_graph.hpp"
#include "v2xsim/trajectory.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace v2xsim {

struct LlmConfig {
    /// Chat-completion URL. Only plain http:// is supported.
    std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key;  // sent as a bearer token when nonempty
    double timeout_s = 10.0;
};

/// Why the model reply could not be used; callers switch to the rule generator.
struct LlmFallback {
    std::string reason;
};

using LlmResult = std::variant<std::vector<Keyframe>, LlmFallback>;

/// The trajectory prompt: lane starts and directions, the ego track sampled
/// every 10 frames, and the vehicle size.
std::string build_trajectory_prompt(const LaneGraph& graph, const std::vector<std::string>& lanes,
                                    const TrajectoryTrack& ego, const Vec3& size, int num_frames);

/// Strict parse of "t, (x, y, z); ...": t nonnegative multiples of 10,
/// strictly increasing and at most num_frames; coordinates finite. On
/// failure returns nullopt and sets `error`.
std::optional<std::vector<Keyframe>> parse_keyframes(const std::string& text, int num_frames,
                                                     std::string* error = nullptr);

/// Sends the prompt as a chat-completion request. Network errors, HTTP
/// errors and malformed replies come back as LlmFallback, never as exceptions.
LlmResult llm_trajectory_client(const LlmConfig& config, const LaneGraph& graph, const std::vector<std::string>& lanes,
                                const TrajectoryTrack& ego, const Vec3& size, int num_frames);

/// Model trajectory when `llm` is given and its reply is usable and
/// collision-free, otherwise the seeded rule generator. `source` receives
/// "llm" or "rule".
std::vector<Keyframe> plan_trajectory(const LlmConfig* llm, const LaneGraph& graph,
                                      const std::vector<std::string>& lanes, const TrajectoryTrack& ego,
                                      const Vec3& size, const std::vector<TrajectoryTrack>& existing,
                                      std::uint64_t seed, const RuleTrajectoryConfig& config = {},
                                      std::string* source = nullptr);

}  // namespace v2xsim
