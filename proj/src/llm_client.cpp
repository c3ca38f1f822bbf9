#include "v2xsim/llm_client.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/json_io.hpp"
#include "v2xsim/prompt_template.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdio>
#include <regex>

namespace v2xsim {

namespace {

void replace_all(std::string& s, const std::string& key, const std::string& value) {
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
        s.replace(pos, key.size(), value);
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct Url {
    std::string host;
    int port = 80;
    std::string path;
};

std::optional<Url> parse_url(const std::string& url) {
    static const std::regex re(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) return std::nullopt;
    Url u;
    u.host = m[1];
    if (m[2].matched) u.port = std::stoi(m[2]);
    u.path = m[3].matched ? std::string(m[3]) : "/";
    return u;
}

}  // namespace

std::string build_trajectory_prompt(const LaneGraph& graph, const std::vector<std::string>& lanes,
                                    const TrajectoryTrack& ego, const Vec3& size, int num_frames) {
    std::string lane_text;
    for (const std::string& id : lanes) {
        const Lane& l = graph.lane(id);
        const Vec3 p = l.centerline.front();
        const Vec3 d = l.direction_at(0);
        lane_text += "lane " + id + ": start (" + fmt(p.x()) + ", " + fmt(p.y()) + ", " + fmt(p.z()) +
                     "), direction (" + fmt(d.x()) + ", " + fmt(d.y()) + ", " + fmt(d.z()) + ")\n";
    }
    std::vector<Keyframe> sampled;
    for (const TrackPose& p : ego.dense) {
        if (p.frame % kKeyframeInterval == 0) sampled.push_back(Keyframe{p.frame, p.position});
    }
    if (sampled.empty()) sampled = ego.keyframes;

    std::string prompt = kTrajectoryPromptTemplate;
    replace_all(prompt, "{{lanes}}", trim(lane_text));
    replace_all(prompt, "{{ego_track}}", format_keyframes(sampled));
    replace_all(prompt, "{{length}}", fmt(size.x()));
    replace_all(prompt, "{{width}}", fmt(size.y()));
    replace_all(prompt, "{{height}}", fmt(size.z()));
    replace_all(prompt, "{{num_frames}}", std::to_string(num_frames));
    return prompt;
}

std::optional<std::vector<Keyframe>> parse_keyframes(const std::string& text, int num_frames, std::string* error) {
    auto fail = [&](const std::string& why) -> std::optional<std::vector<Keyframe>> {
        if (error) *error = why;
        return std::nullopt;
    };
    std::string body = trim(text);
    while (!body.empty() && (body.back() == ';' || body.back() == '.')) body.pop_back();
    if (body.empty()) return fail("empty reply");

    static const std::string num = R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)";
    static const std::regex item(R"(^\s*(\d+)\s*,\s*\(\s*()" + num + R"()\s*,\s*()" + num + R"()\s*,\s*()" + num +
                                 R"()\s*\)\s*$)");
    std::vector<Keyframe> out;
    std::size_t start = 0;
    while (start <= body.size()) {
        const std::size_t end = std::min(body.find(';', start), body.size());
        const std::string part = body.substr(start, end - start);
        std::smatch m;
        if (!std::regex_match(part, m, item)) return fail("unparseable keyframe '" + trim(part) + "'");
        Keyframe k;
        try {
            k.t = std::stoi(m[1]);
            k.p = Vec3(std::stod(m[2]), std::stod(m[3]), std::stod(m[4]));
        } catch (const std::exception&) {
            return fail("number out of range in '" + trim(part) + "'");
        }
        if (k.t % kKeyframeInterval != 0) return fail("frame " + std::to_string(k.t) + " is not a multiple of 10");
        if (k.t > num_frames) return fail("frame " + std::to_string(k.t) + " is past the sequence end");
        if (!out.empty() && k.t <= out.back().t) return fail("frames are not strictly increasing");
        if (!k.p.allFinite()) return fail("non-finite position");
        out.push_back(k);
        start = end + 1;
    }
    return out;
}

LlmResult llm_trajectory_client(const LlmConfig& config, const LaneGraph& graph, const std::vector<std::string>& lanes,
                                const TrajectoryTrack& ego, const Vec3& size, int num_frames) {
    const std::optional<Url> url = parse_url(config.endpoint);
    if (!url) {
        return LlmFallback{"unsupported endpoint '" + config.endpoint + "' (plain http:// only)"};
    }
    std::string prompt;
    try {
        prompt = build_trajectory_prompt(graph, lanes, ego, size, num_frames);
    } catch (const Error& e) {
        return LlmFallback{e.what()};
    }
    const Json request{
        {"model", config.model},
        {"temperature", 0},
        {"messages",
         Json::array({Json{{"role", "system"}, {"content", "You generate vehicle trajectories for traffic simulation."}},
                      Json{{"role", "user"}, {"content", prompt}}})},
    };

    httplib::Client client(url->host, url->port);
    const auto sec = static_cast<time_t>(config.timeout_s);
    const auto usec = static_cast<time_t>((config.timeout_s - double(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

    const auto res = client.Post(url->path, headers, request.dump(), "application/json");
    if (!res) {
        return LlmFallback{"request failed: " + httplib::to_string(res.error())};
    }
    if (res->status != 200) {
        return LlmFallback{"HTTP status " + std::to_string(res->status)};
    }
    std::string content;
    try {
        const Json reply = Json::parse(res->body);
        content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        return LlmFallback{std::string("malformed reply: ") + e.what()};
    }
    std::string error;
    auto keyframes = parse_keyframes(content, num_frames, &error);
    if (!keyframes) {
        return LlmFallback{error};
    }
    return *keyframes;
}

std::vector<Keyframe> plan_trajectory(const LlmConfig* llm, const LaneGraph& graph,
                                      const std::vector<std::string>& lanes, const TrajectoryTrack& ego,
                                      const Vec3& size, const std::vector<TrajectoryTrack>& existing,
                                      std::uint64_t seed, const RuleTrajectoryConfig& config, std::string* source) {
    if (llm) {
        const int num_frames = config.num_frames > 0 ? config.num_frames
                                                     : (ego.dense.empty() ? 0 : ego.dense.back().frame);
        const LlmResult r = llm_trajectory_client(*llm, graph, lanes, ego, size, num_frames);
        if (const auto* kf = std::get_if<std::vector<Keyframe>>(&r)) {
            const TrajectoryTrack candidate = make_track("candidate", *kf, size);
            bool clear = !tracks_collide(candidate, ego);
            for (std::size_t k = 0; clear && k < existing.size(); ++k) clear = !tracks_collide(candidate, existing[k]);
            if (clear) {
                if (source) *source = "llm";
                return *kf;
            }
        }
    }
    if (source) *source = "rule";
    return generate_trajectory_rule(graph, lanes, ego, size, existing, seed, config);
}

}  // namespace v2xsim
