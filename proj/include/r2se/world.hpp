#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "r2se/common.hpp"

namespace r2se::world {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
};

// Oriented rectangle: center, heading, full extents.
struct ObbRect {
    double cx = 0.0;
    double cy = 0.0;
    double psi = 0.0;
    double length = 0.0;
    double width = 0.0;
};

bool obb_overlap(const ObbRect& a, const ObbRect& b);
double obb_distance(const ObbRect& a, const ObbRect& b);  // 0 when overlapping

struct Lane {
    std::vector<Vec2> centerline;
    double half_width = 1.75;

    double total_length() const;
    Pose pose_at(double arclength) const;       // clamped interpolation along the polyline
    double curvature_at(double arclength) const;  // circumcircle through nearest vertices
};

struct Projection {
    double arclength = 0.0;
    double lateral = 0.0;  // left of travel direction is positive
};

Projection project_to_centerline(const Lane& lane, const Vec2& point);

struct Trajectory {
    std::vector<Pose> poses;  // frames 1..future_len
};

struct EgoState {
    Pose pose;
    double speed = 0.0;
};

struct AgentState {
    Pose pose;
    double vx = 0.0;
    double vy = 0.0;
};

struct AgentTrack {
    double length = 4.5;
    double width = 1.9;
    std::vector<AgentState> states;  // one per frame, aligned with ego_track
};

enum class ScenarioKind { lead_brake, cut_in, static_obstacle, curve_follow, give_way };

const char* to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

// Ego footprint used for collision and drivable-area checks. The clip schema
// carries agent extents only; the ego vehicle is a fixed platform.
inline constexpr double kEgoLength = 4.6;
inline constexpr double kEgoWidth = 1.9;

struct Clip {
    std::string id;
    double dt = 0.5;
    int history_len = 4;
    int future_len = 8;
    std::vector<EgoState> ego_track;  // frames -history_len..future_len, size history+future+1
    std::vector<AgentTrack> agent_tracks;
    Lane lane;
    double speed_limit = 12.0;
    Trajectory expert_future;
    ScenarioKind scenario_tag = ScenarioKind::lead_brake;

    int frame_count() const { return history_len + future_len + 1; }
    const EgoState& ego_at(int frame) const { return ego_track[frame + history_len]; }
    const AgentState& agent_at(int a, int frame) const {
        return agent_tracks[a].states[frame + history_len];
    }
    void validate() const;
};

// Per-kind difficulty knobs; ranges are documented in generate_scenario.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::lead_brake;
    std::uint64_t seed = 0;
    double dt = 0.5;
    int history_len = 4;
    int future_len = 8;
    double lane_half_width = 1.75;
};

Clip generate_scenario(const ScenarioSpec& spec);

struct SimLog {
    std::vector<Pose> ego_pose;      // frames 0..future_len
    std::vector<double> speed;       // same indexing; [0] is the logged start speed
    std::vector<double> accel;
    std::vector<double> jerk;
    std::vector<double> yaw_rate;
    std::vector<double> min_clearance;  // per frame, min distance to any agent footprint
    bool collision = false;
    int collision_frame = -1;
    bool off_drivable = false;
    int off_drivable_frame = -1;
    double progress = 0.0;  // arclength gained along the centerline
};

// Non-reactive log replay: agents follow their recorded tracks, the ego
// executes the candidate poses open loop.
SimLog simulate(const Clip& clip, const Trajectory& candidate);

ObbRect ego_footprint(const Pose& p);
ObbRect agent_footprint(const AgentTrack& t, const AgentState& s);

// JSONL persistence (schema_version 1, one clip per line).
std::string clip_to_json(const Clip& clip);
Clip clip_from_json(const std::string& line);
void save_clips(const std::string& path, const std::vector<Clip>& clips);
std::vector<Clip> load_clips(const std::string& path);

}  // namespace r2se::world
