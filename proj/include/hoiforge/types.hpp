// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hoiforge {

inline constexpr int kNumJoints = 21;        // per hand, joint 0 is the wrist
inline constexpr int kAgentDim = 67;         // 21*3 joint coords + wrist quat
inline constexpr int kObjectDim = 7;         // position + orientation quat
inline constexpr int kFrameDim = 2 * kAgentDim + kObjectDim;  // 141
inline constexpr int kAffordancePoints = 512;
inline constexpr int kObjectFeatureDim = 48;
inline constexpr int kCondScoreDim = kAffordancePoints;

// Finger chains: thumb 1-4, index 5-8, middle 9-12, ring 13-16, pinky 17-20.
inline constexpr std::array<int, 5> kFingertipJoints = {4, 8, 12, 16, 20};
inline constexpr std::array<int, 6> kContactJoints = {0, 4, 8, 12, 16, 20};

inline constexpr double kJointRadiusDefault = 0.008;
inline constexpr double kJointRadiusFingertip = 0.006;

inline bool is_fingertip(int joint) {
    for (int j : kFingertipJoints)
        if (j == joint) return true;
    return false;
}

inline double joint_radius(int joint) {
    return is_fingertip(joint) ? kJointRadiusFingertip : kJointRadiusDefault;
}

enum class ActionType : int {
    Approach = 0,
    Grasp = 1,
    Twist = 2,
    Lift = 3,
    Place = 4,
    Release = 5,
    Pour = 6,
    Push = 7,
};
inline constexpr int kNumActions = 8;

enum class Hands : int { Left = 0, Right = 1, Both = 2 };
inline constexpr int kNumHandModes = 3;

std::string action_name(ActionType a);
ActionType action_from_name(const std::string& name);
std::string hands_name(Hands h);
Hands hands_from_name(const std::string& name);

// Row index into the task embedding table (kNumActions * kNumHandModes rows).
inline int task_embedding_id(ActionType a, Hands h) {
    return static_cast<int>(a) * kNumHandModes + static_cast<int>(h);
}

struct HandPose {
    std::array<Vec3, kNumJoints> joints{};
    Vec4 wrist_orientation{1, 0, 0, 0};  // (w, x, y, z)
};

struct ObjectPose {
    Vec3 position{0, 0, 0};
    Vec4 orientation{1, 0, 0, 0};
};

struct HoiFrame {
    HandPose left;
    HandPose right;
    ObjectPose object;
};

struct HoiSequence {
    std::vector<HoiFrame> frames;
    double fps = 30.0;

    int num_frames() const { return static_cast<int>(frames.size()); }
    int flat_dim() const { return num_frames() * kFrameDim; }
};

// One planner step: apply `action` to the object part named `target_part`.
struct SubTask {
    ActionType action = ActionType::Approach;
    std::string target_part;
    Hands hands = Hands::Right;
    int embedding_id = 0;        // row of the learned task table
    int duration_frames = 150;
};

// Per-surface-point relevance scores for a sub-task, with the active region
// split per hand side. A side's region is empty when that hand is inactive.
struct AffordanceMap {
    VecX scores;                    // kAffordancePoints entries in [0, 1]
    std::vector<int> active_left;
    std::vector<int> active_right;

    static constexpr double kActiveThreshold = 0.5;

    bool left_active() const { return !active_left.empty(); }
    bool right_active() const { return !active_right.empty(); }
};

// Conditioning bundle handed to the denoiser and the guidance losses.
struct InteractionPrior {
    AffordanceMap affordance;
    int embedding_id = -1;     // row of the learned task table; -1 = use vector
    VecX subtask_embedding;    // used only when embedding_id < 0
    VecX object_features;      // kObjectFeatureDim
};

// Flat layout, frames major. Within a frame:
//   [0,63)    left joints, xyz per joint
//   [63,67)   left wrist quat (w,x,y,z)
//   [67,130)  right joints
//   [130,134) right wrist quat
//   [134,137) object position
//   [137,141) object quat
VecX flatten(const HoiSequence& seq);
HoiSequence unflatten(const VecX& flat, int num_frames, double fps = 30.0);

// Offsets of the three rigid blocks inside one frame.
inline constexpr int kLeftOffset = 0;
inline constexpr int kRightOffset = kAgentDim;
inline constexpr int kObjectOffset = 2 * kAgentDim;

// Index of joint coordinate (frame, hand, joint, axis) in the flat vector.
inline int flat_joint_index(int frame, Hands hand, int joint, int axis) {
    const int base = hand == Hands::Left ? kLeftOffset : kRightOffset;
    return frame * kFrameDim + base + joint * 3 + axis;
}

inline int flat_wrist_quat_index(int frame, Hands hand, int comp) {
    const int base = hand == Hands::Left ? kLeftOffset : kRightOffset;
    return frame * kFrameDim + base + kNumJoints * 3 + comp;
}

inline int flat_object_pos_index(int frame, int axis) {
    return frame * kFrameDim + kObjectOffset + axis;
}

inline int flat_object_quat_index(int frame, int comp) {
    return frame * kFrameDim + kObjectOffset + 3 + comp;
}

}  // namespace hoiforge
