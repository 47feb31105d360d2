// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/types.hpp"

namespace hoiforge {

std::string action_name(ActionType a) {
    switch (a) {
        case ActionType::Approach: return "approach";
        case ActionType::Grasp: return "grasp";
        case ActionType::Twist: return "twist";
        case ActionType::Lift: return "lift";
        case ActionType::Place: return "place";
        case ActionType::Release: return "release";
        case ActionType::Pour: return "pour";
        case ActionType::Push: return "push";
    }
    throw HoiError("unknown action enum value");
}

ActionType action_from_name(const std::string& name) {
    for (int i = 0; i < kNumActions; ++i) {
        auto a = static_cast<ActionType>(i);
        if (action_name(a) == name) return a;
    }
    throw HoiError("unknown action name: " + name);
}

std::string hands_name(Hands h) {
    switch (h) {
        case Hands::Left: return "left";
        case Hands::Right: return "right";
        case Hands::Both: return "both";
    }
    throw HoiError("unknown hands enum value");
}

Hands hands_from_name(const std::string& name) {
    if (name == "left") return Hands::Left;
    if (name == "right") return Hands::Right;
    if (name == "both") return Hands::Both;
    throw HoiError("unknown hands name: " + name);
}

namespace {

void write_hand(const HandPose& hand, double* dst) {
    for (int j = 0; j < kNumJoints; ++j) {
        dst[j * 3 + 0] = hand.joints[j].x();
        dst[j * 3 + 1] = hand.joints[j].y();
        dst[j * 3 + 2] = hand.joints[j].z();
    }
    for (int c = 0; c < 4; ++c) dst[kNumJoints * 3 + c] = hand.wrist_orientation[c];
}

void read_hand(const double* src, HandPose& hand) {
    for (int j = 0; j < kNumJoints; ++j)
        hand.joints[j] = Vec3(src[j * 3 + 0], src[j * 3 + 1], src[j * 3 + 2]);
    for (int c = 0; c < 4; ++c) hand.wrist_orientation[c] = src[kNumJoints * 3 + c];
}

}  // namespace

VecX flatten(const HoiSequence& seq) {
    VecX flat(seq.flat_dim());
    for (int f = 0; f < seq.num_frames(); ++f) {
        double* base = flat.data() + f * kFrameDim;
        const HoiFrame& fr = seq.frames[static_cast<size_t>(f)];
        write_hand(fr.left, base + kLeftOffset);
        write_hand(fr.right, base + kRightOffset);
        double* obj = base + kObjectOffset;
        obj[0] = fr.object.position.x();
        obj[1] = fr.object.position.y();
        obj[2] = fr.object.position.z();
        for (int c = 0; c < 4; ++c) obj[3 + c] = fr.object.orientation[c];
    }
    return flat;
}

HoiSequence unflatten(const VecX& flat, int num_frames, double fps) {
    if (flat.size() != static_cast<Eigen::Index>(num_frames) * kFrameDim)
        throw HoiError("unflatten: vector size " + std::to_string(flat.size()) +
                       " does not match " + std::to_string(num_frames) + " frames");
    HoiSequence seq;
    seq.fps = fps;
    seq.frames.resize(static_cast<size_t>(num_frames));
    for (int f = 0; f < num_frames; ++f) {
        const double* base = flat.data() + f * kFrameDim;
        HoiFrame& fr = seq.frames[static_cast<size_t>(f)];
        read_hand(base + kLeftOffset, fr.left);
        read_hand(base + kRightOffset, fr.right);
        const double* obj = base + kObjectOffset;
        fr.object.position = Vec3(obj[0], obj[1], obj[2]);
        for (int c = 0; c < 4; ++c) fr.object.orientation[c] = obj[3 + c];
    }
    return seq;
}

}  // namespace hoiforge
