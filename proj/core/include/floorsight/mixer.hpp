#pragma once

#include <map>
#include <optional>
#include <set>

#include "floorsight/types.hpp"

namespace floorsight {

enum class Role { Primary, Secondary };

using RoleMap = std::map<ParticipantId, Role>;
using Partition = std::map<ParticipantId, FloorId>;  // affiliated participants only

struct MixerParams {
  double cross_floor_gain = 0.125;  // ~ -18 dB
  double roles_horizon = 60.0;      // seconds of speech considered for roles
};

// listener x speaker gains in [0,1]; diagonal fixed at 0.
struct GainMatrix {
  std::map<ParticipantId, std::map<ParticipantId, double>> gains;

  double at(const ParticipantId& listener, const ParticipantId& speaker) const {
    auto it = gains.find(listener);
    if (it == gains.end()) return 0.0;
    auto jt = it->second.find(speaker);
    return jt == it->second.end() ? 0.0 : jt->second;
  }
};

// Within each floor, participants with >= 25% of the top speaker's voiced
// time over the horizon are PRIMARY; silent members are always SECONDARY.
RoleMap classify_roles(const Partition& partition, const SessionStreams& streams, double now,
                       double horizon);

// Full-volume within a floor, cross_floor_gain across floors and for
// unaffiliated participants, zero self-monitor.
GainMatrix compute_gain_matrix(const Partition& partition,
                               const std::vector<ParticipantId>& everyone,
                               const MixerParams& params);

// Temporary override while a secondary participant's aside is live: their
// speech goes at full volume to secondary co-members only, and at
// cross_floor_gain to the primaries. No-op for primary initiators.
GainMatrix route_aside(const GainMatrix& base, const SchismCue& aside, const RoleMap& roles,
                       const Partition& partition, const MixerParams& params);

}  // namespace floorsight
