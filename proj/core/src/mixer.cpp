#include "floorsight/mixer.hpp"

#include <algorithm>

#include "floorsight/errors.hpp"

namespace floorsight {

RoleMap classify_roles(const Partition& partition, const SessionStreams& streams, double now,
                       double horizon) {
  if (horizon <= 0) throw Error(ErrorCode::BadArgument, "horizon must be positive");
  std::map<ParticipantId, double> voiced;
  for (const auto& s : streams) {
    voiced[s.participant] = voiced_seconds(s.segments, now - horizon, now);
  }

  std::map<FloorId, double> top;
  for (const auto& [p, f] : partition) {
    top[f] = std::max(top[f], voiced.count(p) ? voiced[p] : 0.0);
  }

  RoleMap roles;
  for (const auto& [p, f] : partition) {
    const double v = voiced.count(p) ? voiced[p] : 0.0;
    roles[p] = (v > 0 && v >= 0.25 * top[f]) ? Role::Primary : Role::Secondary;
  }
  return roles;
}

GainMatrix compute_gain_matrix(const Partition& partition,
                               const std::vector<ParticipantId>& everyone,
                               const MixerParams& params) {
  if (params.cross_floor_gain < 0 || params.cross_floor_gain >= 1) {
    throw Error(ErrorCode::BadArgument, "cross_floor_gain must be in [0,1)");
  }
  GainMatrix m;
  for (const auto& listener : everyone) {
    for (const auto& speaker : everyone) {
      if (listener == speaker) {
        m.gains[listener][speaker] = 0.0;
        continue;
      }
      auto lf = partition.find(listener);
      auto sf = partition.find(speaker);
      const bool same_floor =
          lf != partition.end() && sf != partition.end() && lf->second == sf->second;
      m.gains[listener][speaker] = same_floor ? 1.0 : params.cross_floor_gain;
    }
  }
  return m;
}

GainMatrix route_aside(const GainMatrix& base, const SchismCue& aside, const RoleMap& roles,
                       const Partition& partition, const MixerParams& params) {
  auto role_it = roles.find(aside.initiator);
  auto floor_it = partition.find(aside.initiator);
  if (role_it == roles.end() || floor_it == partition.end()) return base;
  if (role_it->second != Role::Secondary) return base;  // primaries get no special routing

  GainMatrix m = base;
  for (const auto& [listener, f] : partition) {
    if (listener == aside.initiator || !(f == floor_it->second)) continue;
    auto lr = roles.find(listener);
    const bool secondary = lr != roles.end() && lr->second == Role::Secondary;
    m.gains[listener][aside.initiator] = secondary ? 1.0 : params.cross_floor_gain;
  }
  return m;
}

}  // namespace floorsight
