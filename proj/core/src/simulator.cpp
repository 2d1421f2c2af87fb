#include "floorsight/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <utility>

#include "floorsight/errors.hpp"
#include "floorsight/rng.hpp"

namespace floorsight {

SimPreset preset(const std::string& name) {
  SimPreset p;
  p.name = name;
  if (name == "pilot") {
    p.participants = 9;
    p.floors_per_hour_lo = 10;
    p.floors_per_hour_hi = 19;
    p.median_floor_duration = 91;
    p.floor_duration_sigma = 1.30;
    p.floor_duration_cap = 1200;
  } else if (name == "youth") {
    p.participants = 9;
    p.floors_per_hour_lo = 52;
    p.floors_per_hour_hi = 70;
    p.median_floor_duration = 44;
    p.floor_duration_sigma = 0.385;
    p.floor_duration_cap = 600;
  } else {
    throw Error(ErrorCode::UnknownPreset, name);
  }
  return p;
}

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t attempt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (attempt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SimFloor {
  int ordinal = 0;
  std::set<ParticipantId> members;
  double created = 0;
  double expiry = 0;
  double next_turn_t = 0;
  ParticipantId prev_speaker;
  double cur_turn_t0 = -1;  // last rotation turn bounds (aside hosting)
  double cur_turn_t1 = -1;
};

struct Stint {
  int floor_ordinal = 0;
  double first = -1;
  double last = -1;
};

class Sim {
 public:
  Sim(const SimPreset& preset, double duration, Rng rng)
      : pr_(preset), duration_(duration), rng_(rng) {}

  SimOutput run() {
    init();
    if (duration_ > 0) loop();
    for (const auto& p : ids_) close_stint(p);
    return assemble();
  }

 private:
  void init() {
    const int width = pr_.participants >= 10 ? 2 : 1;
    for (int i = 1; i <= pr_.participants; ++i) {
      std::string num = std::to_string(i);
      while (static_cast<int>(num.size()) < width) num = "0" + num;
      ids_.push_back("p" + num);
    }
    for (const auto& p : ids_) {
      base_level_[p] = rng_.normal(pr_.speech_level_mean, pr_.speech_level_sd);
      busy_until_[p] = -1.0;
      voiced_total_[p] = 0.0;
    }
    SimFloor f;
    f.ordinal = next_ordinal_++;
    f.members.insert(ids_.begin(), ids_.end());
    f.created = 0;
    f.expiry = sample_lifetime(0);
    f.next_turn_t = rng_.uniform(0.2, 1.0);
    floors_[f.ordinal] = f;
    created_.push_back({0.0, f.ordinal});

    const double hour = 3600.0;
    schism_mean_gap_ =
        hour / (0.5 * (pr_.floors_per_hour_lo + pr_.floors_per_hour_hi) * pr_.hazard_boost);
    t_schism_ = pr_.participants >= 4 ? rng_.exponential(schism_mean_gap_)
                                      : std::numeric_limits<double>::infinity();
    t_coord_ = pr_.coord_rate > 0 ? rng_.exponential(60.0 / pr_.coord_rate)
                                  : std::numeric_limits<double>::infinity();
    t_aside_ = pr_.aside_rate > 0 ? rng_.exponential(60.0 / pr_.aside_rate)
                                  : std::numeric_limits<double>::infinity();
    t_migration_ = pr_.migration_rate > 0 ? rng_.exponential(60.0 / pr_.migration_rate)
                                          : std::numeric_limits<double>::infinity();
  }

  void loop() {
    while (true) {
      double t = std::min({t_schism_, t_coord_, t_aside_, t_migration_});
      int turn_floor = -1, expiry_floor = -1;
      for (const auto& [ord, f] : floors_) {
        if (f.next_turn_t < t) {
          t = f.next_turn_t;
          turn_floor = ord;
          expiry_floor = -1;
        }
        if (f.expiry < t) {
          t = f.expiry;
          expiry_floor = ord;
          turn_floor = -1;
        }
      }
      if (t >= duration_) break;

      if (expiry_floor >= 0) {
        do_expiry(expiry_floor, t);
      } else if (turn_floor >= 0) {
        do_rotation(turn_floor);
      } else if (t == t_schism_) {
        do_schism(t);
      } else if (t == t_coord_) {
        do_coord(t);
      } else if (t == t_aside_) {
        do_aside(t);
      } else {
        do_migration(t);
      }
    }
  }

  double sample_lifetime(double at) {
    const double life = std::min(pr_.floor_duration_cap,
                                 rng_.lognormal_median(pr_.median_floor_duration,
                                                       pr_.floor_duration_sigma));
    return at + std::max(8.0, life);
  }

  double gap_sample() { return std::max(-0.3, rng_.normal(pr_.gap_mean, pr_.gap_sd)); }

  double turn_length() {
    return std::clamp(rng_.lognormal_median(pr_.turn_median, pr_.turn_sigma), 0.5, 15.0);
  }

  // Emits one turn as 1-2 segments; returns {t0, t1}, with t1 <= t0 when the
  // turn did not fit.
  std::pair<double, double> emit_turn(const ParticipantId& p, double t0, double dur, double level,
                                      int floor_ord) {
    t0 = std::max(t0, busy_until_[p] + 0.05);
    if (t0 + dur > duration_) dur = duration_ - t0;
    if (dur < 0.35) return {t0, t0};

    auto& stint = stints_[p];
    if (stint.first < 0) {
      stint.floor_ordinal = floor_ord;
      stint.first = t0;
    }
    const double t1 = t0 + dur;
    stint.last = t1;

    auto push = [&](double a, double b) {
      VadSegment seg;
      seg.participant = p;
      seg.t0 = a;
      seg.t1 = b;
      seg.e_mean = level + rng_.normal(0.0, 0.4);
      seg.e_peak = seg.e_mean + rng_.uniform(1.0, 3.0);
      segments_[p].push_back(seg);
      voiced_total_[p] += b - a;
    };
    if (dur >= 1.5 && rng_.chance(0.25)) {
      const double cut = rng_.uniform(0.4, dur - 0.5);
      const double hole = rng_.uniform(0.12, 0.3);
      push(t0, t0 + cut);
      push(t0 + cut + hole, t1);
    } else {
      push(t0, t1);
    }
    busy_until_[p] = t1;
    return {t0, t1};
  }

  // True when some other participant's emitted speech covers t.
  bool in_overlap(const ParticipantId& self, double t) const {
    for (const auto& [p, segs] : segments_) {
      if (p == self) continue;
      auto it = std::upper_bound(segs.begin(), segs.end(), t,
                                 [](double v, const VadSegment& s) { return v < s.t0; });
      if (it != segs.begin()) {
        --it;
        if (t >= it->t0 && t < it->t1) return true;
      }
    }
    return false;
  }

  void close_stint(const ParticipantId& p) {
    auto it = stints_.find(p);
    if (it == stints_.end()) return;
    if (it->second.first >= 0 && it->second.last > it->second.first) {
      raw_labels_.push_back({p, FloorId{it->second.floor_ordinal}, it->second.first,
                             it->second.last});
    }
    stints_.erase(it);
  }

  ParticipantId pick(const std::set<ParticipantId>& from) {
    std::vector<ParticipantId> v(from.begin(), from.end());
    return v[rng_.below(v.size())];
  }

  void do_rotation(int ord) {
    SimFloor& f = floors_.at(ord);
    ParticipantId speaker;
    if (!f.prev_speaker.empty() && f.members.count(f.prev_speaker) && f.members.size() > 1 &&
        rng_.chance(0.3)) {
      speaker = f.prev_speaker;
    } else {
      std::set<ParticipantId> others = f.members;
      if (f.members.size() > 1) others.erase(f.prev_speaker);
      speaker = pick(others);
    }
    const double dur = turn_length();
    const double level = base_level_[speaker] + rng_.normal(0.0, 1.5);
    const double start = std::max(f.next_turn_t, 0.0);
    const auto [t0, t1] = emit_turn(speaker, start, dur, level, ord);
    if (t1 > t0) {
      f.prev_speaker = speaker;
      f.cur_turn_t0 = t0;
      f.cur_turn_t1 = t1;
      f.next_turn_t = t1 + gap_sample();
    } else {
      f.next_turn_t = start + 0.5;  // speaker was busy; retry shortly
    }
  }

  void do_expiry(int ord, double t) {
    if (floors_.size() <= 1) {
      floors_.at(ord).expiry = sample_lifetime(t);
      return;
    }
    SimFloor dying = floors_.at(ord);
    floors_.erase(ord);
    std::vector<int> ords;
    for (const auto& [o, f] : floors_) ords.push_back(o);
    SimFloor& target = floors_.at(ords[rng_.below(ords.size())]);
    for (const auto& p : dying.members) {
      close_stint(p);
      target.members.insert(p);
    }
  }

  void do_migration(double t) {
    t_migration_ = t + rng_.exponential(60.0 / pr_.migration_rate);
    if (floors_.size() < 2) return;
    std::vector<int> sources;
    for (const auto& [o, f] : floors_) {
      if (f.members.size() >= 3) sources.push_back(o);
    }
    if (sources.empty()) return;
    SimFloor& src = floors_.at(sources[rng_.below(sources.size())]);
    const ParticipantId mover = pick(src.members);
    if (busy_until_[mover] > t) return;  // mid-turn, skip this one
    std::vector<int> targets;
    for (const auto& [o, f] : floors_) {
      if (o != src.ordinal) targets.push_back(o);
    }
    SimFloor& dst = floors_.at(targets[rng_.below(targets.size())]);
    src.members.erase(mover);
    close_stint(mover);
    dst.members.insert(mover);
  }

  void do_coord(double t) {
    t_coord_ = t + rng_.exponential(60.0 / pr_.coord_rate);
    std::vector<int> eligible;
    for (const auto& [o, f] : floors_) {
      if (f.members.size() >= 3) eligible.push_back(o);
    }
    if (eligible.empty()) return;
    SimFloor& f = floors_.at(eligible[rng_.below(eligible.size())]);

    const double base_len = rng_.uniform(1.2, 2.8);
    double min_onset = std::numeric_limits<double>::infinity();
    double max_end = 0;
    ParticipantId first;
    std::vector<ParticipantId> emitted;
    for (const auto& p : f.members) {
      double onset = t + rng_.uniform(0.0, 0.3);
      if (busy_until_[p] + 0.05 > onset) onset = busy_until_[p] + 0.05;
      if (onset > t + 0.45) continue;  // mid-turn, sits this one out
      const double len = std::clamp(base_len + rng_.uniform(-0.25, 0.25), 1.0, 3.0);
      const double level = base_level_[p] + 2.0 + rng_.normal(0.0, 0.5);
      const auto [b0, b1] = emit_turn(p, onset, len, level, f.ordinal);
      if (b1 <= b0) continue;
      emitted.push_back(p);
      if (b0 < min_onset) {
        min_onset = b0;
        first = p;
      }
      max_end = std::max(max_end, b1);
    }
    if (emitted.size() < 3) return;

    InjectedEvent ev;
    ev.kind = "COORD";
    ev.t = min_onset;
    ev.t_init = min_onset;
    ev.initiator = first;
    for (const auto& p : emitted) {
      if (p != first) ev.responders.push_back(p);
    }
    injected_.push_back(ev);
    coord_spans_.push_back({min_onset, max_end});
    f.next_turn_t = std::max(f.next_turn_t, max_end + gap_sample());
  }

  // Places an aside onset in overlap with a (possibly freshly emitted)
  // rotation turn of the floor. Returns the aside turn bounds.
  std::pair<double, double> place_aside(SimFloor& f, const ParticipantId& producer, double t) {
    if (f.cur_turn_t1 < t + 0.5) do_rotation(f.ordinal);
    const double host_t0 = std::max(f.cur_turn_t0, t);
    const double host_t1 = f.cur_turn_t1;
    const double onset =
        host_t0 + rng_.uniform(0.15, std::max(0.2, 0.5 * (host_t1 - host_t0)));
    const double dur = std::clamp(rng_.lognormal_median(1.5, 0.25), 0.8, 3.0);
    const double level = base_level_[producer] - pr_.aside_drop + rng_.normal(0.0, 0.5);
    return emit_turn(producer, onset, dur, level, f.ordinal);
  }

  std::optional<ParticipantId> aside_producer(const SimFloor& f, double t) {
    std::vector<ParticipantId> eligible;
    for (const auto& p : f.members) {
      if (p != f.prev_speaker && busy_until_[p] <= t && voiced_total_[p] >= 6.0) {
        eligible.push_back(p);
      }
    }
    if (eligible.empty()) return std::nullopt;
    return eligible[rng_.below(eligible.size())];
  }

  void do_aside(double t) {
    t_aside_ = t + rng_.exponential(60.0 / pr_.aside_rate);
    std::vector<int> eligible;
    for (const auto& [o, f] : floors_) {
      if (f.members.size() >= 3) eligible.push_back(o);
    }
    if (eligible.empty()) return;
    SimFloor& f = floors_.at(eligible[rng_.below(eligible.size())]);
    auto producer = aside_producer(f, t);
    if (!producer) return;
    auto [t0, t1] = place_aside(f, *producer, t);
    if (t1 <= t0) return;
    if (!in_overlap(*producer, t0)) return;  // landed in the clear; just a turn

    InjectedEvent ev;
    ev.kind = "ASIDE";
    ev.t = t0;
    ev.t_init = t0;
    ev.initiator = *producer;
    injected_.push_back(ev);
  }

  void do_schism(double t) {
    t_schism_ = t + rng_.exponential(schism_mean_gap_);
    if (static_cast<int>(floors_.size()) >= pr_.max_concurrent_floors) return;
    std::vector<int> eligible;
    for (const auto& [o, f] : floors_) {
      if (f.members.size() >= 4) eligible.push_back(o);
    }
    if (eligible.empty()) return;
    SimFloor& src = floors_.at(eligible[rng_.below(eligible.size())]);

    std::string kind;
    if (rng_.chance(pr_.sit_fraction)) {
      kind = "SIT";
    } else {
      const char* others[] = {"TOSS_OUT", "ASIDE", "RETRO"};
      kind = others[rng_.below(3)];
    }

    ParticipantId initiator;
    if (kind == "ASIDE") {
      auto producer = aside_producer(src, t);
      if (!producer) {
        kind = "TOSS_OUT";
        initiator = pick(src.members);
      } else {
        initiator = *producer;
      }
    } else {
      initiator = pick(src.members);
    }
    std::set<ParticipantId> rest = src.members;
    rest.erase(initiator);
    const ParticipantId responder = pick(rest);

    double init_t0 = 0, init_t1 = 0;
    if (kind == "ASIDE") {
      auto [a, b] = place_aside(src, initiator, t);
      init_t0 = a;
      init_t1 = b;
      if (b > a && !in_overlap(initiator, a)) kind = "TOSS_OUT";  // missed the overlap
    } else if (kind == "RETRO") {
      // An SPP-positioned source turn, hard on the heels of the prior one.
      const double start = std::max(src.cur_turn_t1 + rng_.uniform(0.05, 0.2), t);
      const double dur = turn_length();
      const double level = base_level_[initiator] + rng_.normal(0.0, 1.5);
      std::tie(init_t0, init_t1) = emit_turn(initiator, start, dur, level, src.ordinal);
    } else {
      // SIT and toss-outs take the next transition-relevance slot.
      const double start = std::max(src.next_turn_t, t);
      const double dur = turn_length();
      const double level = base_level_[initiator] + rng_.normal(0.0, 1.5);
      std::tie(init_t0, init_t1) = emit_turn(initiator, start, dur, level, src.ordinal);
    }
    if (init_t1 <= init_t0 || init_t1 >= duration_ - 0.5) return;  // ran off the end

    double resp_t0;
    if (kind == "RETRO") {
      resp_t0 = init_t0 + rng_.uniform(0.4, 0.75) * (init_t1 - init_t0);
    } else {
      resp_t0 = init_t1 + rng_.uniform(0.1, kind == "SIT" ? 1.0 : 1.5);
    }
    resp_t0 = std::max(resp_t0, busy_until_[responder] + 0.05);
    if (resp_t0 + 1.0 >= duration_) return;  // response would not fit

    // The initiating turn belongs to the new floor: rewind its stint
    // attribution by closing the source stint first, then re-crediting.
    reattribute_last_turn(initiator, init_t0, init_t1);
    const double resp_dur = turn_length();
    const double resp_level = base_level_[responder] + rng_.normal(0.0, 1.5);

    const int ord = next_ordinal_++;
    created_.push_back({init_t0, ord});
    SimFloor nf;
    nf.ordinal = ord;
    nf.members = {initiator, responder};
    nf.created = init_t0;
    nf.expiry = sample_lifetime(init_t0);

    src.members.erase(initiator);
    src.members.erase(responder);
    close_stint(responder);
    // Initiator's stint was already closed in reattribute_last_turn.

    // Credit the initiating turn to the new floor.
    auto& stint = stints_[initiator];
    stint.floor_ordinal = ord;
    stint.first = init_t0;
    stint.last = init_t1;

    const auto [rt0, rt1] = emit_turn(responder, resp_t0, resp_dur, resp_level, ord);
    resp_t0 = rt0;
    nf.prev_speaker = responder;
    nf.cur_turn_t0 = rt0;
    nf.cur_turn_t1 = std::max(rt1, rt0);
    nf.next_turn_t = std::max(nf.cur_turn_t1, init_t1) + gap_sample();
    floors_[ord] = nf;

    if (src.next_turn_t < init_t1 && kind != "ASIDE" && kind != "RETRO") {
      src.next_turn_t = init_t1 + gap_sample();
    }

    if (kind == "SIT") {
      const int repeats = 2 + static_cast<int>(rng_.below(2));
      for (int i = 0; i < repeats; ++i) {
        TokenAnnotation tok;
        tok.participant = initiator;
        tok.t0 = init_t0 + 0.25 * i;
        tok.t1 = tok.t0 + 0.2;
        tok.text = responder;
        tok.is_address = true;
        tokens_.push_back(tok);
      }
    }

    InjectedEvent ev;
    ev.kind = kind;
    ev.t_init = init_t0;
    ev.t_resp = resp_t0;
    ev.t = (kind == "SIT" || kind == "ASIDE") ? init_t0 : resp_t0;
    ev.initiator = initiator;
    ev.responders = {responder};
    ev.schism = true;
    injected_.push_back(ev);
  }

  // The initiating turn was just emitted under the source floor's stint;
  // close that stint as of the turn *before* it.
  void reattribute_last_turn(const ParticipantId& p, double turn_t0, double turn_t1) {
    auto it = stints_.find(p);
    if (it == stints_.end()) return;
    Stint st = it->second;
    stints_.erase(it);
    if (st.first < 0) return;
    double end = std::min(st.last, turn_t0);
    // Find the real end of the previous turn from the emitted segments.
    const auto& segs = segments_[p];
    double prev_end = -1;
    for (auto rit = segs.rbegin(); rit != segs.rend(); ++rit) {
      if (rit->t1 <= turn_t0 + 1e-9) {
        prev_end = rit->t1;
        break;
      }
    }
    if (prev_end > st.first) end = std::min(end, prev_end);
    if (end > st.first) {
      raw_labels_.push_back({p, FloorId{st.floor_ordinal}, st.first, end});
    }
  }

  SimOutput assemble() {
    SimOutput out;
    out.participants = ids_;
    out.preset = pr_.name;

    for (const auto& p : ids_) {
      auto it = segments_.find(p);
      SegmentList segs = it == segments_.end() ? SegmentList{} : it->second;
      std::sort(segs.begin(), segs.end(),
                [](const VadSegment& a, const VadSegment& b) { return a.t0 < b.t0; });
      out.segments.push_back({p, std::move(segs)});
    }
    std::sort(tokens_.begin(), tokens_.end(),
              [](const TokenAnnotation& a, const TokenAnnotation& b) { return a.t0 < b.t0; });
    out.tokens = tokens_;

    // Renumber floors by emergence (initiating-turn onset).
    std::sort(created_.begin(), created_.end());
    std::map<int, int> remap;
    for (size_t i = 0; i < created_.size(); ++i) remap[created_[i].second] = static_cast<int>(i) + 1;

    for (auto& iv : raw_labels_) iv.floor = FloorId{remap.at(iv.floor.ordinal)};
    std::sort(raw_labels_.begin(), raw_labels_.end(), [](const auto& a, const auto& b) {
      if (a.participant != b.participant) return a.participant < b.participant;
      return a.t0 < b.t0;
    });
    out.truth.labels = raw_labels_;
    out.truth.injected = injected_;
    out.truth.session_span = duration_;
    out.coord_spans = coord_spans_;
    return out;
  }

  SimPreset pr_;
  double duration_;
  Rng rng_;

  std::vector<ParticipantId> ids_;
  std::map<ParticipantId, double> base_level_;
  std::map<ParticipantId, double> busy_until_;
  std::map<ParticipantId, double> voiced_total_;
  std::map<ParticipantId, SegmentList> segments_;
  std::map<ParticipantId, Stint> stints_;

  std::map<int, SimFloor> floors_;
  int next_ordinal_ = 1;
  std::vector<std::pair<double, int>> created_;

  double schism_mean_gap_ = 60;
  double t_schism_ = 0, t_coord_ = 0, t_aside_ = 0, t_migration_ = 0;

  std::vector<AffiliationInterval> raw_labels_;
  std::vector<InjectedEvent> injected_;
  std::vector<TokenAnnotation> tokens_;
  std::vector<TimeWindow> coord_spans_;
};

double realized_floors_per_hour(const SimOutput& out, double duration) {
  std::set<int> floors;
  for (const auto& iv : out.truth.labels) floors.insert(iv.floor.ordinal);
  return static_cast<double>(floors.size()) / (duration / 3600.0);
}

}  // namespace

SimOutput simulate_session(const SimPreset& preset, double duration, uint64_t seed) {
  if (!preset.valid()) throw Error(ErrorCode::BadArgument, "invalid preset");
  if (duration < 0) throw Error(ErrorCode::BadArgument, "negative duration");

  SimOutput out;
  constexpr int kMaxAttempts = 30;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Sim sim(preset, duration, Rng(mix_seed(seed, static_cast<uint64_t>(attempt))));
    out = sim.run();
    out.seed = seed;
    if (duration < 600) break;  // too short for the band to be meaningful
    const double fph = realized_floors_per_hour(out, duration);
    if (fph >= preset.floors_per_hour_lo && fph <= preset.floors_per_hour_hi) break;
  }
  return out;
}

std::vector<EnergyFrame> rectangular_frames(const SegmentList& segments, double hop, double span) {
  std::vector<EnergyFrame> frames;
  const size_t n = static_cast<size_t>(std::floor(span / hop));
  frames.reserve(n);
  size_t idx = 0;
  for (size_t k = 0; k < n; ++k) {
    const double t = k * hop;
    while (idx < segments.size() && segments[idx].t1 <= t) ++idx;
    double e = kSilenceFloorDb;
    if (idx < segments.size() && segments[idx].t0 <= t && t < segments[idx].t1) {
      e = segments[idx].e_mean;
    }
    frames.push_back({t, e});
  }
  return frames;
}

WavData synthesize_tone_track(const SegmentList& segments, uint32_t rate, double span,
                              double tone_hz) {
  WavData wav;
  wav.rate = rate;
  wav.samples.assign(static_cast<size_t>(std::llround(span * rate)), 0);
  for (const auto& seg : segments) {
    const double amp = std::pow(10.0, seg.e_mean / 20.0) * std::sqrt(2.0);  // RMS -> peak
    const size_t a = static_cast<size_t>(std::llround(seg.t0 * rate));
    const size_t b = std::min(wav.samples.size(), static_cast<size_t>(std::llround(seg.t1 * rate)));
    for (size_t i = a; i < b; ++i) {
      const double v = amp * std::sin(2.0 * M_PI * tone_hz * (static_cast<double>(i) / rate));
      wav.samples[i] = static_cast<int16_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
    }
  }
  return wav;
}

}  // namespace floorsight
