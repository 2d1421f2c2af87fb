#include "floorsight/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "floorsight/errors.hpp"
#include "floorsight/validate.hpp"

namespace floorsight {

using nlohmann::json;

std::string fmt_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

std::string fmt_db(double db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", db);
  return buf;
}

namespace {

// Parse one JSONL payload, dispatching each line with its 1-based number.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      fn(obj, lineno);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

CueKind parse_cue_kind(const std::string& name, int lineno) {
  if (name == "SIT") return CueKind::Sit;
  if (name == "ASIDE") return CueKind::Aside;
  if (name == "COORD") return CueKind::Coord;
  if (name == "CONFIRM") return CueKind::Confirm;
  throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad cue kind " + name);
}

}  // namespace

std::string write_segments_jsonl(const SessionStreams& streams) {
  std::vector<const VadSegment*> all;
  for (const auto& s : streams) {
    for (const auto& seg : s.segments) all.push_back(&seg);
  }
  std::sort(all.begin(), all.end(), [](const VadSegment* a, const VadSegment* b) {
    if (a->t0 != b->t0) return a->t0 < b->t0;
    return a->participant < b->participant;
  });
  std::string out;
  for (const VadSegment* s : all) {
    out += "{\"p\":\"" + s->participant + "\",\"t0\":" + fmt_time(s->t0) +
           ",\"t1\":" + fmt_time(s->t1) + ",\"e_mean\":" + fmt_db(s->e_mean) +
           ",\"e_peak\":" + fmt_db(s->e_peak) + "}\n";
  }
  return out;
}

SessionStreams read_segments_jsonl(const std::string& text) {
  std::map<ParticipantId, SegmentList> by_p;
  for_each_line(text, [&](const json& obj, int lineno) {
    VadSegment seg;
    seg.participant = obj.at("p").get<std::string>();
    seg.t0 = obj.at("t0").get<double>();
    seg.t1 = obj.at("t1").get<double>();
    seg.e_mean = obj.at("e_mean").get<double>();
    seg.e_peak = obj.at("e_peak").get<double>();
    if (!is_valid_participant_id(seg.participant)) {
      throw Error(ErrorCode::InvalidSegments,
                  "line " + std::to_string(lineno) + ": bad participant id");
    }
    by_p[seg.participant].push_back(seg);
  });
  SessionStreams out;
  for (auto& [p, segs] : by_p) {
    std::sort(segs.begin(), segs.end(),
              [](const VadSegment& a, const VadSegment& b) { return a.t0 < b.t0; });
    for (size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].t1 <= segs[i].t0) {
        throw Error(ErrorCode::InvalidSegments, p + ": segment with t1 <= t0");
      }
      if (segs[i].e_peak < segs[i].e_mean) {
        throw Error(ErrorCode::InvalidSegments, p + ": e_peak < e_mean");
      }
      if (i > 0 && segs[i].t0 < segs[i - 1].t1) {
        throw Error(ErrorCode::InvalidSegments, p + ": overlapping segments");
      }
    }
    out.push_back({p, std::move(segs)});
  }
  return out;
}

std::string write_tokens_jsonl(const std::vector<TokenAnnotation>& tokens) {
  std::vector<const TokenAnnotation*> all;
  for (const auto& t : tokens) all.push_back(&t);
  std::sort(all.begin(), all.end(), [](const TokenAnnotation* a, const TokenAnnotation* b) {
    if (a->t0 != b->t0) return a->t0 < b->t0;
    return a->participant < b->participant;
  });
  std::string out;
  for (const TokenAnnotation* t : all) {
    out += "{\"p\":\"" + t->participant + "\",\"t0\":" + fmt_time(t->t0) +
           ",\"t1\":" + fmt_time(t->t1) + ",\"text\":" + json(t->text).dump() +
           ",\"is_address\":" + (t->is_address ? "true" : "false") + "}\n";
  }
  return out;
}

std::vector<TokenAnnotation> read_tokens_jsonl(const std::string& text,
                                               const std::set<std::string>* lexicon) {
  std::vector<TokenAnnotation> out;
  for_each_line(text, [&](const json& obj, int lineno) {
    TokenAnnotation tok;
    tok.participant = obj.at("p").get<std::string>();
    tok.t0 = obj.at("t0").get<double>();
    tok.t1 = obj.at("t1").get<double>();
    tok.text = obj.at("text").get<std::string>();
    tok.is_address = obj.value("is_address", false);
    if (lexicon) tok.is_address = lexicon->count(lower(tok.text)) > 0;
    if (tok.t1 <= tok.t0) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": token t1 <= t0");
    }
    out.push_back(std::move(tok));
  });
  return out;
}

std::string write_cues_jsonl(const std::vector<SchismCue>& cues) {
  std::vector<const SchismCue*> all;
  for (const auto& c : cues) all.push_back(&c);
  std::stable_sort(all.begin(), all.end(),
                   [](const SchismCue* a, const SchismCue* b) { return a->t < b->t; });
  std::string out;
  for (const SchismCue* c : all) {
    std::string responders;
    for (const auto& r : c->responders) {
      if (!responders.empty()) responders += ",";
      responders += "\"" + r + "\"";
    }
    char strength[16];
    std::snprintf(strength, sizeof strength, "%.3f", c->strength);
    out += std::string("{\"kind\":\"") + cue_kind_name(c->kind) + "\",\"t\":" + fmt_time(c->t) +
           ",\"initiator\":\"" + c->initiator + "\",\"responders\":[" + responders +
           "],\"strength\":" + strength + "}\n";
  }
  return out;
}

std::vector<SchismCue> read_cues_jsonl(const std::string& text) {
  std::vector<SchismCue> out;
  for_each_line(text, [&](const json& obj, int lineno) {
    SchismCue cue;
    cue.kind = parse_cue_kind(obj.at("kind").get<std::string>(), lineno);
    cue.t = obj.at("t").get<double>();
    cue.initiator = obj.at("initiator").get<std::string>();
    for (const auto& r : obj.at("responders")) cue.responders.insert(r.get<std::string>());
    cue.strength = obj.at("strength").get<double>();
    if (!cue.valid()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": invalid cue");
    }
    out.push_back(std::move(cue));
  });
  return out;
}

std::string write_injected_jsonl(const std::vector<InjectedEvent>& events) {
  std::vector<const InjectedEvent*> all;
  for (const auto& e : events) all.push_back(&e);
  std::stable_sort(all.begin(), all.end(),
                   [](const InjectedEvent* a, const InjectedEvent* b) { return a->t < b->t; });
  std::string out;
  for (const InjectedEvent* e : all) {
    std::string responders;
    for (const auto& r : e->responders) {
      if (!responders.empty()) responders += ",";
      responders += "\"" + r + "\"";
    }
    out += "{\"kind\":\"" + e->kind + "\",\"t\":" + fmt_time(e->t) +
           ",\"t_init\":" + fmt_time(e->t_init) + ",\"t_resp\":" + fmt_time(e->t_resp) +
           ",\"initiator\":\"" + e->initiator + "\",\"responders\":[" + responders +
           "],\"schism\":" + (e->schism ? "true" : "false") + "}\n";
  }
  return out;
}

std::vector<InjectedEvent> read_injected_jsonl(const std::string& text) {
  std::vector<InjectedEvent> out;
  for_each_line(text, [&](const json& obj, int) {
    InjectedEvent ev;
    ev.kind = obj.at("kind").get<std::string>();
    ev.t = obj.at("t").get<double>();
    ev.t_init = obj.at("t_init").get<double>();
    ev.t_resp = obj.at("t_resp").get<double>();
    ev.initiator = obj.at("initiator").get<std::string>();
    for (const auto& r : obj.at("responders")) ev.responders.push_back(r.get<std::string>());
    ev.schism = obj.value("schism", false);
    out.push_back(std::move(ev));
  });
  return out;
}

std::string write_events_jsonl(const std::vector<FloorEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    std::string members;
    for (const auto& p : e.participants) {
      if (!members.empty()) members += ",";
      members += "\"" + p + "\"";
    }
    out += std::string("{\"kind\":\"") + floor_event_kind_name(e.kind) +
           "\",\"t\":" + fmt_time(e.t) + ",\"floor\":" + std::to_string(e.floor.ordinal) +
           ",\"participants\":[" + members + "]}\n";
  }
  return out;
}

std::vector<FloorEvent> read_events_jsonl(const std::string& text) {
  std::vector<FloorEvent> out;
  for_each_line(text, [&](const json& obj, int lineno) {
    FloorEvent ev;
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "floor_start") {
      ev.kind = FloorEvent::Kind::Start;
    } else if (kind == "floor_end") {
      ev.kind = FloorEvent::Kind::End;
    } else if (kind == "join") {
      ev.kind = FloorEvent::Kind::Join;
    } else if (kind == "leave") {
      ev.kind = FloorEvent::Kind::Leave;
    } else {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(lineno) + ": bad event kind " + kind);
    }
    ev.t = obj.at("t").get<double>();
    ev.floor = FloorId{obj.at("floor").get<int>()};
    for (const auto& p : obj.at("participants")) ev.participants.push_back(p.get<std::string>());
    out.push_back(std::move(ev));
  });
  return out;
}

std::string write_labels_csv(const std::vector<AffiliationInterval>& labels) {
  std::vector<AffiliationInterval> sorted = labels;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.participant != b.participant) return a.participant < b.participant;
    if (a.t0 != b.t0) return a.t0 < b.t0;
    return a.floor.ordinal < b.floor.ordinal;
  });
  std::string out = "participant,floor,t0,t1\n";
  for (const auto& iv : sorted) {
    out += iv.participant + "," + std::to_string(iv.floor.ordinal) + "," + fmt_time(iv.t0) + "," +
           fmt_time(iv.t1) + "\n";
  }
  return out;
}

std::vector<AffiliationInterval> read_labels_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<AffiliationInterval> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "participant,floor,t0,t1") {
        throw Error(ErrorCode::ParseError, "line 1: bad header");
      }
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 4 fields");
    }
    try {
      AffiliationInterval iv;
      iv.participant = fields[0];
      iv.floor = FloorId{std::stoi(fields[1])};
      iv.t0 = std::stod(fields[2]);
      iv.t1 = std::stod(fields[3]);
      out.push_back(std::move(iv));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

std::string write_gains_csv(const std::vector<std::pair<double, GainMatrix>>& timeline) {
  std::string out = "listener,speaker,gain,t_effective\n";
  for (const auto& [t, m] : timeline) {
    for (const auto& [listener, row] : m.gains) {
      for (const auto& [speaker, gain] : row) {
        char g[16];
        std::snprintf(g, sizeof g, "%.4f", gain);
        out += listener + "," + speaker + "," + g + "," + fmt_time(t) + "\n";
      }
    }
  }
  return out;
}

std::string write_report_json(const EvalReport& report) {
  json j;
  j["pairwise_agreement"] = report.pairwise_agreement;
  j["latency"] = {{"matched", report.latency.matched},
                  {"missed", report.latency.missed},
                  {"median", report.latency.median},
                  {"mean", report.latency.mean}};
  json prf = json::object();
  for (const auto& [kind, score] : report.cue_prf) {
    prf[kind] = {{"precision", score.precision}, {"recall", score.recall},
                 {"f1", score.f1},               {"truth", score.truth_count},
                 {"emitted", score.emitted_count}, {"matched", score.matched},
                 {"zero_support", score.zero_support}};
  }
  j["cues"] = prf;
  j["corpus"] = {{"floors_count", report.stats.floors_count},
                 {"floors_per_hour", report.stats.floors_per_hour},
                 {"duration_median", report.stats.duration_median},
                 {"duration_min", report.stats.duration_min},
                 {"duration_max", report.stats.duration_max},
                 {"time_weighted_concurrency", report.stats.time_weighted_concurrency}};
  return j.dump(2) + "\n";
}

std::string write_report_text(const EvalReport& report) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "pairwise agreement   %.4f\n", report.pairwise_agreement);
  os << buf;
  std::snprintf(buf, sizeof buf, "detection latency    median %.2fs mean %.2fs (%d matched, %d missed)\n",
                report.latency.median, report.latency.mean, report.latency.matched,
                report.latency.missed);
  os << buf;
  for (const auto& [kind, s] : report.cue_prf) {
    std::snprintf(buf, sizeof buf, "cue %-9s         P %.3f R %.3f F1 %.3f (truth %d, emitted %d)%s\n",
                  kind.c_str(), s.precision, s.recall, s.f1, s.truth_count, s.emitted_count,
                  s.zero_support ? " [zero support]" : "");
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "corpus               %d floors (%.1f/h), median %.1fs, range [%.1f, %.1f]s, concurrency %.3f\n",
                report.stats.floors_count, report.stats.floors_per_hour,
                report.stats.duration_median, report.stats.duration_min, report.stats.duration_max,
                report.stats.time_weighted_concurrency);
  os << buf;
  return os.str();
}

std::set<std::string> read_lexicon(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(lower(line));
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

SessionBundle read_session(const std::string& dir) {
  namespace fs = std::filesystem;
  SessionBundle bundle;

  const std::string meta_path = (fs::path(dir) / "meta.json").string();
  json meta;
  try {
    meta = json::parse(slurp(meta_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, meta_path + ": " + e.what());
  }
  for (const auto& p : meta.at("participants")) {
    bundle.participants.push_back(p.get<std::string>());
  }
  bundle.span = meta.at("span").get<double>();
  bundle.preset = meta.value("preset", "");
  bundle.seed = meta.value("seed", 0ULL);

  bundle.segments = read_segments_jsonl(slurp((fs::path(dir) / "segments.jsonl").string()));

  const std::string tokens_path = (fs::path(dir) / "tokens.jsonl").string();
  if (file_exists(tokens_path)) bundle.tokens = read_tokens_jsonl(slurp(tokens_path));

  const std::string cues_path = (fs::path(dir) / "cues.jsonl").string();
  if (file_exists(cues_path)) bundle.cues = read_cues_jsonl(slurp(cues_path));

  const std::string truth_path = (fs::path(dir) / "truth.csv").string();
  if (file_exists(truth_path)) {
    auto labels = read_labels_csv(slurp(truth_path));
    const auto report = validate_label_set(labels, bundle.span);
    if (!report.ok()) {
      throw Error(ErrorCode::InvalidLabels,
                  truth_path + ": " + report.violations.front().detail);
    }
    bundle.truth = std::move(labels);
  }

  const std::string inj_path = (fs::path(dir) / "injected.jsonl").string();
  if (file_exists(inj_path)) bundle.injected = read_injected_jsonl(slurp(inj_path));

  // Every participant named in the data must be declared.
  std::set<ParticipantId> declared(bundle.participants.begin(), bundle.participants.end());
  for (const auto& s : bundle.segments) {
    if (!declared.count(s.participant)) {
      throw Error(ErrorCode::ParseError, "participant " + s.participant + " missing from meta");
    }
  }
  return bundle;
}

void write_session(const std::string& dir, const SimOutput& out) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json meta;
  meta["participants"] = out.participants;
  meta["span"] = out.truth.session_span;
  meta["preset"] = out.preset;
  meta["seed"] = out.seed;
  spill((fs::path(dir) / "meta.json").string(), meta.dump(2) + "\n");
  spill((fs::path(dir) / "segments.jsonl").string(), write_segments_jsonl(out.segments));
  spill((fs::path(dir) / "tokens.jsonl").string(), write_tokens_jsonl(out.tokens));
  spill((fs::path(dir) / "truth.csv").string(), write_labels_csv(out.truth.labels));
  spill((fs::path(dir) / "injected.jsonl").string(), write_injected_jsonl(out.truth.injected));
}

}  // namespace floorsight
