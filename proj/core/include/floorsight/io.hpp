#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "floorsight/engine.hpp"
#include "floorsight/eval.hpp"
#include "floorsight/mixer.hpp"
#include "floorsight/simulator.hpp"
#include "floorsight/types.hpp"

namespace floorsight {

// Fixed-decimal time formatting (1 ms resolution) shared by every writer.
std::string fmt_time(double t);
std::string fmt_db(double db);

// --- segments.jsonl: {"p","t0","t1","e_mean","e_peak"} ---
std::string write_segments_jsonl(const SessionStreams& streams);
SessionStreams read_segments_jsonl(const std::string& text);

// --- tokens.jsonl: {"p","t0","t1","text","is_address"} ---
std::string write_tokens_jsonl(const std::vector<TokenAnnotation>& tokens);
std::vector<TokenAnnotation> read_tokens_jsonl(const std::string& text,
                                               const std::set<std::string>* lexicon = nullptr);

// --- cues.jsonl: {"kind","t","initiator","responders","strength"} ---
std::string write_cues_jsonl(const std::vector<SchismCue>& cues);
std::vector<SchismCue> read_cues_jsonl(const std::string& text);

// --- injected.jsonl: ground-truth event records ---
std::string write_injected_jsonl(const std::vector<InjectedEvent>& events);
std::vector<InjectedEvent> read_injected_jsonl(const std::string& text);

// --- events.jsonl: engine floor events ---
std::string write_events_jsonl(const std::vector<FloorEvent>& events);
std::vector<FloorEvent> read_events_jsonl(const std::string& text);

// --- labels csv: "participant,floor,t0,t1", sorted, 3-decimal ---
std::string write_labels_csv(const std::vector<AffiliationInterval>& labels);
std::vector<AffiliationInterval> read_labels_csv(const std::string& text);

// --- gains csv: "listener,speaker,gain,t_effective" ---
std::string write_gains_csv(
    const std::vector<std::pair<double, GainMatrix>>& timeline);

std::string write_report_json(const EvalReport& report);
std::string write_report_text(const EvalReport& report);

// One address term per line; '#' comments and blanks skipped.
std::set<std::string> read_lexicon(const std::string& text);

// File plumbing (throws PARSE_ERROR on I/O failure).
std::string slurp(const std::string& path);
void spill(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

// A session directory: segments.jsonl plus optional tokens/cues/truth/meta.
struct SessionBundle {
  std::vector<ParticipantId> participants;
  double span = 0;
  std::string preset;
  uint64_t seed = 0;
  SessionStreams segments;
  std::vector<TokenAnnotation> tokens;
  std::optional<std::vector<SchismCue>> cues;
  std::optional<std::vector<AffiliationInterval>> truth;
  std::optional<std::vector<InjectedEvent>> injected;
};

SessionBundle read_session(const std::string& dir);
void write_session(const std::string& dir, const SimOutput& out);

}  // namespace floorsight
