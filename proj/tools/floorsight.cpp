#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "floorsight/config.hpp"
#include "floorsight/engine.hpp"
#include "floorsight/errors.hpp"
#include "floorsight/eval.hpp"
#include "floorsight/io.hpp"
#include "floorsight/mixer.hpp"
#include "floorsight/render.hpp"
#include "floorsight/simulator.hpp"
#include "floorsight/turns.hpp"
#include "floorsight/vad.hpp"
#include "floorsight/validate.hpp"
#include "floorsight/wav.hpp"

namespace fs = std::filesystem;
using namespace floorsight;

namespace {

struct MergedItem {
  double t;
  int order;  // segments before cues at equal times
  const VadSegment* segment = nullptr;
  const SchismCue* cue = nullptr;
};

int run_simulate(const std::string& preset_name, double duration, uint64_t seed,
                 const std::string& out_dir, bool with_wav) {
  const SimPreset p = preset(preset_name);
  const SimOutput out = simulate_session(p, duration, seed);
  write_session(out_dir, out);
  if (with_wav) {
    for (const auto& stream : out.segments) {
      const WavData wav = synthesize_tone_track(stream.segments, 16000, duration,
                                                200.0 + 20.0 * (&stream - &out.segments[0]));
      write_wav((fs::path(out_dir) / (stream.participant + ".wav")).string(), wav);
    }
  }
  std::cout << "wrote session to " << out_dir << " (" << out.truth.labels.size()
            << " truth intervals, " << out.truth.injected.size() << " injected events)\n";
  return 0;
}

int run_vad(const std::string& wav_dir, const std::string& out_file,
            const std::string& params_file) {
  const Config config = load_config(params_file);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(wav_dir)) {
    if (entry.path().extension() == ".wav") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw Error(ErrorCode::EmptyInput, "no .wav files in " + wav_dir);

  SessionStreams streams;
  for (const auto& path : paths) {
    const WavData wav = read_wav(path);
    const auto frames = compute_frame_energy(std::span<const int16_t>(wav.samples),
                                             static_cast<double>(wav.rate), config.vad);
    const ParticipantId participant = fs::path(path).stem().string();
    streams.push_back({participant, detect_segments(frames, config.vad, participant)});
  }
  spill(out_file, write_segments_jsonl(streams));
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

int run_infer(const std::string& session_dir, const std::string& out_dir,
              const std::string& params_file, bool no_cues) {
  const SessionBundle bundle = read_session(session_dir);
  const Config config = load_config(params_file);

  EngineConfig ec;
  ec.engine = config.engine;
  ec.turns = config.turns;
  ec.detectors = config.detectors;
  ec.use_cues = !no_cues;
  const bool replay_cues = !no_cues && bundle.cues.has_value();
  ec.run_detectors = !no_cues && !replay_cues;

  FloorEngine engine(bundle.participants, ec);
  engine.set_tokens(bundle.tokens);

  std::vector<MergedItem> items;
  for (const auto& stream : bundle.segments) {
    for (const auto& seg : stream.segments) items.push_back({seg.t0, 0, &seg, nullptr});
  }
  if (replay_cues) {
    for (const auto& cue : *bundle.cues) items.push_back({cue.t, 1, nullptr, &cue});
  }
  std::sort(items.begin(), items.end(), [](const MergedItem& a, const MergedItem& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.order != b.order) return a.order < b.order;
    const ParticipantId& pa = a.segment ? a.segment->participant : a.cue->initiator;
    const ParticipantId& pb = b.segment ? b.segment->participant : b.cue->initiator;
    return pa < pb;
  });

  std::vector<AffiliationInterval> labels;
  std::vector<FloorEvent> events;
  std::vector<SchismCue> cues;
  double last_drain = 0;
  for (const auto& item : items) {
    if (item.segment) {
      engine.ingest(*item.segment);
    } else {
      engine.ingest(*item.cue);
    }
    if (engine.now() - last_drain > 120.0) {
      auto batch = engine.emit_labels(engine.now() - config.engine.retro_horizon - 1.0);
      labels.insert(labels.end(), batch.begin(), batch.end());
      last_drain = engine.now();
    }
  }
  engine.finish();
  auto batch = engine.emit_labels(bundle.span + 1.0);
  labels.insert(labels.end(), batch.begin(), batch.end());
  events = engine.drain_events();
  cues = engine.drain_emitted_cues();

  fs::create_directories(out_dir);
  spill((fs::path(out_dir) / "pred.csv").string(), write_labels_csv(labels));
  spill((fs::path(out_dir) / "events.jsonl").string(), write_events_jsonl(events));
  if (ec.run_detectors) {
    spill((fs::path(out_dir) / "cues.jsonl").string(), write_cues_jsonl(cues));
  }
  std::cout << "wrote " << out_dir << " (" << labels.size() << " intervals, " << events.size()
            << " events)\n";
  return 0;
}

int run_eval(const std::string& truth_csv, const std::string& pred_csv,
             const std::string& events_file, const std::string& injected_file,
             const std::string& cues_file, double span_override,
             const std::string& report_file) {
  const auto truth = read_labels_csv(slurp(truth_csv));
  const auto pred = read_labels_csv(slurp(pred_csv));

  double span = span_override;
  if (span <= 0) {
    for (const auto& iv : truth) span = std::max(span, iv.t1);
    for (const auto& iv : pred) span = std::max(span, iv.t1);
  }

  EvalReport report;
  report.pairwise_agreement = frame_pairwise_agreement(truth, pred, span);
  report.stats = corpus_stats(pred, span);

  std::vector<InjectedEvent> injected;
  if (!injected_file.empty()) injected = read_injected_jsonl(slurp(injected_file));
  if (!events_file.empty() && !injected.empty()) {
    report.latency = detection_latency(injected, read_events_jsonl(slurp(events_file)));
  }
  if (!cues_file.empty() && !injected.empty()) {
    report.cue_prf = cue_prf(injected, read_cues_jsonl(slurp(cues_file)));
  }

  spill(report_file, write_report_json(report));
  std::cout << write_report_text(report);
  return 0;
}

int run_render(const std::string& session_dir, const std::string& out_file,
               const std::string& labels_file) {
  const SessionBundle bundle = read_session(session_dir);
  std::optional<std::vector<AffiliationInterval>> labels;
  if (!labels_file.empty()) labels = read_labels_csv(slurp(labels_file));
  spill(out_file, render_vad_diagram(bundle.segments, labels, bundle.span));
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

int run_mix(const std::string& session_dir, const std::string& labels_file,
            const std::string& out_file, const std::string& params_file) {
  const SessionBundle bundle = read_session(session_dir);
  const Config config = load_config(params_file);
  const auto labels = read_labels_csv(slurp(labels_file));
  {
    const auto report = validate_label_set(labels, bundle.span);
    if (!report.ok()) {
      throw Error(ErrorCode::InvalidLabels, labels_file + ": " + report.violations.front().detail);
    }
  }

  // Matrix snapshots at label boundaries (and aside spans when cues exist).
  std::set<double> boundaries{0.0};
  for (const auto& iv : labels) {
    boundaries.insert(iv.t0);
    boundaries.insert(iv.t1);
  }
  std::vector<std::pair<double, const SchismCue*>> asides;
  if (bundle.cues) {
    const auto turns = build_turns(bundle.segments, config.turns.merge_gap);
    for (const auto& cue : *bundle.cues) {
      if (cue.kind != CueKind::Aside) continue;
      double end = cue.t + 2.0;
      for (const auto& turn : turns) {
        if (turn.participant == cue.initiator && turn.t0 <= cue.t && cue.t < turn.t1) {
          end = turn.t1;
        }
      }
      boundaries.insert(cue.t);
      boundaries.insert(end);
      asides.push_back({end, &cue});
    }
  }

  auto partition_at = [&](double t) {
    Partition part;
    for (const auto& iv : labels) {
      if (t >= iv.t0 && t < iv.t1) part[iv.participant] = iv.floor;
    }
    return part;
  };

  std::vector<std::pair<double, GainMatrix>> timeline;
  for (double t : boundaries) {
    if (t >= bundle.span) continue;
    const Partition part = partition_at(t);
    const RoleMap roles = classify_roles(part, bundle.segments, t, config.mixer.roles_horizon);
    GainMatrix m = compute_gain_matrix(part, bundle.participants, config.mixer);
    for (const auto& [end, cue] : asides) {
      if (cue->t <= t && t < end) m = route_aside(m, *cue, roles, part, config.mixer);
    }
    if (!timeline.empty() && timeline.back().second.gains == m.gains) continue;
    timeline.push_back({t, std::move(m)});
  }
  spill(out_file, write_gains_csv(timeline));
  std::cout << "wrote " << out_file << " (" << timeline.size() << " snapshots)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversational floor tracking toolkit"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "generate a synthetic labeled session");
  std::string sim_preset, sim_out;
  double sim_duration = 3600;
  uint64_t sim_seed = 1;
  bool sim_wav = false;
  sim->add_option("--preset", sim_preset, "pilot | youth")->required();
  sim->add_option("--duration", sim_duration, "seconds")->required();
  sim->add_option("--seed", sim_seed, "rng seed")->required();
  sim->add_option("--out", sim_out, "output session directory")->required();
  sim->add_flag("--wav", sim_wav, "also write tone-burst wav per participant");

  auto* vad = app.add_subcommand("vad", "segment per-participant wav files");
  std::string vad_dir, vad_out, vad_params;
  vad->add_option("--wav-dir", vad_dir)->required();
  vad->add_option("--out", vad_out, "segments.jsonl path")->required();
  vad->add_option("--params", vad_params, "key=value config file");

  auto* infer = app.add_subcommand("infer", "run floor inference over a session");
  std::string infer_session, infer_out, infer_params;
  bool infer_no_cues = false;
  infer->add_option("--session", infer_session)->required();
  infer->add_option("--out", infer_out)->required();
  infer->add_option("--params", infer_params);
  infer->add_flag("--no-cues", infer_no_cues, "turn-taking features only (P5 ablation)");

  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  std::string ev_truth, ev_pred, ev_events, ev_injected, ev_cues, ev_report;
  double ev_span = 0;
  eval_cmd->add_option("--truth", ev_truth)->required();
  eval_cmd->add_option("--pred", ev_pred)->required();
  eval_cmd->add_option("--events", ev_events, "engine events.jsonl (for latency)");
  eval_cmd->add_option("--injected", ev_injected, "simulator injected.jsonl");
  eval_cmd->add_option("--cues", ev_cues, "emitted cues.jsonl (for precision/recall)");
  eval_cmd->add_option("--span", ev_span, "session span override (seconds)");
  eval_cmd->add_option("--report", ev_report)->required();

  auto* render = app.add_subcommand("render", "draw the voice-activity diagram");
  std::string r_session, r_out, r_labels;
  render->add_option("--session", r_session)->required();
  render->add_option("--out", r_out, "svg path")->required();
  render->add_option("--labels", r_labels, "label csv for floor colouring");

  auto* mix = app.add_subcommand("mix", "per-listener gain matrix from labels");
  std::string m_session, m_labels, m_out, m_params;
  mix->add_option("--session", m_session)->required();
  mix->add_option("--labels", m_labels)->required();
  mix->add_option("--out", m_out)->required();
  mix->add_option("--params", m_params);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_preset, sim_duration, sim_seed, sim_out, sim_wav);
    if (vad->parsed()) return run_vad(vad_dir, vad_out, vad_params);
    if (infer->parsed()) return run_infer(infer_session, infer_out, infer_params, infer_no_cues);
    if (eval_cmd->parsed()) {
      return run_eval(ev_truth, ev_pred, ev_events, ev_injected, ev_cues, ev_span, ev_report);
    }
    if (render->parsed()) return run_render(r_session, r_out, r_labels);
    if (mix->parsed()) return run_mix(m_session, m_labels, m_out, m_params);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
