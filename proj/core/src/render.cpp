#include "floorsight/render.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "floorsight/errors.hpp"

namespace floorsight {

namespace {

constexpr const char* kPalette[8] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759",
                                     "#b07aa1", "#76b7b2", "#edc948", "#9c755f"};
constexpr double kLaneHeight = 22.0;
constexpr double kLaneGap = 8.0;
constexpr double kLeftMargin = 64.0;
constexpr double kPlotWidth = 1140.0;
constexpr double kTopMargin = 12.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_vad_diagram(const SessionStreams& streams,
                               const std::optional<std::vector<AffiliationInterval>>& labels,
                               double span) {
  if (span <= 0) throw Error(ErrorCode::BadArgument, "span must be positive");

  SessionStreams sorted = streams;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.participant < b.participant; });

  std::map<ParticipantId, std::vector<AffiliationInterval>> label_idx;
  if (labels) {
    for (const auto& iv : *labels) label_idx[iv.participant].push_back(iv);
    for (auto& [p, ivs] : label_idx) {
      std::sort(ivs.begin(), ivs.end(),
                [](const auto& a, const auto& b) { return a.t0 < b.t0; });
    }
  }
  auto floor_at = [&](const ParticipantId& p, double t) -> std::optional<int> {
    auto it = label_idx.find(p);
    if (it == label_idx.end()) return std::nullopt;
    for (const auto& iv : it->second) {
      if (t >= iv.t0 && t < iv.t1) return iv.floor.ordinal;
      if (iv.t0 > t) break;
    }
    return std::nullopt;
  };

  const double scale = kPlotWidth / span;
  const double axis_y = kTopMargin + sorted.size() * (kLaneHeight + kLaneGap) + 8.0;
  const double height = axis_y + 34.0;
  const double width = kLeftMargin + kPlotWidth + 12.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" fill=\"#ffffff\"/>\n";

  for (size_t lane = 0; lane < sorted.size(); ++lane) {
    const double y = kTopMargin + lane * (kLaneHeight + kLaneGap);
    svg += "<text x=\"" + num(kLeftMargin - 8.0) + "\" y=\"" + num(y + kLaneHeight - 6.0) +
           "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">" +
           sorted[lane].participant + "</text>\n";
    for (const auto& seg : sorted[lane].segments) {
      const double x = kLeftMargin + seg.t0 * scale;
      const double w = std::max(0.5, (seg.t1 - seg.t0) * scale);
      std::string fill = "#999999";
      if (labels) {
        if (auto ord = floor_at(seg.participant, 0.5 * (seg.t0 + seg.t1))) {
          fill = kPalette[(*ord - 1 >= 0 ? *ord - 1 : 0) % 8];
        }
      }
      svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
             "\" height=\"" + num(kLaneHeight) + "\" fill=\"" + fill + "\"/>\n";
    }
  }

  // Time axis, ticks every 10 s, numbers every minute (or every tick when
  // the span is short).
  svg += "<line x1=\"" + num(kLeftMargin) + "\" y1=\"" + num(axis_y) + "\" x2=\"" +
         num(kLeftMargin + kPlotWidth) + "\" y2=\"" + num(axis_y) +
         "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  const int label_every = span <= 180 ? 10 : 60;
  for (int t = 0; t <= static_cast<int>(span); t += 10) {
    const double x = kLeftMargin + t * scale;
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(axis_y) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(axis_y + 5.0) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    if (t % label_every == 0) {
      svg += "<text x=\"" + num(x) + "\" y=\"" + num(axis_y + 18.0) +
             "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">" +
             std::to_string(t) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace floorsight
