#pragma once

#include <optional>
#include <string>
#include <vector>

#include "floorsight/types.hpp"

namespace floorsight {

// Voice-activity diagram: one horizontal lane per participant, one rectangle
// per segment. With labels, rectangles are filled from a fixed 8-colour
// palette keyed by floor ordinal (cycling); unlabeled segments are gray.
// Output bytes are deterministic for identical inputs.
std::string render_vad_diagram(const SessionStreams& streams,
                               const std::optional<std::vector<AffiliationInterval>>& labels,
                               double span);

}  // namespace floorsight
