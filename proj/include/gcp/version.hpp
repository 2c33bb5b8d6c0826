#pragma once

namespace gcp {

inline constexpr const char* kToolkitVersion = "1.0.0";
// Bumped whenever metadata.jsonl, run.json or verdicts.jsonl change shape.
inline constexpr int kFormatVersion = 1;

} // namespace gcp
