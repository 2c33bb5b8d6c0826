#pragma once

#include <string>

#include "gcp/corpus.hpp"

namespace gcp {

struct Classification {
    std::string label;
    double confidence = 0.0;
};

/// Client for an external image classifier. Sends the PNG-encoded image as
/// the body of POST <endpoint>/classify and expects
/// {"label": "...", "confidence": <real>} back.
Classification classify_external(const RgbImage& image, const std::string& endpoint,
                                 int timeout_seconds = 30);

/// Labels every record of the manifest through the classifier, keeping at
/// most `jobs` requests in flight. Returns a copy with labels replaced.
Manifest classify_manifest(const Manifest& manifest, const std::string& endpoint, int jobs);

} // namespace gcp
