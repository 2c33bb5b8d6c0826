#include "gcp/classifier.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gcp/error.hpp"
#include "gcp/imaging.hpp"
#include "gcp/parallel.hpp"

namespace gcp {

Classification classify_external(const RgbImage& image, const std::string& endpoint, int timeout_seconds) {
    const auto png = encode_png(image);
    httplib::Client client(endpoint);
    if (!client.is_valid())
        throw NetworkError("invalid classifier endpoint " + endpoint);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);

    auto res = client.Post("/classify", reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
    if (!res)
        throw NetworkError("classifier at " + endpoint + " unreachable: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw ProtocolError("classifier at " + endpoint + " answered HTTP " + std::to_string(res->status));

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw ProtocolError("classifier at " + endpoint + " returned malformed JSON");
    }
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string())
        throw ProtocolError("classifier response from " + endpoint + " has no \"label\" field");

    Classification c;
    c.label = j["label"].get<std::string>();
    if (auto it = j.find("confidence"); it != j.end() && it->is_number())
        c.confidence = it->get<double>();
    return c;
}

Manifest classify_manifest(const Manifest& manifest, const std::string& endpoint, int jobs) {
    Manifest out = manifest;
    parallel_for(out.records.size(), jobs, [&](std::size_t i) {
        auto& rec = out.records[i];
        const Classification c = classify_external(read_rgb(rec.image_path), endpoint);
        rec.label = c.label;
        rec.confidence = c.confidence;
    });
    return out;
}

} // namespace gcp
