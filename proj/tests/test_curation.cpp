#include <doctest.h>

#include <fstream>
#include <thread>

#include <httplib.h>

#include "gcp/curation.hpp"
#include "gcp/error.hpp"
#include "gcp/imaging.hpp"
#include "support/fixtures.hpp"

using namespace gcp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A synthesized dataset of 20 canvases (40 candidates) in 5 groups.
struct Dataset {
    fixtures::TempDir dir{"gcp-cur"};
    fs::path out;

    Dataset() {
        fixtures::CorpusSpec spec;
        spec.canvases = 20;
        spec.size = {64, 64};
        const auto manifest = fixtures::write_benign_corpus(dir / "src", spec);
        PipelineOptions o;
        o.synthesis.seed = 9;
        out = dir / "data";
        run_pipeline(manifest, out, o);
    }
};

std::size_t log_lines(const fs::path& dataset) {
    std::ifstream f(dataset / kVerdictLog);
    std::size_t n = 0;
    std::string l;
    while (std::getline(f, l))
        n += !l.empty();
    return n;
}

Verdict verdict(const std::string& id, Decision d) {
    Verdict v;
    v.sample_id = id;
    v.decision = d;
    return v;
}

std::vector<std::string> ids_of(const std::vector<json>& page) {
    std::vector<std::string> out;
    for (const auto& c : page)
        out.push_back(c.at("id").get<std::string>());
    return out;
}

} // namespace

TEST_CASE("candidates are pending samples ordered by group then id") {
    Dataset d;
    CurationStore store(d.out);
    const auto all = store.next_candidates(std::nullopt, 0, 1000);
    CHECK(all.size() == 40);
    for (std::size_t i = 1; i < all.size(); ++i) {
        const auto a = std::make_pair(all[i - 1].at("group").get<std::string>(), all[i - 1].at("id").get<std::string>());
        const auto b = std::make_pair(all[i].at("group").get<std::string>(), all[i].at("id").get<std::string>());
        CHECK(a < b);
    }
    for (const char* key : {"id", "group", "occlusion_ratio", "provenance", "image", "mask", "overlay"})
        CHECK(all[0].contains(key));

    SUBCASE("pagination") {
        const auto p0 = store.next_candidates(std::nullopt, 0, 2);
        const auto p1 = store.next_candidates(std::nullopt, 1, 2);
        REQUIRE(p0.size() == 2);
        CHECK(ids_of(p0) == std::vector{ids_of(all)[0], ids_of(all)[1]});
        CHECK(ids_of(p1)[0] == ids_of(all)[2]);
        CHECK(store.next_candidates(std::nullopt, 100, 2).empty());
    }
    SUBCASE("group filter") {
        const auto bears = store.next_candidates(std::string("bear"), 0, 100);
        CHECK(bears.size() == 8);
        for (const auto& c : bears)
            CHECK(c.at("group") == "bear");
    }
    SUBCASE("unknown group names the group") {
        try {
            store.next_candidates(std::string("walrus"), 0, 10);
            FAIL("expected an error");
        } catch (const NotFoundError& e) {
            CHECK(std::string(e.what()).find("walrus") != std::string::npos);
        }
    }
    SUBCASE("all accepted leaves nothing") {
        for (const auto& id : ids_of(all))
            store.apply_verdict(verdict(id, Decision::accept));
        CHECK(store.next_candidates(std::nullopt, 0, 100).empty());
    }
}

TEST_CASE("verdict semantics") {
    Dataset d;
    CurationStore store(d.out);
    const auto ids = ids_of(store.next_candidates(std::nullopt, 0, 100));

    SUBCASE("accept") {
        const auto out = store.apply_verdict(verdict(ids[0], Decision::accept));
        CHECK(out.status == SampleStatus::accepted);
        CHECK_FALSE(out.replacement_id);
        CHECK(out.changed);
        CHECK(log_lines(d.out) == 1);
        // Same verdict again: no change, no log line.
        const auto again = store.apply_verdict(verdict(ids[0], Decision::accept));
        CHECK_FALSE(again.changed);
        CHECK(again.status == SampleStatus::accepted);
        CHECK(log_lines(d.out) == 1);
    }
    SUBCASE("reject creates a pending replacement at attempt + 1") {
        const auto out = store.apply_verdict(verdict(ids[0], Decision::reject));
        CHECK(out.status == SampleStatus::rejected);
        REQUIRE(out.replacement_id);
        const auto& rid = *out.replacement_id;
        const auto all = store.next_candidates(std::nullopt, 0, 100);
        const auto it = std::find_if(all.begin(), all.end(), [&](const json& c) { return c.at("id") == rid; });
        REQUIRE(it != all.end());
        const auto& prov = it->at("provenance");
        const auto first = store.statuses();
        CHECK(first.at(rid) == SampleStatus::pending);
        CHECK(prov.at("attempt") == 1);
        CHECK(prov.at("canvas_id") == ids[0].substr(0, ids[0].find("_s")));
        CHECK(fs::exists(d.out / prov.at("image_path").get<std::string>()));
        CHECK(store.image(rid).size() == Size{64, 64});
        // Rejecting the same sample again does not spawn another one.
        const auto again = store.apply_verdict(verdict(ids[0], Decision::reject));
        CHECK_FALSE(again.changed);
        CHECK(again.replacement_id == out.replacement_id);
    }
    SUBCASE("unknown id") {
        CHECK_THROWS_AS(store.apply_verdict(verdict("nope", Decision::accept)), NotFoundError);
    }
    SUBCASE("relabel records an override") {
        Verdict v = verdict(ids[0], Decision::relabel);
        CHECK_THROWS_AS(store.apply_verdict(v), ValidationError);
        v.label = "tiger";
        const auto out = store.apply_verdict(v);
        CHECK(out.status == SampleStatus::rejected);
        CHECK_FALSE(out.replacement_id);
        CHECK(store.label_overrides().size() == 1);
        CHECK(store.label_overrides().begin()->second == "tiger");
    }
    SUBCASE("supplements are not candidates") {
        CHECK_THROWS_AS(store.apply_verdict(verdict("apple_0_sup0", Decision::accept)), ValidationError);
    }
}

TEST_CASE("restart replays the log to the same state") {
    Dataset d;
    std::map<std::string, SampleStatus> statuses;
    std::map<std::string, std::string> replacements;
    {
        CurationStore store(d.out);
        const auto ids = ids_of(store.next_candidates(std::nullopt, 0, 100));
        for (std::size_t i = 0; i < 12; ++i)
            store.apply_verdict(verdict(ids[i], i % 3 == 0 ? Decision::reject : Decision::accept));
        // Judge a replacement too.
        store.apply_verdict(verdict(store.replacements().begin()->second, Decision::reject));
        statuses = store.statuses();
        replacements = store.replacements();
    }
    CurationStore again(d.out);
    CHECK(again.statuses() == statuses);
    CHECK(again.replacements() == replacements);
    CHECK(again.stats().at("replayed_verdicts") == 13);
}

TEST_CASE("a torn final log line is ignored") {
    Dataset d;
    std::map<std::string, SampleStatus> statuses;
    {
        CurationStore store(d.out);
        const auto ids = ids_of(store.next_candidates(std::nullopt, 0, 100));
        store.apply_verdict(verdict(ids[0], Decision::reject));
        store.apply_verdict(verdict(ids[1], Decision::accept));
        statuses = store.statuses();
    }
    {
        std::ofstream log(d.out / kVerdictLog, std::ios::app);
        log << R"({"sample_id": "x", "deci)";
    }
    CurationStore again(d.out);
    CHECK(again.statuses() == statuses);
}

TEST_CASE("stats, groups, overlay and export") {
    Dataset d;
    CurationStore store(d.out);
    const auto ids = ids_of(store.next_candidates(std::nullopt, 0, 100));
    store.apply_verdict(verdict(ids[0], Decision::accept));
    store.apply_verdict(verdict(ids[1], Decision::accept));
    store.apply_verdict(verdict(ids[2], Decision::reject));

    const auto stats = store.stats();
    CHECK(stats.at("accepted") == 2);
    CHECK(stats.at("rejected") == 1);
    CHECK(stats.at("pending") == 38);
    CHECK(stats.at("supplements") == 40);
    CHECK(stats.at("rejection_rate").get<double>() == doctest::Approx(1.0 / 3));
    CHECK(stats.at("run").at("emitted") == 80);

    std::size_t pending = 0, accepted = 0;
    for (const auto& g : store.groups()) {
        pending += g.at("pending").get<std::size_t>();
        accepted += g.at("accepted").get<std::size_t>();
    }
    CHECK(pending == 38);
    CHECK(accepted == 2);

    const auto img = store.image(ids[0]);
    const auto over = store.overlay(ids[0]);
    CHECK(over.size() == img.size());
    CHECK_FALSE(over == img);
    CHECK(store.mask(ids[0]).size() == img.size());
    CHECK_THROWS_AS(store.image("nope"), NotFoundError);

    const auto report = store.export_to(d.dir / "final");
    CHECK(report.written == 2 + 40);
    CHECK(report.per_origin.at("synthesized") == 2);
    CHECK(report.per_origin.at("supplement") == 40);
    const auto m = load_manifest(d.dir / "final" / "metadata.jsonl");
    CHECK(m.size() == 42);
}

TEST_CASE("HTTP API") {
    Dataset d;
    CurationStore store(d.out);
    ServerOptions opts;
    opts.port = 0;
    CurationServer server(store, opts);
    const int port = server.bind();
    std::thread t([&] { server.listen(); });
    httplib::Client cli("127.0.0.1", port);

    for (int i = 0; i < 100; ++i) {
        if (cli.Get("/api/stats"))
            break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }

    auto groups = cli.Get("/api/groups");
    REQUIRE(groups);
    CHECK(groups->status == 200);
    CHECK(json::parse(groups->body).size() == 5);

    auto cands = cli.Get("/api/candidates?page=0&page_size=3");
    REQUIRE(cands);
    const auto page = json::parse(cands->body);
    REQUIRE(page.size() == 3);
    const std::string id = page[0].at("id");

    CHECK(cli.Get("/api/candidates?group=walrus")->status == 404);
    CHECK(cli.Get("/api/candidates?page=-1")->status == 400);

    for (const char* kind : {"image", "mask", "overlay"}) {
        auto png = cli.Get("/api/sample/" + id + "/" + kind);
        REQUIRE(png);
        CHECK(png->status == 200);
        CHECK(png->get_header_value("Content-Type") == "image/png");
        const std::vector<std::uint8_t> bytes(png->body.begin(), png->body.end());
        CHECK(decode_rgb(bytes).size() == Size{64, 64});
    }
    CHECK(cli.Get("/api/sample/nope/image")->status == 404);

    auto res = cli.Post("/api/verdict", json{{"sample_id", id}, {"decision", "reject"}, {"reason", "ugly"}}.dump(),
                        "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = json::parse(res->body);
    CHECK(body.at("status") == "rejected");
    CHECK(body.contains("replacement_id"));

    res = cli.Post("/api/verdict", json{{"sample_id", page[1].at("id")}, {"decision", "accept"}}.dump(),
                   "application/json");
    CHECK(json::parse(res->body).at("status") == "accepted");
    CHECK_FALSE(json::parse(res->body).contains("replacement_id"));

    CHECK(cli.Post("/api/verdict", R"({"sample_id": "nope", "decision": "accept"})", "application/json")->status == 404);
    CHECK(cli.Post("/api/verdict", json{{"sample_id", id}, {"decision", "maybe"}}.dump(), "application/json")->status ==
          400);
    CHECK(cli.Post("/api/verdict", "{", "application/json")->status == 400);

    const auto stats = json::parse(cli.Get("/api/stats")->body);
    CHECK(stats.at("rejection_rate").get<double>() == doctest::Approx(0.5));

    server.stop();
    t.join();
}
