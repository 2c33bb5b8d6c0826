#include <doctest.h>

#include <fstream>
#include <random>

#include "gcp/corpus.hpp"
#include "gcp/error.hpp"
#include "gcp/imaging.hpp"
#include "support/fixtures.hpp"

using namespace gcp;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

// Five tiny samples a01..a05 on disk.
void seed_files(const fs::path& dir) {
    fs::create_directories(dir / "img");
    for (int i = 1; i <= 5; ++i) {
        const auto id = "a0" + std::to_string(i);
        write_png(dir / "img" / (id + ".png"), RgbImage(8, 8, 10));
        BinaryMask m(8, 8);
        m.set(3, 3);
        m.set(4, 4);
        write_png(dir / "img" / (id + "_m.png"), m.to_gray());
    }
}

std::string line(const std::string& id, const std::string& label = "cat") {
    return R"({"id": ")" + id + R"(", "image_path": "img/)" + id + R"(.png", "mask_path": "img/)" + id +
           R"(_m.png", "label": ")" + label + "\"}\n";
}

BinaryMask block(Size size, int x0, int y0, int w, int h) {
    BinaryMask m(size);
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x)
            m.set(x, y);
    return m;
}

} // namespace

TEST_CASE("load_manifest keeps file order and resolves paths") {
    fixtures::TempDir dir;
    seed_files(dir.path());
    write_text(dir / "m.jsonl", line("a03") + line("a01") + "\n" + line("a02", "dog"));
    const auto m = load_manifest(dir / "m.jsonl");
    REQUIRE(m.size() == 3);
    CHECK(m.records[0].id == "a03");
    CHECK(m.records[1].id == "a01");
    CHECK(m.records[2].label == "dog");
    CHECK(fs::exists(m.records[0].image_path));
    CHECK(m.find("a02") != nullptr);
    CHECK(m.find("zz") == nullptr);
}

TEST_CASE("load_manifest rejects a duplicate id and names it") {
    fixtures::TempDir dir;
    seed_files(dir.path());
    write_text(dir / "m.jsonl", line("a03") + line("a01") + line("a02") + line("a04") + line("a01"));
    try {
        load_manifest(dir / "m.jsonl");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("a01") != std::string::npos);
    }
}

TEST_CASE("load_manifest reports the malformed line number") {
    fixtures::TempDir dir;
    seed_files(dir.path());
    write_text(dir / "m.jsonl", line("a01") + "{not json\n");
    try {
        load_manifest(dir / "m.jsonl");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("load_manifest on an empty file is empty and valid") {
    fixtures::TempDir dir;
    write_text(dir / "m.jsonl", "");
    CHECK(load_manifest(dir / "m.jsonl").size() == 0);
}

TEST_CASE("load_manifest errors on a missing file") {
    CHECK_THROWS(load_manifest("/nonexistent/manifest.jsonl"));
}

TEST_CASE("save_manifest round-trips") {
    fixtures::TempDir dir;
    seed_files(dir.path());
    write_text(dir / "m.jsonl", line("a01") + line("a02", "dog"));
    auto m = load_manifest(dir / "m.jsonl");
    m.records[1].confidence = 0.75;
    save_manifest(m, dir / "copy.jsonl");
    const auto back = load_manifest(dir / "copy.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back.records[1].label == "dog");
    CHECK(back.records[1].confidence == doctest::Approx(0.75));
    CHECK(fs::equivalent(back.records[0].image_path, m.records[0].image_path));
}

TEST_CASE("validate_sample") {
    ImageSample s;
    s.label = "x";
    s.image = RgbImage(64, 64);

    SUBCASE("10% foreground passes") {
        s.mask = block({64, 64}, 0, 0, 64, 6); // 384 px
        s.mask.set(0, 10);
        s.mask.set(1, 10);
        s.mask.set(2, 10);
        s.mask.set(3, 10);
        s.mask.set(4, 10);
        s.mask.set(5, 10);
        s.mask.set(6, 10);
        s.mask.set(7, 10);
        s.mask.set(8, 10);
        s.mask.set(9, 10);
        CHECK(s.mask.fraction() == doctest::Approx(0.0962).epsilon(0.01));
        CHECK(validate_sample(s).empty());
    }
    SUBCASE("dimension mismatch") {
        s.mask = block({32, 32}, 0, 0, 10, 10);
        CHECK(validate_sample(s) == std::vector{Violation::dimension_mismatch});
    }
    SUBCASE("empty mask") {
        s.mask = BinaryMask(64, 64);
        CHECK(validate_sample(s) == std::vector{Violation::empty_mask});
    }
    SUBCASE("fraction band") {
        s.mask = block({64, 64}, 0, 0, 1, 1);
        CHECK(validate_sample(s) == std::vector{Violation::foreground_too_small});
        s.mask = BinaryMask(64, 64, true);
        CHECK(validate_sample(s) == std::vector{Violation::foreground_too_large});
    }
    SUBCASE("empty label") {
        s.mask = block({64, 64}, 0, 0, 20, 20);
        s.label.clear();
        CHECK(validate_sample(s) == std::vector{Violation::empty_label});
    }
    SUBCASE("pure") {
        s.mask = block({64, 64}, 0, 0, 1, 1);
        CHECK(validate_sample(s) == validate_sample(s));
    }
}

TEST_CASE("mask_to_edge examples") {
    SUBCASE("3x3 block in 5x5: the 8 perimeter pixels") {
        const auto edge = mask_to_edge(block({5, 5}, 1, 1, 3, 3));
        CHECK(edge.count() == 8);
        CHECK_FALSE(edge.at(2, 2));
        for (int y = 1; y <= 3; ++y)
            for (int x = 1; x <= 3; ++x)
                CHECK(edge.at(x, y) == !(x == 2 && y == 2));
    }
    SUBCASE("full 4x4: the 12-pixel ring") {
        const auto edge = mask_to_edge(BinaryMask(4, 4, true));
        CHECK(edge.count() == 12);
        CHECK_FALSE(edge.at(1, 1));
        CHECK_FALSE(edge.at(2, 2));
    }
    SUBCASE("single pixel") {
        const auto m = block({5, 5}, 2, 2, 1, 1);
        CHECK(mask_to_edge(m) == m);
    }
    SUBCASE("empty mask is an error") {
        CHECK_THROWS_AS(mask_to_edge(BinaryMask(3, 3)), ValidationError);
    }
    SUBCASE("thickness grows the band") {
        const auto m = block({9, 9}, 1, 1, 7, 7);
        CHECK(mask_to_edge(m, 2).count() > mask_to_edge(m, 1).count());
        // 7x7 block: two inner rings, 24 + 16 pixels.
        CHECK(mask_to_edge(m, 2).count() == 40);
        CHECK(and_not(mask_to_edge(m, 3), m).count() == 0);
        CHECK_THROWS(mask_to_edge(m, 0));
    }
}

TEST_CASE("edge is a non-empty subset of the mask") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 gen(seed);
        BinaryMask m(12, 9);
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 12; ++x)
                m.set(x, y, gen() % 3 == 0);
        if (!m.any())
            continue;
        const auto e = mask_to_edge(m);
        CHECK(e.any());
        CHECK(and_not(e, m).count() == 0);
        // Every edge pixel has a background 8-neighbour (or touches the frame).
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 12; ++x) {
                if (!m.at(x, y))
                    continue;
                bool bg = false;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        bg = bg || !m.at_or_background(x + dx, y + dy);
                CHECK(e.at(x, y) == bg);
            }
    }
}

namespace {

ImageSample tiny(const std::string& id, const std::string& label) {
    ImageSample s;
    s.id = id;
    s.label = label;
    s.image = fixtures::textured_image({6, 6}, id.size(), 1, 2, 3);
    s.mask = block({6, 6}, 1, 1, 2, 2);
    return s;
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream f(p);
    std::size_t n = 0;
    std::string l;
    while (std::getline(f, l))
        n += !l.empty();
    return n;
}

} // namespace

TEST_CASE("write_dataset: 4 samples in 2 groups") {
    fixtures::TempDir dir;
    const std::vector<ImageSample> plain{tiny("a1", "cat"), tiny("a2", "cat"), tiny("b1", "dog"), tiny("b2", "dog")};
    const auto report = write_dataset({}, plain, dir.path(), {}, 42);
    CHECK(report.written == 4);
    CHECK(report.per_group.at("cat") == 2);
    CHECK(report.per_group.at("dog") == 2);
    CHECK(report.per_origin.at("source") == 4);
    std::size_t pngs = 0, dirs = 0;
    for (const auto& e : fs::directory_iterator(dir.path()))
        dirs += e.is_directory();
    for (const auto& e : fs::recursive_directory_iterator(dir.path()))
        pngs += e.path().extension() == ".png";
    CHECK(dirs == 2);
    CHECK(pngs == 12);
    CHECK(count_lines(dir / "metadata.jsonl") == 4);
    CHECK(read_gray(dir.path() / "cat" / "a1_mask.png") == plain[0].mask.to_gray());
    CHECK(fs::exists(dir.path() / "dog" / "b2_edge.png"));
}

TEST_CASE("write_dataset: zero samples") {
    fixtures::TempDir dir;
    const auto report = write_dataset({}, {}, dir.path());
    CHECK(report.written == 0);
    CHECK(report.per_group.empty());
    CHECK(fs::exists(dir / "metadata.jsonl"));
    CHECK(count_lines(dir / "metadata.jsonl") == 0);
}

TEST_CASE("write_dataset refuses to overwrite unless asked") {
    fixtures::TempDir dir;
    const std::vector<ImageSample> plain{tiny("a1", "cat")};
    write_dataset({}, plain, dir.path());
    CHECK_THROWS_AS(write_dataset({}, plain, dir.path()), ValidationError);
    WriteOptions opt;
    opt.overwrite = true;
    CHECK(write_dataset({}, plain, dir.path(), opt).written == 1);
}

TEST_CASE("written metadata reloads as a manifest with the same ids, labels and groups") {
    fixtures::TempDir dir;
    std::vector<ImageSample> plain{tiny("a1", "cat"), tiny("b1", "dog"), tiny("c1", "cat")};
    plain[2].group_id = "felines";
    write_dataset({}, plain, dir.path(), {}, 9);
    const auto m = load_manifest(dir / "metadata.jsonl");
    REQUIRE(m.size() == 3);
    std::ifstream meta(dir / "metadata.jsonl");
    std::string text;
    for (std::size_t i = 0; i < 3; ++i) {
        std::getline(meta, text);
        const auto j = nlohmann::json::parse(text);
        CHECK(m.records[i].id == plain[i].id);
        CHECK(m.records[i].label == plain[i].label);
        CHECK(j.at("group") == plain[i].group());
        CHECK(j.at("seed") == 9);
        CHECK(load_sample(m.records[i]).mask == plain[i].mask);
    }
}
