#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gcp/analytics.hpp"
#include "gcp/classifier.hpp"
#include "gcp/corpus.hpp"
#include "gcp/curation.hpp"
#include "gcp/cutter.hpp"
#include "gcp/error.hpp"
#include "gcp/grouping.hpp"
#include "gcp/imaging.hpp"
#include "gcp/metrics.hpp"
#include "gcp/parallel.hpp"
#include "gcp/pipeline.hpp"
#include "gcp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SynthArgs {
    fs::path manifest;
    fs::path out;
    gcp::SynthesisConfig cfg;
    std::size_t min_group_size = gcp::kDefaultMinGroupSize;
    gcp::ValidationPolicy policy;
    bool overwrite = false;
};

struct EvalArgs {
    fs::path pred;
    fs::path gt;
    fs::path report;
    bool per_group = false;
};

struct ManifestArgs {
    fs::path manifest;
    fs::path out;
    int size = gcp::kPatternSize.width;
    std::size_t min_group_size = gcp::kDefaultMinGroupSize;
    gcp::ValidationPolicy policy;
    bool as_json = false;
};

struct CutArgs {
    fs::path image;
    fs::path mask;
    fs::path out;
    double border_tolerance = gcp::kDefaultBorderTolerance;
};

struct CurationArgs {
    fs::path dataset;
    fs::path out;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<fs::path> ui;
    std::string id;
    std::string decision;
    std::string reason;
    std::string label;
    std::string reviewer;
};

struct ClassifyArgs {
    fs::path manifest;
    fs::path out;
    std::string endpoint;
};

// Files that hold a map for `id`, keyed by the path relative to root minus
// extension. Dataset directories carry <id>.png, <id>_mask.png and
// <id>_edge.png side by side; when any *_mask.png exists only those count.
std::map<std::string, fs::path> collect_maps(const fs::path& root) {
    if (!fs::is_directory(root))
        throw gcp::ValidationError("not a directory: " + root.string());
    std::vector<fs::path> files;
    bool has_masks = false;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file())
            continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".png" && ext != ".jpg" && ext != ".jpeg")
            continue;
        const auto stem = entry.path().stem().string();
        if (stem.ends_with("_edge"))
            continue;
        has_masks = has_masks || stem.ends_with("_mask");
        files.push_back(entry.path());
    }
    std::map<std::string, fs::path> out;
    for (const auto& p : files) {
        std::string stem = p.stem().string();
        if (has_masks) {
            if (!stem.ends_with("_mask"))
                continue;
            stem.resize(stem.size() - 5);
        }
        const fs::path rel = fs::relative(p, root).parent_path() / stem;
        out.emplace(rel.generic_string(), p);
    }
    return out;
}

std::vector<std::string> keys_of(const std::map<std::string, fs::path>& m) {
    std::vector<std::string> out;
    for (const auto& [k, v] : m)
        out.push_back(k);
    return out;
}

int run_synth(const SynthArgs& a, int jobs) {
    gcp::PipelineOptions opts;
    opts.synthesis = a.cfg;
    opts.prepare.min_group_size = a.min_group_size;
    opts.prepare.validation = a.policy;
    opts.write.overwrite = a.overwrite;
    opts.jobs = jobs;
    fs::create_directories(a.out);
    const gcp::RunReport report = gcp::run_pipeline(a.manifest, a.out, opts);
    std::cout << report.to_json().dump(2) << '\n';
    return 0;
}

int run_eval(const EvalArgs& a, int jobs) {
    const auto pred = collect_maps(a.pred);
    const auto gt = collect_maps(a.gt);
    gcp::metrics::check_id_sets(keys_of(pred), keys_of(gt));
    if (gt.empty())
        throw gcp::ValidationError("no ground-truth maps under " + a.gt.string());

    std::vector<gcp::metrics::MapPair> pairs(gt.size());
    std::vector<std::pair<std::string, fs::path>> items(gt.begin(), gt.end());
    gcp::parallel_for(items.size(), jobs, [&](std::size_t i) {
        const auto& [id, gt_path] = items[i];
        auto& p = pairs[i];
        p.id = id;
        p.prediction = gcp::read_gray(pred.at(id));
        p.truth = gcp::BinaryMask::from_gray(gcp::read_gray(gt_path));
        if (p.prediction.size() != p.truth.size())
            throw gcp::ValidationError("prediction and ground truth of '" + id + "' differ in size");
        const auto parent = fs::path(id).parent_path();
        if (!parent.empty())
            p.group = parent.generic_string();
    });
    const auto report = gcp::metrics::evaluate_dataset(pairs, a.per_group, jobs);
    if (!a.report.parent_path().empty())
        fs::create_directories(a.report.parent_path());
    std::ofstream out(a.report, std::ios::trunc);
    out << report.to_jsonl();
    if (!out)
        throw gcp::IoError("cannot write " + a.report.string());
    const auto& g = report.aggregate;
    spdlog::info("{} images: mae={:.4f} f_max={:.4f} f_avg={:.4f} e_max={:.4f} e_avg={:.4f} s_alpha={:.4f}", g.count,
                 g.mae, g.f_max, g.f_avg, g.e_max, g.e_avg, g.s_alpha);
    return 0;
}

int run_stats(const ManifestArgs& a) {
    const auto manifest = gcp::load_manifest(a.manifest);
    const auto grouping = gcp::build_groups(manifest, a.min_group_size);
    const auto report = gcp::dataset_report(grouping.corpus, manifest);
    if (a.as_json)
        std::cout << report.to_json().dump(2) << '\n';
    else
        std::cout << gcp::format_stats_row(report.stats) << '\n';
    return 0;
}

int run_patterns(const ManifestArgs& a, int jobs) {
    const auto manifest = gcp::load_manifest(a.manifest);
    const auto grouping = gcp::build_groups(manifest, a.min_group_size);
    fs::create_directories(a.out);
    const auto& groups = grouping.corpus.groups;
    gcp::parallel_for(groups.size(), jobs, [&](std::size_t g) {
        std::vector<gcp::BinaryMask> masks;
        for (const auto& id : groups[g].member_ids)
            masks.push_back(gcp::BinaryMask::from_gray(gcp::read_gray(manifest.find(id)->mask_path)));
        const auto pattern = gcp::group_pattern(groups[g].label, masks, {a.size, a.size});
        gcp::write_png(a.out / (groups[g].label + ".png"), gcp::pattern_to_gray(pattern));
    });
    spdlog::info("wrote {} group patterns to {}", groups.size(), a.out.string());
    return 0;
}

int run_cut(const CutArgs& a) {
    gcp::ImageSample sample;
    sample.id = a.image.stem().string();
    sample.image = gcp::read_rgb(a.image);
    sample.mask = gcp::BinaryMask::from_gray(gcp::read_gray(a.mask));
    if (sample.image.size() != sample.mask.size())
        throw gcp::ValidationError("image and mask differ in size");
    const gcp::CutResult r = gcp::cut_largest(sample, a.border_tolerance);
    fs::create_directories(a.out);
    gcp::write_png(a.out / (sample.id + "_cutout.png"), r.cutout.pixels);
    gcp::write_png(a.out / (sample.id + "_alpha.png"), r.cutout.alpha.to_gray());
    const auto& rect = r.cutout.rect;
    json corners = json::array();
    for (const auto& c : rect.corners())
        corners.push_back({c.x, c.y});
    const json record{{"id", sample.id},
                      {"contour_length", r.contour.points.size()},
                      {"components", r.component_count},
                      {"rect",
                       {{"center", {rect.center.x, rect.center.y}},
                        {"width", rect.width},
                        {"height", rect.height},
                        {"angle", rect.angle},
                        {"corners", corners}}},
                      {"origin", {r.cutout.origin.x, r.cutout.origin.y}},
                      {"size", {r.cutout.pixels.width(), r.cutout.pixels.height()}},
                      {"complete", r.cutout.complete},
                      {"clamped", r.cutout.clamped}};
    std::ofstream out(a.out / (sample.id + "_cutout.json"), std::ios::trunc);
    out << record.dump(2) << '\n';
    if (!out)
        throw gcp::IoError("cannot write cutout record");
    std::cout << record.dump() << '\n';
    return 0;
}

int run_validate(const ManifestArgs& a) {
    const auto manifest = gcp::load_manifest(a.manifest);
    std::size_t bad = 0;
    for (const auto& rec : manifest.records) {
        const auto violations = gcp::validate_sample(gcp::load_sample(rec), a.policy);
        if (violations.empty())
            continue;
        ++bad;
        json names = json::array();
        for (auto v : violations)
            names.push_back(gcp::to_string(v));
        std::cout << json{{"id", rec.id}, {"violations", names}}.dump() << '\n';
    }
    spdlog::info("{} of {} samples have violations", bad, manifest.size());
    return 0;
}

gcp::CurationServer* g_server = nullptr;

void on_signal(int) {
    if (g_server)
        g_server->stop();
}

int run_serve(const CurationArgs& a, int jobs) {
    gcp::CurationStore store(a.dataset, jobs);
    gcp::ServerOptions opts;
    opts.host = a.host;
    opts.port = a.port;
    opts.ui_dir = a.ui;
    gcp::CurationServer server(store, opts);
    const int port = server.bind();
    // Scripts read the chosen port from here when --port 0 is given.
    std::cout << "listening on " << a.host << ':' << port << std::endl;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    g_server = nullptr;
    return 0;
}

int run_verdict(const CurationArgs& a, int jobs) {
    gcp::CurationStore store(a.dataset, jobs);
    gcp::Verdict v;
    v.sample_id = a.id;
    v.decision = gcp::decision_from_string(a.decision);
    v.reason = a.reason;
    v.label = a.label;
    v.reviewer = a.reviewer;
    const auto out = store.apply_verdict(v);
    json reply{{"id", a.id}, {"status", gcp::to_string(out.status)}, {"changed", out.changed}};
    if (out.replacement_id)
        reply["replacement_id"] = *out.replacement_id;
    std::cout << reply.dump() << '\n';
    return 0;
}

int run_export(const CurationArgs& a, int jobs) {
    const gcp::CurationStore store(a.dataset, jobs);
    const auto report = store.export_to(a.out);
    std::cout << json{{"written", report.written}, {"per_group", report.per_group}, {"per_origin", report.per_origin}}
                     .dump(2)
              << '\n';
    return 0;
}

int run_classify(const ClassifyArgs& a, int jobs) {
    const auto labelled = gcp::classify_manifest(gcp::load_manifest(a.manifest), a.endpoint, jobs);
    gcp::save_manifest(labelled, a.out);
    spdlog::info("labelled {} records into {}", labelled.size(), a.out.string());
    return 0;
}

void add_policy(CLI::App* cmd, gcp::ValidationPolicy& p) {
    cmd->add_option("--min-fg", p.min_foreground, "Minimum mask foreground fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--max-fg", p.max_foreground, "Maximum mask foreground fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

void add_min_group(CLI::App* cmd, std::size_t& n) {
    cmd->add_option("--min-group-size", n, "Drop groups with fewer members")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("gcp"));
    spdlog::set_pattern("%^%l%$: %v");

    CLI::App app{"Group-cut-paste co-saliency dataset toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with flag values; flags given on the command line win");
    app.set_version_flag("--version", std::string("gcp ") + gcp::kToolkitVersion + " (format " +
                                          std::to_string(gcp::kFormatVersion) + ")");
    int jobs = gcp::default_jobs();
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Synthesize a counterfactual dataset from a manifest");
    s->add_option("--manifest", synth.manifest, "Source manifest (JSONL)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--seed", synth.cfg.seed, "Run seed")->capture_default_str();
    s->add_option("--samples-per-canvas", synth.cfg.samples_per_canvas)->capture_default_str();
    s->add_option("--supplement", synth.cfg.supplement_factor, "Unaugmented copies per source")->capture_default_str();
    s->add_option("--ratio-min", synth.cfg.ratio_min)->capture_default_str();
    s->add_option("--ratio-max", synth.cfg.ratio_max)->capture_default_str();
    s->add_option("--flip-prob", synth.cfg.flip_probability)->capture_default_str();
    s->add_option("--occlusion-max", synth.cfg.occlusion_max)->capture_default_str();
    s->add_option("--max-attempts", synth.cfg.max_attempts)->capture_default_str();
    s->add_option("--border-tolerance", synth.cfg.border_tolerance)->capture_default_str();
    s->add_option("--edge-thickness", synth.cfg.edge_thickness)->capture_default_str();
    s->add_option("--shrink-factor", synth.cfg.shrink_factor)->capture_default_str();
    s->add_flag("--overwrite", synth.overwrite, "Replace an existing dataset in --out");
    add_min_group(s, synth.min_group_size);
    add_policy(s, synth.policy);
    s->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "Score prediction maps against ground truth");
    e->add_option("--pred", eval.pred, "Prediction directory")->required();
    e->add_option("--gt", eval.gt, "Ground-truth directory")->required();
    e->add_option("--report", eval.report, "Report file (JSONL)")->required();
    e->add_flag("--per-group", eval.per_group, "Add per-group aggregates (group = parent directory)");
    e->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    ManifestArgs stats;
    auto* st = app.add_subcommand("stats", "Print 'images groups avg max min' for a manifest");
    st->add_option("--manifest", stats.manifest)->required()->check(CLI::ExistingFile);
    st->add_flag("--json", stats.as_json, "Full report as JSON");
    add_min_group(st, stats.min_group_size);

    ManifestArgs patterns;
    auto* pt = app.add_subcommand("patterns", "Write one averaged-mask image per group");
    pt->add_option("--manifest", patterns.manifest)->required()->check(CLI::ExistingFile);
    pt->add_option("--out", patterns.out)->required();
    pt->add_option("--size", patterns.size, "Pattern side length")->check(CLI::PositiveNumber)->capture_default_str();
    add_min_group(pt, patterns.min_group_size);
    pt->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    CutArgs cut;
    auto* c = app.add_subcommand("cut", "Cut the largest object out of one image");
    c->add_option("--image", cut.image)->required()->check(CLI::ExistingFile);
    c->add_option("--mask", cut.mask)->required()->check(CLI::ExistingFile);
    c->add_option("--out", cut.out)->required();
    c->add_option("--border-tolerance", cut.border_tolerance)->check(CLI::Range(0.0, 1.0))->capture_default_str();

    ManifestArgs validate;
    auto* v = app.add_subcommand("validate", "List samples that violate the corpus checks");
    v->add_option("--manifest", validate.manifest)->required()->check(CLI::ExistingFile);
    add_policy(v, validate.policy);

    CurationArgs cur;
    auto* sv = app.add_subcommand("serve", "Serve the curation API for a dataset");
    sv->add_option("--dataset", cur.dataset)->required()->check(CLI::ExistingDirectory);
    sv->add_option("--port", cur.port, "0 picks a free port")->check(CLI::Range(0, 65535))->capture_default_str();
    sv->add_option("--host", cur.host)->capture_default_str();
    sv->add_option("--ui", cur.ui, "Static UI directory mounted at /ui/")->check(CLI::ExistingDirectory);

    auto* vd = app.add_subcommand("verdict", "Record one curation verdict without the server");
    vd->add_option("--dataset", cur.dataset)->required()->check(CLI::ExistingDirectory);
    vd->add_option("--id", cur.id)->required();
    vd->add_option("--decision", cur.decision)
        ->required()
        ->check(CLI::IsMember({"accept", "reject", "relabel"}));
    vd->add_option("--reason", cur.reason);
    vd->add_option("--label", cur.label, "New label for relabel");
    vd->add_option("--reviewer", cur.reviewer);

    auto* ex = app.add_subcommand("export", "Copy accepted and supplement samples into a final dataset");
    ex->add_option("--dataset", cur.dataset)->required()->check(CLI::ExistingDirectory);
    ex->add_option("--out", cur.out)->required();

    ClassifyArgs cls;
    auto* cl = app.add_subcommand("classify", "Relabel a manifest through an external classifier");
    cl->add_option("--manifest", cls.manifest)->required()->check(CLI::ExistingFile);
    cl->add_option("--endpoint", cls.endpoint, "Classifier base URL")->required();
    cl->add_option("--out", cls.out, "Labelled manifest to write")->required();
    cl->add_option("--jobs", jobs, "Requests in flight")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }
    if (verbose)
        spdlog::set_level(spdlog::level::debug);

    try {
        if (*s) {
            synth.cfg.validate();
            return run_synth(synth, jobs);
        }
        if (*e)
            return run_eval(eval, jobs);
        if (*st)
            return run_stats(stats);
        if (*pt)
            return run_patterns(patterns, jobs);
        if (*c)
            return run_cut(cut);
        if (*v)
            return run_validate(validate);
        if (*sv)
            return run_serve(cur, jobs);
        if (*vd)
            return run_verdict(cur, jobs);
        if (*ex)
            return run_export(cur, jobs);
        if (*cl)
            return run_classify(cls, jobs);
    } catch (const gcp::ValidationError& err) {
        spdlog::error("{}", err.what());
        return 1;
    } catch (const std::exception& err) {
        spdlog::error("{}", err.what());
        return 2;
    }
    return 1;
}
