#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "acceptance.hpp"
#include "relhoi/container.hpp"
#include "relhoi/error.hpp"
#include "relhoi/evaluation.hpp"
#include "relhoi/fixtures.hpp"
#include "relhoi/json_io.hpp"
#include "relhoi/pipeline.hpp"

namespace relhoi {

namespace {

namespace fs = std::filesystem;

struct InferArgs {
    std::vector<std::string> scenes;
    std::string bank, weights, config, out = "predictions.json";
    std::optional<double> alpha, beta, lambda;
    std::size_t threads = 1;
};

struct EvalArgs {
    std::string pred, gt, out;
    double iou = kDefaultIouThreshold;
};

struct FixtureArgs {
    std::uint64_t seed = 42;
    std::string out_dir, spec;
};

struct SelftestArgs {
    std::string golden, work_dir;
};

struct InspectArgs {
    std::string container;
};

int do_infer(const InferArgs& a, std::ostream& out) {
    const Engine engine = Engine::load(a.config, a.weights);
    const KnowledgeBank bank = load_bank(a.bank, engine.categories());
    FusionConfig fusion = engine.config().fusion;
    if (a.alpha) fusion.alpha = *a.alpha;
    if (a.beta) fusion.beta = *a.beta;
    if (a.lambda) fusion.lambda = *a.lambda;
    fusion.validate();

    std::vector<fs::path> paths(a.scenes.begin(), a.scenes.end());
    const auto preds = infer_scene_files(engine, paths, bank, fusion, a.threads);
    const PredictionMetadata meta{fusion, engine.config().focal, engine.weights_digest()};
    write_predictions(a.out, meta, preds);

    std::size_t rows = 0;
    for (const auto& p : preds) rows += p.interactions.size();
    out << "wrote " << a.out << ": " << preds.size() << " scene(s), " << rows << " scored pair(s)\n";
    return kExitOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
    const GroundTruthSet gt = load_ground_truth(a.gt);
    const auto preds = load_predictions(a.pred);
    const APReport report = evaluate(preds, gt, a.iou);
    if (!a.out.empty()) write_json_file(a.out, report.to_json(), "cli");
    out << std::fixed << std::setprecision(6) << "mAP " << report.mean_ap << " over " << report.classes.size()
        << " class(es); TP " << report.true_positives << ", FP " << report.false_positives << ", GT "
        << report.ground_truths << "\n";
    return kExitOk;
}

int do_fixtures(const FixtureArgs& a, std::ostream& out) {
    const FixtureSpec spec = a.spec.empty() ? FixtureSpec{} : load_fixture_spec(a.spec);
    const auto files = generate_fixtures(a.seed, spec, a.out_dir);
    out << "wrote " << files.size() << " file(s) to " << a.out_dir << " (seed " << a.seed << ")\n";
    return kExitOk;
}

int do_selftest(const SelftestArgs& a, std::ostream& out) {
    verify::SuiteOptions options;
    if (!a.golden.empty()) options.golden_predictions = fs::path(a.golden);
    options.work_dir = a.work_dir;
    const auto results = verify::run_acceptance(options);
    std::size_t failed = 0;
    for (const auto& r : results) {
        out << verify::format_result(r) << "\n";
        if (!r.passed) ++failed;
    }
    out << (failed == 0 ? "selftest passed" : "selftest FAILED") << " (" << results.size() - failed << "/"
        << results.size() << ")\n";
    return failed == 0 ? kExitOk : kExitIo;
}

int do_inspect(const InspectArgs& a, std::ostream& out) {
    const auto bytes = read_file_bytes(a.container);
    const ContainerListing listing = list_container(bytes);
    // Payload decoding also checks every value is finite.
    decode_container(bytes);
    out << a.container << ": container v" << listing.version << ", " << listing.entries.size() << " tensor(s), "
        << listing.total_bytes << " bytes, fnv1a " << fnv1a_hex(bytes) << "\n";
    for (const auto& e : listing.entries) {
        out << "  " << e.name << " " << dims_to_string(e.dims) << " @" << e.payload_offset << " (" << e.payload_bytes
            << " bytes)\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Relation-token HOI scoring engine: inference, evaluation, fixtures and self-test.", "relhoi"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kEngineVersion);

    InferArgs infer;
    auto* infer_cmd = app.add_subcommand("infer", "Score every human-object pair of one or more scenes.");
    infer_cmd->add_option("--scene", infer.scenes, "Scene file; repeat for several scenes")->required();
    infer_cmd->add_option("--bank", infer.bank, "Knowledge-bank file of (object, tool) pairs")->required();
    infer_cmd->add_option("--weights", infer.weights, "Weight container")->required();
    infer_cmd->add_option("--config", infer.config, "Engine config file")->required();
    infer_cmd->add_option("--alpha", infer.alpha, "Ternary stream weight (default: config, 1.0)");
    infer_cmd->add_option("--beta", infer.beta, "Contextual prompt stream weight (default: config, 0.4)");
    infer_cmd->add_option("--lambda", infer.lambda, "Detection-confidence exponent (default: config, 2.8)");
    infer_cmd->add_option("--out", infer.out, "Prediction file to write")->capture_default_str();
    infer_cmd->add_option("--threads", infer.threads, "Scenes processed in parallel")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Match predictions to ground truth and report mAP.");
    eval_cmd->add_option("--pred", eval.pred, "Prediction file")->required();
    eval_cmd->add_option("--gt", eval.gt, "Ground-truth file")->required();
    eval_cmd->add_option("--iou", eval.iou, "Both boxes must exceed this IoU")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--out", eval.out, "Optional file for the full per-class report");

    FixtureArgs fixtures;
    auto* fix_cmd = app.add_subcommand("gen-fixtures", "Write a deterministic synthetic fixture tree.");
    fix_cmd->add_option("--seed", fixtures.seed, "64-bit seed")->capture_default_str();
    fix_cmd->add_option("--out-dir", fixtures.out_dir, "Output directory")->required();
    fix_cmd->add_option("--spec", fixtures.spec, "Fixture spec file (default: built-in spec)");

    SelftestArgs selftest;
    auto* self_cmd = app.add_subcommand("selftest", "Run the built-in acceptance checks.");
    self_cmd->add_option("--golden", selftest.golden, "Golden prediction file for the seed-42 fixture (optional)");
    self_cmd->add_option("--work-dir", selftest.work_dir, "Scratch directory (default: a fresh temp directory)");

    InspectArgs inspect;
    auto* inspect_cmd = app.add_subcommand("inspect", "Validate a tensor container and list its tensors.");
    inspect_cmd->add_option("--container", inspect.container, "Container file")->required();

    for (auto* cmd : {infer_cmd, eval_cmd, fix_cmd, self_cmd, inspect_cmd}) cmd->allow_extras(false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto chosen = app.get_subcommands();
        out << (chosen.empty() ? app.help() : chosen.front()->help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kEngineVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        err << "run with --help for usage\n";
        return kExitInvalid;
    }

    try {
        if (*infer_cmd) return do_infer(infer, out);
        if (*eval_cmd) return do_eval(eval, out);
        if (*fix_cmd) return do_fixtures(fixtures, out);
        if (*self_cmd) return do_selftest(selftest, out);
        if (*inspect_cmd) return do_inspect(inspect, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Io ? kExitIo : kExitInvalid;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace relhoi
