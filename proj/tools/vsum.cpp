// vsum: command-line front end for the summarization pipeline.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vsum/error.hpp"
#include "vsum/io.hpp"
#include "vsum/pipeline.hpp"
#include "vsum/synthetic.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kStage = 3, kRemote = 4 };

struct Globals {
    std::string config;
    std::string manifest;
    std::string video;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> budget;
    bool mock = false;
};

vsum::io::RunConfig make_config(const Globals& g) {
    auto cfg = g.config.empty() ? vsum::io::RunConfig{} : vsum::io::load_config(g.config);
    vsum::io::apply_environment(cfg);
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    if (g.budget) {
        if (!(*g.budget > 0.0 && *g.budget <= 1.0)) {
            throw vsum::ConfigError("--budget must be in (0,1]");
        }
        cfg.budget = *g.budget;
    }
    if (g.mock) {
        cfg.caption_backend = "mock";
        cfg.llm_backend = "mock";
    }
    return cfg;
}

vsum::pipeline::Runner make_runner(const Globals& g) {
    if (g.manifest.empty()) {
        throw vsum::ConfigError("--manifest is required");
    }
    auto cfg = make_config(g);
    return vsum::pipeline::Runner(std::move(cfg), vsum::io::load_manifest(g.manifest), g.out);
}

std::vector<std::string> targets(const Globals& g, const vsum::pipeline::Runner& r) {
    if (!g.video.empty()) {
        r.manifest().video(g.video);
        return {g.video};
    }
    return r.manifest().video_ids();
}

void print_f1(const nlohmann::json& summary) {
    if (summary.at("f1").is_null()) {
        std::printf("F1: n/a (no annotated evaluation videos)\n");
    } else {
        std::printf("F1 over %zu split(s): %.4f\n", summary.at("n_splits").get<std::size_t>(),
                    summary.at("f1").get<double>());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free video summarization"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--manifest", g.manifest, "Dataset manifest (JSON)");
    app.add_option("--video", g.video, "Restrict to one video id");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "Seed for sampling, mocks and clustering");
    app.add_option("--budget", g.budget, "Summary budget as a fraction of the video");
    app.add_flag("--mock", g.mock, "Force mock caption and LLM backends");

    const std::vector<std::pair<std::string, std::string>> stage_cmds = {
        {"segment", "pHash scene division"},
        {"refine", "merge short scenes by embedding similarity"},
        {"caption", "scene and global captions"},
        {"score", "rubric scene scoring"},
        {"frames", "normalize, smooth and weight frame scores"},
        {"select", "keyshot selection under the budget"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : stage_cmds) {
        subs[name] = app.add_subcommand(name, help);
    }
    subs["pseudolabel"] = app.add_subcommand("pseudolabel", "pick pseudo-label videos and exemplar scenes");
    subs["mine-reasons"] = app.add_subcommand("mine-reasons", "mine reasons and synthesize the rubric");
    subs["eval"] = app.add_subcommand("eval", "per-video F1 and the split average");
    subs["pipeline"] = app.add_subcommand("pipeline", "run every stage and write run records");
    subs["plot-data"] = app.add_subcommand("plot-data", "per-stage CSVs from run records");
    subs["verify"] = app.add_subcommand("verify", "re-check run records against their stage files");
    auto* synth = app.add_subcommand("synth", "write a small synthetic dataset under --out");
    for (auto& [name, sub] : subs) {
        sub->fallthrough();
    }
    synth->fallthrough();
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; usage errors share the config exit code
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    try {
        if (synth->parsed()) {
            const auto specs = vsum::synth::demo_specs(g.seed.value_or(0));
            vsum::synth::write_dataset(g.out, "tvsum", specs);
            std::printf("wrote %s/manifest.json (%zu videos)\n", g.out.c_str(), specs.size());
            return kOk;
        }
        auto runner = make_runner(g);
        for (const auto& [name, help] : stage_cmds) {
            if (subs[name]->parsed()) {
                for (const auto& id : targets(g, runner)) {
                    runner.run_stage(name, id);
                    std::printf("%s: %s done\n", id.c_str(), name.c_str());
                }
                return kOk;
            }
        }
        if (subs["pseudolabel"]->parsed()) {
            runner.pseudolabel();
            return kOk;
        }
        if (subs["mine-reasons"]->parsed()) {
            runner.mine_reasons();
            return kOk;
        }
        if (subs["eval"]->parsed()) {
            for (const auto& id : targets(g, runner)) {
                runner.run_stage("eval", id);
            }
            print_f1(runner.eval_summary());
            return kOk;
        }
        if (subs["pipeline"]->parsed()) {
            print_f1(runner.run_all(targets(g, runner)));
            return kOk;
        }
        if (subs["plot-data"]->parsed()) {
            for (const auto& id : targets(g, runner)) {
                const auto dir = runner.video_dir(id);
                const auto files = vsum::pipeline::emit_plot_data(dir, dir / "plots");
                std::printf("%s: %zu plot files\n", id.c_str(), files.size());
            }
            return kOk;
        }
        if (subs["verify"]->parsed()) {
            bool ok = true;
            for (const auto& id : targets(g, runner)) {
                const auto problems = vsum::pipeline::verify_record(runner.video_dir(id));
                for (const auto& p : problems) {
                    std::fprintf(stderr, "%s: %s\n", id.c_str(), p.c_str());
                }
                ok = ok && problems.empty();
            }
            return ok ? kOk : kStage;
        }
    } catch (const vsum::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const vsum::ManifestError& e) {
        std::fprintf(stderr, "manifest error: %s\n", e.what());
        return kConfig;
    } catch (const vsum::StageError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return e.remote() ? kRemote : kStage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kStage;
    }
    return kOk;
}
