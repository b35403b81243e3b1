#pragma once

// Command-line front end. Exit codes: 0 success, 1 runtime failure,
// 2 usage error. Each subcommand accepts --config FILE holding
// `flag-name = value` lines (TOML/INI syntax, lists as [a, b]). Precedence:
// command-line flags, then the config file, then LFORGE_THREADS for
// --threads, then built-in defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lforge/eval/report.hpp"
#include "lforge/model/gradcheck.hpp"
#include "lforge/motion/magnify.hpp"
#include "lforge/motion/xt_slice.hpp"
#include "lforge/trainer/trainer.hpp"
#include "lforge/video/rvid.hpp"
#include "lforge/video/synth.hpp"

namespace lforge::cli {

namespace fs = std::filesystem;

inline constexpr double kGradTolerance = 1e-4;

struct MagnifyFlags {
    MagnificationConfig cfg{};
    std::string filter = std::string(to_string(MagnificationConfig{}.bandpass.kind));

    void add(CLI::App* app) {
        app->add_option("--alpha", cfg.alpha, "Magnification factor");
        app->add_option("--low", cfg.bandpass.f_low, "Passband low edge (Hz)");
        app->add_option("--high", cfg.bandpass.f_high, "Passband high edge (Hz)");
        app->add_option("--filter", filter, "Temporal filter: ideal or iir")
            ->check(CLI::IsMember({"ideal", "iir"}));
        app->add_option("--levels", cfg.levels, "Laplacian pyramid levels");
        app->add_option("--attenuation", cfg.level_attenuation,
                        "Per-level alpha multipliers, finest level first; later levels use 1")
            ->delimiter(',');
    }

    MagnificationConfig resolve() const {
        MagnificationConfig c = cfg;
        c.bandpass.kind = parse_filter_kind(filter);
        return c;
    }
};

struct TrainFlags {
    TrainConfig cfg{};
    MagnifyFlags magnify{};
    std::string blocks = blocks_string(ModelConfig{}.blocks);
    std::string attention = std::string(to_string(ModelConfig{}.attention));

    void add(CLI::App* app) {
        app->add_option("--seed", cfg.seed, "Training seed (initialization and shuffling)");
        app->add_option("--epochs", cfg.epochs, "Training epochs");
        app->add_option("--batch-size", cfg.batch_size, "Clips per optimizer step");
        app->add_option("--lambda", cfg.lambda, "Weight of the clip loss against the per-frame loss");
        app->add_option("--lr", cfg.adam.lr, "Adam learning rate");
        app->add_option("--beta1", cfg.adam.beta1, "Adam first-moment decay");
        app->add_option("--beta2", cfg.adam.beta2, "Adam second-moment decay");
        app->add_option("--epsilon", cfg.adam.epsilon, "Adam epsilon");
        app->add_option("--magnify", cfg.magnify, "Magnify clips before sampling frames (true or false)")
            ->default_str(cfg.magnify ? "true" : "false");
        magnify.add(app);
        app->add_option("--crop-ratio", cfg.crop_ratio, "Face box growth per side, as a fraction of its size");
        app->add_option("--height", cfg.model.height, "Model input height");
        app->add_option("--width", cfg.model.width, "Model input width");
        app->add_option("--channels", cfg.model.channels, "Model input channels");
        app->add_option("--frames", cfg.model.frames, "Frames sampled per clip");
        app->add_option("--blocks", blocks, "Backbone blocks as widths (8,16,32) or convs x width (2x8,1x16)");
        app->add_option("--hidden", cfg.model.hidden, "LSTM hidden size");
        app->add_option("--batch-norm", cfg.model.batch_norm, "Normalize backbone features (true or false)")
            ->default_str(cfg.model.batch_norm ? "true" : "false");
        app->add_option("--attention", attention, "Attention scoring: shared or per_step")
            ->check(CLI::IsMember({"shared", "per_step"}));
        app->add_option("--threads", cfg.threads, "Worker threads (results do not depend on it)")
            ->envname("LFORGE_THREADS")
            ->check(CLI::PositiveNumber);
    }

    TrainConfig resolve() const {
        TrainConfig c = cfg;
        c.magnification = magnify.resolve();
        c.model.blocks = parse_blocks(blocks);
        c.model.attention = parse_attention_kind(attention);
        c.validate();
        return c;
    }
};

struct EvalFlags {
    std::string checkpoint;
    std::string report;
    std::string format = "structured";
    std::string table;

    void add(CLI::App* app) {
        app->add_option("--checkpoint", checkpoint, "Evaluate this checkpoint instead of training");
        app->add_option("--report", report, "Report output path")->required();
        app->add_option("--format", format, "Report format: rows or structured")
            ->check(CLI::IsMember({"rows", "structured"}));
        app->add_option("--table", table, "Also write the FAR/FRR sweep over the test scores here");
    }
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw RuntimeError("write failed for '" + path.string() + "'");
}

/// True when `--name` or `--name=...` appears among the raw arguments.
inline bool given(const std::vector<std::string>& args, const std::string& name) {
    const std::string flag = "--" + name;
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

/// Applies the subcommand's --config file to every option not set on the
/// command line. CLI11 only reads config files for the top-level app.
inline void apply_config(CLI::App* sub, const std::vector<std::string>& args) {
    CLI::Option* cfg_opt = sub->get_config_ptr();
    if (cfg_opt == nullptr || cfg_opt->count() == 0) return;
    const std::string path = cfg_opt->as<std::string>();
    if (!fs::is_regular_file(path)) throw RuntimeError("cannot open config file '" + path + "'");
    for (const CLI::ConfigItem& item : sub->get_config_formatter()->from_file(path)) {
        const std::string key = item.fullname();
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || opt == cfg_opt || opt == sub->get_help_ptr())
            throw CLI::ConfigError("unknown key '" + key + "' in config file '" + path + "'");
        if (given(args, key)) continue;
        opt->clear();
        if (opt->get_items_expected_max() == 1 && item.inputs.size() > 1) {
            // `blocks = 8,16,32` reads as a list; single-value flags take it verbatim.
            std::string joined;
            for (const auto& v : item.inputs) joined += (joined.empty() ? "" : ",") + v;
            opt->add_result(joined);
        } else {
            for (const auto& v : item.inputs) opt->add_result(v);
        }
        opt->run_callback();
    }
}

inline nlohmann::json run_echo(const TrainConfig& cfg, const std::string& command) {
    return {{"command", command}, {"train", to_json(cfg)}, {"threads", cfg.threads}};
}

inline std::optional<Model> load_model(const std::string& path, const TrainConfig& cfg) {
    if (path.empty()) return std::nullopt;
    return load_checkpoint(path, &cfg.model).model;
}

inline int protocol_command(ProtocolKind kind, const CorpusManifest& a, const CorpusManifest& b,
                            const TrainConfig& cfg, const EvalFlags& flags, std::ostream& out) {
    auto model = load_model(flags.checkpoint, cfg);
    ProtocolScores scores;
    MetricReport r = run_protocol(kind, a, b, cfg, std::move(model),
                                  [&](const EpochLoss& e) {
                                      out << "epoch " << e.epoch << " loss " << e.combined << "\n";
                                  },
                                  &scores);
    if (!flags.checkpoint.empty()) r.protocol["checkpoint"] = fs::path(flags.checkpoint).filename().string();
    emit_report(r, flags.report, parse_report_format(flags.format));
    if (!flags.table.empty()) write_text(flags.table, format_far_frr_table(scores.test));
    out << to_string(kind) << ": tau " << r.tau << " far " << percent(r.far) << "% frr " << percent(r.frr)
        << "% hter " << percent(r.hter) << "% acc " << percent(r.acc) << "% eer(dev) " << percent(r.eer) << "%\n";
    return 0;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Face anti-spoofing pipeline: synthetic corpus, motion magnification, CNN-LSTM training and evaluation",
                 "lforge"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    auto with_config = [](CLI::App* sub) {
        sub->set_config("--config", "", "Read flags from a file of `flag-name = value` lines");
        return sub;
    };

    // synth
    SynthConfig synth;
    std::string synth_out;
    CLI::App* synth_cmd = with_config(app.add_subcommand("synth", "Write a synthetic genuine/attack corpus"));
    synth_cmd->add_option("--out", synth_out, "Corpus directory")->required();
    synth_cmd->add_option("--seed", synth.seed, "Corpus seed");
    synth_cmd->add_option("--texture-seed", synth.texture_seed, "Appearance seed; 0 derives it from --seed");
    synth_cmd->add_option("--clips", synth.clips, "Clip count (even)");
    synth_cmd->add_option("--height", synth.height, "Frame height");
    synth_cmd->add_option("--width", synth.width, "Frame width");
    synth_cmd->add_option("--frames", synth.frames, "Frames per clip");
    synth_cmd->add_option("--fps", synth.fps, "Frame rate");
    synth_cmd->add_option("--amplitude", synth.motion_amplitude, "Peak motion in pixels");
    synth_cmd->add_option("--frequency", synth.frequency, "Motion and blink frequency (Hz)");
    synth_cmd->add_option("--blink-depth", synth.blink_depth, "Eye contrast lost at the bottom of a blink");
    synth_cmd->add_option("--noise", synth.noise_sigma, "Per-pixel noise sigma");

    // magnify
    MagnifyFlags mag;
    std::string mag_in, mag_out, xt_out;
    std::optional<std::size_t> xt_row;
    CLI::App* mag_cmd = with_config(app.add_subcommand("magnify", "Magnify motion in one RVID1 clip"));
    mag_cmd->add_option("--in", mag_in, "Input clip")->required();
    mag_cmd->add_option("--out", mag_out, "Output clip")->required();
    mag.add(mag_cmd);
    mag_cmd->add_option("--xt-row", xt_row, "Also write the XT slice of this row of the output");
    mag_cmd->add_option("--xt-out", xt_out, "XT slice path (PGM); defaults to OUT.xt.pgm");

    // train
    TrainFlags train_flags;
    std::string train_corpus, train_out;
    CLI::App* train_cmd = with_config(app.add_subcommand("train", "Train on a corpus's train split"));
    train_cmd->add_option("--corpus", train_corpus, "Corpus directory or manifest")->required();
    train_cmd->add_option("--out", train_out, "Run directory for model.lfck, loss.tsv and config.json")->required();
    train_flags.add(train_cmd);

    // eval
    TrainFlags eval_train;
    EvalFlags eval_flags;
    std::string eval_corpus;
    CLI::App* eval_cmd =
        with_config(app.add_subcommand("eval", "Intra-test: threshold on dev, report on test of one corpus"));
    eval_cmd->add_option("--corpus", eval_corpus, "Corpus directory or manifest")->required();
    eval_flags.add(eval_cmd);
    eval_train.add(eval_cmd);

    // xtest
    TrainFlags x_train;
    EvalFlags x_flags;
    std::string x_train_corpus, x_eval_corpus;
    CLI::App* x_cmd = with_config(
        app.add_subcommand("xtest", "Inter-test: train and threshold on one corpus, report on another's test split"));
    x_cmd->add_option("--train-corpus", x_train_corpus, "Training corpus")->required();
    x_cmd->add_option("--eval-corpus", x_eval_corpus, "Test corpus")->required();
    x_flags.add(x_cmd);
    x_train.add(x_cmd);

    // gradcheck
    std::uint64_t gc_seed = 1;
    CLI::App* gc_cmd =
        with_config(app.add_subcommand("gradcheck", "Finite-difference check of the tiny model's gradients"));
    gc_cmd->add_option("--seed", gc_seed, "Initialization and input seed");

    CLI::App* active = &app;
    const std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    try {
        app.parse(argc, argv);
        for (CLI::App* sub : {synth_cmd, mag_cmd, train_cmd, eval_cmd, x_cmd, gc_cmd})
            if (sub->parsed()) active = sub;
        detail::apply_config(active, args);
    } catch (const RuntimeError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e, out, err);
        for (CLI::App* sub : {synth_cmd, mag_cmd, train_cmd, eval_cmd, x_cmd, gc_cmd})
            if (sub->parsed()) active = sub;
        err << "error: " << e.what() << "\n\n" << active->help();
        return 2;
    }

    try {
        // Resolve and validate every value before doing any work.
        std::function<int()> action;
        try {
            if (active == synth_cmd) {
                require(synth.clips >= 2 && synth.clips % 2 == 0, "--clips must be even and >= 2");
                action = [&] {
                    const CorpusManifest m = synth_corpus(synth, synth_out);
                    out << "wrote " << m.entries.size() << " clips to " << synth_out << "\n";
                    return 0;
                };
            } else if (active == mag_cmd) {
                const MagnificationConfig cfg = mag.resolve();
                cfg.validate();
                action = [&, cfg] {
                    const Clip clip = rvid::read_clip(mag_in);
                    const Clip magnified = magnify_clip(clip, cfg);
                    rvid::write_clip(magnified, mag_out);
                    nlohmann::json echo{{"command", "magnify"},
                                        {"input", fs::path(mag_in).filename().string()},
                                        {"fps", clip.fps},
                                        {"magnification", to_json(cfg)}};
                    if (xt_row) {
                        const std::string path = xt_out.empty() ? mag_out + ".xt.pgm" : xt_out;
                        write_pgm(xt_slice(magnified, *xt_row), path);
                        echo["xt_row"] = *xt_row;
                        out << "wrote XT slice " << path << "\n";
                    }
                    detail::write_text(mag_out + ".json", echo.dump(2) + "\n");
                    out << "wrote " << mag_out << "\n";
                    return 0;
                };
            } else if (active == train_cmd) {
                const TrainConfig cfg = train_flags.resolve();
                action = [&, cfg] {
                    const CorpusManifest corpus = read_manifest(train_corpus);
                    fs::create_directories(train_out);
                    const TrainResult r = train(corpus, cfg, [&](const EpochLoss& e) {
                        out << "epoch " << e.epoch << " loss " << e.combined << " (cnn " << e.cnn << ", lstm "
                            << e.lstm << ")\n";
                    });
                    nlohmann::json meta = checkpoint_meta(cfg, r.log);
                    meta["corpus"] = corpus_descriptor(corpus);
                    save_checkpoint(r.model, meta, fs::path(train_out) / "model.lfck");
                    detail::write_text(fs::path(train_out) / "loss.tsv", format_loss_log(r.log));
                    nlohmann::json echo = detail::run_echo(cfg, "train");
                    echo["corpus"] = corpus_descriptor(corpus);
                    detail::write_text(fs::path(train_out) / "config.json", echo.dump(2) + "\n");
                    out << "wrote " << (fs::path(train_out) / "model.lfck").string() << "\n";
                    return 0;
                };
            } else if (active == eval_cmd) {
                const TrainConfig cfg = eval_train.resolve();
                parse_report_format(eval_flags.format);
                action = [&, cfg] {
                    const CorpusManifest corpus = read_manifest(eval_corpus);
                    return detail::protocol_command(ProtocolKind::intra, corpus, corpus, cfg, eval_flags, out);
                };
            } else if (active == x_cmd) {
                const TrainConfig cfg = x_train.resolve();
                parse_report_format(x_flags.format);
                action = [&, cfg] {
                    const CorpusManifest a = read_manifest(x_train_corpus);
                    const CorpusManifest b = read_manifest(x_eval_corpus);
                    return detail::protocol_command(ProtocolKind::inter, a, b, cfg, x_flags, out);
                };
            } else if (active == gc_cmd) {
                action = [&] {
                    const TinyCheck c = tiny_model_gradcheck(gc_seed);
                    out << "parameters " << c.parameters << "\nchecked " << c.result.checked << "\nmax_rel_error "
                        << c.result.max_rel_error << " at " << c.result.worst_param << "[" << c.result.worst_index
                        << "]\n";
                    if (!c.result.finite) {
                        err << "error: " << c.result.message << "\n";
                        return 1;
                    }
                    if (!(c.result.max_rel_error < kGradTolerance)) {
                        err << "error: max relative error " << c.result.max_rel_error << " exceeds " << kGradTolerance
                            << "\n";
                        return 1;
                    }
                    return 0;
                };
            }
        } catch (const ContractError& e) {
            err << "error: " << e.what() << "\n\n" << active->help();
            return 2;
        }
        return action();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lforge::cli
