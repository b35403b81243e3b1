#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lforge/eval/metrics.hpp"
#include "lforge/model/checkpoint.hpp"
#include "lforge/model/model.hpp"
#include "lforge/motion/magnify.hpp"
#include "lforge/parallel.hpp"
#include "lforge/trainer/adam.hpp"
#include "lforge/video/manifest.hpp"
#include "lforge/video/preprocess.hpp"

namespace lforge {

struct TrainConfig {
    std::uint64_t seed = 1;
    std::size_t epochs = 10;
    std::size_t batch_size = 4;
    double lambda = 0.5;
    AdamConfig adam{};
    /// Off, the small model fits scene appearance instead of motion.
    bool magnify = true;
    MagnificationConfig magnification{};
    /// Face box growth per side as a fraction of its size before resizing.
    double crop_ratio = 0.5;
    ModelConfig model{};
    /// Worker threads; results do not depend on it.
    std::size_t threads = 1;

    void validate() const {
        require(batch_size >= 1, "train: batch size must be >= 1");
        require(lambda >= 0.0 && lambda <= 1.0, "train: lambda must lie in [0,1]");
        require(crop_ratio >= 0.0 && crop_ratio <= 1.0, "train: crop ratio must lie in [0,1]");
        adam.validate();
        magnification.validate();
        model.validate();
    }
};

/// Everything that affects results; the thread count is left out on purpose.
inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"seed", c.seed},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lambda", c.lambda},
            {"adam", to_json(c.adam)},
            {"magnify", c.magnify},
            {"magnification", to_json(c.magnification)},
            {"crop_ratio", c.crop_ratio},
            {"model", to_json(c.model)},
            {"init", "uniform(+-1/sqrt(fan_in)), zero biases, forget bias +1, gamma 1, beta 0"},
            {"batch_norm_epsilon", ops::kBatchNormEpsilon},
            {"batch_norm_momentum", ops::kBatchNormMomentum}};
}

/// Optional magnification -> face crop with border -> resize -> frame sampling.
inline FrameSeq prepare_clip(const Clip& clip, const TrainConfig& cfg) {
    const ModelConfig& m = cfg.model;
    require(clip.channels() == m.channels, "clip '" + clip.id + "' has " + std::to_string(clip.channels()) +
                                               " channels, model expects " + std::to_string(m.channels));
    const Clip source = cfg.magnify ? magnify_clip(clip, cfg.magnification) : clip;
    const Clip sampled = sample_frames(source, m.frames);
    FrameSeq out;
    out.reserve(m.frames);
    for (const Tensor& f : sampled.frames) {
        const Tensor face = clip.bbox ? crop_extend(f, *clip.bbox, cfg.crop_ratio) : f;
        out.push_back(resize_bilinear(face, m.height, m.width));
    }
    return out;
}

struct PreparedSplit {
    std::vector<std::string> ids;
    std::vector<FrameSeq> clips;
    std::vector<int> labels;
};

inline PreparedSplit prepare_split(const CorpusManifest& corpus, Split split, const TrainConfig& cfg) {
    const auto entries = corpus.split(split);
    require(!entries.empty(), std::string(to_string(split)) + " split of corpus '" + corpus.root.string() +
                                  "' is empty");
    PreparedSplit p;
    p.ids.resize(entries.size());
    p.clips.resize(entries.size());
    p.labels.resize(entries.size());
    parallel_for(entries.size(), cfg.threads, [&](std::size_t i) {
        const Clip clip = corpus.load(*entries[i]);
        p.ids[i] = clip.id;
        p.labels[i] = static_cast<int>(clip.label);
        p.clips[i] = prepare_clip(clip, cfg);
    });
    return p;
}

struct EpochLoss {
    std::size_t epoch = 0;
    double combined = 0.0;
    double cnn = 0.0;
    double lstm = 0.0;
};

/// Header plus one line per epoch: index, mean combined, cnn and lstm loss.
inline std::string format_loss_log(const std::vector<EpochLoss>& log) {
    std::string s = "epoch\tcombined\tcnn\tlstm\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.17g\n", e.epoch, e.combined, e.cnn, e.lstm);
        s += buf;
    }
    return s;
}

struct TrainResult {
    Model model;
    std::vector<EpochLoss> log;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

inline TrainResult train_prepared(const PreparedSplit& data, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = nullptr) {
    cfg.validate();
    require(!data.clips.empty(), "train: training split is empty");
    TrainResult result{Model::initialized(cfg.model, cfg.seed), {}};
    Model& model = result.model;
    Adam adam(cfg.adam);
    ModelParams grads = model.params.zeros_like();

    const std::size_t n = data.clips.size();
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng(mix_seed(cfg.seed, 0xE90C00 + epoch));
        rng.shuffle(std::span<std::size_t>(order));

        double cnn = 0.0, lstm = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            std::vector<const FrameSeq*> batch;
            std::vector<int> labels;
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(&data.clips[order[k]]);
                labels.push_back(data.labels[order[k]]);
            }
            const LossBreakdown l = model.loss(batch, labels, cfg.lambda, &grads, ops::Mode::train, cfg.threads);
            const auto weight = static_cast<double>(end - start);
            cnn += weight * l.cnn_loss;
            lstm += weight * l.lstm_loss;
            adam.step(model.params, grads);
        }
        const LossBreakdown mean = combine_losses(cnn / static_cast<double>(n), lstm / static_cast<double>(n), cfg.lambda);
        result.log.push_back({epoch, mean.combined, mean.cnn_loss, mean.lstm_loss});
        if (on_epoch) on_epoch(result.log.back());
    }
    return result;
}

inline TrainResult train(const CorpusManifest& corpus, const TrainConfig& cfg, const EpochCallback& on_epoch = nullptr) {
    cfg.validate();
    return train_prepared(prepare_split(corpus, Split::train, cfg), cfg, on_epoch);
}

inline nlohmann::json checkpoint_meta(const TrainConfig& cfg, const std::vector<EpochLoss>& log) {
    nlohmann::json losses = nlohmann::json::array();
    for (const auto& e : log) losses.push_back({e.epoch, e.combined, e.cnn, e.lstm});
    return {{"train", to_json(cfg)}, {"loss_log", losses}};
}

/// Genuine-class probability per clip, inference mode.
inline ScoreSet score_prepared(Model& model, const PreparedSplit& data, std::size_t threads = 1,
                               std::size_t batch = 8) {
    ScoreSet s;
    for (std::size_t start = 0; start < data.clips.size(); start += batch) {
        const std::size_t end = std::min(data.clips.size(), start + batch);
        std::vector<const FrameSeq*> clips;
        for (std::size_t k = start; k < end; ++k) clips.push_back(&data.clips[k]);
        const auto out = model.forward(clips, ops::Mode::infer, nullptr, threads);
        for (std::size_t k = start; k < end; ++k)
            s.entries.push_back({data.ids[k], out[k - start].clip_probs[kGenuineClass],
                                 static_cast<Label>(data.labels[k])});
    }
    return s;
}

inline ScoreSet score_split(Model& model, const CorpusManifest& corpus, Split split, const TrainConfig& cfg) {
    require(model.config == cfg.model, "score_split: model config does not match the run config");
    return score_prepared(model, prepare_split(corpus, split, cfg), cfg.threads);
}

}  // namespace lforge
