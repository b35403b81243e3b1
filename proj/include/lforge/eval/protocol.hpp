#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lforge/eval/metrics.hpp"
#include "lforge/trainer/trainer.hpp"

namespace lforge {

enum class ProtocolKind { intra, inter };

inline std::string_view to_string(ProtocolKind k) { return k == ProtocolKind::intra ? "intra" : "inter"; }

inline ProtocolKind parse_protocol_kind(std::string_view s) {
    if (s == "intra") return ProtocolKind::intra;
    if (s == "inter") return ProtocolKind::inter;
    throw ContractError("unknown protocol '" + std::string(s) + "' (expected intra or inter)");
}

struct MetricReport {
    double tau = 0.0;
    double far = 0.0;
    double frr = 0.0;
    double hter = 0.0;
    double acc = 0.0;
    double eer = 0.0;  // on the development split, at tau
    nlohmann::json protocol = nlohmann::json::object();

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline constexpr const char* kDecisionRule = "accept iff score >= tau";

/// Identifies a corpus without its absolute location, so reports from
/// identical runs in different directories compare equal.
inline nlohmann::json corpus_descriptor(const CorpusManifest& c) {
    return {{"name", c.root.filename().string()}, {"seed", c.seed}, {"clips", c.entries.size()}};
}

/// tau from the EER point of the development scores, applied to the test scores.
inline MetricReport evaluate_scores(const ScoreSet& dev, const ScoreSet& test, nlohmann::json protocol = {}) {
    const EerResult e = eer_threshold(dev);
    const HterResult h = hter(test, e.tau);
    MetricReport r;
    r.tau = e.tau;
    r.far = h.far;
    r.frr = h.frr;
    r.hter = h.hter;
    r.acc = accuracy(test, e.tau);
    r.eer = e.eer;
    r.protocol = protocol.is_null() ? nlohmann::json::object() : std::move(protocol);
    return r;
}

struct ProtocolScores {
    ScoreSet dev, test;
};

/// Intra: train, dev and test splits of `train_corpus`. Inter: train and dev
/// from `train_corpus`, test split of `eval_corpus`. A supplied model skips
/// training; its config must match `cfg.model`.
inline MetricReport run_protocol(ProtocolKind kind, const CorpusManifest& train_corpus,
                                 const CorpusManifest& eval_corpus, const TrainConfig& cfg,
                                 std::optional<Model> trained = std::nullopt, const EpochCallback& on_epoch = nullptr,
                                 ProtocolScores* scores = nullptr) {
    cfg.validate();
    const CorpusManifest& test_corpus = kind == ProtocolKind::intra ? train_corpus : eval_corpus;
    for (Split s : {Split::train, Split::dev})
        require(!train_corpus.split(s).empty(), std::string(to_string(s)) + " split of corpus '" +
                                                    train_corpus.root.string() + "' is empty");
    require(!test_corpus.split(Split::test).empty(),
            "test split of corpus '" + test_corpus.root.string() + "' is empty");

    nlohmann::json protocol{{"kind", to_string(kind)},
                            {"train_corpus", corpus_descriptor(train_corpus)},
                            {"eval_corpus", corpus_descriptor(test_corpus)},
                            {"decision_rule", kDecisionRule},
                            {"threshold", "EER point on the train corpus dev split"},
                            {"config", to_json(cfg)},
                            {"trained_here", !trained.has_value()}};

    Model model = trained ? std::move(*trained) : train(train_corpus, cfg, on_epoch).model;
    require(model.config == cfg.model, "run_protocol: model config does not match the run config");
    ScoreSet dev = score_split(model, train_corpus, Split::dev, cfg);
    ScoreSet test = score_split(model, test_corpus, Split::test, cfg);
    MetricReport r = evaluate_scores(dev, test, std::move(protocol));
    if (scores) *scores = {std::move(dev), std::move(test)};
    return r;
}

inline MetricReport run_protocol(const CorpusManifest& corpus, const TrainConfig& cfg,
                                 std::optional<Model> trained = std::nullopt) {
    return run_protocol(ProtocolKind::intra, corpus, corpus, cfg, std::move(trained));
}

}  // namespace lforge
