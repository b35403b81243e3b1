#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "lforge/trainer/trainer.hpp"
#include "lforge/video/synth.hpp"

using namespace lforge;

namespace {

// Reference Adam, one scalar at a time.
struct ScalarAdam {
    double lr, b1, b2, eps;
    double m = 0.0, v = 0.0;
    int t = 0;
    double update(double theta, double g) {
        ++t;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mh = m / (1.0 - std::pow(b1, t));
        const double vh = v / (1.0 - std::pow(b2, t));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

TrainConfig fast_config(std::uint64_t seed) {
    TrainConfig c;
    c.seed = seed;
    c.adam.lr = 1e-3;
    return c;
}

// Default 40-clip synthetic corpus, written once per test binary.
struct Corpus {
    CorpusManifest manifest;
    PreparedSplit train, test;
};

const Corpus& corpus() {
    static const Corpus c = [] {
        SynthConfig s;
        s.clips = 40;
        Corpus out;
        out.manifest = synth_corpus(s, lforge::testing::scratch_dir("trainer_corpus"));
        const TrainConfig t = fast_config(1);
        out.train = prepare_split(out.manifest, Split::train, t);
        out.test = prepare_split(out.manifest, Split::test, t);
        return out;
    }();
    return c;
}

}  // namespace

// ---- Adam ----

TEST(Adam, ZeroGradientIsIdentity) {
    Rng rng(1);
    Parameter p("w", lforge::testing::random_tensor({3, 4}, rng));
    const Tensor before = p.value;
    std::vector<Parameter*> ps{&p};
    Adam adam;
    for (int i = 0; i < 5; ++i) adam.step(std::span<Parameter* const>(ps));
    EXPECT_EQ(p.value.values(), before.values());
    for (double v : adam.first_moments()[0].data()) EXPECT_EQ(v, 0.0);
    for (double v : adam.second_moments()[0].data()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(adam.steps(), 5u);
}

TEST(Adam, FirstStepMagnitude) {
    Parameter p("w", Tensor({1}, std::vector<double>{0.0}));
    p.grad[0] = 1.0;
    std::vector<Parameter*> ps{&p};
    Adam adam;
    adam.step(std::span<Parameter* const>(ps));
    EXPECT_NEAR(p.value[0], -1e-5 / (1.0 + 1e-8), 1e-20);
    EXPECT_EQ(p.grad[0], 0.0);
    EXPECT_EQ(adam.first_moments()[0].shape(), p.value.shape());
}

TEST(Adam, QuadraticTrajectoryMatchesReference) {
    // f = sum a_i (theta_i - c_i)^2 / 2
    const std::vector<double> a{0.5, 2.0, 10.0, 0.01}, c{1.0, -2.0, 0.3, 5.0};
    const AdamConfig cfg{1e-2, 0.9, 0.999, 1e-8};
    Parameter p("theta", Tensor({4}, std::vector<double>{0.0, 0.0, 0.0, 0.0}));
    std::vector<Parameter*> ps{&p};
    Adam adam(cfg);
    std::vector<ScalarAdam> ref(4, ScalarAdam{cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon});
    std::vector<double> theta(4, 0.0);
    for (int step = 0; step < 100; ++step) {
        for (std::size_t i = 0; i < 4; ++i) {
            p.grad[i] = a[i] * (p.value[i] - c[i]);
            theta[i] = ref[i].update(theta[i], a[i] * (theta[i] - c[i]));
        }
        adam.step(std::span<Parameter* const>(ps));
        for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(p.value[i], theta[i], 1e-12) << "step " << step;
    }
    EXPECT_EQ(adam.steps(), 100u);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
    Parameter a("conv0.kernel", Tensor({2}));
    Parameter b("lstm.T_f", Tensor({3}));
    a.grad[0] = 1.0;
    b.grad[2] = std::nan("");
    std::vector<Parameter*> ps{&a, &b};
    Adam adam;
    try {
        adam.step(std::span<Parameter* const>(ps));
        FAIL() << "expected a RuntimeError";
    } catch (const RuntimeError& e) {
        EXPECT_NE(std::string(e.what()).find("lstm.T_f"), std::string::npos) << e.what();
    }
    EXPECT_EQ(a.value[0], 0.0);
    EXPECT_EQ(adam.steps(), 0u);
}

TEST(Adam, RejectsBadConfigAndChangedLayout) {
    EXPECT_THROW(Adam(AdamConfig{0.0, 0.9, 0.999, 1e-8}), ContractError);
    EXPECT_THROW(Adam(AdamConfig{1e-3, 1.0, 0.999, 1e-8}), ContractError);
    EXPECT_THROW(Adam(AdamConfig{1e-3, 0.9, 0.999, 0.0}), ContractError);
    Parameter a("a", Tensor({2})), b("b", Tensor({2}));
    std::vector<Parameter*> one{&a}, two{&a, &b};
    Adam adam;
    adam.step(std::span<Parameter* const>(one));
    EXPECT_THROW(adam.step(std::span<Parameter* const>(two)), ContractError);
}

// ---- loss log ----

TEST(LossLog, FormatRoundTrips) {
    const std::vector<EpochLoss> log{{1, 0.7123456789012345, 0.69, 0.73}, {2, 1.0 / 3.0, 0.25, 0.4166}};
    std::istringstream in(format_loss_log(log));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch\tcombined\tcnn\tlstm");
    for (const auto& e : log) {
        std::size_t epoch;
        double combined, cnn, lstm;
        in >> epoch >> combined >> cnn >> lstm;
        EXPECT_EQ(epoch, e.epoch);
        EXPECT_EQ(combined, e.combined);
        EXPECT_EQ(cnn, e.cnn);
        EXPECT_EQ(lstm, e.lstm);
    }
}

// ---- training ----

TEST(Train, LossDecreasesOverFiveEpochs) {
    const auto& data = corpus().train;
    ASSERT_EQ(data.clips.size(), 20u);
    int decreased = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
        TrainConfig cfg = fast_config(seed);
        cfg.epochs = 5;
        const TrainResult r = train_prepared(data, cfg);
        ASSERT_EQ(r.log.size(), 5u);
        for (const auto& e : r.log) {
            EXPECT_TRUE(std::isfinite(e.combined));
            EXPECT_EQ(e.combined, combine_losses(e.cnn, e.lstm, cfg.lambda).combined);
        }
        decreased += r.log.back().combined < r.log.front().combined;
    }
    EXPECT_GE(decreased, 2);
}

TEST(Train, SameSeedIsBitIdentical) {
    TrainConfig cfg = fast_config(4);
    cfg.epochs = 2;
    const TrainResult a = train_prepared(corpus().train, cfg);
    const TrainResult b = train_prepared(corpus().train, cfg);
    EXPECT_EQ(format_loss_log(a.log), format_loss_log(b.log));
    EXPECT_EQ(encode_checkpoint(a.model, checkpoint_meta(cfg, a.log)),
              encode_checkpoint(b.model, checkpoint_meta(cfg, b.log)));

    TrainConfig threaded = cfg;
    threaded.threads = 3;
    const TrainResult c = train_prepared(corpus().train, threaded);
    ASSERT_EQ(c.log.size(), a.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_NEAR(c.log[i].combined, a.log[i].combined, 1e-10);
    EXPECT_EQ(encode_checkpoint(a.model, {}), encode_checkpoint(c.model, {}));

    TrainConfig other = cfg;
    other.seed = 5;
    EXPECT_NE(format_loss_log(train_prepared(corpus().train, other).log), format_loss_log(a.log));
}

TEST(Train, ZeroEpochsReturnsInitialization) {
    TrainConfig cfg = fast_config(6);
    cfg.epochs = 0;
    const TrainResult r = train_prepared(corpus().train, cfg);
    EXPECT_TRUE(r.log.empty());
    EXPECT_EQ(format_loss_log(r.log), "epoch\tcombined\tcnn\tlstm\n");
    EXPECT_EQ(encode_checkpoint(r.model, {}), encode_checkpoint(Model::initialized(cfg.model, 6), {}));
}

TEST(Train, CheckpointMetaEchoesConfig) {
    TrainConfig cfg = fast_config(3);
    const auto meta = checkpoint_meta(cfg, {{1, 0.5, 0.4, 0.6}});
    EXPECT_EQ(meta.at("train").at("seed"), 3);
    EXPECT_EQ(meta.at("train").at("lambda"), 0.5);
    EXPECT_EQ(meta.at("train").at("magnify"), true);
    EXPECT_FALSE(meta.at("train").contains("threads"));
    EXPECT_EQ(meta.at("loss_log").size(), 1u);
    EXPECT_TRUE(meta.at("train").contains("init"));
}

TEST(Train, RejectsEmptySplitAndCorruptClip) {
    const auto dir = lforge::testing::scratch_dir("trainer_bad");
    SynthConfig s;
    s.clips = 4;
    s.frames = 8;
    CorpusManifest m = synth_corpus(s, dir);
    CorpusManifest no_train = m;
    std::erase_if(no_train.entries, [](const ManifestEntry& e) { return e.split == Split::train; });
    EXPECT_THROW(train(no_train, fast_config(1)), ContractError);

    const auto victim = m.split(Split::train).front()->path;
    std::ofstream(dir / victim, std::ios::binary | std::ios::trunc) << "RVID1 garbage";
    try {
        train(m, fast_config(1));
        FAIL() << "expected a failure for the corrupt clip";
    } catch (const RuntimeError& e) {
        EXPECT_NE(std::string(e.what()).find(victim), std::string::npos) << e.what();
    }
}

TEST(Train, RejectsInvalidConfig) {
    TrainConfig cfg = fast_config(1);
    cfg.lambda = 1.5;
    EXPECT_THROW(train_prepared(corpus().train, cfg), ContractError);
    cfg = fast_config(1);
    cfg.batch_size = 0;
    EXPECT_THROW(train_prepared(corpus().train, cfg), ContractError);
}

// ---- scoring ----

TEST(Score, UntrainedScoresAreValidAndCentred) {
    TrainConfig cfg = fast_config(1);
    Model m = Model::initialized(cfg.model, cfg.seed);
    const ScoreSet a = score_prepared(m, corpus().test);
    const ScoreSet b = score_prepared(m, corpus().test);
    ASSERT_EQ(a.entries.size(), corpus().test.clips.size());
    EXPECT_EQ(a.count(Label::genuine), a.count(Label::attack));
    double mean = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_GE(a.entries[i].score, 0.0);
        EXPECT_LE(a.entries[i].score, 1.0);
        EXPECT_EQ(a.entries[i].score, b.entries[i].score);
        EXPECT_EQ(a.entries[i].id, b.entries[i].id);
        mean += a.entries[i].score;
    }
    mean /= static_cast<double>(a.entries.size());
    EXPECT_GE(mean, 0.3);
    EXPECT_LE(mean, 0.7);
    EXPECT_NO_THROW(a.validate());
}

TEST(Score, SplitFromCorpusMatchesPrepared) {
    TrainConfig cfg = fast_config(2);
    Model m = Model::initialized(cfg.model, 2);
    const ScoreSet a = score_split(m, corpus().manifest, Split::test, cfg);
    const ScoreSet b = score_prepared(m, corpus().test, 2, 3);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].id, b.entries[i].id);
        EXPECT_EQ(a.entries[i].score, b.entries[i].score);
        EXPECT_EQ(a.entries[i].label, b.entries[i].label);
    }
}

TEST(Score, RejectsConfigMismatch) {
    TrainConfig cfg = fast_config(1);
    ModelConfig other = cfg.model;
    other.hidden = 16;
    Model m = Model::initialized(other, 1);
    EXPECT_THROW(score_split(m, corpus().manifest, Split::test, cfg), ContractError);
}
