#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "lforge/eval/report.hpp"
#include "lforge/video/synth.hpp"

using namespace lforge;

namespace {

ScoreSet make_set(const std::vector<double>& genuine, const std::vector<double>& attack) {
    ScoreSet s;
    for (std::size_t i = 0; i < genuine.size(); ++i) s.entries.push_back({"g" + std::to_string(i), genuine[i], Label::genuine});
    for (std::size_t i = 0; i < attack.size(); ++i) s.entries.push_back({"a" + std::to_string(i), attack[i], Label::attack});
    return s;
}

// Scores on a 1/1000 grid so strictly monotone maps keep them distinct.
ScoreSet random_set(Rng& rng, std::size_t n_genuine, std::size_t n_attack) {
    ScoreSet s;
    for (std::size_t i = 0; i < n_genuine + n_attack; ++i)
        s.entries.push_back({"c" + std::to_string(i), static_cast<double>(rng.below(1001)) / 1000.0,
                             i < n_genuine ? Label::genuine : Label::attack});
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else {
                quoted = !quoted;
            }
        } else if (c == ',' && !quoted) {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

}  // namespace

// ---- FAR / FRR ----

TEST(FarFrr, HandEnumerated) {
    const ScoreSet s = make_set({0.9, 0.8}, {0.2, 0.1});
    auto r = far_frr(s, 0.5);
    EXPECT_NEAR(r.far, 0.0, 1e-12);
    EXPECT_NEAR(r.frr, 0.0, 1e-12);
    r = far_frr(s, 0.85);
    EXPECT_NEAR(r.far, 0.0, 1e-12);
    EXPECT_NEAR(r.frr, 0.5, 1e-12);
    r = far_frr(s, 0.0);
    EXPECT_NEAR(r.far, 1.0, 1e-12);
    EXPECT_NEAR(r.frr, 0.0, 1e-12);
}

TEST(FarFrr, TieGoesToAccept) {
    const ScoreSet s = make_set({0.5}, {0.5});
    const auto r = far_frr(s, 0.5);
    EXPECT_EQ(r.far, 1.0);
    EXPECT_EQ(r.frr, 0.0);
}

TEST(FarFrr, RejectsDegenerateSets) {
    EXPECT_THROW(far_frr(make_set({0.9}, {}), 0.5), ContractError);
    EXPECT_THROW(far_frr(make_set({}, {0.1}), 0.5), ContractError);
    ScoreSet dup = make_set({0.9}, {0.1});
    dup.entries[1].id = dup.entries[0].id;
    EXPECT_THROW(far_frr(dup, 0.5), ContractError);
    EXPECT_THROW(far_frr(make_set({1.5}, {0.1}), 0.5), ContractError);
}

TEST(FarFrr, MonotoneInThresholdProperty) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const ScoreSet s = random_set(rng, 1 + rng.below(20), 1 + rng.below(20));
        std::vector<double> taus(30);
        for (auto& t : taus) t = rng.uniform(-0.1, 1.1);
        std::sort(taus.begin(), taus.end());
        ErrorRates prev = far_frr(s, taus.front());
        for (double t : taus) {
            const ErrorRates r = far_frr(s, t);
            ASSERT_LE(r.far, prev.far);
            ASSERT_GE(r.frr, prev.frr);
            prev = r;
        }
    }
}

// ---- EER ----

TEST(Eer, SeparableFixture) {
    const auto e = eer_threshold(make_set({0.9, 0.8}, {0.2, 0.1}));
    EXPECT_NEAR(e.tau, 0.5, 1e-12);
    EXPECT_NEAR(e.eer, 0.0, 1e-12);
}

TEST(Eer, InterleavedFixture) {
    const ScoreSet s = make_set({0.6, 0.4}, {0.5, 0.3});
    EXPECT_EQ(threshold_candidates(s).size(), 5u);
    const auto e = eer_threshold(s);
    EXPECT_NEAR(e.tau, 0.45, 1e-12);
    EXPECT_NEAR(e.far, 0.5, 1e-12);
    EXPECT_NEAR(e.frr, 0.5, 1e-12);
    EXPECT_NEAR(e.eer, 0.5, 1e-12);
}

TEST(Eer, TiesBreakToSmallerFarThenSmallerTau) {
    // tau 0.15 and 0.25 both leave |FAR-FRR| = 1/2; FAR is 1 and 0.
    const auto e = eer_threshold(make_set({0.1, 0.3}, {0.2}));
    EXPECT_NEAR(e.tau, 0.25, 1e-12);
    EXPECT_EQ(e.far, 0.0);
    EXPECT_EQ(e.frr, 0.5);
    EXPECT_EQ(e.eer, 0.25);
    // tau 0.4 and 0.7 both accept one attack and tie on the gap.
    const auto f = eer_threshold(make_set({0.6}, {0.8, 0.2}));
    EXPECT_NEAR(f.tau, 0.4, 1e-12);
    EXPECT_EQ(f.far, 0.5);
}

TEST(Eer, SeparableSetsProperty) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t ng = 1 + rng.below(15), na = 1 + rng.below(15);
        const double cut = rng.uniform(0.2, 0.8);
        std::vector<double> g(ng), a(na);
        for (auto& v : g) v = rng.uniform(cut, 1.0);
        for (auto& v : a) v = rng.uniform(0.0, cut * 0.999);
        const ScoreSet s = make_set(g, a);
        const auto e = eer_threshold(s);
        ASSERT_EQ(e.eer, 0.0);
        const auto h = hter(s, e.tau);
        ASSERT_EQ(h.hter, 0.0);
        ASSERT_EQ(accuracy(s, e.tau), 1.0);
    }
}

TEST(Eer, InvariantUnderMonotoneTransform) {
    Rng rng(3);
    const std::vector<double (*)(double)> maps{
        [](double x) { return x * x * x; }, [](double x) { return std::sqrt(x); },
        [](double x) { return (std::exp(3.0 * x) - 1.0) / (std::exp(3.0) - 1.0); },
        [](double x) { return 0.25 + 0.5 * x; }};
    for (int trial = 0; trial < 100; ++trial) {
        const ScoreSet s = random_set(rng, 2 + rng.below(20), 2 + rng.below(20));
        const auto base = eer_threshold(s);
        for (auto f : maps) {
            ScoreSet t = s;
            for (auto& e : t.entries) e.score = f(e.score);
            const auto r = eer_threshold(t);
            ASSERT_EQ(r.far, base.far);
            ASSERT_EQ(r.frr, base.frr);
        }
    }
}

TEST(Eer, RatesInUnitIntervalProperty) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const ScoreSet dev = random_set(rng, 1 + rng.below(10), 1 + rng.below(10));
        const ScoreSet test = random_set(rng, 1 + rng.below(10), 1 + rng.below(10));
        const MetricReport r = evaluate_scores(dev, test);
        ASSERT_EQ(r.hter, (r.far + r.frr) / 2.0);
        for (double v : {r.far, r.frr, r.hter, r.acc, r.eer}) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
    }
}

// ---- HTER / ACC ----

TEST(Hter, Arithmetic) {
    EXPECT_NEAR(half_total_error(0.1, 0.3), 0.2, 1e-12);
    const auto perfect = hter(make_set({0.9, 0.8}, {0.2, 0.1}), 0.5);
    EXPECT_EQ(perfect.hter, 0.0);
    const auto all = hter(make_set({0.9, 0.8}, {0.2, 0.1}), 0.0);
    EXPECT_NEAR(all.far, 1.0, 1e-12);
    EXPECT_NEAR(all.frr, 0.0, 1e-12);
    EXPECT_NEAR(all.hter, 0.5, 1e-12);
}

TEST(Accuracy, Fixtures) {
    EXPECT_NEAR(accuracy(make_set({0.9, 0.3}, {0.2, 0.1}), 0.5), 0.75, 1e-12);
    EXPECT_NEAR(accuracy(make_set({0.9, 0.8}, {0.2, 0.1}), 0.5), 1.0, 1e-12);
    EXPECT_NEAR(accuracy(make_set({0.9, 0.8}, {}), 2.0), 0.0, 1e-12);
    EXPECT_THROW(accuracy(ScoreSet{}, 0.5), ContractError);
}

// ---- reports ----

TEST(Report, PercentFormatting) {
    EXPECT_EQ(percent(0.1036), "10.36");
    EXPECT_EQ(percent(0.0), "0.00");
    EXPECT_EQ(percent(1.0), "100.00");
    EXPECT_EQ(percent(0.5), "50.00");
}

namespace {

MetricReport sample_report() {
    MetricReport r;
    r.tau = 0.4372918374629183;
    r.far = 1.0 / 3.0;
    r.frr = 0.1036;
    r.hter = half_total_error(r.far, r.frr);
    r.acc = 2.0 / 3.0;
    r.eer = 0.125;
    r.protocol = {{"kind", "intra"},
                  {"train_corpus", {{"name", "corpus, a"}, {"seed", 7}, {"clips", 40}}},
                  {"eval_corpus", {{"name", "corpus, a"}, {"seed", 7}, {"clips", 40}}},
                  {"config", {{"magnify", true}, {"seed", 3}, {"lambda", 0.5}}}};
    return r;
}

}  // namespace

TEST(Report, StructuredRoundTripIsExact) {
    const MetricReport r = sample_report();
    const auto path = lforge::testing::scratch_dir("report") / "r.json";
    emit_report(r, path, ReportFormat::structured);
    std::ifstream in(path);
    const MetricReport back = metric_report_from_json(nlohmann::json::parse(in));
    EXPECT_EQ(back, r);
}

TEST(Report, RowsAgreeWithStructured) {
    const MetricReport r = sample_report();
    std::istringstream rows(format_report(r, ReportFormat::rows));
    const nlohmann::json j = nlohmann::json::parse(format_report(r, ReportFormat::structured));
    std::string header, data, extra;
    std::getline(rows, header);
    std::getline(rows, data);
    EXPECT_FALSE(std::getline(rows, extra));
    const auto keys = split_csv(header);
    const auto cells = split_csv(data);
    ASSERT_EQ(keys.size(), cells.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::string& k = keys[i];
        if (k == "tau") {
            EXPECT_EQ(std::stod(cells[i]), j.at("tau").get<double>());
        } else if (k == "far" || k == "frr" || k == "hter" || k == "acc" || k == "eer") {
            EXPECT_EQ(cells[i], percent(j.at(k).get<double>())) << k;
        } else if (k == "protocol") {
            EXPECT_EQ(cells[i], j.at("protocol").at("kind"));
        } else if (k == "train_corpus" || k == "eval_corpus") {
            EXPECT_EQ(nlohmann::json::parse(cells[i]), j.at("protocol").at(k));
        } else if (k == "magnify" || k == "seed") {
            EXPECT_EQ(nlohmann::json::parse(cells[i]), j.at("protocol").at("config").at(k));
        } else {
            ADD_FAILURE() << "unexpected column " << k;
        }
    }
    EXPECT_EQ(cells[3], "21.85");
}

TEST(Report, UnwritablePathFails) {
    EXPECT_THROW(emit_report(sample_report(), "/nonexistent-dir/x/r.json", ReportFormat::rows), RuntimeError);
    EXPECT_THROW(parse_report_format("xml"), ContractError);
}

TEST(Report, FarFrrTableListsEveryCandidate) {
    const ScoreSet s = make_set({0.6, 0.4}, {0.5, 0.3});
    const std::string t = format_far_frr_table(s);
    EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 6);
    EXPECT_NE(t.find("0.45000000000000001,0.5,0.5"), std::string::npos) << t;
}

// ---- protocols ----

namespace {

struct ProtocolFixture {
    CorpusManifest a, b;
    TrainConfig cfg;
    Model model{ModelConfig{}};
};

// Corpus A, and corpus B with the same motion seed and different textures.
const ProtocolFixture& protocol_fixture() {
    static const ProtocolFixture f = [] {
        ProtocolFixture out;
        SynthConfig s;
        s.clips = 80;
        s.seed = 7;
        out.a = synth_corpus(s, lforge::testing::scratch_dir("protocol_a"));
        s.texture_seed = 1234;
        out.b = synth_corpus(s, lforge::testing::scratch_dir("protocol_b"));
        out.cfg.seed = 1;
        out.cfg.epochs = 8;
        out.cfg.adam.lr = 1e-3;
        out.model = train(out.a, out.cfg).model;
        return out;
    }();
    return f;
}

}  // namespace

TEST(Protocol, IntraReportIsComplete) {
    const auto& f = protocol_fixture();
    const MetricReport r = run_protocol(f.a, f.cfg, f.model);
    EXPECT_EQ(r.hter, (r.far + r.frr) / 2.0);
    for (const char* key : {"kind", "train_corpus", "eval_corpus", "decision_rule", "config"})
        EXPECT_TRUE(r.protocol.contains(key)) << key;
    EXPECT_EQ(r.protocol.at("kind"), "intra");
    EXPECT_EQ(r.protocol.at("config").at("magnification").at("alpha"), f.cfg.magnification.alpha);
    EXPECT_EQ(r.protocol.at("train_corpus").at("seed"), 7);
    const auto j = to_json(r);
    for (const char* key : {"tau", "far", "frr", "hter", "acc", "eer"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Protocol, InterOnSameCorpusEqualsIntra) {
    const auto& f = protocol_fixture();
    const MetricReport intra = run_protocol(ProtocolKind::intra, f.a, f.a, f.cfg, f.model);
    const MetricReport inter = run_protocol(ProtocolKind::inter, f.a, f.a, f.cfg, f.model);
    EXPECT_EQ(inter.tau, intra.tau);
    EXPECT_EQ(inter.far, intra.far);
    EXPECT_EQ(inter.frr, intra.frr);
    EXPECT_EQ(inter.hter, intra.hter);
    EXPECT_EQ(inter.acc, intra.acc);
    EXPECT_EQ(inter.eer, intra.eer);
    EXPECT_EQ(inter.protocol.at("kind"), "inter");
}

TEST(Protocol, TextureShiftGeneralizes) {
    const auto& f = protocol_fixture();
    const MetricReport intra = run_protocol(ProtocolKind::intra, f.a, f.a, f.cfg, f.model);
    const MetricReport inter = run_protocol(ProtocolKind::inter, f.a, f.b, f.cfg, f.model);
    RecordProperty("intra_hter", std::to_string(intra.hter));
    RecordProperty("inter_hter", std::to_string(inter.hter));
    EXPECT_LE(std::abs(inter.hter - intra.hter), 0.10) << "intra " << intra.hter << ", inter " << inter.hter;
}

TEST(Protocol, RejectsMissingSplits) {
    const auto& f = protocol_fixture();
    CorpusManifest no_dev = f.a;
    std::erase_if(no_dev.entries, [](const ManifestEntry& e) { return e.split == Split::dev; });
    EXPECT_THROW(run_protocol(no_dev, f.cfg, f.model), ContractError);
    CorpusManifest no_test = f.b;
    std::erase_if(no_test.entries, [](const ManifestEntry& e) { return e.split == Split::test; });
    EXPECT_THROW(run_protocol(ProtocolKind::inter, f.a, no_test, f.cfg, f.model), ContractError);
    TrainConfig other = f.cfg;
    other.model.hidden = 4;
    EXPECT_THROW(run_protocol(f.a, other, f.model), ContractError);
}
