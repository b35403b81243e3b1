#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "lforge/error.hpp"
#include "lforge/video/clip.hpp"

namespace lforge {

struct ScoreEntry {
    std::string id;
    double score = 0.0;  // high = genuine
    Label label = Label::genuine;
};

struct ScoreSet {
    std::vector<ScoreEntry> entries;

    std::size_t count(Label l) const {
        return static_cast<std::size_t>(
            std::count_if(entries.begin(), entries.end(), [l](const ScoreEntry& e) { return e.label == l; }));
    }

    void validate() const {
        std::set<std::string> ids;
        for (const auto& e : entries) {
            require(ids.insert(e.id).second, "score set: duplicate id '" + e.id + "'");
            require(e.score >= 0.0 && e.score <= 1.0, "score set: score for '" + e.id + "' outside [0,1]");
        }
    }

    void require_both_classes() const {
        validate();
        require(count(Label::genuine) > 0, "score set has no genuine entries");
        require(count(Label::attack) > 0, "score set has no attack entries");
    }
};

/// Decision rule shared by every metric: accept iff score >= tau.
inline bool accepted(double score, double tau) { return score >= tau; }

struct ErrorRates {
    double far = 0.0;
    double frr = 0.0;
};

namespace metrics_detail {

struct Counts {
    std::size_t false_accepts = 0, attacks = 0, false_rejects = 0, genuine = 0;
};

inline Counts count_errors(const ScoreSet& s, double tau) {
    Counts c;
    for (const auto& e : s.entries) {
        if (e.label == Label::attack) {
            ++c.attacks;
            c.false_accepts += accepted(e.score, tau);
        } else {
            ++c.genuine;
            c.false_rejects += !accepted(e.score, tau);
        }
    }
    return c;
}

inline ErrorRates rates(const Counts& c) {
    return {static_cast<double>(c.false_accepts) / static_cast<double>(c.attacks),
            static_cast<double>(c.false_rejects) / static_cast<double>(c.genuine)};
}

}  // namespace metrics_detail

/// FAR = accepted attacks / attacks; FRR = rejected genuine / genuine.
inline ErrorRates far_frr(const ScoreSet& scores, double tau) {
    scores.require_both_classes();
    return metrics_detail::rates(metrics_detail::count_errors(scores, tau));
}

struct EerResult {
    double tau = 0.0;
    double far = 0.0;
    double frr = 0.0;
    double eer = 0.0;
};

/// Midpoints between adjacent distinct scores plus one threshold below the
/// minimum and one above the maximum, ascending.
inline std::vector<double> threshold_candidates(const ScoreSet& s) {
    std::vector<double> distinct;
    for (const auto& e : s.entries) distinct.push_back(e.score);
    require(!distinct.empty(), "threshold candidates: empty score set");
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates{distinct.front() - 1.0};
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    candidates.push_back(distinct.back() + 1.0);
    return candidates;
}

/// Picks the candidate threshold with the smallest |FAR-FRR|, ties to the
/// smaller FAR, then the smaller tau. Comparisons use exact integer
/// cross-multiplication.
inline EerResult eer_threshold(const ScoreSet& dev) {
    dev.require_both_classes();
    const std::vector<double> candidates = threshold_candidates(dev);

    bool have = false;
    std::uint64_t best_gap = 0, best_fa = 0;
    EerResult best;
    for (double tau : candidates) {
        const auto c = metrics_detail::count_errors(dev, tau);
        const std::uint64_t a = c.false_accepts * c.genuine, r = c.false_rejects * c.attacks;
        const std::uint64_t gap = a > r ? a - r : r - a;
        if (!have || gap < best_gap || (gap == best_gap && c.false_accepts < best_fa)) {
            have = true;
            best_gap = gap;
            best_fa = c.false_accepts;
            const ErrorRates er = metrics_detail::rates(c);
            best = {tau, er.far, er.frr, 0.5 * (er.far + er.frr)};
        }
    }
    return best;
}

inline double half_total_error(double far, double frr) { return (far + frr) / 2.0; }

struct HterResult {
    double far = 0.0;
    double frr = 0.0;
    double hter = 0.0;
};

inline HterResult hter(const ScoreSet& test, double tau) {
    const ErrorRates r = far_frr(test, tau);
    return {r.far, r.frr, half_total_error(r.far, r.frr)};
}

/// Fraction of correct accept/reject decisions; one class alone is allowed.
inline double accuracy(const ScoreSet& test, double tau) {
    test.validate();
    require(!test.entries.empty(), "accuracy: empty score set");
    std::size_t correct = 0;
    for (const auto& e : test.entries) correct += accepted(e.score, tau) == (e.label == Label::genuine);
    return static_cast<double>(correct) / static_cast<double>(test.entries.size());
}

}  // namespace lforge
