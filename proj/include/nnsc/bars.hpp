#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nnsc/densemat.hpp"
#include "nnsc/random.hpp"

namespace nnsc::bars {

struct BarsSpec {
    std::size_t image_side = 3;
    std::size_t n_samples = 500;
    double active_prob = 0.2;  // probability that a feature is active in a sample
    double amp_scale = 1.0;    // mean of the exponential activation amplitude
    std::uint64_t seed = 0;

    void check() const {
        if (image_side < 2) throw std::invalid_argument("BarsSpec: image_side must be >= 2");
        if (n_samples == 0) throw std::invalid_argument("BarsSpec: n_samples must be >= 1");
        if (!(active_prob > 0.0 && active_prob <= 1.0)) {
            throw std::invalid_argument("BarsSpec: active_prob must lie in (0, 1]");
        }
        if (!(amp_scale > 0.0) || !std::isfinite(amp_scale)) {
            throw std::invalid_argument("BarsSpec: amp_scale must be > 0");
        }
    }
};

/// Number of generating features for a side x side grid: singles plus adjacent doubles.
inline std::size_t feature_count(std::size_t side) { return 2 * side + 2 * (side - 1); }

/// Number of single-bar features; they occupy the leading columns of original_features().
inline std::size_t single_bar_count(std::size_t side) { return 2 * side; }

/**
 * Unit-norm bar features, pixels flattened row-major (index = row * side + col).
 *
 * Column order: horizontal bars (rows 0..side-1), vertical bars, horizontal
 * double bars on adjacent rows (0,1), (1,2), ..., vertical double bars on
 * adjacent columns. For side 3 this gives the ten 9-pixel features.
 */
inline Matrix original_features(std::size_t side = 3) {
    if (side < 2) throw std::invalid_argument("original_features: side must be >= 2");
    const std::size_t pixels = side * side;
    Matrix a(pixels, feature_count(side));
    std::size_t col = 0;
    auto mark_row = [&](std::size_t c, std::size_t r) {
        for (std::size_t k = 0; k < side; ++k) a(r * side + k, c) = 1.0;
    };
    auto mark_col = [&](std::size_t c, std::size_t q) {
        for (std::size_t k = 0; k < side; ++k) a(k * side + q, c) = 1.0;
    };
    for (std::size_t r = 0; r < side; ++r) mark_row(col++, r);
    for (std::size_t q = 0; q < side; ++q) mark_col(col++, q);
    for (std::size_t r = 0; r + 1 < side; ++r, ++col) {
        mark_row(col, r);
        mark_row(col, r + 1);
    }
    for (std::size_t q = 0; q + 1 < side; ++q, ++col) {
        mark_col(col, q);
        mark_col(col, q + 1);
    }
    return normalize_columns(a);
}

struct BarsData {
    Matrix x;       // side^2 x n
    Matrix s_orig;  // features x n
    Matrix a_orig;  // side^2 x features
};

/// X = A_orig S_orig, with S_orig entries Bernoulli(active_prob) * Exponential(amp_scale).
inline BarsData generate(const BarsSpec& spec) {
    spec.check();
    Matrix a = original_features(spec.image_side);
    Matrix s(a.cols(), spec.n_samples);
    Rng rng(spec.seed);
    // Sample-major draw order: all features of sample 0, then sample 1, ...
    for (std::size_t j = 0; j < s.cols(); ++j) {
        for (std::size_t i = 0; i < s.rows(); ++i) {
            const bool active = rng.bernoulli(spec.active_prob);
            const double amp = rng.exponential(spec.amp_scale);
            s(i, j) = active ? amp : 0.0;
        }
    }
    Matrix x = matmul(a, s);
    return {std::move(x), std::move(s), std::move(a)};
}

struct MatchReport {
    std::vector<std::pair<std::size_t, std::size_t>> assignment;  // (learned, reference)
    std::vector<double> similarities;
    std::size_t recovered_count = 0;
    double threshold = 0.99;

    std::string to_text() const {
        std::ostringstream os;
        os << "learned  reference  similarity\n";
        for (std::size_t k = 0; k < assignment.size(); ++k) {
            os << assignment[k].first << "  " << assignment[k].second << "  " << format_double(similarities[k])
               << (similarities[k] >= threshold ? "  recovered" : "") << '\n';
        }
        return os.str();
    }
};

inline constexpr double default_match_threshold = 0.99;

/**
 * Greedy one-to-one matching of learned columns to reference columns by
 * cosine similarity. Pairs are taken in descending similarity order; ties go
 * to the lower learned index, then the lower reference index. Zero columns
 * have similarity 0 to everything.
 */
inline MatchReport match_features(const Matrix& learned, const Matrix& reference,
                                  double threshold = default_match_threshold) {
    if (learned.rows() != reference.rows()) {
        throw DimensionError("match_features: row mismatch, learned " + learned.shape() + " vs reference " +
                             reference.shape());
    }
    const auto ln = column_norms(learned);
    const auto rn = column_norms(reference);
    const std::size_t nl = learned.cols();
    const std::size_t nr = reference.cols();

    struct Candidate {
        double sim;
        std::size_t l;
        std::size_t r;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(nl * nr);
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t r = 0; r < nr; ++r) {
            double sim = 0.0;
            if (ln[l] > 0.0 && rn[r] > 0.0) {
                double dot = 0.0;
                for (std::size_t i = 0; i < learned.rows(); ++i) dot += learned(i, l) * reference(i, r);
                sim = std::clamp(dot / (ln[l] * rn[r]), -1.0, 1.0);
            }
            candidates.push_back({sim, l, r});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.l != b.l) return a.l < b.l;
        return a.r < b.r;
    });

    MatchReport report;
    report.threshold = threshold;
    std::vector<bool> used_l(nl, false);
    std::vector<bool> used_r(nr, false);
    for (const auto& c : candidates) {
        if (used_l[c.l] || used_r[c.r]) continue;
        used_l[c.l] = used_r[c.r] = true;
        report.assignment.emplace_back(c.l, c.r);
        report.similarities.push_back(c.sim);
        if (c.sim >= threshold) ++report.recovered_count;
    }
    return report;
}

// Graymap export: one side x side tile per column, left to right, separated by
// a single black pixel column. Values map linearly from [0, max entry] to [0, 255].

inline void write_pgm(std::ostream& os, const Matrix& features, std::size_t side) {
    if (side == 0 || features.rows() != side * side) {
        throw DimensionError("write_pgm: column length " + std::to_string(features.rows()) +
                             " is not side^2 for side " + std::to_string(side));
    }
    const std::size_t tiles = features.cols();
    const std::size_t width = tiles == 0 ? 0 : tiles * side + (tiles - 1);
    const double top = features.empty() ? 0.0 : std::max(0.0, max_entry(features));

    os << "P2\n" << width << ' ' << side << "\n255\n";
    for (std::size_t r = 0; r < side; ++r) {
        std::string line;
        for (std::size_t t = 0; t < tiles; ++t) {
            if (t != 0) line += " 0";
            for (std::size_t c = 0; c < side; ++c) {
                const double v = features(r * side + c, t);
                int level = 0;
                if (top > 0.0 && v > 0.0) level = static_cast<int>(std::lround(v / top * 255.0));
                if (!line.empty()) line += ' ';
                line += std::to_string(std::clamp(level, 0, 255));
            }
        }
        os << line << '\n';
    }
}

inline void write_pgm(const std::string& path, const Matrix& features, std::size_t side) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    write_pgm(os, features, side);
    if (!os) throw FormatError("write failed for '" + path + "'");
}

}  // namespace nnsc::bars
