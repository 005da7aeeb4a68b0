#pragma once

#include "thc/datagen.hpp"
#include "thc/stats.hpp"
#include "thc/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace thc {

inline constexpr double kAlphaTolerance = 1e-9;
inline constexpr double kSignificanceLevel = 0.05;
inline constexpr std::string_view kBaselineCell = "N/A (Shannon entropy)";

struct FoldSplit {
    std::size_t k = 5;
    std::vector<std::size_t> assignments; // per-record fold index

    std::size_t size() const noexcept { return assignments.size(); }

    std::vector<std::size_t> test_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> train_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(i);
        return out;
    }

    /// FNV-1a over k and the assignments.
    std::uint64_t hash() const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::uint64_t v) {
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        };
        mix(k);
        for (auto a : assignments) mix(a);
        return h;
    }

    bool operator==(const FoldSplit&) const = default;
};

/// Shuffles 0..n-1 and deals the indices round-robin into k folds.
inline FoldSplit kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n) {
        throw Error(Errc::InvalidK, "k=" + std::to_string(k) + " invalid for n=" + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldSplit split{k, std::vector<std::size_t>(n)};
    for (std::size_t pos = 0; pos < n; ++pos) split.assignments[order[pos]] = pos % k;
    return split;
}

/// Fraction of matches; prob >= 0.5 predicts class 1.
inline double accuracy(std::span<const std::uint8_t> labels, std::span<const double> probs) {
    if (labels.size() != probs.size()) throw Error(Errc::DimensionMismatch, "labels/probs length differ");
    if (labels.empty()) throw Error(Errc::EmptyInput, "accuracy of empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += static_cast<std::size_t>((probs[i] >= 0.5) == (labels[i] != 0));
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

struct FoldResult {
    std::size_t fold_index = 0;
    double test_accuracy = 0.0;
    std::vector<double> train_loss_trace;

    bool operator==(const FoldResult&) const = default;
};

/// Trains a fresh model on every fold except `fold_index` and scores the held-out fold.
/// Input shape and clinical width are taken from the cohort; model and shuffle seeds are
/// `train.seed ^ fold_index`.
inline FoldResult run_fold(std::span<const PatientRecord> cohort, const FoldSplit& split, std::size_t fold_index,
                           const ModelConfig& architecture, const TrainConfig& train_config) {
    if (split.size() != cohort.size()) throw Error(Errc::DimensionMismatch, "split does not match cohort size");
    if (fold_index >= split.k) throw Error(Errc::InvalidK, "fold index out of range");

    std::vector<PatientRecord> train_part, test_part;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        (split.assignments[i] == fold_index ? test_part : train_part).push_back(cohort[i]);
    }
    const auto stats = compute_normalization_stats(train_part);
    const Dataset train_set = make_dataset(train_part, stats);
    const Dataset test_set = make_dataset(test_part, stats);

    const std::uint64_t seed = train_config.seed ^ static_cast<std::uint64_t>(fold_index);
    ModelConfig arch = architecture;
    const auto& shape = cohort.front().volume.shape();
    arch.input_height = shape[0];
    arch.input_width = shape[1];
    arch.input_channels = shape[2];
    arch.clinical_dim = kEncodedClinicalDim;
    arch.seed = seed;
    TrainConfig tc = train_config;
    tc.seed = seed;

    auto trained = train(build_model(arch), train_set, tc);
    const auto probs = trained.model.forward(test_set.volumes, test_set.clinical).recurrence_prob;

    FoldResult r{fold_index, accuracy(test_set.labels, probs), {}};
    for (const auto& e : trained.trace) r.train_loss_trace.push_back(e.total);
    return r;
}

/// 0.1, 0.3, ..., 3.9 with 1.0 inserted in order.
inline std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int i = 0; i < 20; ++i) {
        const double a = std::round((0.1 + 0.2 * i) * 1e9) / 1e9;
        if (a > 1.0 && (g.empty() || g.back() < 1.0)) g.push_back(1.0);
        g.push_back(a);
    }
    return g;
}

inline bool is_baseline_alpha(double a) noexcept { return std::abs(a - 1.0) <= kAlphaTolerance; }

inline bool better_and_significant(double average, double baseline_average, std::optional<double> p_value) {
    return p_value && average > baseline_average && *p_value < kSignificanceLevel;
}

struct SweepConfig {
    std::vector<double> alpha_grid = default_alpha_grid();
    std::size_t k = 5;
    std::uint64_t base_seed = 0;
    ModelConfig model{};
    TrainConfig train{};
    TestKind test = TestKind::Welch;
    std::size_t parallel_folds = 1;

    void validate() const {
        if (alpha_grid.empty()) throw Error(Errc::InvalidConfig, "alpha grid is empty");
        for (double a : alpha_grid) (void)Alpha(a);
        if (std::none_of(alpha_grid.begin(), alpha_grid.end(), is_baseline_alpha)) {
            throw Error(Errc::InvalidConfig, "alpha grid must contain 1.0 (baseline required)");
        }
        if (k < 2) throw Error(Errc::InvalidK, "k must be >= 2");
        if (parallel_folds < 1) throw Error(Errc::InvalidConfig, "parallel_folds must be >= 1");
        train.validate();
    }
};

struct SweepRow {
    double alpha = 1.0;
    std::vector<double> fold_accuracies;
    double average = 0.0;
    double sd = 0.0;
    std::optional<double> p_value; // absent on the baseline row
    bool better_and_significant = false;
    std::uint64_t split_hash = 0;
};

/// Aggregates per-alpha fold accuracies into rows and tests each against the alpha=1 row.
inline std::vector<SweepRow> build_rows(const std::vector<std::pair<double, std::vector<double>>>& per_alpha,
                                        TestKind test = TestKind::Welch, std::uint64_t split_hash = 0) {
    const auto base = std::find_if(per_alpha.begin(), per_alpha.end(), [](const auto& r) { return is_baseline_alpha(r.first); });
    if (base == per_alpha.end()) throw Error(Errc::InvalidConfig, "no alpha=1.0 baseline row");
    const auto base_stats = mean_sd(base->second);

    std::vector<SweepRow> rows;
    for (const auto& [alpha, folds] : per_alpha) {
        SweepRow row;
        row.alpha = alpha;
        row.fold_accuracies = folds;
        const auto s = mean_sd(folds);
        row.average = s.mean;
        row.sd = s.sd;
        row.split_hash = split_hash;
        if (!is_baseline_alpha(alpha)) row.p_value = significance_test(folds, base->second, test);
        row.better_and_significant = better_and_significant(row.average, base_stats.mean, row.p_value);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct FoldProgress {
    double alpha;
    FoldResult result;
};

/// Runs every (alpha, fold) pair on one shared split. Work items run on up to
/// `parallel_folds` threads; results are reduced in grid order.
inline std::vector<SweepRow> run_sweep(std::span<const PatientRecord> cohort, const SweepConfig& config,
                                       const std::function<void(const FoldProgress&)>& on_fold = {}) {
    config.validate();
    const FoldSplit split = kfold_split(cohort.size(), config.k, config.base_seed);
    const std::size_t n_alpha = config.alpha_grid.size();
    const std::size_t n_items = n_alpha * config.k;

    std::vector<double> acc(n_items, 0.0);
    std::vector<std::exception_ptr> errors(n_items);
    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;

    auto worker = [&] {
        for (std::size_t item = next++; item < n_items; item = next++) {
            const std::size_t a = item / config.k, fold = item % config.k;
            try {
                TrainConfig tc = config.train;
                tc.alpha = Alpha(config.alpha_grid[a]);
                tc.seed = config.base_seed;
                const auto r = run_fold(cohort, split, fold, config.model, tc);
                acc[item] = r.test_accuracy;
                if (on_fold) {
                    std::lock_guard lock(report_mutex);
                    on_fold({config.alpha_grid[a], r});
                }
            } catch (...) {
                errors[item] = std::current_exception();
            }
        }
    };

    const std::size_t n_threads = std::min(config.parallel_folds, n_items);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<std::pair<double, std::vector<double>>> per_alpha;
    for (std::size_t a = 0; a < n_alpha; ++a) {
        per_alpha.emplace_back(config.alpha_grid[a],
                               std::vector<double>(acc.begin() + static_cast<std::ptrdiff_t>(a * config.k),
                                                   acc.begin() + static_cast<std::ptrdiff_t>((a + 1) * config.k)));
    }
    return build_rows(per_alpha, config.test, split.hash());
}

// ---- grid flags ----

inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        throw Error(Errc::InvalidConfig, "bad " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

/// "start:stop:step", inclusive of stop within 1e-9.
inline std::vector<double> parse_alpha_grid(std::string_view spec) {
    const auto c1 = spec.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : spec.find(':', c1 + 1);
    if (c2 == std::string_view::npos || spec.find(':', c2 + 1) != std::string_view::npos) {
        throw Error(Errc::InvalidConfig, "grid must be start:stop:step");
    }
    const double start = parse_double(spec.substr(0, c1), "grid start");
    const double stop = parse_double(spec.substr(c1 + 1, c2 - c1 - 1), "grid stop");
    const double step = parse_double(spec.substr(c2 + 1), "grid step");
    if (!(step > 0.0) || stop < start) throw Error(Errc::InvalidConfig, "grid needs step > 0 and stop >= start");
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        const double a = start + static_cast<double>(i) * step;
        if (a > stop + kAlphaTolerance) break;
        grid.push_back(std::round(a * 1e9) / 1e9);
        if (grid.size() > 100000) throw Error(Errc::InvalidConfig, "grid too large");
    }
    return grid;
}

/// "1.0,1.5,2.3".
inline std::vector<double> parse_alpha_list(std::string_view spec) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = std::min(spec.find(',', pos), spec.size());
        out.push_back(parse_double(spec.substr(pos, comma - pos), "alpha"));
        pos = comma + 1;
    }
    return out;
}

// ---- reports ----

enum class ReportFormat { Csv, Markdown };

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string alpha_cell(double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", a);
    std::string s = buf;
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

inline std::string display_p(const std::optional<double>& p) {
    if (!p) return std::string(kBaselineCell);
    return fixed(*p, *p < 0.01 ? 3 : 2);
}

inline std::string csv_header(std::size_t k) {
    std::string h = "alpha";
    for (std::size_t f = 1; f <= k; ++f) h += ",fold" + std::to_string(f);
    return h + ",average,sd,p_value,highlight";
}

inline std::size_t fold_count(std::span<const SweepRow> rows) {
    if (rows.empty()) throw Error(Errc::EmptyInput, "no sweep rows");
    const std::size_t k = rows.front().fold_accuracies.size();
    for (const auto& r : rows)
        if (r.fold_accuracies.size() != k) throw Error(Errc::DimensionMismatch, "rows disagree on fold count");
    return k;
}

} // namespace detail

/// Display table: 2 decimals (3 for p < 0.01), highlighted rows marked.
inline std::string format_report(std::span<const SweepRow> rows, ReportFormat format) {
    const std::size_t k = detail::fold_count(rows);
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << detail::csv_header(k) << '\n';
        for (const auto& r : rows) {
            out << detail::alpha_cell(r.alpha);
            for (double a : r.fold_accuracies) out << ',' << detail::fixed(a, 2);
            out << ',' << detail::fixed(r.average, 2) << ',' << detail::fixed(r.sd, 2) << ','
                << detail::display_p(r.p_value) << ',' << (r.better_and_significant ? "*" : "") << '\n';
        }
        return out.str();
    }

    out << "| α |";
    for (std::size_t f = 1; f <= k; ++f) out << " Fold " << f << " |";
    out << " Average | SD | p-value |\n|---|";
    for (std::size_t f = 0; f < k + 3; ++f) out << "---|";
    out << '\n';
    for (const auto& r : rows) {
        const auto cell = [&](const std::string& s) { return r.better_and_significant ? "**" + s + "**" : s; };
        out << "| " << cell(detail::alpha_cell(r.alpha)) << " |";
        for (double a : r.fold_accuracies) out << ' ' << cell(detail::fixed(a, 2)) << " |";
        out << ' ' << cell(detail::fixed(r.average, 2)) << " | " << cell(detail::fixed(r.sd, 2)) << " | "
            << cell(detail::display_p(r.p_value)) << " |\n";
    }
    return out.str();
}

/// Machine-readable sweep file: 6 decimals, empty p_value on the baseline row.
inline std::string sweep_csv(std::span<const SweepRow> rows) {
    const std::size_t k = detail::fold_count(rows);
    std::ostringstream out;
    out << detail::csv_header(k) << '\n';
    for (const auto& r : rows) {
        out << detail::fixed(r.alpha, 6);
        for (double a : r.fold_accuracies) out << ',' << detail::fixed(a, 6);
        out << ',' << detail::fixed(r.average, 6) << ',' << detail::fixed(r.sd, 6) << ','
            << (r.p_value ? detail::fixed(*r.p_value, 6) : "") << ',' << (r.better_and_significant ? "*" : "") << '\n';
    }
    return out.str();
}

/// Parses either the sweep file or the csv report. Throws IoError on any malformed content.
inline std::vector<SweepRow> parse_sweep_csv(std::string_view text) {
    auto fail = [](std::size_t line, const std::string& msg) -> Error {
        return Error(Errc::IoError, "sweep csv line " + std::to_string(line) + ": " + msg);
    };
    std::vector<std::string> lines;
    {
        std::string s(text);
        std::istringstream in(s);
        for (std::string l; std::getline(in, l);) {
            if (!l.empty() && l.back() == '\r') l.pop_back();
            lines.push_back(l);
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() < 2) throw fail(1, "missing header or rows");

    const auto split_fields = [](const std::string& l) {
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (true) {
            const auto c = l.find(',', pos);
            f.push_back(l.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
            if (c == std::string::npos) break;
            pos = c + 1;
        }
        return f;
    };
    const auto header = split_fields(lines[0]);
    if (header.size() < 6) throw fail(1, "bad header");
    const std::size_t k = header.size() - 5;
    if (lines[0] != detail::csv_header(k)) throw fail(1, "bad header");

    std::vector<SweepRow> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = split_fields(lines[li]);
        if (f.size() != header.size()) throw fail(li + 1, "expected " + std::to_string(header.size()) + " fields");
        try {
            SweepRow r;
            r.alpha = parse_double(f[0], "alpha");
            for (std::size_t j = 0; j < k; ++j) r.fold_accuracies.push_back(parse_double(f[1 + j], "fold accuracy"));
            r.average = parse_double(f[1 + k], "average");
            r.sd = parse_double(f[2 + k], "sd");
            const auto& p = f[3 + k];
            if (!p.empty() && p != kBaselineCell) r.p_value = parse_double(p, "p_value");
            const auto& h = f[4 + k];
            if (!h.empty() && h != "*") throw fail(li + 1, "highlight must be '*' or empty");
            r.better_and_significant = h == "*";
            rows.push_back(std::move(r));
        } catch (const Error& e) {
            if (e.code() == Errc::IoError) throw;
            throw fail(li + 1, e.what());
        }
    }
    return rows;
}

inline std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_sweep_csv(buf.str());
}

} // namespace thc
