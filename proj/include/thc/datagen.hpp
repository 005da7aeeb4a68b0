#pragma once

// Synthetic cohorts shaped like the clinical study schema: an image volume with
// a lesion blob, eleven quantitative and five qualitative clinical variables,
// and a binary recurrence label drawn from a planted model.
//
// Planted model, per patient:
//   blob      b ~ N(0,1)            drives lesion peak intensity and radius
//   clinical  c = (-z_hb - z_alb + z_thr) / sqrt(3)
//   latent    L = (b + c) / sqrt(2)
//   score     s = signal_strength * L + N(0,1)
// Labels are 1 for the upper half of scores, then an equal number of positives
// and negatives (round(label_noise * n / 2) each) are flipped, which keeps the
// classes balanced while mislabelling a `label_noise` fraction.
//
// Distribution parameters are plausible physiological ranges, not estimates of
// any real cohort. See README "Data card".

#include "thc/binary_io.hpp"
#include "thc/error.hpp"
#include "thc/model.hpp"
#include "thc/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace thc {

enum class CohortKind { HeadNeck, Lung };
enum class Gender { M, F };
enum class Tabacology { Smoker, NonSmoker, FormerSmoker };

inline std::string_view to_string(CohortKind k) { return k == CohortKind::HeadNeck ? "head-neck-like" : "lung-like"; }
inline std::string_view to_string(Gender g) { return g == Gender::M ? "M" : "F"; }
inline std::string_view to_string(Tabacology t) {
    switch (t) {
    case Tabacology::Smoker: return "smoker";
    case Tabacology::NonSmoker: return "non-smoker";
    case Tabacology::FormerSmoker: return "former-smoker";
    }
    return "?";
}

struct QuantitativeClinical {
    double hemoglobin = 0;            // g/dL
    double lymphocytes = 0;           // Giga/L
    double leucocytes = 0;            // Giga/L
    double thrombocytes = 0;          // Giga/L
    double albumin = 0;               // g/L
    double treatment_duration = 0;    // days
    double total_dose = 0;            // Gy
    double num_fractions = 1;         // count
    double avg_dose_per_fraction = 0; // Gy
    double weight_start = 0;          // kg
    double weight_end = 0;            // kg

    static constexpr std::size_t kFieldCount = 11;

    std::array<double, kFieldCount> as_array() const {
        return {hemoglobin,    lymphocytes,   leucocytes, thrombocytes, albumin,   treatment_duration,
                total_dose,    num_fractions, avg_dose_per_fraction,    weight_start, weight_end};
    }

    static QuantitativeClinical from_array(const std::array<double, kFieldCount>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8], a[9], a[10]};
    }

    friend bool operator==(const QuantitativeClinical&, const QuantitativeClinical&) = default;
};

inline constexpr std::array<std::string_view, QuantitativeClinical::kFieldCount> kQuantitativeFieldNames{
    "hemoglobin",   "lymphocytes",   "leucocytes",            "thrombocytes", "albumin",   "treatment_duration",
    "total_dose",   "num_fractions", "avg_dose_per_fraction", "weight_start", "weight_end"};

struct Tnm {
    int t = 0; // 0-4
    int n = 0; // 0-3
    int m = 0; // 0-1
    friend bool operator==(const Tnm&, const Tnm&) = default;
};

struct QualitativeClinical {
    Gender gender = Gender::M;
    Tabacology tabacology = Tabacology::NonSmoker;
    bool induction_chemo = false;
    bool concomitant_chemo = false;
    Tnm tnm;

    friend bool operator==(const QualitativeClinical&, const QualitativeClinical&) = default;
};

struct PatientRecord {
    std::string id;
    Tensor volume; // H x W x C, values in [0,1]
    QuantitativeClinical quantitative;
    QualitativeClinical qualitative;
    std::uint8_t recurrence = 0;

    friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct CohortConfig {
    std::size_t n_patients = 434;
    CohortKind kind = CohortKind::HeadNeck;
    Shape image_shape{32, 32, 1};
    double signal_strength = 1.0;
    double label_noise = 0.1;
    std::uint64_t seed = 0;

    /// "head-neck-like" (n=434), "lung-like" (n=146), "separable" (strong signal, no label
    /// noise, n=200) or "null" (no signal, n=200).
    static CohortConfig preset(std::string_view name) {
        CohortConfig c;
        if (name == "head-neck-like") {
            c.n_patients = 434;
        } else if (name == "lung-like") {
            c.n_patients = 146;
            c.kind = CohortKind::Lung;
        } else if (name == "separable") {
            c.n_patients = 200;
            c.signal_strength = 30.0;
            c.label_noise = 0.0;
        } else if (name == "null") {
            c.n_patients = 200;
            c.signal_strength = 0.0;
        } else {
            throw Error(Errc::InvalidConfig, "unknown cohort preset '" + std::string(name) + "'");
        }
        return c;
    }

    void validate() const {
        if (n_patients < 10) throw Error(Errc::InvalidConfig, "n_patients must be >= 10");
        if (image_shape.size() != 3 || image_shape[0] == 0 || image_shape[1] == 0 || image_shape[2] == 0) {
            throw Error(Errc::InvalidConfig, "image_shape must be (H, W, C) with positive entries");
        }
        if (image_shape[0] % 8 != 0 || image_shape[1] % 8 != 0) {
            throw Error(Errc::InvalidConfig, "H and W must be divisible by 8 (three encoder levels)");
        }
        if (!(signal_strength >= 0.0) || !std::isfinite(signal_strength)) {
            throw Error(Errc::InvalidConfig, "signal_strength must be >= 0");
        }
        if (!(label_noise >= 0.0 && label_noise <= 0.5)) throw Error(Errc::InvalidConfig, "label_noise must be in [0, 0.5]");
    }
};

namespace detail {

struct FieldDistribution {
    double mean;
    double sd;
    double floor;
};

// Population parameters used both to draw values and to standardise the planted score.
inline constexpr FieldDistribution kHemoglobin{13.5, 1.5, 5.0};
inline constexpr FieldDistribution kAlbumin{40.0, 5.0, 15.0};
inline constexpr FieldDistribution kThrombocytes{250.0, 60.0, 20.0};

inline double draw(std::mt19937_64& rng, FieldDistribution f) {
    std::normal_distribution<double> d(f.mean, f.sd);
    return std::max(f.floor, d(rng));
}

inline double round_to(double v, double step) { return std::round(v / step) * step; }

/// Rounds through float so values survive the 32-bit volume format exactly.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline Tensor render_volume(std::mt19937_64& rng, const Shape& shape, double blob) {
    const std::size_t h = shape[0], w = shape[1], c = shape[2];
    const double scale = static_cast<double>(std::min(h, w)) / 32.0;
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const double amplitude = std::clamp(0.45 + 0.15 * blob, 0.05, 0.85);
    const double radius = std::clamp(4.0 + 1.2 * blob, 1.5, 8.0) * scale;
    const double aspect = 0.7 + 0.6 * u01(rng);
    const double theta = std::acos(-1.0) * u01(rng);
    const double margin = std::min(radius + 1.0, static_cast<double>(std::min(h, w)) / 2.0 - 1.0);
    const double cy = margin + (static_cast<double>(h) - 2 * margin) * u01(rng);
    const double cx = margin + (static_cast<double>(w) - 2 * margin) * u01(rng);
    const double ct = std::cos(theta), st = std::sin(theta);

    Tensor vol(shape);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
            const double a = (ct * dx + st * dy) / radius;
            const double b = (-st * dx + ct * dy) / (radius * aspect);
            const double profile = amplitude * std::exp(-0.5 * (a * a + b * b));
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double slice = 1.0 - 0.1 * static_cast<double>(ch) / static_cast<double>(c);
                const double v = 0.1 + 0.02 * u01(rng) + slice * profile;
                vol[(y * w + x) * c + ch] = to_f32(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return vol;
}

} // namespace detail

inline std::vector<PatientRecord> generate_cohort(const CohortConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const bool lung = config.kind == CohortKind::Lung;
    const std::size_t n = config.n_patients;

    std::vector<PatientRecord> records(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = records[i];
        std::ostringstream id;
        id << (lung ? "LU-" : "HN-");
        id.width(4);
        id.fill('0');
        id << i + 1;
        r.id = id.str();

        auto& q = r.quantitative;
        q.hemoglobin = detail::round_to(detail::draw(rng, detail::kHemoglobin), 0.01);
        q.lymphocytes = detail::round_to(std::exp(std::log(1.8) + 0.35 * std_normal(rng)), 0.01);
        q.leucocytes = detail::round_to(std::max(1.0, 7.0 + 1.8 * std_normal(rng)), 0.01);
        q.thrombocytes = detail::round_to(detail::draw(rng, detail::kThrombocytes), 0.1);
        q.albumin = detail::round_to(detail::draw(rng, detail::kAlbumin), 0.1);
        q.num_fractions = std::max(1.0, std::round((lung ? 30.0 : 35.0) + (lung ? 3.0 : 2.0) * std_normal(rng)));
        q.avg_dose_per_fraction = detail::round_to(std::max(1.0, 2.0 + 0.1 * std_normal(rng)), 0.01);
        q.total_dose = detail::round_to(q.num_fractions * q.avg_dose_per_fraction, 0.01);
        q.treatment_duration = std::round(q.num_fractions * 7.0 / 5.0 + 6.0 * u01(rng));
        q.weight_start = detail::round_to(std::max(35.0, (lung ? 68.0 : 72.0) + 12.0 * std_normal(rng)), 0.1);
        q.weight_end = detail::round_to(std::max(30.0, q.weight_start - std::abs(3.0 + 2.0 * std_normal(rng))), 0.1);

        auto& c = r.qualitative;
        c.gender = u01(rng) < (lung ? 0.65 : 0.75) ? Gender::M : Gender::F;
        const double tab = u01(rng);
        c.tabacology = tab < 0.45 ? Tabacology::Smoker : (tab < 0.70 ? Tabacology::NonSmoker : Tabacology::FormerSmoker);
        c.induction_chemo = u01(rng) < 0.3;
        c.concomitant_chemo = u01(rng) < 0.6;
        c.tnm.t = static_cast<int>(rng() % 5);
        c.tnm.n = static_cast<int>(rng() % 4);
        c.tnm.m = u01(rng) < 0.1 ? 1 : 0;

        const double blob = std_normal(rng);
        const double clinical = (-(q.hemoglobin - detail::kHemoglobin.mean) / detail::kHemoglobin.sd -
                                 (q.albumin - detail::kAlbumin.mean) / detail::kAlbumin.sd +
                                 (q.thrombocytes - detail::kThrombocytes.mean) / detail::kThrombocytes.sd) /
                                std::sqrt(3.0);
        const double latent = (blob + clinical) / std::sqrt(2.0);
        scores[i] = config.signal_strength * latent + std_normal(rng);
        r.volume = detail::render_volume(rng, config.image_shape, blob);
    }

    // upper half of the scores is positive
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    std::vector<std::size_t> negatives(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n / 2));
    std::vector<std::size_t> positives(order.begin() + static_cast<std::ptrdiff_t>(n / 2), order.end());
    for (auto i : positives) records[i].recurrence = 1;

    const auto flips = static_cast<std::size_t>(std::llround(config.label_noise * static_cast<double>(n) / 2.0));
    std::shuffle(negatives.begin(), negatives.end(), rng);
    std::shuffle(positives.begin(), positives.end(), rng);
    for (std::size_t k = 0; k < std::min({flips, negatives.size(), positives.size()}); ++k) {
        records[negatives[k]].recurrence = 1;
        records[positives[k]].recurrence = 0;
    }
    return records;
}

// ---------------------------------------------------------------------------
// Clinical encoding

struct NormalizationStats {
    std::array<double, QuantitativeClinical::kFieldCount> mean{};
    std::array<double, QuantitativeClinical::kFieldCount> sd{};
    bool computed = false;
};

inline constexpr std::size_t kEncodedClinicalDim = 23;

/// Mean and sample SD per quantitative field; an SD of 0 is stored as 1.
inline NormalizationStats compute_normalization_stats(std::span<const PatientRecord> records) {
    if (records.size() < 2) throw Error(Errc::InsufficientData, "need at least two records for normalization");
    NormalizationStats s;
    const double n = static_cast<double>(records.size());
    for (const auto& r : records) {
        const auto v = r.quantitative.as_array();
        for (std::size_t f = 0; f < v.size(); ++f) s.mean[f] += v[f];
    }
    for (auto& m : s.mean) m /= n;
    for (const auto& r : records) {
        const auto v = r.quantitative.as_array();
        for (std::size_t f = 0; f < v.size(); ++f) s.sd[f] += (v[f] - s.mean[f]) * (v[f] - s.mean[f]);
    }
    for (auto& sd : s.sd) {
        sd = std::sqrt(sd / (n - 1.0));
        if (sd == 0.0) sd = 1.0;
    }
    s.computed = true;
    return s;
}

/// z-scored quantitative fields (11), one-hot gender (M,F), tabacology (smoker,
/// non-smoker, former-smoker), induction and concomitant chemo (yes,no), then
/// t/4, n/3, m/1. Length 23.
inline Tensor encode_clinical(const QuantitativeClinical& q, const QualitativeClinical& c,
                              const NormalizationStats& stats) {
    if (!stats.computed) throw Error(Errc::MissingStats, "normalization stats were not computed");
    std::vector<double> v;
    v.reserve(kEncodedClinicalDim);
    const auto raw = q.as_array();
    for (std::size_t f = 0; f < raw.size(); ++f) v.push_back((raw[f] - stats.mean[f]) / stats.sd[f]);
    v.push_back(c.gender == Gender::M ? 1.0 : 0.0);
    v.push_back(c.gender == Gender::F ? 1.0 : 0.0);
    v.push_back(c.tabacology == Tabacology::Smoker ? 1.0 : 0.0);
    v.push_back(c.tabacology == Tabacology::NonSmoker ? 1.0 : 0.0);
    v.push_back(c.tabacology == Tabacology::FormerSmoker ? 1.0 : 0.0);
    v.push_back(c.induction_chemo ? 1.0 : 0.0);
    v.push_back(c.induction_chemo ? 0.0 : 1.0);
    v.push_back(c.concomitant_chemo ? 1.0 : 0.0);
    v.push_back(c.concomitant_chemo ? 0.0 : 1.0);
    v.push_back(c.tnm.t / 4.0);
    v.push_back(c.tnm.n / 3.0);
    v.push_back(c.tnm.m / 1.0);
    return Tensor({kEncodedClinicalDim}, std::move(v));
}

/// Stacks records into a network batch with clinical vectors encoded under `stats`.
inline Batch make_dataset(std::span<const PatientRecord> records, const NormalizationStats& stats) {
    if (records.empty()) throw Error(Errc::EmptyDataset, "no records");
    const Shape vshape = records.front().volume.shape();
    Shape shape{records.size()};
    shape.insert(shape.end(), vshape.begin(), vshape.end());
    Batch b{Tensor(shape), Tensor({records.size(), kEncodedClinicalDim}), {}};
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.volume.shape() != vshape) throw Error(Errc::ShapeMismatch, "records have different volume shapes");
        std::copy(r.volume.storage().begin(), r.volume.storage().end(), b.volumes.item(i).begin());
        const auto enc = encode_clinical(r.quantitative, r.qualitative, stats);
        std::copy(enc.storage().begin(), enc.storage().end(), b.clinical.item(i).begin());
        b.labels.push_back(r.recurrence);
    }
    return b;
}

// ---------------------------------------------------------------------------
// Volume files: "THCV", u16 version, u8 ndim, u32 dims, f32 data (all little-endian).

inline constexpr std::uint16_t kVolumeVersion = 1;

inline void save_volume(const Tensor& t, const std::filesystem::path& path) {
    if (t.rank() == 0 || t.rank() > 255) throw Error(Errc::ShapeMismatch, "volume rank must be in 1..255");
    auto out = binio::open_output(path);
    out.write("THCV", 4);
    binio::write_le<std::uint16_t>(out, kVolumeVersion);
    binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.storage()) binio::write_f32(out, static_cast<float>(v));
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline Tensor load_volume(const std::filesystem::path& path) {
    auto in = binio::open_input(path);
    binio::expect_magic(in, "THCV");
    const auto version = binio::read_le<std::uint16_t>(in);
    if (version != kVolumeVersion) throw Error(Errc::VersionMismatch, "volume version " + std::to_string(version));
    const auto ndim = binio::read_le<std::uint8_t>(in);
    if (ndim == 0) throw Error(Errc::IoError, "volume has zero dimensions");
    Shape shape(ndim);
    for (auto& d : shape) {
        d = binio::read_le<std::uint32_t>(in);
        if (d == 0) throw Error(Errc::IoError, "zero-length axis in volume header");
    }
    const std::size_t count = shape_size(shape);
    const auto file_size = std::filesystem::file_size(path);
    const std::size_t header = 4 + 2 + 1 + 4 * static_cast<std::size_t>(ndim);
    if (file_size != header + 4 * count) throw Error(Errc::IoError, "volume payload size does not match header");
    std::vector<double> data(count);
    for (auto& v : data) v = binio::read_f32(in);
    binio::expect_eof(in);
    return Tensor(std::move(shape), std::move(data));
}

// ---------------------------------------------------------------------------
// Cohort manifest CSV

inline constexpr std::string_view kCohortHeader =
    "id,volume_path,recurrence,hemoglobin,lymphocytes,leucocytes,thrombocytes,albumin,treatment_duration,"
    "total_dose,num_fractions,avg_dose_per_fraction,weight_start,weight_end,gender,tabacology,induction_chemo,"
    "concomitant_chemo,tnm_t,tnm_n,tnm_m";

inline constexpr std::string_view kCohortManifestName = "cohort.csv";

namespace detail {

inline std::string format_number(double v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(17);
    s << v;
    return s.str();
}

inline double parse_number(const std::string& field) {
    std::istringstream s(field);
    s.imbue(std::locale::classic());
    double v = 0.0;
    s >> v;
    if (!s || s.peek() != std::char_traits<char>::eof()) throw Error(Errc::IoError, "bad number '" + field + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline bool parse_yes_no(const std::string& s) {
    if (s == "yes") return true;
    if (s == "no") return false;
    throw Error(Errc::IoError, "expected yes/no, got '" + s + "'");
}

} // namespace detail

/// Writes `volumes/<id>.thcv` files and `cohort.csv` under `dir`. Returns the manifest path.
inline std::filesystem::path write_cohort(std::span<const PatientRecord> records, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "volumes", ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + (dir / "volumes").string());
    const auto manifest = dir / kCohortManifestName;
    std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot create " + manifest.string());
    out << kCohortHeader << '\n';
    for (const auto& r : records) {
        const std::string rel = "volumes/" + r.id + ".thcv";
        save_volume(r.volume, dir / rel);
        out << r.id << ',' << rel << ',' << int(r.recurrence);
        for (double v : r.quantitative.as_array()) out << ',' << detail::format_number(v);
        const auto& c = r.qualitative;
        out << ',' << to_string(c.gender) << ',' << to_string(c.tabacology) << ','
            << (c.induction_chemo ? "yes" : "no") << ',' << (c.concomitant_chemo ? "yes" : "no") << ',' << c.tnm.t
            << ',' << c.tnm.n << ',' << c.tnm.m << '\n';
    }
    if (!out) throw Error(Errc::IoError, "write failed for " + manifest.string());
    return manifest;
}

/// Reads a cohort from a directory containing `cohort.csv` or from the CSV path itself.
inline std::vector<PatientRecord> read_cohort(const std::filesystem::path& location) {
    const auto manifest = std::filesystem::is_directory(location) ? location / kCohortManifestName : location;
    const auto base = manifest.parent_path();
    std::ifstream in(manifest, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + manifest.string());
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line) != detail::split_csv_line(std::string(kCohortHeader))) {
        throw Error(Errc::IoError, "cohort manifest header mismatch in " + manifest.string());
    }
    std::vector<PatientRecord> records;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 21) throw Error(Errc::IoError, "expected 21 fields, got " + std::to_string(f.size()));
        PatientRecord r;
        r.id = f[0];
        r.volume = load_volume(base / f[1]);
        const double label = detail::parse_number(f[2]);
        if (label != 0.0 && label != 1.0) throw Error(Errc::IoError, "recurrence must be 0 or 1");
        r.recurrence = static_cast<std::uint8_t>(label);
        std::array<double, QuantitativeClinical::kFieldCount> q{};
        for (std::size_t k = 0; k < q.size(); ++k) q[k] = detail::parse_number(f[3 + k]);
        r.quantitative = QuantitativeClinical::from_array(q);
        auto& c = r.qualitative;
        if (f[14] == "M") c.gender = Gender::M;
        else if (f[14] == "F") c.gender = Gender::F;
        else throw Error(Errc::IoError, "bad gender '" + f[14] + "'");
        if (f[15] == "smoker") c.tabacology = Tabacology::Smoker;
        else if (f[15] == "non-smoker") c.tabacology = Tabacology::NonSmoker;
        else if (f[15] == "former-smoker") c.tabacology = Tabacology::FormerSmoker;
        else throw Error(Errc::IoError, "bad tabacology '" + f[15] + "'");
        c.induction_chemo = detail::parse_yes_no(f[16]);
        c.concomitant_chemo = detail::parse_yes_no(f[17]);
        c.tnm = {static_cast<int>(detail::parse_number(f[18])), static_cast<int>(detail::parse_number(f[19])),
                 static_cast<int>(detail::parse_number(f[20]))};
        if (c.tnm.t < 0 || c.tnm.t > 4 || c.tnm.n < 0 || c.tnm.n > 3 || c.tnm.m < 0 || c.tnm.m > 1) {
            throw Error(Errc::IoError, "TNM stage out of range for " + r.id);
        }
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace thc
