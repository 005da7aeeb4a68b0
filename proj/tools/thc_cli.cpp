// thc: generate cohorts, train one model, run alpha sweeps, re-render sweep reports.
//
// Exit codes: 0 ok, 2 usage / invalid configuration, 3 I/O, 4 numerical failure.

#include "thc/datagen.hpp"
#include "thc/experiment.hpp"
#include "thc/model.hpp"
#include "thc/sweep_config.hpp"
#include "thc/train.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("THC_LOG");
    const std::string v = env ? env : "info";
    if (v == "error") return LogLevel::Error;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void log(LogLevel level, const std::string& msg) {
    static const LogLevel current = log_level();
    if (level > current) return;
    static const char* names[] = {"error", "info", "debug"};
    std::cerr << "[thc " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

int exit_code_for(thc::Errc e) {
    switch (e) {
    case thc::Errc::IoError:
    case thc::Errc::BadMagic:
    case thc::Errc::VersionMismatch: return 3;
    case thc::Errc::NonFiniteLoss: return 4;
    default: return 2;
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw thc::Error(thc::Errc::IoError, "cannot create " + path.string());
        out << text;
        if (!out) throw thc::Error(thc::Errc::IoError, "write failed for " + path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw thc::Error(thc::Errc::IoError, "cannot move " + tmp.string() + " to " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw thc::Error(thc::Errc::IoError, "cannot create directory " + dir.string());
}

/// Deterministic run record: no timestamps or host data. Artifact paths are relative to `dir`.
fs::path write_manifest(const fs::path& dir, const std::string& command, const json& config,
                        const std::vector<std::uint64_t>& seeds, const std::vector<fs::path>& artifacts) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["config_digest"] = sha256_hex(config.dump());
    m["seeds"] = seeds;
    std::vector<std::string> paths;
    for (const auto& a : artifacts) paths.push_back(a.lexically_relative(dir).generic_string());
    m["artifacts"] = paths;
    m["tool_version"] = kToolVersion;
    const fs::path path = dir / "manifest.json";
    write_text(path, m.dump(2) + "\n");
    return path;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    for (double v : thc::parse_alpha_list(s)) {
        if (!(v >= 1.0) || v != std::floor(v)) {
            throw thc::Error(thc::Errc::InvalidConfig, std::string("bad ") + what + ": " + s);
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

json model_json(const thc::ModelConfig& m) {
    return {{"input_height", m.input_height},   {"input_width", m.input_width},
            {"input_channels", m.input_channels}, {"encoder_levels", m.encoder_levels},
            {"channels_per_level", m.channels_per_level}, {"clinical_dim", m.clinical_dim},
            {"dense_widths", m.dense_widths},     {"seed", m.seed}};
}

json train_json(const thc::TrainConfig& t) {
    return {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.learning_rate},
            {"alpha", t.alpha.value()},
            {"optimizer", t.optimizer == thc::OptimizerKind::Adam ? "adam" : "sgd"},
            {"loss_weights", {{"reconstruction", t.loss_weights.reconstruction}, {"prediction", t.loss_weights.prediction}}},
            {"seed", t.seed}};
}

thc::OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "adam") return thc::OptimizerKind::Adam;
    if (s == "sgd") return thc::OptimizerKind::Sgd;
    throw thc::Error(thc::Errc::InvalidConfig, "optimizer must be adam or sgd");
}

// Shared training flags for train and sweep.
struct TrainFlags {
    int epochs = 30;
    std::size_t batch_size = 8;
    double learning_rate = 3e-3;
    std::string optimizer = "adam";
    double rec_weight = 1.0;
    double pred_weight = 1.0;
    std::string channels = "4,8,16";
    std::string dense = "16";

    void add(CLI::App& app) {
        app.add_option("--epochs", epochs, "training epochs")->capture_default_str();
        app.add_option("--batch-size", batch_size, "mini-batch size")->capture_default_str();
        app.add_option("--lr", learning_rate, "learning rate")->capture_default_str();
        app.add_option("--optimizer", optimizer, "adam or sgd")->capture_default_str();
        app.add_option("--rec-weight", rec_weight, "reconstruction loss weight")->capture_default_str();
        app.add_option("--pred-weight", pred_weight, "prediction loss weight")->capture_default_str();
        app.add_option("--channels", channels, "encoder channels per level, comma separated")->capture_default_str();
        app.add_option("--dense", dense, "prediction head hidden widths, comma separated")->capture_default_str();
    }

    // Applies only the flags present on the command line when `only_given` is set.
    void apply(const CLI::App& app, thc::ModelConfig& m, thc::TrainConfig& t, bool only_given) const {
        auto given = [&](const char* name) { return !only_given || app.count(name) > 0; };
        if (given("--epochs")) t.epochs = epochs;
        if (given("--batch-size")) t.batch_size = batch_size;
        if (given("--lr")) t.learning_rate = learning_rate;
        if (given("--optimizer")) t.optimizer = parse_optimizer(optimizer);
        if (given("--rec-weight")) t.loss_weights.reconstruction = rec_weight;
        if (given("--pred-weight")) t.loss_weights.prediction = pred_weight;
        if (given("--channels")) {
            m.channels_per_level = parse_size_list(channels, "--channels");
            m.encoder_levels = m.channels_per_level.size();
        }
        if (given("--dense")) m.dense_widths = parse_size_list(dense, "--dense");
    }
};

std::vector<thc::PatientRecord> load_cohort(const fs::path& data) {
    auto records = thc::read_cohort(data);
    if (records.empty()) throw thc::Error(thc::Errc::EmptyDataset, "cohort is empty: " + data.string());
    log(LogLevel::Info, "loaded " + std::to_string(records.size()) + " records from " + data.string());
    return records;
}

// ---- gen-data ----

struct GenDataArgs {
    std::string preset = "head-neck-like";
    std::optional<std::size_t> n;
    std::uint64_t seed = 0;
    std::optional<std::size_t> height, width;
    std::optional<double> signal, noise;
    fs::path out;
};

int cmd_gen_data(const GenDataArgs& a) {
    auto c = thc::CohortConfig::preset(a.preset);
    if (a.n) c.n_patients = *a.n;
    if (a.height) c.image_shape[0] = *a.height;
    if (a.width) c.image_shape[1] = *a.width;
    if (a.signal) c.signal_strength = *a.signal;
    if (a.noise) c.label_noise = *a.noise;
    c.seed = a.seed;
    c.validate();

    const auto records = thc::generate_cohort(c);
    ensure_dir(a.out);
    const auto csv = thc::write_cohort(records, a.out);
    log(LogLevel::Info, "wrote " + std::to_string(records.size()) + " records to " + a.out.string());

    const json config{{"preset", a.preset},
                      {"n_patients", c.n_patients},
                      {"image_shape", c.image_shape},
                      {"signal_strength", c.signal_strength},
                      {"label_noise", c.label_noise},
                      {"seed", c.seed}};
    std::vector<fs::path> artifacts{csv};
    for (const auto& r : records) artifacts.push_back(a.out / "volumes" / (r.id + ".thcv"));
    std::cout << write_manifest(a.out, "gen-data", config, {c.seed}, artifacts).string() << '\n';
    return 0;
}

// ---- train ----

struct TrainArgs {
    fs::path data, out;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    TrainFlags flags;
};

int cmd_train(const CLI::App& app, const TrainArgs& a) {
    thc::ModelConfig m;
    thc::TrainConfig t;
    a.flags.apply(app, m, t, false);
    t.alpha = thc::Alpha(a.alpha);
    t.seed = a.seed;
    t.validate();

    const auto records = load_cohort(a.data);
    const auto stats = thc::compute_normalization_stats(records);
    const auto data = thc::make_dataset(records, stats);
    const auto& shape = records.front().volume.shape();
    m.input_height = shape[0];
    m.input_width = shape[1];
    m.input_channels = shape[2];
    m.clinical_dim = thc::kEncodedClinicalDim;
    m.seed = a.seed;
    m.validate();

    log(LogLevel::Info, "training " + std::to_string(t.epochs) + " epochs at alpha=" + std::to_string(a.alpha));
    const auto result = thc::train(thc::build_model(m), data, t);
    for (const auto& e : result.trace) {
        log(LogLevel::Debug, "epoch " + std::to_string(e.epoch) + " total " + std::to_string(e.total));
    }

    ensure_dir(a.out);
    const fs::path ckpt = a.out / "model.thcm", trace = a.out / "loss_trace.csv", norm = a.out / "normalization.json";
    thc::save_checkpoint(result.model, ckpt);
    thc::write_loss_trace(result.trace, trace);
    write_text(norm, json{{"fields", thc::kQuantitativeFieldNames}, {"mean", stats.mean}, {"sd", stats.sd}}.dump(2) + "\n");

    const json config{{"data", a.data.generic_string()}, {"model", model_json(m)}, {"train", train_json(t)}};
    std::cout << write_manifest(a.out, "train", config, {a.seed}, {ckpt, trace, norm}).string() << '\n';
    return 0;
}

// ---- sweep ----

struct SweepArgs {
    fs::path data, out, config;
    std::string grid, alphas, test = "welch";
    std::uint64_t seed = 0;
    std::size_t k = 5, parallel_folds = 1;
    TrainFlags flags;
};

int cmd_sweep(const CLI::App& app, const SweepArgs& a) {
    thc::SweepConfig c;
    const bool from_file = !a.config.empty();
    if (from_file) {
        c = thc::load_sweep_config(a.config);
    } else {
        c.model.channels_per_level = {4, 8, 16};
    }
    a.flags.apply(app, c.model, c.train, from_file);
    if (!a.grid.empty()) c.alpha_grid = thc::parse_alpha_grid(a.grid);
    if (!a.alphas.empty()) c.alpha_grid = thc::parse_alpha_list(a.alphas);
    if (!from_file || app.count("--seed")) c.base_seed = a.seed;
    if (!from_file || app.count("--k")) c.k = a.k;
    if (!from_file || app.count("--parallel-folds")) c.parallel_folds = a.parallel_folds;
    if (!from_file || app.count("--test")) c.test = thc::parse_test_kind(a.test);
    c.model.encoder_levels = c.model.channels_per_level.size();
    c.validate();

    const auto records = load_cohort(a.data);
    log(LogLevel::Info, "sweeping " + std::to_string(c.alpha_grid.size()) + " alpha values x " + std::to_string(c.k) +
                            " folds, " + std::to_string(c.parallel_folds) + " in parallel");
    const auto rows = thc::run_sweep(records, c, [](const thc::FoldProgress& p) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "alpha=%g fold %zu accuracy %.4f", p.alpha, p.result.fold_index + 1,
                      p.result.test_accuracy);
        log(LogLevel::Info, buf);
    });

    ensure_dir(a.out);
    const fs::path sweep = a.out / "sweep.csv", md = a.out / "report.md", csv = a.out / "report.csv";
    write_text(sweep, thc::sweep_csv(rows));
    write_text(md, thc::format_report(rows, thc::ReportFormat::Markdown));
    write_text(csv, thc::format_report(rows, thc::ReportFormat::Csv));

    json cfg{{"data", a.data.generic_string()},
             {"alpha_grid", c.alpha_grid},
             {"k", c.k},
             {"base_seed", c.base_seed},
             {"test", std::string(thc::to_string(c.test))},
             {"model", model_json(c.model)},
             {"train", train_json(c.train)}};
    // parallel_folds is deliberately left out: it does not change results.
    std::vector<std::uint64_t> seeds{c.base_seed};
    for (std::size_t f = 0; f < c.k; ++f) seeds.push_back(c.base_seed ^ f);
    std::cout << write_manifest(a.out, "sweep", cfg, seeds, {sweep, md, csv}).string() << '\n';
    return 0;
}

// ---- report ----

struct ReportArgs {
    fs::path in, out;
    std::string format = "markdown";
};

int cmd_report(const ReportArgs& a) {
    thc::ReportFormat format;
    if (a.format == "markdown" || a.format == "md") format = thc::ReportFormat::Markdown;
    else if (a.format == "csv") format = thc::ReportFormat::Csv;
    else throw thc::Error(thc::Errc::InvalidConfig, "--format must be markdown or csv");

    const auto rows = thc::read_sweep_csv(a.in);
    const std::string text = thc::format_report(rows, format);
    if (a.out.empty()) {
        std::cout << text;
    } else {
        write_text(a.out, text);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"THC loss experiments on synthetic cohorts"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* g = app.add_subcommand("gen-data", "generate a synthetic cohort");
    g->add_option("--preset", gen.preset, "head-neck-like, lung-like, separable or null")->capture_default_str();
    g->add_option("--n", gen.n, "number of patients (>= 10)");
    g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
    g->add_option("--height", gen.height, "image height (multiple of 8)");
    g->add_option("--width", gen.width, "image width (multiple of 8)");
    g->add_option("--signal", gen.signal, "signal strength");
    g->add_option("--noise", gen.noise, "label noise in [0, 0.5]");
    g->add_option("--out", gen.out, "output directory")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train one model on a cohort");
    t->add_option("--data", tr.data, "cohort directory or cohort.csv")->required();
    t->add_option("--out", tr.out, "output directory")->required();
    t->add_option("--alpha", tr.alpha, "THC alpha (> 0; 1 is Shannon)")->capture_default_str();
    t->add_option("--seed", tr.seed, "model and shuffle seed")->capture_default_str();
    tr.flags.add(*t);

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "k-fold cross-validation over an alpha grid");
    s->add_option("--data", sw.data, "cohort directory or cohort.csv")->required();
    s->add_option("--out", sw.out, "output directory")->required();
    s->add_option("--config", sw.config, "JSON sweep config (flags given explicitly override it)");
    auto* grid = s->add_option("--grid", sw.grid, "start:stop:step, inclusive");
    s->add_option("--alphas", sw.alphas, "explicit list, e.g. 1.0,1.5,2.3")->excludes(grid);
    s->add_option("--seed", sw.seed, "split and fold seed base")->capture_default_str();
    s->add_option("--k", sw.k, "number of folds")->capture_default_str();
    s->add_option("--parallel-folds", sw.parallel_folds, "concurrent fold trainings")->capture_default_str();
    s->add_option("--test", sw.test, "welch, student or paired")->capture_default_str();
    sw.flags.add(*s);

    ReportArgs rp;
    auto* r = app.add_subcommand("report", "re-render a stored sweep.csv");
    r->add_option("--in", rp.in, "sweep csv")->required();
    r->add_option("--format", rp.format, "markdown or csv")->capture_default_str();
    r->add_option("--out", rp.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*g) return cmd_gen_data(gen);
        if (*t) return cmd_train(*t, tr);
        if (*s) return cmd_sweep(*s, sw);
        if (*r) return cmd_report(rp);
    } catch (const thc::NonFiniteLossError& e) {
        log(LogLevel::Error, "non-finite loss at epoch " + std::to_string(e.epoch()) + ": " + e.what());
        return 4;
    } catch (const thc::Error& e) {
        log(LogLevel::Error, e.what());
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        log(LogLevel::Error, e.what());
        return 3;
    } catch (const std::exception& e) {
        log(LogLevel::Error, std::string("internal error: ") + e.what());
        return 1;
    }
    return 2;
}
