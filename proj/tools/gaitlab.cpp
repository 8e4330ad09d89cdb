#include "gaitlab/dataset.hpp"
#include "gaitlab/eval.hpp"
#include "gaitlab/features.hpp"
#include "gaitlab/gaitsim.hpp"
#include "gaitlab/learn.hpp"
#include "gaitlab/select.hpp"
#include "gaitlab/telemetry.hpp"
#include "gaitlab/text.hpp"
#include "gaitlab/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#ifdef GAITLAB_WITH_TCP
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#endif

namespace fs = std::filesystem;
using namespace gaitlab;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

std::uint64_t env_seed() {
    if (const char* env = std::getenv("GAITLAB_SEED")) {
        const auto v = text::parse_int(env);
        if (!v || *v < 0) {
            throw Error(Errc::InvalidParams, "GAITLAB_SEED must be a non-negative integer, got '" + std::string(env) + "'");
        }
        return static_cast<std::uint64_t>(*v);
    }
    return kDefaultSeed;
}

// Effective settings of one run; written into every artifact header.
struct Run {
    std::string command;
    std::uint64_t seed = kDefaultSeed;
    text::KeyValues config;

    std::string header_line() const {
        return "gaitlab " + std::string(kVersion) + " seed=" + std::to_string(seed) + " command=" + command +
               " config=" + config.joined();
    }
    std::vector<std::string> header() const { return {header_line()}; }
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    const std::string body = text::read_file(path);
    return {body.begin(), body.end()};
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    text::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::Io, "cannot create directory '" + dir + "': " + ec.message());
}

text::KeyValues parse_overrides(const std::vector<std::string>& items) {
    text::KeyValues kv;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw Error(Errc::SchemaMismatch, "override '" + item + "' is not key=value");
        }
        kv.set(std::string(text::trim(item.substr(0, eq))), std::string(text::trim(item.substr(eq + 1))));
    }
    return kv;
}

void merge_into(text::KeyValues& base, const text::KeyValues& extra) {
    for (const auto& [k, v] : extra.entries()) base.set(k, v);
}

// feature.<field> keys map onto FeatureConfig.
features::FeatureConfig feature_config(const text::KeyValues& kv) {
    features::FeatureConfig cfg;
    const std::map<std::string, double*> fields = {
        {"step_cutoff_hz", &cfg.step_cutoff_hz},   {"peak_rel_threshold", &cfg.peak_rel_threshold},
        {"peak_percentile", &cfg.peak_percentile}, {"refractory_s", &cfg.refractory_s},
        {"merge_window_s", &cfg.merge_window_s},   {"swing_low_hz", &cfg.swing_low_hz},
        {"swing_high_hz", &cfg.swing_high_hz},     {"swing_percentile", &cfg.swing_percentile},
        {"spectral_low_hz", &cfg.spectral_low_hz}, {"spectral_high_hz", &cfg.spectral_high_hz},
        {"trim_s", &cfg.trim_s},                   {"min_detect_s", &cfg.min_detect_s},
        {"min_extract_s", &cfg.min_extract_s},
    };
    for (const auto& [key, value] : kv.entries()) {
        if (!key.starts_with("feature.")) continue;
        const std::string name = key.substr(8);
        if (name == "min_steps") {
            cfg.min_steps = static_cast<std::size_t>(kv.integer(key, 0));
            continue;
        }
        const auto it = fields.find(name);
        if (it == fields.end()) {
            throw Error(Errc::SchemaMismatch, "unknown feature override '" + key + "'");
        }
        *it->second = kv.number(key, 0.0);
    }
    return cfg;
}

std::vector<std::string> csv_list(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& item : text::split(s, ',')) {
        const auto t = text::trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

// grid.k / grid.metric / grid.weighting override the default KNN grid axes.
std::vector<learn::ModelSpec> knn_grid(const text::KeyValues& kv) {
    if (!kv.contains("grid.k") && !kv.contains("grid.metric") && !kv.contains("grid.weighting")) {
        return eval::default_knn_grid();
    }
    std::vector<int> ks;
    for (const auto& item : csv_list(kv.string("grid.k", "1,3,5,7,9,11,13,15,17,19,21"))) {
        const auto v = text::parse_int(item);
        if (!v) throw Error(Errc::SchemaMismatch, "grid.k entry '" + item + "' is not an integer");
        ks.push_back(static_cast<int>(*v));
    }
    std::vector<learn::ModelSpec> grid;
    for (int k : ks) {
        for (const auto& metric : csv_list(kv.string("grid.metric", "euclidean,manhattan"))) {
            for (const auto& weighting : csv_list(kv.string("grid.weighting", "uniform,inverse_distance"))) {
                auto spec = learn::ModelSpec::parse("kind=knn,k=" + std::to_string(k) + ",metric=" + metric +
                                                    ",weighting=" + weighting);
                spec.validate();
                grid.push_back(spec);
            }
        }
    }
    return grid;
}

// Drops KNN cells whose k exceeds the smallest training fold, so small tables
// can still be tuned. Keeps the grid as is when nothing would remain.
std::vector<learn::ModelSpec> feasible_grid(std::vector<learn::ModelSpec> grid, const dataset::Dataset& ds, int folds) {
    if (folds < 2) return grid;
    const std::size_t n = ds.rows();
    const std::size_t f = static_cast<std::size_t>(folds);
    const std::size_t min_train = n - (n + f - 1) / f;
    std::vector<learn::ModelSpec> kept;
    for (const auto& spec : grid) {
        const auto* p = std::get_if<learn::KnnParams>(&spec.params);
        if (!p || static_cast<std::size_t>(p->k) <= min_train) kept.push_back(spec);
    }
    if (kept.empty() || kept.size() == grid.size()) return grid;
    std::cerr << "skipped " << grid.size() - kept.size() << " grid cell(s) with k above " << min_train
              << " training rows\n";
    return kept;
}

eval::CvOptions cv_options(const text::KeyValues& kv, std::uint64_t seed) {
    eval::CvOptions opt;
    opt.folds = static_cast<int>(kv.integer("folds", opt.folds));
    opt.seed = seed;
    opt.selection = eval::parse_selection_mode(kv.string("selection", std::string(eval::to_string(opt.selection))));
    opt.k_features = static_cast<std::size_t>(kv.integer("k_features", static_cast<long long>(opt.k_features)));
    opt.bins = static_cast<int>(kv.integer("bins", opt.bins));
    opt.threads = static_cast<unsigned>(kv.integer("threads", 1));
    if (opt.k_features == 0 || opt.bins < 2 || opt.threads == 0) {
        throw Error(Errc::InvalidParams, "k_features >= 1, bins >= 2 and threads >= 1 are required");
    }
    return opt;
}

void record_cv(text::KeyValues& kv, const eval::CvOptions& opt) {
    kv.set("folds", std::to_string(opt.folds));
    kv.set("selection", std::string(eval::to_string(opt.selection)));
    kv.set("k_features", std::to_string(opt.k_features));
    kv.set("bins", std::to_string(opt.bins));
    kv.set("threads", std::to_string(opt.threads));
}

std::optional<telemetry::Label> parse_label(const std::string& s) {
    if (s == "0") return telemetry::Label::Control;
    if (s == "1") return telemetry::Label::PD;
    if (s == "?" || s.empty()) return std::nullopt;
    throw Error(Errc::SchemaMismatch, "label must be 0, 1 or ?, got '" + s + "'");
}

dataset::Dataset load_dataset(const std::string& path) {
    auto report = dataset::load_table(text::read_file(path));
    if (report.dropped_rows > 0) {
        std::cerr << "dropped " << report.dropped_rows << " incomplete row(s) from " << path << "\n";
    }
    return std::move(report.data);
}

std::string session_file_name(const telemetry::Session& s) {
    return s.subject_id + "_" + std::string(telemetry::to_string(s.task)) + ".csv";
}

std::string session_extras(const Run& run) {
    return "gaitlab_version=" + std::string(kVersion) + ",seed=" + std::to_string(run.seed) + ",command=" + run.command +
           ",config=" + run.config.joined();
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(in)) {
                if (entry.is_regular_file() && entry.path().extension() == ".csv") found.push_back(entry.path().string());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(in);
        }
    }
    if (out.empty()) throw Error(Errc::Io, "no session files found");
    return out;
}

void report_flagged(const features::Extraction& ex) {
    for (const auto& f : ex.flagged) {
        std::cerr << "flagged " << f.subject_id << "/" << telemetry::to_string(f.task) << ": " << f.message << "\n";
    }
}

// Rounds every session through the wire codec and collector, as if streamed.
telemetry::Session via_wire(const telemetry::Session& s) {
    const auto bytes = telemetry::frames_to_bytes(telemetry::session_to_frames(s));
    const auto frames = telemetry::decode_stream(bytes);
    return telemetry::assemble_session(frames, {s.subject_id, s.task, s.sample_rate_hz, s.label});
}

std::vector<std::uint8_t> read_stdin() {
    std::cin >> std::noskipws;
    std::vector<std::uint8_t> out;
    char c;
    while (std::cin.get(c)) out.push_back(static_cast<std::uint8_t>(c));
    return out;
}

#ifdef GAITLAB_WITH_TCP
// Accepts one connection on `port` and decodes until the peer closes.
std::vector<telemetry::SensorFrame> receive_tcp(int port, telemetry::StreamDecoder& decoder) {
    const int server = ::socket(AF_INET, SOCK_STREAM, 0);
    if (server < 0) throw Error(Errc::Io, "cannot open socket");
    int one = 1;
    ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(server, 1) < 0) {
        ::close(server);
        throw Error(Errc::Io, "cannot listen on port " + std::to_string(port));
    }
    std::cerr << "listening on port " << port << "\n";
    const int peer = ::accept(server, nullptr, nullptr);
    ::close(server);
    if (peer < 0) throw Error(Errc::Io, "accept failed on port " + std::to_string(port));
    std::vector<telemetry::SensorFrame> frames;
    std::uint8_t buf[4096];
    for (;;) {
        const auto n = ::recv(peer, buf, sizeof buf, 0);
        if (n <= 0) break;
        auto got = decoder.feed(std::span(buf, static_cast<std::size_t>(n)));
        frames.insert(frames.end(), got.begin(), got.end());
    }
    ::close(peer);
    return frames;
}
#endif

// Cohort defaults that were not set explicitly still belong in the header.
void record_cohort(text::KeyValues& kv, const gaitsim::CohortSpec& c) {
    if (!kv.contains("preset")) kv.set("preset", "strong");
    kv.set("n_control", std::to_string(c.n_control));
    kv.set("n_pd", std::to_string(c.n_pd));
    kv.set("duration_s", text::format_exact(c.control.mean.duration_s));
    kv.set("sample_rate_hz", std::to_string(c.control.mean.sample_rate_hz));
}

// ---- subcommands ----

void cmd_simulate(Run& run, const std::string& config_path, const std::string& preset, const std::string& out_dir,
                  bool frames, unsigned threads, bool seed_given) {
    text::KeyValues kv = config_path.empty() ? text::KeyValues{} : text::KeyValues::parse(text::read_file(config_path));
    if (!preset.empty()) kv.set("preset", preset);
    merge_into(kv, run.config);
    for (const auto& [k, v] : kv.entries()) {
        if (!gaitsim::is_cohort_key(k)) throw Error(Errc::SchemaMismatch, "unknown cohort key '" + k + "'");
    }
    if (seed_given || !kv.contains("seed")) kv.set("seed", std::to_string(run.seed));
    const auto cohort = gaitsim::cohort_from_config(kv);
    run.seed = cohort.seed;
    record_cohort(kv, cohort);
    run.config = kv;
    ensure_dir(out_dir);
    const auto sessions = gaitsim::generate_cohort(cohort, threads);
    const std::string extras = session_extras(run);
    for (const auto& s : sessions) {
        const fs::path path = fs::path(out_dir) / session_file_name(s);
        text::write_file(path.string(), telemetry::session_to_csv(s, extras));
        if (frames) {
            auto bin = path;
            bin.replace_extension(".bin");
            write_bytes(bin.string(), telemetry::frames_to_bytes(telemetry::session_to_frames(s)));
        }
    }
    std::cout << "wrote " << sessions.size() << " sessions to " << out_dir << "\n";
}

struct IngestArgs {
    std::string input;
    int port = 0;
    std::string subject = "S000";
    std::string task = "walk";
    int rate = 100;
    std::string label = "?";
    std::string out;
};

void cmd_ingest(Run& run, const IngestArgs& a) {
    telemetry::StreamDecoder decoder;
    std::vector<telemetry::SensorFrame> frames;
    if (a.port > 0) {
#ifdef GAITLAB_WITH_TCP
        frames = receive_tcp(a.port, decoder);
#else
        throw Error(Errc::InvalidParams, "this build has no TCP ingest; pass --input FILE or - for stdin");
#endif
    } else {
        const auto bytes = a.input == "-" ? read_stdin() : read_bytes(a.input);
        frames = decoder.feed(bytes);
    }
    decoder.finish();
    const auto& c = decoder.counters();
    std::cerr << "decoded " << c.frames << " frames (bad_magic=" << c.bad_magic << " bad_crc=" << c.bad_crc
              << " bad_device=" << c.bad_device << " truncated=" << c.truncated << " skipped_bytes=" << c.skipped_bytes
              << ")\n";
    const telemetry::SessionMeta meta{a.subject, telemetry::parse_task(a.task), a.rate, parse_label(a.label)};
    const auto session = telemetry::assemble_session(frames, meta);
    for (const auto& g : session.gap_report) {
        std::cerr << "gap on " << (g.device == telemetry::DeviceId::LeftWrist ? "left" : "right") << " wrist after seq "
                  << g.seq_before << ": " << g.missing() << " sample(s) " << (g.interpolated ? "interpolated" : "left open")
                  << "\n";
    }
    run.config.set("subject", a.subject);
    run.config.set("task", a.task);
    run.config.set("rate_hz", std::to_string(a.rate));
    run.config.set("label", a.label);
    run.config.set("source", a.port > 0 ? "tcp:" + std::to_string(a.port) : a.input);
    text::write_file(a.out, telemetry::session_to_csv(session, session_extras(run)));
    std::cout << "wrote session with " << session.size() << " rows to " << a.out << "\n";
}

void cmd_extract(Run& run, const std::vector<std::string>& inputs, const std::string& out, unsigned threads) {
    const auto cfg = feature_config(run.config);
    std::vector<telemetry::Session> sessions;
    for (const auto& path : expand_inputs(inputs)) {
        try {
            sessions.push_back(telemetry::session_from_csv(text::read_file(path)));
        } catch (const Error& e) {
            throw Error(e.code(), path + ": " + e.what());
        }
    }
    const auto ex = features::extract_all(sessions, cfg, threads);
    report_flagged(ex);
    text::write_file(out, features::feature_table_to_csv(ex.vectors, run.header()));
    std::cout << "extracted " << ex.vectors.size() << " of " << sessions.size() << " sessions into " << out << "\n";
}

void cmd_rank(Run& run, const std::string& table, const std::string& out, std::size_t k, int bins) {
    run.config.set("k_features", std::to_string(k));
    run.config.set("bins", std::to_string(bins));
    const auto ds = load_dataset(table);
    const auto ranked = select::rank_features(ds, k, bins);
    if (!out.empty()) text::write_file(out, select::ranking_to_csv(ranked, run.header()));
    std::cout << select::ranking_chart(ranked);
}

void cmd_tune(Run& run, const std::string& table, const std::string& out, const std::string& best_out) {
    const auto opt = cv_options(run.config, run.seed);
    const auto grid = knn_grid(run.config);
    record_cv(run.config, opt);
    const auto ds = load_dataset(table);
    const auto tuned = eval::grid_search(feasible_grid(grid, ds, opt.folds), ds, opt);
    if (!out.empty()) text::write_file(out, eval::tune_to_csv(tuned, run.header()));
    if (!best_out.empty()) text::write_file(best_out, "# " + run.header_line() + "\n" + tuned.best_spec().describe() + "\n");
    std::cout << eval::tune_table(tuned) << "\nbest: " << tuned.best_spec().describe() << "  "
              << text::format_fixed(tuned.best_report().mean_accuracy_pct, 2) << " %\n";
}

learn::ModelSpec spec_from(const std::string& spec_text, const std::string& spec_file) {
    if (!spec_file.empty()) {
        std::string body;
        for (const auto& line : text::lines(text::read_file(spec_file))) {
            const auto t = text::trim(line);
            if (!t.empty() && t.front() != '#') body += std::string(t) + "\n";
        }
        return learn::ModelSpec::parse(body);
    }
    return learn::ModelSpec::parse(spec_text);
}

learn::Model train_model(const learn::ModelSpec& spec, const dataset::Dataset& ds, std::size_t k_features, int bins) {
    spec.validate();
    std::vector<std::string> names;
    if (k_features > 0) names = select::rank_features(ds, k_features, bins).selected();
    return learn::fit(spec, ds, names);
}

std::vector<std::pair<std::string, std::string>> provenance(const Run& run) {
    return {{"seed", std::to_string(run.seed)}, {"command", run.command}, {"config", run.config.joined()}};
}

void cmd_train(Run& run, const std::string& table, const learn::ModelSpec& spec, const std::string& out) {
    const auto k = static_cast<std::size_t>(run.config.integer("k_features", select::kDefaultTopK));
    const int bins = static_cast<int>(run.config.integer("bins", select::kDefaultBins));
    run.config.set("k_features", std::to_string(k));
    run.config.set("bins", std::to_string(bins));
    run.config.set("spec", spec.describe());
    const auto model = train_model(spec, load_dataset(table), k, bins);
    write_bytes(out, learn::save_model(model, provenance(run)));
    std::cout << "trained " << spec.describe() << " on " << model.scaler.fitted_rows.size() << " rows using";
    for (const auto& f : model.features) std::cout << " " << f;
    std::cout << "\nwrote " << out << "\n";
}

void cmd_evaluate(Run& run, const std::string& model_path, const std::string& table, const std::string& out) {
    const auto model = learn::load_model(read_bytes(model_path));
    const auto ds = load_dataset(table);
    if (!ds.labeled()) {
        throw Error(Errc::Unlabeled, table + " has no label column; use `predict` for unlabeled tables");
    }
    run.config.set("model", model_path);
    run.config.set("spec", model.spec.describe());
    const auto result = eval::evaluate_holdout(model, ds);
    if (!out.empty()) text::write_file(out, eval::report_to_csv(*result.report, run.header()));
    std::cout << eval::report_table(*result.report);
}

void cmd_predict(Run& run, const std::string& model_path, const std::string& table, const std::string& out) {
    const auto model = learn::load_model(read_bytes(model_path));
    const auto ds = load_dataset(table);
    run.config.set("model", model_path);
    run.config.set("spec", model.spec.describe());
    const auto preds = learn::predict(model, ds);
    text::write_file(out, eval::predictions_to_csv(ds, preds, run.header()));
    std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
}

// Comparison baselines run alongside the tuned KNN.
std::vector<learn::ModelSpec> baseline_specs(std::uint64_t seed) {
    const std::string s = std::to_string(seed);
    return {learn::ModelSpec::parse("kind=logistic"), learn::ModelSpec::parse("kind=svm,seed=" + s),
            learn::ModelSpec::parse("kind=forest,seed=" + s), learn::ModelSpec::parse("kind=boost")};
}

bool is_pipeline_key(const std::string& key) {
    static const std::vector<std::string> own = {"folds",       "selection", "k_features", "bins",   "threads",
                                                 "test_fraction", "grid.k",  "grid.metric", "grid.weighting",
                                                 "write_sessions"};
    return gaitsim::is_cohort_key(key) || key.starts_with("feature.") ||
           std::find(own.begin(), own.end(), key) != own.end();
}

std::string comparison_table(const std::vector<eval::EvalReport>& reports) {
    std::size_t width = 4;
    for (const auto& r : reports) width = std::max(width, r.spec.size());
    std::string out = "spec" + std::string(width - 4, ' ') + "  cv acc %  recall ctl  recall pd\n";
    out += std::string(width + 33, '-') + "\n";
    for (const auto& r : reports) {
        auto cell = [](double v, std::size_t w) {
            auto s = text::format_fixed(v, 2);
            return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
        };
        out += r.spec + std::string(width - r.spec.size(), ' ') + "  " + cell(r.mean_accuracy_pct, 8) + "  " +
               cell(100.0 * r.recall[0], 10) + "  " + cell(100.0 * r.recall[1], 9) + "\n";
    }
    return out;
}

std::string comparison_csv(const std::vector<eval::EvalReport>& reports, const std::vector<std::string>& comment) {
    std::string out;
    for (const auto& c : comment) out += "# " + c + "\n";
    out += "spec,mean_accuracy_pct,recall_control,recall_pd\n";
    for (const auto& r : reports) {
        out += "\"" + r.spec + "\"," + text::format_exact(r.mean_accuracy_pct) + "," + text::format_exact(r.recall[0]) +
               "," + text::format_exact(r.recall[1]) + "\n";
    }
    return out;
}

void cmd_pipeline(Run& run, const std::string& config_path, const std::string& out_dir, bool seed_given) {
    text::KeyValues kv = config_path.empty() ? text::KeyValues{} : text::KeyValues::parse(text::read_file(config_path));
    merge_into(kv, run.config);
    for (const auto& [k, v] : kv.entries()) {
        if (!is_pipeline_key(k)) throw Error(Errc::SchemaMismatch, "unknown pipeline key '" + k + "'");
    }
    if (seed_given || !kv.contains("seed")) kv.set("seed", std::to_string(run.seed));
    run.seed = static_cast<std::uint64_t>(kv.integer("seed", 0));

    text::KeyValues cohort_kv;
    for (const auto& [k, v] : kv.entries()) {
        if (gaitsim::is_cohort_key(k)) cohort_kv.set(k, v);
    }
    const auto cohort = gaitsim::cohort_from_config(cohort_kv);
    const auto fcfg = feature_config(kv);
    auto opt = cv_options(kv, run.seed);
    const double test_fraction = kv.number("test_fraction", 0.2);
    const bool write_sessions = kv.integer("write_sessions", 0) != 0;
    const auto grid = knn_grid(kv);
    record_cv(kv, opt);
    record_cohort(kv, cohort);
    kv.set("test_fraction", text::format_exact(test_fraction));
    run.config = kv;
    const auto header = run.header();

    ensure_dir(out_dir);
    const fs::path dir(out_dir);

    // simulate -> ingest
    const auto simulated = gaitsim::generate_cohort(cohort, opt.threads);
    std::vector<telemetry::Session> sessions(simulated.size());
    std::transform(simulated.begin(), simulated.end(), sessions.begin(), via_wire);
    if (write_sessions) {
        ensure_dir((dir / "sessions").string());
        for (const auto& s : sessions) {
            text::write_file((dir / "sessions" / session_file_name(s)).string(),
                             telemetry::session_to_csv(s, session_extras(run)));
        }
    }

    // extract
    const auto ex = features::extract_all(sessions, fcfg, opt.threads);
    report_flagged(ex);
    text::write_file((dir / "features.csv").string(), features::feature_table_to_csv(ex.vectors, header));
    const auto loaded = dataset::from_feature_vectors(ex.vectors);
    const auto& ds = loaded.data;
    text::write_file((dir / "table.csv").string(), dataset::write_table(ds, header));

    // hold out a labeled test set; everything else sees only the training part
    const auto [train, test] = dataset::stratified_split(ds, test_fraction, run.seed);
    text::write_file((dir / "train.csv").string(), dataset::write_table(train, header));
    text::write_file((dir / "test.csv").string(), dataset::write_table(test, header));

    // rank
    const auto ranked = select::rank_features(train, opt.k_features, opt.bins);
    text::write_file((dir / "ranking.csv").string(), select::ranking_to_csv(ranked, header));
    text::write_file((dir / "ranking.txt").string(), select::ranking_chart(ranked));

    // tune
    const auto tuned = eval::grid_search(feasible_grid(grid, train, opt.folds), train, opt);
    text::write_file((dir / "tune.csv").string(), eval::tune_to_csv(tuned, header));
    text::write_file((dir / "tune.txt").string(), eval::tune_table(tuned));

    // baselines, with the same folds and selection mode
    std::vector<eval::EvalReport> reports = {tuned.best_report()};
    for (const auto& spec : baseline_specs(run.seed)) reports.push_back(eval::cross_validate(spec, train, opt));
    text::write_file((dir / "classifiers.csv").string(), comparison_csv(reports, header));
    text::write_file((dir / "classifiers.txt").string(), comparison_table(reports));

    // train, evaluate, predict
    const auto model = learn::fit(tuned.best_spec(), train, ranked.selected());
    write_bytes((dir / "model.glm").string(), learn::save_model(model, provenance(run)));
    const auto holdout = eval::evaluate_holdout(model, test);
    text::write_file((dir / "holdout.csv").string(), eval::report_to_csv(*holdout.report, header));
    text::write_file((dir / "holdout.txt").string(), eval::report_table(*holdout.report));
    text::write_file((dir / "predictions.csv").string(), eval::predictions_to_csv(test, holdout.predictions, header));

    std::cout << "subjects " << ds.rows() << " (" << loaded.dropped_rows << " dropped), flagged sessions "
              << ex.flagged.size() << ", train " << train.rows() << ", test " << test.rows() << "\n\n"
              << select::ranking_chart(ranked) << "\n"
              << comparison_table(reports) << "\n"
              << eval::report_table(*holdout.report) << "\noutputs in " << out_dir << "\n";
}

int exit_code_for(const Error& e) {
    return e.code() == Errc::Invariant ? 2 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaitlab: wearable gait screening pipeline"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Run run;
    std::optional<std::uint64_t> seed_flag;
    std::vector<std::string> overrides;
    unsigned threads = 1;
    auto common = [&](CLI::App* sub, bool with_threads = true) {
        sub->add_option("--seed", seed_flag, "Seed (default: GAITLAB_SEED or 1)");
        sub->add_option("--set", overrides, "key=value override, repeatable");
        if (with_threads) sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    std::string config_path, preset, out_dir = "sessions";
    bool frames = false;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort as session CSVs");
    simulate->add_option("--config", config_path, "Cohort config file (key=value lines)")->check(CLI::ExistingFile);
    simulate->add_option("--preset", preset, "Cohort preset: strong or null");
    simulate->add_option("--out", out_dir, "Output directory");
    simulate->add_flag("--frames", frames, "Also write raw wire frames (.bin) per session");
    common(simulate);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Decode raw frames into a session CSV");
    auto* input_opt = ingest->add_option("--input", ingest_args.input, "Frame file, or - for stdin");
    auto* port_opt = ingest->add_option("--port", ingest_args.port, "Accept one TCP connection on this port");
    input_opt->excludes(port_opt);
    ingest->add_option("--subject", ingest_args.subject, "Subject id");
    ingest->add_option("--task", ingest_args.task, "walk or dual");
    ingest->add_option("--rate", ingest_args.rate, "Sample rate (Hz)");
    ingest->add_option("--label", ingest_args.label, "0, 1 or ?");
    ingest->add_option("--out", ingest_args.out, "Session CSV to write")->required();
    common(ingest, false);

    std::vector<std::string> inputs;
    std::string out_file;
    auto* extract = app.add_subcommand("extract", "Session CSVs to a feature table");
    extract->add_option("inputs", inputs, "Session files or directories")->required();
    extract->add_option("--out", out_file, "Feature table to write")->required();
    common(extract);

    std::string table;
    std::size_t k_features = select::kDefaultTopK;
    int bins = select::kDefaultBins;
    auto* rank = app.add_subcommand("rank", "Mutual-information feature ranking");
    rank->add_option("--table", table, "Labeled feature table")->required();
    rank->add_option("--k", k_features, "Features to select")->check(CLI::PositiveNumber);
    rank->add_option("--bins", bins, "Equal-frequency bins")->check(CLI::Range(2, 1000));
    rank->add_option("--out", out_file, "Ranking CSV");
    common(rank, false);

    std::string best_out;
    auto* tune = app.add_subcommand("tune", "Grid-search KNN by stratified cross-validation");
    tune->add_option("--table", table, "Labeled feature table")->required();
    tune->add_option("--out", out_file, "Tune report CSV");
    tune->add_option("--best-out", best_out, "Write the best spec here");
    common(tune);

    std::string spec_text = "kind=knn", spec_file;
    auto* train = app.add_subcommand("train", "Fit a model and write it to a file");
    train->add_option("--table", table, "Labeled feature table")->required();
    train->add_option("--spec", spec_text, "Model spec, e.g. kind=knn,k=5,metric=euclidean");
    train->add_option("--spec-file", spec_file, "Model spec file (key=value lines)")->check(CLI::ExistingFile);
    train->add_option("--out", out_file, "Model file to write")->required();
    common(train, false);

    std::string model_path;
    auto* evaluate = app.add_subcommand("evaluate", "Score a model on a labeled table");
    evaluate->add_option("--model", model_path, "Model file")->required();
    evaluate->add_option("--table", table, "Labeled feature table")->required();
    evaluate->add_option("--out", out_file, "Report CSV");
    common(evaluate, false);

    auto* predict = app.add_subcommand("predict", "Predict labels for a table");
    predict->add_option("--model", model_path, "Model file")->required();
    predict->add_option("--table", table, "Feature table")->required();
    predict->add_option("--out", out_file, "Predictions CSV")->required();
    common(predict, false);

    std::string pipeline_out = "gaitlab-out";
    auto* pipeline = app.add_subcommand("pipeline", "Simulate, ingest, extract, rank, tune, train and evaluate");
    pipeline->add_option("--config", config_path, "Pipeline config file (key=value lines)")->check(CLI::ExistingFile);
    pipeline->add_option("--out", pipeline_out, "Output directory");
    common(pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    try {
        run.seed = seed_flag ? *seed_flag : env_seed();
        run.config = parse_overrides(overrides);
        if (sub != simulate && sub != pipeline && sub != ingest) {
            run.config.set("threads", std::to_string(threads));
        }
        if (sub == simulate) {
            cmd_simulate(run, config_path, preset, out_dir, frames, threads, seed_flag.has_value());
        } else if (sub == ingest) {
            if (ingest_args.input.empty() && ingest_args.port == 0) {
                throw Error(Errc::InvalidParams, "ingest needs --input FILE, --input - or --port N");
            }
            cmd_ingest(run, ingest_args);
        } else if (sub == extract) {
            cmd_extract(run, inputs, out_file, threads);
        } else if (sub == rank) {
            cmd_rank(run, table, out_file, k_features, bins);
        } else if (sub == tune) {
            cmd_tune(run, table, out_file, best_out);
        } else if (sub == train) {
            cmd_train(run, table, spec_from(spec_text, spec_file), out_file);
        } else if (sub == evaluate) {
            cmd_evaluate(run, model_path, table, out_file);
        } else if (sub == predict) {
            cmd_predict(run, model_path, table, out_file);
        } else if (sub == pipeline) {
            if (!run.config.contains("threads")) run.config.set("threads", std::to_string(threads));
            cmd_pipeline(run, config_path, pipeline_out, seed_flag.has_value());
        }
    } catch (const Error& e) {
        std::cerr << "gaitlab " << run.command << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "gaitlab " << run.command << ": internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
