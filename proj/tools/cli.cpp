#include "cli.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "ascl/binio.hpp"
#include "ascl/checkpoint.hpp"
#include "ascl/config.hpp"
#include "ascl/datapipe.hpp"
#include "ascl/probe.hpp"
#include "ascl/train.hpp"

namespace ascl::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Usage problems detected after parsing (bad combinations, bad config file).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string env_name(const std::string& flag) {
    std::string name = "ASCL_";
    for (char c : flag) {
        name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

template <class T>
CLI::Option* add(CLI::App* app, const std::string& flag, T& target, const std::string& help) {
    return app->add_option("--" + flag, target, help)->envname(env_name(flag));
}

/// Flags that map onto RunConfig. Values are applied over the config file
/// only when given on the command line or through the environment.
struct RunFlags {
    std::string strategy;
    long long k = 0;
    double tau = 0, tau_prime = 0, ema = 0, lr = 0, sgd_momentum = 0, weight_decay = 0;
    std::size_t epochs = 0, batch_size = 0, bank = 0, knn_k = 0, knn_every = 0;
    std::uint64_t seed = 0;
    std::string query_aug, target_aug, config_file;
    bool wall_time = false;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void attach(CLI::App* app) {
        auto reg = [&](const std::string& flag, auto& target, const std::string& help) {
            options.emplace_back(flag, add(app, flag, target, help));
            return options.back().second;
        };
        reg("strategy", strategy, "onehot|moco, hard, ahcl, ascl, byol, byol-ascl");
        reg("k", k, "number of neighbours K")->check(CLI::NonNegativeNumber);
        reg("tau", tau, "contrastive temperature")->check(CLI::PositiveNumber);
        reg("tau-prime", tau_prime, "sharpening temperature")->check(CLI::PositiveNumber);
        reg("epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
        reg("batch-size", batch_size, "batch size")->check(CLI::PositiveNumber);
        reg("bank", bank, "memory bank capacity")->check(CLI::PositiveNumber);
        reg("ema", ema, "momentum-encoder EMA coefficient")->check(CLI::Range(0.0, 1.0));
        reg("lr", lr, "base learning rate (default 0.06 * batch / 256)")
            ->check(CLI::NonNegativeNumber);
        reg("sgd-momentum", sgd_momentum, "SGD momentum")->check(CLI::NonNegativeNumber);
        reg("weight-decay", weight_decay, "weight decay")->check(CLI::NonNegativeNumber);
        reg("seed", seed, "random seed");
        reg("knn-k", knn_k, "neighbours for the KNN probe")->check(CLI::PositiveNumber);
        reg("knn-every", knn_every, "epochs between KNN probes")->check(CLI::PositiveNumber);
        reg("query-aug", query_aug, "weak|strong policy for the online branch")
            ->check(CLI::IsMember({"weak", "strong"}));
        reg("target-aug", target_aug, "weak|strong policy for the momentum branch")
            ->check(CLI::IsMember({"weak", "strong"}));
        options.emplace_back("record-wall-time",
                             app->add_flag("--record-wall-time", wall_time,
                                           "add wall-clock seconds to the metrics log")
                                 ->envname(env_name("record-wall-time")));
        add(app, "config", config_file, "JSON config file (flags and environment win)")
            ->check(CLI::ExistingFile);
    }

    bool given(const std::string& flag) const {
        for (const auto& [name, opt] : options) {
            if (name == flag) {
                return opt->count() > 0;
            }
        }
        return false;
    }

    bool any_given() const {
        for (const auto& entry : options) {
            if (entry.second->count() > 0) {
                return true;
            }
        }
        return false;
    }

    RunConfig build() const {
        RunConfig c;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            try {
                c = config_from_json(nlohmann::json::parse(in), c);
            } catch (const nlohmann::json::exception& e) {
                throw UsageError("config file: " + std::string(e.what()));
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
        try {
            if (given("strategy")) c.method = parse_method(strategy);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        if (given("k")) c.num_neighbors = static_cast<std::size_t>(k);
        if (given("tau")) c.temperature = tau;
        if (given("tau-prime")) c.sharpening_temperature = tau_prime;
        if (given("epochs")) c.epochs = epochs;
        if (given("batch-size")) c.batch_size = batch_size;
        if (given("bank")) c.bank_capacity = bank;
        if (given("ema")) c.ema_momentum = ema;
        if (given("lr")) c.lr = lr;
        if (given("sgd-momentum")) c.sgd_momentum = sgd_momentum;
        if (given("weight-decay")) c.weight_decay = weight_decay;
        if (given("seed")) c.seed = seed;
        if (given("knn-k")) c.knn.k = knn_k;
        if (given("knn-every")) c.knn_every = knn_every;
        if (given("query-aug")) c.query_augment = augment_policy_from_json(query_aug, {});
        if (given("target-aug")) c.target_augment = augment_policy_from_json(target_aug, {});
        if (given("record-wall-time")) c.record_wall_time = wall_time;
        return c;
    }
};

struct DataFlags {
    std::string data, test_data;
    void attach(CLI::App* app, bool required = true) {
        auto* d = add(app, "data", data, "dataset file")->check(CLI::ExistingFile);
        if (required) {
            d->required();
        }
        add(app, "test-data", test_data, "held-out dataset (default: every 5th sample of --data)")
            ->check(CLI::ExistingFile);
    }
    std::pair<Dataset, Dataset> load() const {
        Dataset ds = read_dataset(data);
        if (!test_data.empty()) {
            Dataset test = read_dataset(test_data);
            if (test.dim() != ds.dim()) {
                throw UsageError("--test-data width differs from --data");
            }
            return {std::move(ds), std::move(test)};
        }
        return split_holdout(ds, 5);
    }
};

void write_lines(const fs::path& path, const std::vector<MetricsRecord>& log, bool append) {
    std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
    if (!os) {
        fail(ErrorCode::Io, "cannot open " + path.string());
    }
    for (const MetricsRecord& r : log) {
        os << to_log_line(r) << '\n';
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os || !(os << text)) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
}

int cmd_gen_data(const std::string& generator, std::uint32_t classes, std::size_t per_class,
                 std::size_t dim, double separation, double noise, std::uint64_t seed,
                 const std::string& out, const std::string& test_out, std::size_t holdout,
                 std::ostream& os) {
    Rng rng(seed);
    Dataset ds = generator == "moons" ? gen_two_moons(per_class, noise, dim, rng)
                                      : gen_gaussian_clusters(classes, per_class, dim, separation, rng);
    ds.metadata["seed"] = std::to_string(seed);
    if (test_out.empty()) {
        write_dataset(out, ds);
        os << "wrote " << ds.size() << " samples (dim " << ds.dim() << ") to " << out << '\n';
        return 0;
    }
    auto [train, test] = split_holdout(ds, holdout);
    const double raw_knn = knn_accuracy(train.samples, train.labels, test.samples, test.labels,
                                        ds.num_classes, {5, 0.1});
    write_dataset(out, train);
    write_dataset(test_out, test);
    os << "wrote " << train.size() << " train samples to " << out << " and " << test.size()
       << " test samples to " << test_out << '\n';
    os << "raw_knn_accuracy=" << raw_knn << '\n';
    return 0;
}

int cmd_train(const RunFlags& flags, const DataFlags& data, const std::string& out_dir,
              const std::string& resume, std::optional<std::size_t> stop_after, std::ostream& os,
              std::ostream& es) {
    auto [train, test] = data.load();
    std::optional<Trainer> trainer;
    if (!resume.empty()) {
        if (flags.any_given()) {
            es << "note: run flags are ignored when resuming; the checkpoint's config is used\n";
        }
        trainer.emplace(Trainer::resume(load_checkpoint(resume), std::move(train), std::move(test)));
    } else {
        RunConfig c = flags.build();
        c.dataset_path = data.data;
        c.test_dataset_path = data.test_data;
        c.output_dir = out_dir;
        try {
            c = prepare_config(c, train.dim());
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        trainer.emplace(c, std::move(train), std::move(test));
    }
    const auto log = trainer->run(stop_after);

    fs::create_directories(out_dir);
    const bool appending = !resume.empty();
    write_text(fs::path(out_dir) / "config.json", to_json(trainer->config()).dump(2) + "\n");
    write_lines(fs::path(out_dir) / "metrics.jsonl", log, appending);
    save_checkpoint(fs::path(out_dir) / "checkpoint.bin", trainer->checkpoint());

    const RunSummary s = summarize(log);
    os << "strategy=" << to_string(trainer->config().method) << " epochs_done="
       << trainer->epochs_done() << "/" << trainer->config().epochs << " steps=" << trainer->step()
       << " final_loss=" << s.final_loss << " final_knn_accuracy=" << s.final_knn_accuracy << '\n';
    return 0;
}

int cmd_probe(const std::string& checkpoint, const DataFlags& data, const std::string& kind,
              std::size_t knn_k, const LinearProbeConfig& linear, std::ostream& os,
              std::ostream& es) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    auto [train, test] = data.load();
    if (train.dim() != ckpt.params.online.encoder.input_width()) {
        throw UsageError("dataset width does not match the checkpoint's encoder");
    }
    if (kind == "knn" || kind == "both") {
        if (knn_k > train.size()) {
            es << "warning: knn k=" << knn_k << " exceeds the reference set; clamped to "
               << train.size() << '\n';
        }
        os << "knn_accuracy=" << knn_probe(ckpt.params, train, test, {knn_k, 0.1}) << '\n';
    }
    if (kind == "linear" || kind == "both") {
        os << "linear_accuracy=" << linear_probe(ckpt.params, train, test, linear) << '\n';
    }
    return 0;
}

int cmd_export(const std::string& checkpoint, const std::string& data_path, const std::string& out,
               const std::string& space, const std::string& format, std::ostream& os) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const Dataset ds = read_dataset(data_path);
    if (ds.dim() != ckpt.params.online.encoder.input_width()) {
        throw UsageError("dataset width does not match the checkpoint's encoder");
    }
    const Mat emb = space == "projection" ? project_all(ckpt.params, ds.samples)
                                          : encode_all(ckpt.params, ds.samples);
    if (format == "csv") {
        std::ofstream f(out, std::ios::trunc);
        if (!f) {
            fail(ErrorCode::Io, "cannot open " + out);
        }
        f.precision(17);
        for (std::size_t j = 0; j < emb.cols; ++j) {
            f << 'e' << j << ',';
        }
        f << "label\n";
        for (std::size_t i = 0; i < emb.rows; ++i) {
            for (double v : emb.row(i)) {
                f << v << ',';
            }
            f << ds.labels[i] << '\n';
        }
    } else {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) {
            fail(ErrorCode::Io, "cannot open " + out);
        }
        binio::write_magic(f, "ASCLEMBD");
        binio::write_u32(f, 1);
        binio::write_u64(f, emb.rows);
        binio::write_u32(f, static_cast<std::uint32_t>(emb.cols));
        for (std::size_t i = 0; i < emb.rows; ++i) {
            binio::write_f64s(f, emb.row(i));
            binio::write_i32(f, ds.labels[i]);
        }
    }
    os << "wrote " << emb.rows << " x " << emb.cols << " " << space << " embeddings to " << out
       << '\n';
    return 0;
}

std::vector<Method> parse_strategies(const std::string& list) {
    std::vector<Method> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) {
            continue;
        }
        try {
            out.push_back(parse_method(item));
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    if (out.empty()) {
        throw UsageError("--strategies is empty");
    }
    return out;
}

int cmd_compare(const RunFlags& flags, const DataFlags& data, const std::string& strategies,
                const std::string& out_dir, std::ostream& os) {
    if (flags.given("strategy")) {
        throw UsageError("compare picks methods with --strategies, not --strategy");
    }
    auto [train, test] = data.load();
    RunConfig base = flags.build();
    base.dataset_path = data.data;
    base.test_dataset_path = data.test_data;
    std::vector<RunConfig> configs;
    for (Method m : parse_strategies(strategies)) {
        RunConfig c = base;
        c.method = m;
        try {
            configs.push_back(prepare_config(c, train.dim()));
        } catch (const Error& e) {
            throw UsageError(std::string(to_string(m)) + ": " + e.what());
        }
    }
    std::ostringstream table;
    table << compare_header() << '\n';
    std::vector<std::vector<MetricsRecord>> logs;
    for (const RunConfig& c : configs) {
        Trainer t(c, train, test);
        logs.push_back(t.run());
        table << compare_row(c, summarize(logs.back())) << '\n';
    }
    if (!out_dir.empty()) {
        for (std::size_t i = 0; i < configs.size(); ++i) {
            const fs::path dir = fs::path(out_dir) / std::string(to_string(configs[i].method));
            fs::create_directories(dir);
            write_lines(dir / "metrics.jsonl", logs[i], false);
        }
        write_text(fs::path(out_dir) / "compare.csv", table.str());
    }
    os << table.str();
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive soft-label contrastive learning toolkit", "ascl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ascl 1.0");

    // gen-data
    std::string generator = "gaussian", gen_out, gen_test_out;
    std::uint32_t classes = 4;
    std::size_t per_class = 500, dim = 16, holdout = 5;
    double separation = 8.0, noise = 0.1;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset file");
    add(gen, "generator", generator, "gaussian|moons")->check(CLI::IsMember({"gaussian", "moons"}));
    add(gen, "classes", classes, "number of classes (gaussian)")->check(CLI::PositiveNumber);
    add(gen, "per-class", per_class, "samples per class")->check(CLI::PositiveNumber);
    add(gen, "dim", dim, "feature dimension")->check(CLI::PositiveNumber);
    add(gen, "separation", separation, "radius of the class-center sphere")
        ->check(CLI::NonNegativeNumber);
    add(gen, "noise", noise, "noise sigma (moons)")->check(CLI::NonNegativeNumber);
    add(gen, "seed", gen_seed, "random seed");
    add(gen, "out", gen_out, "output dataset file")->required();
    add(gen, "test-out", gen_test_out, "also write a held-out split here");
    add(gen, "holdout", holdout, "every N-th sample goes to --test-out")->check(CLI::Range(2, 1000));

    // train
    RunFlags train_flags;
    DataFlags train_data;
    std::string train_out, resume;
    std::optional<std::size_t> stop_after;
    auto* train = app.add_subcommand("train", "train an encoder");
    train_flags.attach(train);
    train_data.attach(train);
    add(train, "out", train_out, "output directory")->required();
    add(train, "resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);
    add(train, "stop-after-epoch", stop_after, "stop and checkpoint after this many epochs")
        ->check(CLI::PositiveNumber);

    // probe
    std::string probe_ckpt, probe_kind = "both";
    DataFlags probe_data;
    std::size_t probe_k = 20;
    LinearProbeConfig linear;
    auto* probe = app.add_subcommand("probe", "evaluate a frozen encoder");
    add(probe, "checkpoint", probe_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    probe_data.attach(probe);
    add(probe, "kind", probe_kind, "knn|linear|both")->check(CLI::IsMember({"knn", "linear", "both"}));
    add(probe, "knn-k", probe_k, "neighbours for the KNN vote")->check(CLI::PositiveNumber);
    add(probe, "probe-epochs", linear.epochs, "linear probe epochs")->check(CLI::PositiveNumber);
    add(probe, "probe-lr", linear.lr, "linear probe base lr")->check(CLI::PositiveNumber);

    // export-embeddings
    std::string exp_ckpt, exp_data, exp_out, space = "representation", format = "bin";
    auto* exp = app.add_subcommand("export-embeddings", "write embeddings with class labels");
    add(exp, "checkpoint", exp_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    add(exp, "data", exp_data, "dataset file")->required()->check(CLI::ExistingFile);
    add(exp, "out", exp_out, "output file")->required();
    add(exp, "space", space, "representation|projection")
        ->check(CLI::IsMember({"representation", "projection"}));
    add(exp, "format", format, "bin|csv")->check(CLI::IsMember({"bin", "csv"}));

    // compare
    RunFlags cmp_flags;
    DataFlags cmp_data;
    std::string strategies = "onehot,hard,ahcl,ascl", cmp_out;
    auto* cmp = app.add_subcommand("compare", "train several strategies and tabulate them");
    cmp_flags.attach(cmp);
    cmp_data.attach(cmp);
    add(cmp, "strategies", strategies, "comma-separated strategy list");
    add(cmp, "out", cmp_out, "directory for compare.csv and per-strategy logs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const CLI::App* failing = &app;
        for (CLI::App* sub : app.get_subcommands()) {
            failing = sub;
        }
        err << failing->help();
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_data(generator, classes, per_class, dim, separation, noise, gen_seed,
                                gen_out, gen_test_out, holdout, out);
        }
        if (train->parsed()) {
            return cmd_train(train_flags, train_data, train_out, resume, stop_after, out, err);
        }
        if (probe->parsed()) {
            return cmd_probe(probe_ckpt, probe_data, probe_kind, probe_k, linear, out, err);
        }
        if (exp->parsed()) {
            return cmd_export(exp_ckpt, exp_data, exp_out, space, format, out);
        }
        if (cmp->parsed()) {
            return cmd_compare(cmp_flags, cmp_data, strategies, cmp_out, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace ascl::cli
