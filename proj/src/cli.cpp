/*
 * Copyright (c) 2026, witt contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "witt/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "witt/checkpoint.hpp"
#include "witt/data.hpp"
#include "witt/report.hpp"
#include "witt/train.hpp"

namespace witt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string manifest_hash(const std::string& manifest_json) {
    json j = json::parse(manifest_json);
    j.erase("hash");
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

namespace {

// ---- shared option plumbing ----

struct CommonOpts {
    std::string config_path;
    std::string preset = "tiny";
    bool preset_given = false;
    uint64_t seed = 1;
    std::string channel = "awgn";
    std::string equalization;  // "", "mmse", "none"
};

std::string resolve_dataset(const std::string& path) {
    if (fs::exists(path)) return path;
    if (const char* root = std::getenv("JSCC_DATA_DIR")) {
        const fs::path alt = fs::path(root) / path;
        if (fs::exists(alt)) return alt.string();
    }
    throw ConfigError("dataset path not found: " + path);
}

json load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return j;
}

// preset default < config file "model" section; structural fields come from
// these two only (CLI flags cover run parameters).
ModelConfig resolve_model_config(const CommonOpts& c) {
    json file;
    if (!c.config_path.empty()) file = load_config_file(c.config_path);
    std::string preset = c.preset;
    if (!c.preset_given && file.contains("preset"))
        preset = file["preset"].get<std::string>();
    ModelConfig m = preset_config(preset);
    if (file.contains("model")) {
        const json& jm = file["model"];
        json merged = json::parse(m.to_json());
        for (auto it = jm.begin(); it != jm.end(); ++it) merged[it.key()] = it.value();
        m = ModelConfig::from_json(merged.dump());
    }
    if (!c.equalization.empty()) m.equalization_mmse = c.equalization == "mmse";
    return m;
}

json train_section(const std::string& config_path) {
    if (config_path.empty()) return json::object();
    json file = load_config_file(config_path);
    return file.value("train", json::object());
}

Tensor load_training_images(const std::string& dataset, int64_t crop, int64_t n_crops,
                            uint64_t seed) {
    const std::string path = resolve_dataset(dataset);
    if (fs::is_directory(path)) {
        ImageDirStream stream(path, crop, seed);
        Tensor all(Shape{n_crops, crop, crop, 3});
        const int64_t stride = crop * crop * 3;
        for (int64_t i = 0; i < n_crops; ++i) {
            ImageBatch b = stream.next();
            std::copy_n(b.data.data(), stride, all.data() + i * stride);
        }
        return all;
    }
    CifarDataset ds = CifarDataset::load(path);
    return ds.images;
}

std::string checkpoint_manifest(const ModelConfig& m, const TrainConfig& t,
                                bool modnet_active, const std::string& dataset) {
    json j;
    j["model"] = json::parse(m.to_json());
    j["modnet_active"] = modnet_active;
    j["phase"] = t.phase;
    j["seed"] = t.seed;
    j["dataset"] = dataset;
    json jt;
    jt["learning_rate"] = t.learning_rate;
    jt["batch_size"] = t.batch_size;
    jt["epochs"] = t.epochs;
    jt["max_steps"] = t.max_steps;
    jt["snr_lo_db"] = t.snr_lo_db;
    jt["snr_hi_db"] = t.snr_hi_db;
    jt["loss"] = t.loss == LossKind::Mse ? "mse" : "1-msssim";
    jt["channel"] = to_string(t.channel);
    jt["equalization"] = t.equalization_mmse ? "mmse" : "none";
    j["train"] = jt;
    j["hash"] = "";
    const std::string h = manifest_hash(j.dump());
    j["hash"] = h;
    return j.dump();
}

struct LoadedModel {
    ModelConfig config;
    std::unique_ptr<WittCodec> codec;
    bool modnet_active = true;
    std::string hash;
};

LoadedModel load_model(const std::string& ckpt_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    json manifest;
    try {
        manifest = json::parse(ck.manifest_json);
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint manifest unreadable: " + std::string(e.what()));
    }
    const std::string stored = manifest.value("hash", "");
    if (stored != manifest_hash(ck.manifest_json))
        throw ConfigError("checkpoint manifest hash mismatch in " + ckpt_path +
                          " (file corrupt or config tampered)");
    LoadedModel lm;
    lm.config = ModelConfig::from_json(manifest.at("model").dump());
    lm.modnet_active = manifest.value("modnet_active", true);
    lm.hash = stored;
    lm.codec = std::make_unique<WittCodec>(lm.config, /*init_seed=*/0);
    load_into_store(ck, lm.codec->params());
    return lm;
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    std::string tok;
    std::istringstream is(s);
    while (std::getline(is, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ConfigError("empty SNR grid: " + s);
    return out;
}

// ---- subcommands ----

int cmd_train(const CommonOpts& common, const std::string& dataset,
              const std::string& out_dir, const json& filecfg, TrainConfig tc,
              const std::string& phase_sel, int64_t crops, int64_t crop_size) {
    ModelConfig mc = resolve_model_config(common);

    // file-config train section fills anything the CLI left at defaults
    // (CLI wins; the caller marks explicit values by passing them in tc)
    tc.equalization_mmse = mc.equalization_mmse;
    tc.validate();

    const Tensor images = load_training_images(dataset, crop_size, crops, tc.seed);
    const int64_t h = images.dim(1), w = images.dim(2);
    {  // fail fast on bad geometry
        WittCodec probe(mc, 0);
        probe.check_dims(h, w);
    }

    TrainConfig t1 = tc;
    t1.phase = 1;
    const std::string run_manifest = checkpoint_manifest(mc, t1, false, dataset);
    const std::string hash = manifest_hash(run_manifest);
    const fs::path run_dir = fs::path(out_dir) / ("run-" + hash.substr(0, 12));
    fs::create_directories(run_dir);
    {
        std::ofstream mf(run_dir / "manifest.json");
        mf << run_manifest << "\n";
    }
    std::printf("run directory: %s\n", run_dir.string().c_str());

    WittCodec codec(mc, tc.seed);
    const bool do_p1 = phase_sel == "both" || phase_sel == "1";
    const bool do_p2 = phase_sel == "both" || phase_sel == "2";

    if (do_p1) {
        TrainConfig t = tc;
        t.phase = 1;
        t.log_path = (run_dir / "train_p1.log").string();
        const std::string manifest = checkpoint_manifest(mc, t, false, dataset);
        auto hook = [&](int epoch, Adam& opt) {
            const std::string base =
                (run_dir / ("checkpoint_p1_e" + std::to_string(epoch))).string();
            save_checkpoint(base + ".wt", codec.params(), manifest);
            opt.save_state(base + ".opt");
        };
        TrainResult r = train_phase(codec, images, t, hook);
        save_checkpoint((run_dir / "checkpoint_phase1.wt").string(), codec.params(),
                        manifest);
        std::printf("phase 1 done: steps=%lld first_epoch_loss=%.6f last_epoch_loss=%.6f\n",
                    static_cast<long long>(r.steps_run), r.first_epoch_mean_loss,
                    r.final_epoch_mean_loss);
    }
    if (do_p2) {
        if (!do_p1) {
            const fs::path p1 = run_dir / "checkpoint_phase1.wt";
            if (fs::exists(p1)) {
                Checkpoint ck = load_checkpoint(p1.string());
                load_into_store(ck, codec.params());
            }
        }
        TrainConfig t = tc;
        t.phase = 2;
        t.log_path = (run_dir / "train_p2.log").string();
        const std::string manifest = checkpoint_manifest(mc, t, true, dataset);
        auto hook = [&](int epoch, Adam& opt) {
            const std::string base =
                (run_dir / ("checkpoint_p2_e" + std::to_string(epoch))).string();
            save_checkpoint(base + ".wt", codec.params(), manifest);
            opt.save_state(base + ".opt");
        };
        TrainResult r = train_phase(codec, images, t, hook);
        save_checkpoint((run_dir / "checkpoint_phase2.wt").string(), codec.params(),
                        manifest);
        std::printf("phase 2 done: steps=%lld first_epoch_loss=%.6f last_epoch_loss=%.6f\n",
                    static_cast<long long>(r.steps_run), r.first_epoch_mean_loss,
                    r.final_epoch_mean_loss);
    }
    (void)filecfg;
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& dataset, EvalConfig ec,
             const std::string& out_csv, const std::string& modnet_mode) {
    LoadedModel lm = load_model(ckpt);
    bool modnet = lm.modnet_active;
    if (modnet_mode == "on") modnet = true;
    if (modnet_mode == "off") modnet = false;
    const Tensor images = [&] {
        const std::string p = resolve_dataset(dataset);
        if (fs::is_directory(p)) {
            // whole images, no crops: evaluation set must satisfy divisibility
            std::vector<Tensor> loaded;
            for (const auto& e : fs::directory_iterator(p)) {
                if (!e.is_regular_file()) continue;
                const std::string f = e.path().string();
                const auto ext = e.path().extension().string();
                if (ext != ".png" && ext != ".ppm") continue;
                loaded.push_back(load_image(f));
            }
            if (loaded.empty()) throw DataError("no images in " + p);
            std::sort(loaded.begin(), loaded.end(),
                      [](const Tensor& a, const Tensor& b) { return a.numel() < b.numel(); });
            // all must share one size for batching; enforce
            for (const auto& t : loaded)
                if (t.shape() != loaded[0].shape())
                    throw DataError("evaluation directory images must share one size");
            Shape s = loaded[0].shape();
            s[0] = static_cast<int64_t>(loaded.size());
            Tensor all(s);
            const int64_t stride = loaded[0].numel();
            for (size_t i = 0; i < loaded.size(); ++i)
                std::copy_n(loaded[i].data(), stride, all.data() + i * stride);
            return all;
        }
        return CifarDataset::load(p).images;
    }();

    lm.codec->check_dims(images.dim(1), images.dim(2));
    ec.equalization_mmse = lm.config.equalization_mmse && ec.equalization_mmse;
    CodecTransceiver t(*lm.codec, modnet);
    std::vector<MetricRecord> records = evaluate(t, images, ec);
    write_metrics_csv(records, out_csv);
    std::printf("wrote %zu records to %s\n", records.size(), out_csv.c_str());
    return 0;
}

int cmd_transmit(const std::string& ckpt, const std::string& input,
                 const std::string& out_path, double snr, ChannelKind kind,
                 bool noiseless, bool equalize_mmse, uint64_t seed) {
    LoadedModel lm = load_model(ckpt);
    Tensor img = load_image(input);
    const int64_t h = img.dim(1), w = img.dim(2);
    lm.codec->check_dims(h, w);  // ShapeError names the required multiple
    const int64_t k = lm.codec->symbols_per_image(h, w);

    NoGradGuard ng;
    Var x = Var::constant(img);
    Var y = lm.codec->encode(x, snr, lm.modnet_active);
    Var r = y;
    if (!noiseless) {
        RngStream h_rng(seed, "transmit/h");
        RngStream n_rng(seed, "transmit/n");
        BatchRealization real = draw_batch_realization(1, k, snr, kind, h_rng, n_rng);
        r = channel_apply(y, real);
        if (equalize_mmse && lm.config.equalization_mmse) r = equalize_rows(r, real);
    }
    Var xhat = lm.codec->decode(r, snr, h, w, lm.modnet_active);
    Tensor recon = clamp01(xhat.value());
    write_image(recon, out_path);

    const double p = psnr_db(img, recon);
    const double ms = ms_ssim_value(img, recon);
    std::printf("cbr=%.6g k=%lld psnr=%.4f msssim=%.6f\n", lm.config.cbr(),
                static_cast<long long>(k), p, ms);
    return 0;
}

int cmd_sweep(const std::vector<std::string>& ckpts, const std::string& dataset,
              EvalConfig ec, const std::string& out_csv, const std::string& plot_path) {
    if (ckpts.empty()) throw ConfigError("sweep: no checkpoints given");
    const std::string p = resolve_dataset(dataset);
    Tensor images = fs::is_directory(p) ? throw ConfigError("sweep: expects a CIFAR file")
                                        : CifarDataset::load(p).images;

    struct Entry {
        double cbr;
        std::vector<MetricRecord> recs;
        std::string name;
    };
    std::vector<Entry> entries;
    for (const auto& c : ckpts) {
        LoadedModel lm = load_model(c);
        lm.codec->check_dims(images.dim(1), images.dim(2));
        CodecTransceiver t(*lm.codec, lm.modnet_active);
        EvalConfig e = ec;
        e.equalization_mmse = ec.equalization_mmse && lm.config.equalization_mmse;
        entries.push_back({lm.config.cbr(), evaluate(t, images, e),
                           fs::path(c).stem().string()});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.cbr < b.cbr; });
    for (size_t i = 1; i < entries.size(); ++i)
        if (entries[i].cbr == entries[i - 1].cbr)
            std::fprintf(stderr, "warning: duplicate cbr %.6g in sweep\n", entries[i].cbr);

    std::vector<MetricRecord> merged;
    for (const auto& e : entries)
        for (const auto& r : e.recs) merged.push_back(r);
    write_metrics_csv(merged, out_csv);

    if (!plot_path.empty()) {
        std::vector<PlotSeries> series;
        if (ec.snr_grid.size() > 1) {
            for (const auto& e : entries) {
                PlotSeries s;
                char label[64];
                std::snprintf(label, sizeof(label), "cbr=%.4g", e.cbr);
                s.label = label;
                for (const auto& r : e.recs) s.points.emplace_back(r.snr_db, r.psnr_db);
                series.push_back(std::move(s));
            }
            write_svg_plot(plot_path, "PSNR vs SNR", "SNR (dB)", "PSNR (dB)", series);
        } else {
            PlotSeries s;
            s.label = "psnr";
            for (const auto& e : entries)
                s.points.emplace_back(e.cbr, e.recs.at(0).psnr_db);
            series.push_back(std::move(s));
            write_svg_plot(plot_path, "PSNR vs CBR", "CBR", "PSNR (dB)", series);
        }
        std::printf("wrote plot to %s\n", plot_path.c_str());
    }
    std::printf("wrote %zu records to %s\n", merged.size(), out_csv.c_str());
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"witt: wireless image transmission transformer"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string dataset, out = "runs";
    std::string out_csv = "metrics.csv";

    // train
    auto* train = app.add_subcommand("train", "two-phase end-to-end training");
    TrainConfig tc;
    std::string phase_sel = "both";
    int64_t crops = 512, crop_size = 256;
    std::string metric = "psnr";
    double snr_lo = 1.0, snr_hi = 13.0;
    train->add_option("--config", common.config_path, "JSON config file");
    train->add_option("--preset", common.preset, "tiny | cifar2stage | hires4stage")
        ->check(CLI::IsMember(preset_names()));
    train->add_option("--dataset", dataset, "CIFAR .bin file or image directory")
        ->required();
    train->add_option("--out", out, "output root (run dir is content-addressed)");
    train->add_option("--seed", tc.seed, "root RNG seed");
    train->add_option("--epochs", tc.epochs, "epochs per phase");
    train->add_option("--steps", tc.max_steps, "step cap per phase (0 = none)");
    train->add_option("--batch", tc.batch_size, "batch size");
    train->add_option("--lr", tc.learning_rate, "Adam learning rate");
    train->add_option("--snr-lo", snr_lo, "training SNR range low (dB)");
    train->add_option("--snr-hi", snr_hi, "training SNR range high (dB)");
    train->add_option("--channel", common.channel, "awgn | rayleigh")
        ->check(CLI::IsMember({"awgn", "rayleigh"}));
    train->add_option("--equalization", common.equalization, "mmse | none")
        ->check(CLI::IsMember({"mmse", "none"}));
    train->add_option("--metric", metric, "psnr (MSE loss) | msssim (1-MS-SSIM loss)")
        ->check(CLI::IsMember({"psnr", "msssim"}));
    train->add_option("--phase", phase_sel, "1 | 2 | both")
        ->check(CLI::IsMember({"1", "2", "both"}));
    train->add_option("--crops", crops, "crop count when dataset is a directory");
    train->add_option("--crop-size", crop_size, "crop side when dataset is a directory");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "metric sweep over an SNR grid");
    std::string ckpt, snr_grid_str = "1,3,5,7,9,11,13", modnet_mode = "auto";
    EvalConfig ec;
    eval_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--dataset", dataset, "CIFAR .bin file or image directory")
        ->required();
    eval_cmd->add_option("--snr-grid", snr_grid_str, "comma-separated dB values");
    eval_cmd->add_option("--channel", common.channel, "awgn | rayleigh")
        ->check(CLI::IsMember({"awgn", "rayleigh"}));
    eval_cmd->add_option("--equalization", common.equalization, "mmse | none")
        ->check(CLI::IsMember({"mmse", "none"}));
    eval_cmd->add_option("--reps", ec.n_rep, "channel draws per image per SNR");
    eval_cmd->add_option("--batch", ec.batch_size, "evaluation batch size");
    eval_cmd->add_option("--seed", ec.seed, "evaluation RNG seed");
    eval_cmd->add_option("--out", out_csv, "output CSV path");
    eval_cmd->add_option("--modnet", modnet_mode, "auto | on | off")
        ->check(CLI::IsMember({"auto", "on", "off"}));

    // transmit
    auto* transmit = app.add_subcommand("transmit", "send one image end to end");
    std::string input, recon_out = "recon.png";
    double snr = 10.0;
    bool noiseless = false;
    uint64_t tseed = 1;
    transmit->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    transmit->add_option("--input", input, "input PNG/PPM")->required();
    transmit->add_option("--out", recon_out, "reconstruction output path");
    transmit->add_option("--snr", snr, "channel SNR (dB)");
    transmit->add_option("--channel", common.channel, "awgn | rayleigh")
        ->check(CLI::IsMember({"awgn", "rayleigh"}));
    transmit->add_option("--equalization", common.equalization, "mmse | none")
        ->check(CLI::IsMember({"mmse", "none"}));
    transmit->add_flag("--noiseless", noiseless, "bypass the channel");
    transmit->add_option("--seed", tseed, "channel RNG seed");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "evaluate checkpoints, merge by CBR");
    std::vector<std::string> ckpts;
    std::string plot_path;
    double sweep_snr = 10.0;
    std::string sweep_grid;
    sweep->add_option("--checkpoints", ckpts, "checkpoint files")
        ->required()
        ->delimiter(',');
    sweep->add_option("--dataset", dataset, "CIFAR .bin file")->required();
    sweep->add_option("--snr", sweep_snr, "fixed SNR (dB)");
    sweep->add_option("--snr-grid", sweep_grid, "optional grid for psnr-vs-snr plot");
    sweep->add_option("--channel", common.channel, "awgn | rayleigh")
        ->check(CLI::IsMember({"awgn", "rayleigh"}));
    sweep->add_option("--equalization", common.equalization, "mmse | none")
        ->check(CLI::IsMember({"mmse", "none"}));
    sweep->add_option("--reps", ec.n_rep, "channel draws per image per SNR");
    sweep->add_option("--seed", ec.seed, "evaluation RNG seed");
    sweep->add_option("--out", out_csv, "merged CSV path");
    sweep->add_option("--plot", plot_path, "optional SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*train) {
            common.preset_given = train->count("--preset") > 0;
            // config file may supply train defaults the CLI did not set
            const json jt = train_section(common.config_path);
            auto fill = [&](const char* cli_name, auto& field, const char* key) {
                using T = std::decay_t<decltype(field)>;
                if (train->count(cli_name) == 0 && jt.contains(key))
                    field = jt.at(key).get<T>();
            };
            fill("--lr", tc.learning_rate, "learning_rate");
            fill("--batch", tc.batch_size, "batch_size");
            fill("--epochs", tc.epochs, "epochs");
            fill("--steps", tc.max_steps, "max_steps");
            fill("--seed", tc.seed, "seed");
            fill("--snr-lo", snr_lo, "snr_lo_db");
            fill("--snr-hi", snr_hi, "snr_hi_db");
            if (train->count("--metric") == 0 && jt.contains("loss"))
                metric = jt.at("loss") == "1-msssim" ? "msssim" : "psnr";
            if (train->count("--channel") == 0 && jt.contains("channel"))
                common.channel = jt.at("channel").get<std::string>();
            tc.snr_lo_db = snr_lo;
            tc.snr_hi_db = snr_hi;
            tc.loss = metric == "msssim" ? LossKind::OneMinusMsssim : LossKind::Mse;
            tc.channel = channel_kind_from_string(common.channel);
            return cmd_train(common, dataset, out, jt, tc, phase_sel, crops, crop_size);
        }
        if (*eval_cmd) {
            ec.snr_grid = parse_grid(snr_grid_str);
            ec.channel = channel_kind_from_string(common.channel);
            ec.equalization_mmse = common.equalization != "none";
            return cmd_eval(ckpt, dataset, ec, out_csv, modnet_mode);
        }
        if (*transmit) {
            return cmd_transmit(ckpt, input, recon_out, snr,
                                channel_kind_from_string(common.channel), noiseless,
                                common.equalization != "none", tseed);
        }
        if (*sweep) {
            ec.snr_grid = sweep_grid.empty() ? std::vector<double>{sweep_snr}
                                             : parse_grid(sweep_grid);
            ec.channel = channel_kind_from_string(common.channel);
            ec.equalization_mmse = common.equalization != "none";
            return cmd_sweep(ckpts, dataset, ec, out_csv, plot_path);
        }
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("witt");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace witt
