#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ball3d/baseline.hpp"
#include "ball3d/dataset.hpp"
#include "ball3d/errors.hpp"
#include "ball3d/gap_filler.hpp"
#include "ball3d/metrics.hpp"
#include "ball3d/plot.hpp"
#include "ball3d/predictions.hpp"
#include "ball3d/training.hpp"

namespace ball3d::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Raised for flag combinations CLI11 cannot check by itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    ordered_json flags = ordered_json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void write(const fs::path& path) const {
        ordered_json j;
        j["tool"] = "ball3d";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["argv"] = argv;
        j["flags"] = flags;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::ofstream out(path, std::ios::trunc);
        out << j.dump(2) << '\n';
        if (!out) throw Error("cannot write manifest " + path.string());
    }
};

ordered_json collect_flags(const CLI::App& app) {
    ordered_json flags = ordered_json::object();
    for (const CLI::Option* opt : app.get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
        const auto& res = opt->results();
        if (res.empty()) continue;
        flags[opt->get_name()] = res.size() == 1 ? ordered_json(res.front()) : ordered_json(res);
    }
    return flags;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("cannot parse number '" + item + "' in list '" + text + "'");
        }
    }
    return out;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::string manifest_for(const fs::path& file) { return file.string() + ".manifest.json"; }

DatasetInfo load_info(const std::string& path) {
    DatasetInfo info;
    load_jsonl(path, &info);
    return info;
}

/// Loads a camera and checks that every sequence was rendered with it.
CameraModel load_checked_camera(const std::string& path, const std::vector<Sequence>& sequences) {
    const CameraModel cam = load_camera(path);
    cam.validate();
    const std::string id = camera_fingerprint(cam);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (!sequences[i].camera_id.empty() && sequences[i].camera_id != id) {
            throw Error("camera mismatch: sequence " + std::to_string(i) + " was recorded with " +
                        sequences[i].camera_id + " but " + path + " is " + id);
        }
    }
    return cam;
}

struct NoiseFlags {
    double uniform = 0.0;
    double gaussian = 0.0;
    std::uint64_t seed = 0;

    void add(CLI::App* app) {
        app->add_option("--noise-uniform", uniform, "Uniform pixel noise bound k (noise in [-k, k] per axis)")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--noise-gaussian", gaussian, "Gaussian pixel noise sigma")->check(CLI::NonNegativeNumber);
    }
};

/// Evaluation-time noise: identical draws for every estimator given the same seed.
std::vector<Sequence> apply_noise(const std::vector<Sequence>& seqs, const CameraModel& cam, double uniform_bound,
                                  double sigma, std::uint64_t seed) {
    if (uniform_bound > 0.0 && sigma > 0.0) throw UsageError("choose either uniform or Gaussian noise");
    if (uniform_bound <= 0.0 && sigma <= 0.0) return seqs;
    const PixelNoise noise = uniform_bound > 0.0 ? PixelNoise::uniform(uniform_bound) : PixelNoise::gaussian(sigma);
    std::vector<Sequence> out;
    out.reserve(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        Rng rng = make_stream(seed, "eval-noise", i);
        out.push_back(add_pixel_noise(seqs[i], cam, noise, rng));
    }
    return out;
}

std::vector<PredictionRecord> run_pipeline(const PipelineWeights& w, const std::vector<Sequence>& seqs,
                                           const CameraModel& cam, int threads) {
    std::vector<PredictionRecord> records(seqs.size());
    parallel_for(seqs.size(), threads, [&](std::size_t i) { records[i] = to_record(predict(w, seqs[i], cam)); });
    return records;
}

std::vector<PredictionRecord> run_baseline(const std::vector<Sequence>& seqs, const CameraModel& cam,
                                           SegmentMode mode, const BaselineConfig& config, int threads) {
    std::vector<PredictionRecord> records(seqs.size());
    parallel_for(seqs.size(), threads, [&](std::size_t i) {
        records[i].method = "baseline";
        records[i].points = baseline_predict(seqs[i], cam, mode, config).points;
    });
    return records;
}

std::vector<std::vector<Vec3>> points_of(const std::vector<PredictionRecord>& records) {
    std::vector<std::vector<Vec3>> out;
    for (const auto& r : records) out.push_back(r.points);
    return out;
}

SegmentMode parse_segmentation(const std::string& s) {
    if (s == "heuristic") return SegmentMode::Heuristic;
    if (s == "flags") return SegmentMode::GroundTruthFlags;
    throw UsageError("--segmentation must be 'heuristic' or 'flags'");
}

// ---- commands -----------------------------------------------------------------------

struct SimulateCmd {
    std::string family;
    int count = 0;
    std::string split;
    double fps = 0.0;
    int launches = 0;
    std::uint64_t seed = 0;
    std::string out;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("simulate", "Generate train/val/test JSONL splits and the camera file");
        c->add_option("--family", family, "single | multi | tennis")->required()
            ->check(CLI::IsMember({"single", "multi", "tennis"}));
        c->add_option("--count", count, "Total number of sequences")->required();
        c->add_option("--split", split, "train,val,test counts summing to --count (default 70/10/20 %)");
        c->add_option("--fps", fps, "Frame rate override");
        c->add_option("--launches", launches, "Launches (multi) or strokes (tennis) per sequence");
        c->add_option("--seed", seed, "Base seed");
        c->add_option("--out", out, "Output directory")->required();
    }

    int run(Manifest& m) {
        if (count < 1) throw UsageError("--count must be at least 1");
        SplitCounts counts;
        if (split.empty()) {
            counts.train = static_cast<int>(std::lround(0.7 * count));
            counts.val = static_cast<int>(std::lround(0.1 * count));
            counts.test = count - counts.train - counts.val;
        } else {
            const auto parts = parse_list(split);
            if (parts.size() != 3) throw UsageError("--split needs three counts");
            counts = {static_cast<int>(parts[0]), static_cast<int>(parts[1]), static_cast<int>(parts[2])};
            if (counts.train < 0 || counts.val < 0 || counts.test < 0 || counts.train + counts.val + counts.test != count) {
                throw UsageError("--split counts must be non-negative and sum to --count");
            }
        }
        const Family fam = family_from_string(family);
        SimConfig config = default_sim_config(fam);
        config.seed = seed;
        if (fps > 0.0) config.fps = fps;
        if (launches > 0) {
            config.num_launches = launches;
            config.max_launches = 0;
        }
        const CameraModel cam = default_camera(fam);
        const std::string cam_id = camera_fingerprint(cam);
        const DatasetSplit data = generate_split(config, counts, cam, cam_id);

        fs::create_directories(out);
        const fs::path dir(out);
        save_camera(cam, (dir / "camera.json").string());
        save_jsonl(data.train, (dir / "train.jsonl").string(), {family, seed, "train"});
        save_jsonl(data.val, (dir / "val.jsonl").string(), {family, seed, "val"});
        save_jsonl(data.test, (dir / "test.jsonl").string(), {family, seed, "test"});
        m.outputs = {(dir / "camera.json").string(), (dir / "train.jsonl").string(), (dir / "val.jsonl").string(),
                     (dir / "test.jsonl").string()};
        m.write(dir / "manifest.json");
        std::cout << "wrote " << counts.train << '/' << counts.val << '/' << counts.test << " sequences to " << out << '\n';
        return 0;
    }
};

struct TrainCmd {
    std::string data;
    std::string camera;
    std::string out;
    std::string resume;
    std::string arch = "auto";
    std::string gamma = "auto";
    TrainConfig config;
    int threads = 0;

    TrainCmd() { config.batch_size = 16; }

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("train", "Train the estimator on a simulated dataset directory");
        c->add_option("--data", data, "Dataset directory with train.jsonl, val.jsonl, camera.json")->required();
        c->add_option("--camera", camera, "Camera file (default: <data>/camera.json)");
        c->add_option("--out", out, "Output directory")->required();
        c->add_option("--epochs", config.epochs, "Epochs")->capture_default_str();
        c->add_option("--batch-size", config.batch_size, "Sequences per optimizer step")->capture_default_str();
        c->add_option("--lr", config.lr, "Adam learning rate")->capture_default_str();
        c->add_option("--lambda-eot", config.lambda.eot, "Weight of the EoT loss")->capture_default_str();
        c->add_option("--lambda-3d", config.lambda.reconstruction, "Weight of the 3D loss")->capture_default_str();
        c->add_option("--lambda-below", config.lambda.below_ground, "Weight of the below-ground loss")
            ->capture_default_str();
        c->add_option("--gamma", gamma, "EoT class balance in (0,1) or 'auto'")->capture_default_str();
        c->add_option("--noise-sigma", config.noise_sigma, "Gaussian pixel augmentation sigma")->capture_default_str();
        c->add_option("--seed", config.seed, "Seed")->capture_default_str();
        c->add_option("--threads", threads, "Worker threads (default: BALL3D_THREADS or 1)");
        c->add_flag("--teacher-forced-eot", config.teacher_forced_eot, "Feed ground-truth EoT flags to the height networks");
        c->add_option("--resume", resume, "Continue from a last.ckpt written by an earlier run");
        c->add_option("--arch", arch, "Feature scaling preset: auto | single | multi | tennis")->capture_default_str();
    }

    int run(Manifest& m) {
        const fs::path dir(data);
        const std::string train_path = (dir / "train.jsonl").string();
        const std::string val_path = (dir / "val.jsonl").string();
        if (!fs::exists(train_path)) throw UsageError("no train.jsonl in " + data);
        DatasetInfo info;
        const auto train_set = load_jsonl(train_path, &info);
        const auto val_set = fs::exists(val_path) ? load_jsonl(val_path) : std::vector<Sequence>{};
        const std::string cam_path = camera.empty() ? (dir / "camera.json").string() : camera;
        const CameraModel cam = load_checked_camera(cam_path, train_set);
        if (gamma != "auto") {
            const auto v = parse_list(gamma);
            if (v.size() != 1) throw UsageError("--gamma takes one number or 'auto'");
            config.gamma = v.front();
        }
        config.threads = resolve_threads(threads);
        const ArchitectureConfig a = default_architecture(arch == "auto" ? info.family : arch);

        fs::create_directories(out);
        const fs::path o(out);
        TrainIo io;
        io.best_checkpoint = o / "best.ckpt";
        io.last_checkpoint = o / "last.ckpt";
        io.log_csv = o / "train_log.csv";
        if (!resume.empty()) io.resume_from = resume;
        io.on_epoch = [](const EpochLog& e) {
            std::cout << "epoch " << e.epoch << " total " << e.total << " L3D " << e.loss_3d << " val " << e.val_loss_3d
                      << std::endl;
        };
        const TrainResult r = train(train_set, val_set, cam, config, a, io);
        m.inputs = {train_path, val_path, cam_path};
        if (!resume.empty()) m.inputs.push_back(resume);
        m.outputs = {io.best_checkpoint.string(), io.last_checkpoint.string(), io.log_csv.string()};
        m.write(o / "manifest.json");
        std::cout << "best epoch " << r.best_epoch << " (gamma " << r.gamma << ")\n";
        return 0;
    }
};

struct PredictCmd {
    std::string model;
    std::string data;
    std::string camera;
    std::string out;
    std::string gap_model;
    NoiseFlags noise;
    int threads = 0;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("predict", "Run the trained estimator on a dataset file");
        c->add_option("--model", model, "Checkpoint")->required();
        c->add_option("--data", data, "Dataset JSONL")->required();
        c->add_option("--camera", camera, "Camera file")->required();
        c->add_option("--out", out, "Predictions JSONL")->required();
        c->add_option("--fill-gaps", gap_model, "Gap filler checkpoint used for tracks with missing pixels");
        c->add_option("--seed", noise.seed, "Noise seed");
        c->add_option("--threads", threads, "Worker threads");
        noise.add(c);
    }

    int run(Manifest& m) {
        auto seqs = load_jsonl(data);
        const CameraModel cam = load_checked_camera(camera, seqs);
        if (!gap_model.empty()) {
            const GapFillerWeights gw = load_gap_filler(gap_model);
            for (auto& s : seqs) {
                if (!s.has_complete_pixels()) {
                    s = fill_missing(s, gw);
                    refresh_plane_points(s, cam);
                }
            }
            m.inputs.push_back(gap_model);
        }
        seqs = apply_noise(seqs, cam, noise.uniform, noise.gaussian, noise.seed);
        const PipelineWeights w = load_pipeline(model);
        const auto records = run_pipeline(w, seqs, cam, resolve_threads(threads));
        ensure_parent(out);
        save_predictions(out, records);
        m.inputs.insert(m.inputs.end(), {model, data, camera});
        m.outputs = {out};
        m.write(manifest_for(out));
        return 0;
    }
};

struct BaselineCmd {
    std::string data;
    std::string camera;
    std::string out;
    std::string segmentation = "heuristic";
    BaselineConfig config;
    NoiseFlags noise;
    int threads = 0;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("baseline", "Run the physics-based fitter on a dataset file");
        c->add_option("--data", data, "Dataset JSONL")->required();
        c->add_option("--camera", camera, "Camera file")->required();
        c->add_option("--out", out, "Predictions JSONL")->required();
        c->add_option("--segmentation", segmentation, "heuristic | flags")->capture_default_str();
        c->add_option("--contact-weight", config.contact_weight, "Contact penalty mu")->capture_default_str();
        c->add_option("--seed", noise.seed, "Noise seed");
        c->add_option("--threads", threads, "Worker threads");
        noise.add(c);
    }

    int run(Manifest& m) {
        auto seqs = load_jsonl(data);
        const CameraModel cam = load_checked_camera(camera, seqs);
        seqs = apply_noise(seqs, cam, noise.uniform, noise.gaussian, noise.seed);
        const auto records = run_baseline(seqs, cam, parse_segmentation(segmentation), config, resolve_threads(threads));
        ensure_parent(out);
        save_predictions(out, records);
        m.inputs = {data, camera};
        m.outputs = {out};
        m.write(manifest_for(out));
        return 0;
    }
};

struct EvaluateCmd {
    std::string predictions;
    std::string data;
    std::string camera;
    std::string out;
    std::string csv;
    std::string label = "run";
    std::vector<std::string> denominators;
    EvalOptions options;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("evaluate", "Score predictions against ground truth");
        c->add_option("--predictions", predictions, "Predictions JSONL")->required();
        c->add_option("--data", data, "Dataset JSONL with ground truth")->required();
        c->add_option("--out", out, "MetricReport JSON")->required();
        c->add_option("--camera", camera, "Camera file; adds the camera_distance NRMSE variant");
        c->add_option("--csv", csv, "Also write a one-row CSV table");
        c->add_option("--label", label, "Row label for the CSV table");
        c->add_option("--denominator", denominators, "Extra NRMSE variant name=metres (repeatable)");
        c->add_flag("--landing", options.landing, "Compute landing metrics");
        c->add_option("--radius", options.radius_m, "Landing match radius (m)")->capture_default_str();
        c->add_option("--window", options.window_frames, "Landing match window (frames)")->capture_default_str();
    }

    int run(Manifest& m) {
        const auto seqs = load_jsonl(data);
        const auto records = load_predictions(predictions);
        for (const std::string& d : denominators) {
            const auto eq = d.find('=');
            if (eq == std::string::npos) throw UsageError("--denominator expects name=value");
            const auto v = parse_list(d.substr(eq + 1));
            if (v.size() != 1) throw UsageError("--denominator expects name=value");
            options.denominators[d.substr(0, eq)] = v.front();
        }
        if (!camera.empty()) {
            const CameraModel cam = load_checked_camera(camera, seqs);
            std::vector<Vec3> all;
            for (const auto& s : seqs) {
                const auto gt = s.ground_truth();
                all.insert(all.end(), gt.begin(), gt.end());
            }
            options.denominators["camera_distance"] = mean_camera_distance(cam, all);
            m.inputs.push_back(camera);
        }
        const MetricReport report = evaluate(points_of(records), seqs, options);
        ensure_parent(out);
        {
            std::ofstream f(out, std::ios::trunc);
            f << report.to_json().dump(2) << '\n';
            if (!f) throw Error("cannot write " + out);
        }
        m.outputs = {out};
        if (!csv.empty()) {
            ensure_parent(csv);
            write_report_csv(csv, {{label, report}});
            m.outputs.push_back(csv);
        }
        m.inputs.insert(m.inputs.end(), {predictions, data});
        m.write(manifest_for(out));
        std::cout << "nrmse " << report.nrmse_range << " rmse " << report.rmse_distance << " m\n";
        return 0;
    }
};

struct SweepCmd {
    std::string model;
    bool baseline = false;
    std::string data;
    std::string camera;
    std::string out;
    std::string levels = "0,5,10,15,20,25";
    std::string segmentation = "heuristic";
    std::uint64_t seed = 0;
    int threads = 0;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("sweep", "Uniform-noise sweep: one CSV row per noise level");
        c->add_option("--model", model, "Estimator checkpoint (column 'pipeline')");
        c->add_flag("--baseline", baseline, "Add a 'baseline' column");
        c->add_option("--data", data, "Test JSONL")->required();
        c->add_option("--camera", camera, "Camera file")->required();
        c->add_option("--out", out, "CSV table")->required();
        c->add_option("--levels", levels, "Comma separated noise bounds (pixels)")->capture_default_str();
        c->add_option("--segmentation", segmentation, "Baseline segmentation: heuristic | flags")->capture_default_str();
        c->add_option("--seed", seed, "Noise seed");
        c->add_option("--threads", threads, "Worker threads");
    }

    int run(Manifest& m) {
        if (model.empty() && !baseline) throw UsageError("sweep needs --model and/or --baseline");
        const auto seqs = load_jsonl(data);
        const CameraModel cam = load_checked_camera(camera, seqs);
        const auto ks = parse_list(levels);
        const int workers = resolve_threads(threads);
        std::optional<PipelineWeights> w;
        if (!model.empty()) w = load_pipeline(model);
        ensure_parent(out);
        std::ofstream f(out, std::ios::trunc);
        f << "noise_px";
        if (w) f << ",pipeline_nrmse";
        if (baseline) f << ",baseline_nrmse";
        f << '\n';
        for (const double k : ks) {
            const auto noisy = apply_noise(seqs, cam, k, 0.0, seed);
            f << k;
            if (w) f << ',' << evaluate(points_of(run_pipeline(*w, noisy, cam, workers)), seqs).nrmse_range;
            if (baseline) {
                const auto recs = run_baseline(noisy, cam, parse_segmentation(segmentation), {}, workers);
                f << ',' << evaluate(points_of(recs), seqs).nrmse_range;
            }
            f << '\n';
        }
        if (!f) throw Error("cannot write " + out);
        m.inputs = {data, camera};
        if (w) m.inputs.push_back(model);
        m.outputs = {out};
        m.write(manifest_for(out));
        return 0;
    }
};

struct GradcheckCmd {
    std::string model;
    std::string family = "single";
    int samples = 50;
    std::uint64_t seed = 0;
    std::string out;
    double tolerance = 1e-4;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
        c->add_option("--model", model, "Checkpoint (default: fresh random weights)");
        c->add_option("--family", family, "Family of the simulated probe track")->capture_default_str()
            ->check(CLI::IsMember({"single", "multi", "tennis"}));
        c->add_option("--samples", samples, "Number of scalar parameters")->capture_default_str();
        c->add_option("--seed", seed, "Seed");
        c->add_option("--out", out, "Optional JSON report");
        c->add_option("--tolerance", tolerance, "Maximum accepted relative error")->capture_default_str();
    }

    int run(Manifest& m) {
        if (samples < 1) throw UsageError("--samples must be positive");
        const Family fam = family_from_string(family);
        PipelineWeights w;
        if (model.empty()) {
            w = PipelineWeights::create(default_architecture(family));
            Rng init = make_stream(seed, "init");
            w.initialize(init);
        } else {
            w = load_pipeline(model);
            m.inputs.push_back(model);
        }
        SimConfig config = default_sim_config(fam);
        config.seed = seed;
        const CameraModel cam = default_camera(fam);
        const Sequence seq = render_track(simulate_family(config).sequence, cam);
        Rng pick = make_stream(seed, "gradcheck");
        const GradCheckReport report = gradient_check(w, seq, cam, auto_gamma({seq}), LossWeights{}, samples, pick);
        ordered_json j;
        j["max_relative_error"] = report.max_relative_error;
        j["tolerance"] = tolerance;
        j["passed"] = report.max_relative_error < tolerance;
        j["entries"] = ordered_json::array();
        for (const auto& e : report.entries) {
            j["entries"].push_back({{"parameter", e.parameter}, {"index", e.index}, {"analytic", e.analytic},
                                    {"numeric", e.numeric}, {"relative_error", e.relative_error}});
        }
        if (!out.empty()) {
            ensure_parent(out);
            std::ofstream f(out, std::ios::trunc);
            f << j.dump(2) << '\n';
            m.outputs = {out};
            m.write(manifest_for(out));
        }
        std::cout << "max relative error " << report.max_relative_error << " over " << samples << " parameters: "
                  << (report.max_relative_error < tolerance ? "PASS" : "FAIL") << '\n';
        return report.max_relative_error < tolerance ? 0 : 1;
    }
};

struct PlotCmd {
    std::string data;
    std::string predictions;
    std::size_t index = 0;
    std::string out;
    std::string title;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("plot", "Side and top views of one sequence as SVG");
        c->add_option("--data", data, "Dataset JSONL")->required();
        c->add_option("--predictions", predictions, "Predictions JSONL (blue)");
        c->add_option("--index", index, "Sequence index")->capture_default_str();
        c->add_option("--out", out, "SVG file")->required();
        c->add_option("--title", title, "Plot title");
    }

    int run(Manifest& m) {
        const auto seqs = load_jsonl(data);
        if (index >= seqs.size()) throw UsageError("--index out of range");
        std::vector<PlotSeries> series;
        if (seqs[index].has_ground_truth()) series.push_back({"ground truth", "red", seqs[index].ground_truth()});
        m.inputs = {data};
        if (!predictions.empty()) {
            const auto recs = load_predictions(predictions);
            if (index >= recs.size()) throw UsageError("predictions file has fewer sequences than --index");
            series.push_back({recs[index].method, "blue", recs[index].points});
            m.inputs.push_back(predictions);
        }
        ensure_parent(out);
        std::ofstream f(out, std::ios::trunc);
        f << render_trajectory_svg(series, title.empty() ? "sequence " + std::to_string(index) : title);
        if (!f) throw Error("cannot write " + out);
        m.outputs = {out};
        m.write(manifest_for(out));
        return 0;
    }
};

struct GapTrainCmd {
    std::string data;
    std::string out;
    GapFillerConfig config;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("train-gap-filler", "Train the autoregressive missing-point filler");
        c->add_option("--data", data, "JSONL with complete pixel tracks")->required();
        c->add_option("--out", out, "Checkpoint")->required();
        c->add_option("--epochs", config.epochs, "Epochs")->capture_default_str();
        c->add_option("--batch-size", config.batch_size, "Sequences per step")->capture_default_str();
        c->add_option("--lr", config.lr, "Adam learning rate")->capture_default_str();
        c->add_option("--seed", config.seed, "Seed");
    }

    int run(Manifest& m) {
        const auto seqs = load_jsonl(data);
        std::vector<double> losses;
        const GapFillerWeights w = train_gap_filler(seqs, config, &losses);
        ensure_parent(out);
        save_gap_filler(out, w);
        m.inputs = {data};
        m.outputs = {out};
        m.write(manifest_for(out));
        std::cout << "final teacher-forced loss " << (losses.empty() ? 0.0 : losses.back()) << '\n';
        return 0;
    }
};

struct FillCmd {
    std::string model;
    std::string data;
    std::string camera;
    std::string out;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("fill", "Fill interior missing pixels of every track");
        c->add_option("--model", model, "Gap filler checkpoint")->required();
        c->add_option("--data", data, "Dataset JSONL")->required();
        c->add_option("--camera", camera, "Camera file")->required();
        c->add_option("--out", out, "Output JSONL")->required();
    }

    int run(Manifest& m) {
        DatasetInfo info;
        auto seqs = load_jsonl(data, &info);
        const CameraModel cam = load_checked_camera(camera, seqs);
        const GapFillerWeights w = load_gap_filler(model);
        for (auto& s : seqs) {
            s = fill_missing(s, w);
            refresh_plane_points(s, cam);
        }
        ensure_parent(out);
        save_jsonl(seqs, out, info);
        m.inputs = {model, data, camera};
        m.outputs = {out};
        m.write(manifest_for(out));
        return 0;
    }
};

int dispatch(const std::vector<std::string>& args, int depth);

struct ReplayCmd {
    std::string manifest;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
        c->add_option("--manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    }

    int run(int depth) {
        std::ifstream in(manifest);
        const auto j = nlohmann::json::parse(in);
        if (j.value("tool", std::string()) != "ball3d") throw UsageError(manifest + " is not a ball3d manifest");
        return dispatch(j.at("argv").get<std::vector<std::string>>(), depth + 1);
    }
};

int dispatch(const std::vector<std::string>& args, int depth) {
    if (depth > 1) throw UsageError("a manifest cannot replay another replay");
    CLI::App app{"ball3d: monocular 3D ball trajectory estimation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    SimulateCmd simulate;
    TrainCmd train_cmd;
    PredictCmd predict_cmd;
    BaselineCmd baseline_cmd;
    EvaluateCmd evaluate_cmd;
    SweepCmd sweep;
    GradcheckCmd gradcheck;
    PlotCmd plot;
    GapTrainCmd gap_train;
    FillCmd fill;
    ReplayCmd replay;
    simulate.add(app);
    train_cmd.add(app);
    predict_cmd.add(app);
    baseline_cmd.add(app);
    evaluate_cmd.add(app);
    sweep.add(app);
    gradcheck.add(app);
    plot.add(app);
    gap_train.add(app);
    fill.add(app);
    replay.add(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    Manifest m;
    m.command = sub->get_name();
    m.argv = args;
    m.flags = collect_flags(*sub);
    const std::string& name = m.command;
    if (name == "simulate") return simulate.run(m);
    if (name == "train") return train_cmd.run(m);
    if (name == "predict") return predict_cmd.run(m);
    if (name == "baseline") return baseline_cmd.run(m);
    if (name == "evaluate") return evaluate_cmd.run(m);
    if (name == "sweep") return sweep.run(m);
    if (name == "gradcheck") return gradcheck.run(m);
    if (name == "plot") return plot.run(m);
    if (name == "train-gap-filler") return gap_train.run(m);
    if (name == "fill") return fill.run(m);
    if (name == "replay") return replay.run(depth);
    throw UsageError("unknown command " + name);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    try {
        return dispatch(args, 0);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ball3d::cli
