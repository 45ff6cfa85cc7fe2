#include "ball3d/training.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "ball3d/dataset.hpp"
#include "ball3d/errors.hpp"
#include "ball3d/nn/checkpoint.hpp"

namespace ball3d {

void TrainConfig::validate() const {
    if (lambda.eot < 0 || lambda.reconstruction < 0 || lambda.below_ground < 0) {
        throw InvalidArgument("loss weights must be non-negative");
    }
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
    if (gamma && !(*gamma > 0.0 && *gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
    if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (noise_sigma < 0.0) throw InvalidArgument("noise sigma must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j = {{"lambda_eot", lambda.eot},
                        {"lambda_3d", lambda.reconstruction},
                        {"lambda_below", lambda.below_ground},
                        {"lr", lr},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"noise_sigma", noise_sigma},
                        {"seed", seed},
                        {"teacher_forced_eot", teacher_forced_eot}};
    j["gamma"] = gamma ? nlohmann::json(*gamma) : nlohmann::json("auto");
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.lambda.eot = j.at("lambda_eot").get<double>();
    c.lambda.reconstruction = j.at("lambda_3d").get<double>();
    c.lambda.below_ground = j.at("lambda_below").get<double>();
    c.lr = j.at("lr").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.noise_sigma = j.at("noise_sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.teacher_forced_eot = j.value("teacher_forced_eot", false);
    if (j.at("gamma").is_number()) c.gamma = j["gamma"].get<double>();
    return c;
}

double auto_gamma(const std::vector<Sequence>& sequences) {
    std::size_t positives = 0;
    std::size_t total = 0;
    for (const Sequence& s : sequences) {
        for (const TrackSample& t : s.samples) positives += t.eot != 0 ? 1 : 0;
        total += s.size();
    }
    if (total == 0) throw InvalidArgument("cannot derive gamma from an empty training set");
    const double g = 1.0 - static_cast<double>(positives) / static_cast<double>(total);
    // Keep both classes weighted when a split happens to be all-positive or all-negative.
    return std::clamp(g, 1e-3, 1.0 - 1e-3);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BALL3D_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

void save_pipeline(const std::filesystem::path& path, const PipelineWeights& w, const nlohmann::json& metadata,
                   const nn::AdamState* adam) {
    nlohmann::json meta = metadata;
    meta["kind"] = "pipeline";
    meta["architecture"] = w.arch.to_json();
    nn::save_checkpoint(path, w.params, meta, adam);
}

PipelineWeights load_pipeline(const std::filesystem::path& path, nlohmann::json* metadata, nn::AdamState* adam) {
    const nlohmann::json header = nn::read_checkpoint_header(path);
    const nlohmann::json& meta = header.at("metadata");
    if (meta.value("kind", std::string()) != "pipeline") {
        throw CheckpointError(path.string() + " does not hold estimator weights");
    }
    PipelineWeights w = PipelineWeights::create(ArchitectureConfig::from_json(meta.at("architecture")));
    nlohmann::json loaded = nn::load_checkpoint(path, w.params, adam);
    if (metadata != nullptr) *metadata = std::move(loaded);
    return w;
}

double mean_reconstruction_loss(const PipelineWeights& w, const std::vector<Sequence>& sequences,
                                const CameraModel& cam, int threads) {
    if (sequences.empty()) return 0.0;
    std::vector<double> losses(sequences.size());
    parallel_for(sequences.size(), threads, [&](std::size_t i) {
        const PredictedTrajectory p = predict(w, sequences[i], cam);
        const auto gt = sequences[i].ground_truth();
        losses[i] = loss_3d(p.final_points, gt);
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

namespace {

struct SequenceLosses {
    double eot = 0.0;
    double reconstruction = 0.0;
    double below = 0.0;
    double total = 0.0;
};

bool finite(const SequenceLosses& l) {
    return std::isfinite(l.eot) && std::isfinite(l.reconstruction) && std::isfinite(l.below) &&
           std::isfinite(l.total);
}

void append_log_row(const std::filesystem::path& path, const EpochLog& e, bool header) {
    std::ofstream out(path, header ? std::ios::trunc : std::ios::app);
    if (!out) throw InvalidArgument("cannot write training log " + path.string());
    if (header) out << "epoch,loss_eot,loss_3d,loss_below,total,val_loss_3d\n";
    if (e.epoch <= 0) return;
    char line[256];
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", e.epoch, e.loss_eot, e.loss_3d,
                  e.loss_below, e.total, e.val_loss_3d);
    out << line;
}

}  // namespace

TrainResult train(const std::vector<Sequence>& train_set, const std::vector<Sequence>& val_set,
                  const CameraModel& cam, const TrainConfig& config, const ArchitectureConfig& arch,
                  const TrainIo& io) {
    config.validate();
    if (train_set.empty()) throw InvalidArgument("training set is empty");
    for (const Sequence& s : train_set) {
        if (!s.has_ground_truth() || !s.has_complete_pixels()) {
            throw InvalidArgument("training sequences need pixels and ground truth");
        }
        if (s.size() < 2) throw SequenceTooShort("training sequence shorter than two frames");
    }
    const int threads = resolve_threads(config.threads);

    TrainResult result;
    result.gamma = config.gamma ? *config.gamma : auto_gamma(train_set);

    PipelineWeights w = PipelineWeights::create(arch);
    Rng init_rng = make_stream(config.seed, "init");
    w.initialize(init_rng);
    nn::AdamState adam(w.params, config.lr);

    int start_epoch = 1;
    double best_val = std::numeric_limits<double>::infinity();
    result.best = w;
    if (!io.resume_from.empty()) {
        nlohmann::json meta;
        w = load_pipeline(io.resume_from, &meta, &adam);
        adam.lr = config.lr;
        start_epoch = meta.at("epoch").get<int>() + 1;
        best_val = meta.value("best_val", best_val);
        result.best_epoch = meta.value("best_epoch", 0);
        result.best = w;
        if (!io.best_checkpoint.empty() && std::filesystem::exists(io.best_checkpoint)) {
            result.best = load_pipeline(io.best_checkpoint);
        }
    } else if (!io.log_csv.empty()) {
        append_log_row(io.log_csv, EpochLog{}, true);
    }

    const std::size_t n = train_set.size();
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    nn::GradientStore grads(w.params);

    for (int epoch = start_epoch; epoch <= config.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = make_stream(config.seed, "shuffle", static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        std::vector<SequenceLosses> losses(n);
        for (std::size_t begin = 0; begin < n; begin += batch) {
            const std::size_t end = std::min(n, begin + batch);
            grads.set_zero();

            // Gradients are added into `grads` strictly in batch order, so the sum does not
            // depend on the number of workers.
            std::mutex turn_mutex;
            std::condition_variable turn_cv;
            std::size_t next = begin;
            const std::size_t workers = std::min<std::size_t>(end - begin, static_cast<std::size_t>(threads));
            std::vector<nn::GradientStore> local(workers, nn::GradientStore(w.params));
            parallel_for(end - begin, static_cast<int>(workers), [&](std::size_t j) {
                const std::size_t slot = j % workers;
                const std::size_t pos = begin + j;
                std::exception_ptr failure;
                try {
                    const Sequence& seq = train_set[order[pos]];
                    Rng noise_rng = make_stream(config.seed, "augment",
                                                static_cast<std::uint64_t>(epoch) * 1000003ULL + order[pos]);
                    const Sequence noisy = config.noise_sigma > 0.0
                                               ? add_pixel_noise(seq, cam, PixelNoise::gaussian(config.noise_sigma), noise_rng)
                                               : seq;
                    const auto pixels = noisy.pixels();
                    const PipelineInputs in = PipelineInputs::from_pixels(pixels, cam);
                    const auto flags = seq.eot_flags();
                    ForwardOptions options;
                    if (config.teacher_forced_eot) options.teacher_eot = &flags;

                    nn::Graph g;
                    const PipelineNodes nodes = pipeline_forward(g, w, in, options);
                    const LossNodes l = pipeline_losses(nodes, flags, seq.ground_truth(), result.gamma, config.lambda);
                    SequenceLosses& rec = losses[pos];
                    rec = {l.eot.scalar(), l.reconstruction.scalar(), l.below_ground.scalar(), l.total.scalar()};
                    local[slot].set_zero();
                    if (finite(rec)) g.backward(l.total, local[slot]);
                } catch (...) {
                    failure = std::current_exception();
                }

                std::unique_lock lock(turn_mutex);
                turn_cv.wait(lock, [&] { return next == pos; });
                if (!failure) grads += local[slot];
                ++next;
                turn_cv.notify_all();
                lock.unlock();
                // Rethrown only after taking the turn so the remaining workers never wait forever.
                if (failure) std::rethrow_exception(failure);
            });
            for (std::size_t pos = begin; pos < end; ++pos) {
                if (!finite(losses[pos])) {
                    throw DivergedTraining("non-finite loss at epoch " + std::to_string(epoch));
                }
            }
            grads.scale(1.0 / static_cast<double>(end - begin));
            if (!grads.all_finite()) throw DivergedTraining("non-finite gradient at epoch " + std::to_string(epoch));
            nn::adam_step(adam, w.params, grads);
        }

        EpochLog e;
        e.epoch = epoch;
        for (const SequenceLosses& l : losses) {
            e.loss_eot += l.eot;
            e.loss_3d += l.reconstruction;
            e.loss_below += l.below;
            e.total += l.total;
        }
        e.loss_eot /= static_cast<double>(n);
        e.loss_3d /= static_cast<double>(n);
        e.loss_below /= static_cast<double>(n);
        e.total /= static_cast<double>(n);
        e.val_loss_3d = val_set.empty() ? e.loss_3d : mean_reconstruction_loss(w, val_set, cam, threads);
        if (!std::isfinite(e.val_loss_3d)) throw DivergedTraining("non-finite validation loss");
        result.log.push_back(e);

        nlohmann::json meta = {{"train_config", config.to_json()}, {"epoch", epoch}, {"gamma", result.gamma}};
        if (e.val_loss_3d < best_val) {
            best_val = e.val_loss_3d;
            result.best_epoch = epoch;
            result.best = w;
            if (!io.best_checkpoint.empty()) save_pipeline(io.best_checkpoint, w, meta);
        }
        meta["best_val"] = best_val;
        meta["best_epoch"] = result.best_epoch;
        if (!io.last_checkpoint.empty()) save_pipeline(io.last_checkpoint, w, meta, &adam);
        if (!io.log_csv.empty()) append_log_row(io.log_csv, e, false);
        if (io.on_epoch) io.on_epoch(e);
    }
    return result;
}

}  // namespace ball3d

namespace ball3d {

GradCheckReport gradient_check(PipelineWeights& w, const Sequence& seq, const CameraModel& cam, double gamma,
                               const LossWeights& lambda, int samples, Rng& rng, double step) {
    const auto pixels = seq.pixels();
    const PipelineInputs in = PipelineInputs::from_pixels(pixels, cam);
    const auto flags = seq.eot_flags();
    const auto gt = seq.ground_truth();
    auto loss_value = [&]() {
        nn::Graph g;
        return pipeline_losses(pipeline_forward(g, w, in), flags, gt, gamma, lambda).total.scalar();
    };

    nn::GradientStore grads(w.params);
    {
        nn::Graph g;
        const LossNodes l = pipeline_losses(pipeline_forward(g, w, in), flags, gt, gamma, lambda);
        g.backward(l.total, grads);
    }

    std::map<std::string, std::vector<int>> by_subnetwork;
    for (int id = 0; id < w.params.size(); ++id) by_subnetwork[w.subnetwork_of(id)].push_back(id);

    GradCheckReport report;
    for (int k = 0; k < samples; ++k) {
        const auto& ids = by_subnetwork.at(kSubnetworks[k % 5]);
        // Pick a scalar uniformly within the sub-network.
        nn::Index total = 0;
        for (const int id : ids) total += w.params.value(id).size();
        nn::Index pick = std::uniform_int_distribution<nn::Index>(0, total - 1)(rng);
        int id = ids.front();
        for (const int candidate : ids) {
            if (pick < w.params.value(candidate).size()) {
                id = candidate;
                break;
            }
            pick -= w.params.value(candidate).size();
        }
        double& x = w.params.value(id)(pick);
        const double saved = x;
        x = saved + step;
        const double up = loss_value();
        x = saved - step;
        const double down = loss_value();
        x = saved;

        GradCheckEntry e;
        e.parameter = w.params[id].name;
        e.subnetwork = w.subnetwork_of(id);
        e.index = pick;
        e.analytic = grads[id](pick);
        e.numeric = (up - down) / (2.0 * step);
        e.relative_error = std::abs(e.analytic - e.numeric) /
                           std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-6});
        report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
        report.entries.push_back(e);
    }
    return report;
}

}  // namespace ball3d
