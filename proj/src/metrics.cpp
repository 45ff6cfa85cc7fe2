#include "ball3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "ball3d/errors.hpp"

namespace ball3d {

double rmse(std::span<const Vec3> pred, std::span<const Vec3> gt, ErrorAxes axes) {
    if (pred.size() != gt.size()) throw LengthMismatch("rmse: prediction and ground truth differ in length");
    if (pred.empty()) throw LengthMismatch("rmse: empty input");
    double total = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const Vec3 d = pred[t] - gt[t];
        total += axes == ErrorAxes::Distance ? d.squaredNorm() : d.y() * d.y();
    }
    return std::sqrt(total / static_cast<double>(pred.size()));
}

double max_axis_range(std::span<const Vec3> points) {
    if (points.empty()) return 0.0;
    Vec3 lo = points.front();
    Vec3 hi = points.front();
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).maxCoeff();
}

double nrmse(std::span<const Vec3> pred, std::span<const Vec3> gt) {
    const double range = max_axis_range(gt);
    if (range < 1e-9) throw DegenerateRange("ground truth does not move along any axis");
    return rmse(pred, gt) / range;
}

std::map<std::string, double> nrmse_variants(double rmse_m, const std::map<std::string, double>& denominators) {
    std::map<std::string, double> out;
    for (const auto& [name, denom] : denominators) {
        if (!(denom > 0.0)) throw DegenerateRange("denominator " + name + " must be positive");
        out[name] = rmse_m * 100.0 / denom;
    }
    return out;
}

double mean_camera_distance(const CameraModel& cam, std::span<const Vec3> points) {
    if (points.empty()) throw LengthMismatch("camera distance of an empty point set");
    const Vec3 c = cam.center();
    double total = 0.0;
    for (const Vec3& p : points) total += (p - c).norm();
    return total / static_cast<double>(points.size());
}

std::vector<LandingEvent> detect_landings(std::span<const Vec3> pred, double height_threshold,
                                          int suppression_frames) {
    std::vector<std::pair<double, int>> minima;
    for (std::size_t t = 1; t + 1 < pred.size(); ++t) {
        const double y = pred[t].y();
        if (y < height_threshold && y <= pred[t - 1].y() && y < pred[t + 1].y()) {
            minima.emplace_back(y, static_cast<int>(t));
        }
    }
    std::sort(minima.begin(), minima.end());
    std::vector<LandingEvent> kept;
    for (const auto& [y, frame] : minima) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const LandingEvent& e) {
            return std::abs(e.frame - frame) < suppression_frames;
        });
        if (!suppressed) {
            const Vec3& p = pred[static_cast<std::size_t>(frame)];
            kept.push_back({frame, {p.x(), p.z()}});
        }
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });
    return kept;
}

std::vector<LandingEvent> ground_truth_landings(const Sequence& seq) {
    std::vector<LandingEvent> out;
    const int last = static_cast<int>(seq.size()) - 1;
    for (const TrackEvent& e : seq.events) {
        if (e.kind == EventKind::Bounce && e.frame > 0 && e.frame < last) {
            out.push_back({e.frame, {e.position.x(), e.position.z()}});
        }
    }
    return out;
}

LandingCounts& LandingCounts::operator+=(const LandingCounts& o) {
    gt += o.gt;
    predicted += o.predicted;
    matched += o.matched;
    correct += o.correct;
    distance_sum += o.distance_sum;
    return *this;
}

LandingCounts match_landings(const std::vector<LandingEvent>& pred, const std::vector<LandingEvent>& gt,
                             double radius_m, int window_frames) {
    LandingCounts c;
    c.gt = static_cast<int>(gt.size());
    c.predicted = static_cast<int>(pred.size());
    std::vector<std::tuple<int, double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const int offset = std::abs(pred[i].frame - gt[j].frame);
            if (offset <= window_frames) pairs.emplace_back(offset, (pred[i].ground - gt[j].ground).norm(), i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> pred_used(pred.size(), false);
    std::vector<bool> gt_used(gt.size(), false);
    for (const auto& [offset, dist, i, j] : pairs) {
        if (pred_used[i] || gt_used[j]) continue;
        pred_used[i] = gt_used[j] = true;
        ++c.matched;
        c.distance_sum += dist;
        if (dist <= radius_m) ++c.correct;
    }
    return c;
}

LandingReport landing_report(const LandingCounts& counts, double radius_m, int window_frames) {
    if (counts.gt == 0) throw NoGroundTruthEvents("no ground-truth landing events to score against");
    LandingReport r;
    r.counts = counts;
    r.radius_m = radius_m;
    r.window_frames = window_frames;
    r.t_acc = 100.0 * counts.correct / counts.gt;
    r.recall = static_cast<double>(counts.matched) / counts.gt;
    r.precision = counts.predicted > 0 ? static_cast<double>(counts.matched) / counts.predicted : 0.0;
    r.t_f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    if (counts.matched > 0) r.le = counts.distance_sum / counts.matched;
    return r;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j = {{"rmse_distance", rmse_distance}, {"rmse_height", rmse_height},
                        {"nrmse_range", nrmse_range},     {"range", range},
                        {"nrmse_by", nrmse_by},           {"sample_count", sample_count},
                        {"sequence_count", sequence_count}};
    if (landing) {
        j["landing"] = {{"t_acc", landing->t_acc},
                        {"t_f1", landing->t_f1},
                        {"precision", landing->precision},
                        {"recall", landing->recall},
                        {"le", landing->le ? nlohmann::json(*landing->le) : nlohmann::json(nullptr)},
                        {"gt_events", landing->counts.gt},
                        {"predicted_events", landing->counts.predicted},
                        {"matched", landing->counts.matched},
                        {"correct", landing->counts.correct},
                        {"radius_m", landing->radius_m},
                        {"window_frames", landing->window_frames}};
    } else {
        j["landing"] = nullptr;
    }
    return j;
}

MetricReport evaluate(const std::vector<std::vector<Vec3>>& predictions, const std::vector<Sequence>& truth,
                      const EvalOptions& options) {
    if (predictions.size() != truth.size()) throw LengthMismatch("prediction and dataset sequence counts differ");
    std::vector<Vec3> all_pred;
    std::vector<Vec3> all_gt;
    LandingCounts landing;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto gt = truth[i].ground_truth();
        if (predictions[i].size() != gt.size()) {
            throw LengthMismatch("sequence " + std::to_string(i) + ": prediction length differs from ground truth");
        }
        all_pred.insert(all_pred.end(), predictions[i].begin(), predictions[i].end());
        all_gt.insert(all_gt.end(), gt.begin(), gt.end());
        if (options.landing) {
            landing += match_landings(detect_landings(predictions[i], options.landing_height, options.window_frames),
                                      ground_truth_landings(truth[i]), options.radius_m, options.window_frames);
        }
    }
    MetricReport r;
    r.sequence_count = truth.size();
    r.sample_count = all_gt.size();
    r.rmse_distance = rmse(all_pred, all_gt, ErrorAxes::Distance);
    r.rmse_height = rmse(all_pred, all_gt, ErrorAxes::HeightOnly);
    r.range = max_axis_range(all_gt);
    if (r.range < 1e-9) throw DegenerateRange("ground truth does not move along any axis");
    r.nrmse_range = r.rmse_distance / r.range;
    r.nrmse_by = nrmse_variants(r.rmse_distance, options.denominators);
    if (options.landing) r.landing = landing_report(landing, options.radius_m, options.window_frames);
    return r;
}

void write_report_csv(const std::string& path, const std::vector<std::pair<std::string, MetricReport>>& rows) {
    std::set<std::string> variant_names;
    for (const auto& [label, r] : rows) {
        for (const auto& [name, value] : r.nrmse_by) variant_names.insert(name);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << "label,rmse_distance,rmse_height,nrmse_range";
    for (const auto& name : variant_names) out << ",nrmse_pct_" << name;
    out << ",t_acc,t_f1,le\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    for (const auto& [label, r] : rows) {
        out << label << ',' << num(r.rmse_distance) << ',' << num(r.rmse_height) << ',' << num(r.nrmse_range);
        for (const auto& name : variant_names) {
            const auto it = r.nrmse_by.find(name);
            out << ',' << (it == r.nrmse_by.end() ? std::string() : num(it->second));
        }
        if (r.landing) {
            out << ',' << num(r.landing->t_acc) << ',' << num(r.landing->t_f1) << ','
                << (r.landing->le ? num(*r.landing->le) : std::string());
        } else {
            out << ",,,";
        }
        out << '\n';
    }
}

}  // namespace ball3d
