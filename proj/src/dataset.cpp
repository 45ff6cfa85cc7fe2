#include "ball3d/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ball3d/errors.hpp"

namespace ball3d {

using nlohmann::ordered_json;

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Launch: return "launch";
        case EventKind::RollLaunch: return "roll_launch";
        case EventKind::Bounce: return "bounce";
        case EventKind::Settle: return "settle";
        case EventKind::Hit: return "hit";
        case EventKind::Stop: return "stop";
    }
    return "?";
}

EventKind event_kind_from_string(const std::string& name) {
    for (EventKind k : {EventKind::Launch, EventKind::RollLaunch, EventKind::Bounce,
                        EventKind::Settle, EventKind::Hit, EventKind::Stop}) {
        if (name == to_string(k)) return k;
    }
    throw MalformedRecord("unknown event kind '" + name + "'");
}

bool Sequence::has_ground_truth() const {
    for (const auto& s : samples) {
        if (!s.gt_point) return false;
    }
    return !samples.empty();
}

bool Sequence::has_complete_pixels() const {
    for (const auto& s : samples) {
        if (!s.pixel) return false;
    }
    return true;
}

std::vector<Pixel> Sequence::pixels() const {
    std::vector<Pixel> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.pixel) throw InvalidArgument("sequence has missing pixels");
        out.push_back(*s.pixel);
    }
    return out;
}

std::vector<PlanePoints> Sequence::plane_points() const {
    std::vector<PlanePoints> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.plane_points) throw InvalidArgument("sequence has missing plane points");
        out.push_back(*s.plane_points);
    }
    return out;
}

std::vector<Vec3> Sequence::ground_truth() const {
    std::vector<Vec3> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.gt_point) throw InvalidArgument("sequence has no ground truth");
        out.push_back(*s.gt_point);
    }
    return out;
}

std::vector<int> Sequence::eot_flags() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.eot);
    return out;
}

void Sequence::validate() const {
    if (samples.size() < 2) throw SequenceTooShort("sequence needs at least two samples");
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].frame_index <= samples[i - 1].frame_index) {
            throw InvalidArgument("frame indices must be strictly increasing");
        }
    }
}

std::uint64_t sequence_seed(std::uint64_t base, const std::string& split, std::size_t index) {
    Rng rng = make_stream(base, "sequence/" + split, index);
    return rng();
}

DatasetSplit generate_split(const SimConfig& config, const SplitCounts& counts,
                            const CameraModel& camera, const std::string& camera_id) {
    config.validate();
    DatasetSplit split;
    split.config = config;
    split.camera = camera;
    auto make = [&](const std::string& name, int count, std::vector<Sequence>& out) {
        for (int i = 0; i < count; ++i) {
            SimConfig c = config;
            c.seed = sequence_seed(config.seed, name, static_cast<std::size_t>(i));
            Sequence seq = render_track(simulate_family(c).sequence, camera);
            seq.camera_id = camera_id;
            out.push_back(std::move(seq));
        }
    };
    make("train", counts.train, split.train);
    make("val", counts.val, split.val);
    make("test", counts.test, split.test);
    return split;
}

namespace {

double finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw MalformedRecord(std::string("non-finite value in field ") + what);
    }
    return v;
}

ordered_json sample_to_json(const TrackSample& s) {
    ordered_json j;
    j["frame"] = s.frame_index;
    if (s.pixel) {
        j["u"] = finite(s.pixel->u, "u");
        j["v"] = finite(s.pixel->v, "v");
    } else {
        j["u"] = nullptr;
        j["v"] = nullptr;
    }
    if (s.plane_points) {
        j["gx"] = finite(s.plane_points->gx, "gx");
        j["gz"] = finite(s.plane_points->gz, "gz");
        j["vx"] = finite(s.plane_points->vx, "vx");
        j["vy"] = finite(s.plane_points->vy, "vy");
    } else {
        j["gx"] = j["gz"] = j["vx"] = j["vy"] = nullptr;
    }
    if (s.gt_point) {
        j["x"] = finite(s.gt_point->x(), "x");
        j["y"] = finite(s.gt_point->y(), "y");
        j["z"] = finite(s.gt_point->z(), "z");
    } else {
        j["x"] = j["y"] = j["z"] = nullptr;
    }
    j["eot"] = s.eot;
    j["missing"] = !s.pixel.has_value();
    return j;
}

std::optional<double> optional_number(const nlohmann::json& j, const char* key, int line) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) {
        throw MalformedRecord("line " + std::to_string(line) + ": field '" + key + "' is not a number");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
        throw MalformedRecord("line " + std::to_string(line) + ": field '" + key + "' is not finite");
    }
    return v;
}

TrackSample sample_from_json(const nlohmann::json& j, int line) {
    TrackSample s;
    if (!j.contains("frame") || !j["frame"].is_number_integer()) {
        throw MalformedRecord("line " + std::to_string(line) + ": missing integer 'frame'");
    }
    s.frame_index = j["frame"].get<int>();
    const bool missing = j.value("missing", false);
    const auto u = optional_number(j, "u", line);
    const auto v = optional_number(j, "v", line);
    if (!missing) {
        if (!u || !v) {
            throw MalformedRecord("line " + std::to_string(line) + ": pixel absent but not flagged missing");
        }
        s.pixel = Pixel{*u, *v};
    }
    const auto gx = optional_number(j, "gx", line);
    const auto gz = optional_number(j, "gz", line);
    const auto vx = optional_number(j, "vx", line);
    const auto vy = optional_number(j, "vy", line);
    if (gx && gz && vx && vy) {
        s.plane_points = PlanePoints{*gx, *gz, *vx, *vy};
    }
    const auto x = optional_number(j, "x", line);
    const auto y = optional_number(j, "y", line);
    const auto z = optional_number(j, "z", line);
    if (x && y && z) {
        s.gt_point = Vec3(*x, *y, *z);
    }
    const int eot = j.value("eot", 0);
    if (eot != 0 && eot != 1) {
        throw MalformedRecord("line " + std::to_string(line) + ": eot must be 0 or 1");
    }
    s.eot = eot;
    return s;
}

}  // namespace

std::string to_jsonl(const std::vector<Sequence>& sequences, const DatasetInfo& info) {
    std::ostringstream out;
    ordered_json header;
    header["format"] = "ball3d-track";
    header["schema_version"] = kSchemaVersion;
    header["sequences"] = sequences.size();
    header["family"] = info.family;
    header["seed"] = info.seed;
    header["split"] = info.split;
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        const Sequence& seq = sequences[i];
        ordered_json h;
        h["sequence"] = i;
        h["length"] = seq.samples.size();
        h["fps"] = seq.fps;
        h["camera_id"] = seq.camera_id;
        auto events = ordered_json::array();
        for (const auto& e : seq.events) {
            ordered_json je;
            je["kind"] = to_string(e.kind);
            je["frame"] = e.frame;
            je["time"] = finite(e.time, "event time");
            je["x"] = finite(e.position.x(), "event x");
            je["y"] = finite(e.position.y(), "event y");
            je["z"] = finite(e.position.z(), "event z");
            events.push_back(je);
        }
        h["events"] = events;
        out << h.dump() << '\n';
        for (const auto& s : seq.samples) {
            out << sample_to_json(s).dump() << '\n';
        }
    }
    return out.str();
}

std::vector<Sequence> from_jsonl(const std::string& text, DatasetInfo* info) {
    std::istringstream in(text);
    std::string line_text;
    int line = 0;
    auto next = [&]() -> nlohmann::json {
        while (std::getline(in, line_text)) {
            ++line;
            if (line_text.empty()) continue;
            try {
                return nlohmann::json::parse(line_text);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedRecord("line " + std::to_string(line) + ": " + e.what());
            }
        }
        throw MalformedRecord("unexpected end of file after line " + std::to_string(line));
    };

    const auto header = next();
    if (!header.is_object() || header.value("format", "") != "ball3d-track") {
        throw MalformedRecord("line 1: not a ball3d track file");
    }
    if (header.value("schema_version", -1) != kSchemaVersion) {
        throw SchemaVersionMismatch("expected schema_version " + std::to_string(kSchemaVersion));
    }
    if (info) {
        info->family = header.value("family", "");
        info->seed = header.value("seed", std::uint64_t{0});
        info->split = header.value("split", "");
    }
    const auto count = header.value("sequences", std::size_t{0});
    std::vector<Sequence> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto h = next();
        if (!h.contains("length") || !h.contains("fps")) {
            throw MalformedRecord("line " + std::to_string(line) + ": expected a sequence header");
        }
        Sequence seq;
        seq.fps = h["fps"].get<double>();
        seq.camera_id = h.value("camera_id", "");
        for (const auto& je : h.value("events", nlohmann::json::array())) {
            TrackEvent e;
            e.kind = event_kind_from_string(je.at("kind").get<std::string>());
            e.frame = je.at("frame").get<int>();
            e.time = je.at("time").get<double>();
            e.position = Vec3(je.at("x").get<double>(), je.at("y").get<double>(),
                              je.at("z").get<double>());
            seq.events.push_back(e);
        }
        const auto length = h["length"].get<std::size_t>();
        seq.samples.reserve(length);
        for (std::size_t k = 0; k < length; ++k) {
            seq.samples.push_back(sample_from_json(next(), line));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

void save_jsonl(const std::vector<Sequence>& sequences, const std::string& path,
                const DatasetInfo& info) {
    const std::string text = to_jsonl(sequences, info);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << text;
}

std::vector<Sequence> load_jsonl(const std::string& path, DatasetInfo* info) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str(), info);
}

void refresh_plane_points(Sequence& seq, const CameraModel& cam) {
    for (auto& s : seq.samples) {
        if (s.pixel) {
            s.plane_points = ray_to_plane_points(back_project(*s.pixel, cam));
        } else {
            s.plane_points.reset();
        }
    }
}

Sequence add_pixel_noise(const Sequence& seq, const CameraModel& cam, const PixelNoise& noise,
                         Rng& rng) {
    Sequence out = seq;
    if (noise.magnitude == 0.0) {
        return out;
    }
    for (auto& s : out.samples) {
        if (!s.pixel) continue;
        if (noise.kind == PixelNoise::Kind::GaussianStd) {
            s.pixel->u += normal(rng, 0.0, noise.magnitude);
            s.pixel->v += normal(rng, 0.0, noise.magnitude);
        } else {
            s.pixel->u += uniform(rng, -noise.magnitude, noise.magnitude);
            s.pixel->v += uniform(rng, -noise.magnitude, noise.magnitude);
        }
    }
    refresh_plane_points(out, cam);
    return out;
}

}  // namespace ball3d
