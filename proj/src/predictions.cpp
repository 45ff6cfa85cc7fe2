#include "ball3d/predictions.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ball3d/dataset.hpp"
#include "ball3d/errors.hpp"

namespace ball3d {

PredictionRecord to_record(const PredictedTrajectory& p) {
    return {"pipeline", p.final_points, p};
}

void save_predictions(const std::string& path, const std::vector<PredictionRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write predictions " + path);
    nlohmann::ordered_json header = {{"format", "ball3d-predictions"},
                                     {"schema_version", kSchemaVersion},
                                     {"sequences", records.size()}};
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const PredictionRecord& r = records[i];
        out << nlohmann::ordered_json{{"sequence", i}, {"length", r.points.size()}, {"method", r.method}}.dump() << '\n';
        for (std::size_t t = 0; t < r.points.size(); ++t) {
            nlohmann::ordered_json line;
            line["frame"] = t;
            line["x"] = r.points[t].x();
            line["y"] = r.points[t].y();
            line["z"] = r.points[t].z();
            if (r.intermediates) {
                const PredictedTrajectory& p = *r.intermediates;
                line["eot"] = p.eot[t];
                line["h_forward"] = p.h_forward[t];
                line["h_backward"] = p.h_backward[t];
                line["h"] = p.h[t];
                line["h_refined"] = p.h_refined[t];
                line["lifted"] = {p.lifted[t].x(), p.lifted[t].y(), p.lifted[t].z()};
            }
            out << line.dump() << '\n';
        }
    }
    if (!out) throw InvalidArgument("failed writing predictions " + path);
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read predictions " + path);
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> nlohmann::json {
        if (!std::getline(in, line)) throw MalformedRecord(path + ": unexpected end of file after line " + std::to_string(line_no));
        ++line_no;
        try {
            return nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    };
    const auto header = next();
    if (header.value("format", std::string()) != "ball3d-predictions") {
        throw MalformedRecord(path + ": not a predictions file");
    }
    if (header.value("schema_version", -1) != kSchemaVersion) {
        throw SchemaVersionMismatch(path + ": unsupported schema version");
    }
    std::vector<PredictionRecord> records(header.at("sequences").get<std::size_t>());
    try {
        for (auto& r : records) {
            const auto sh = next();
            r.method = sh.at("method").get<std::string>();
            const auto n = sh.at("length").get<std::size_t>();
            PredictedTrajectory p;
            bool full = true;
            for (std::size_t t = 0; t < n; ++t) {
                const auto j = next();
                r.points.emplace_back(j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>());
                if (j.contains("eot")) {
                    p.eot.push_back(j["eot"].get<double>());
                    p.h_forward.push_back(j.at("h_forward").get<double>());
                    p.h_backward.push_back(j.at("h_backward").get<double>());
                    p.h.push_back(j.at("h").get<double>());
                    p.h_refined.push_back(j.at("h_refined").get<double>());
                    const auto& l = j.at("lifted");
                    p.lifted.emplace_back(l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<double>());
                    p.final_points.push_back(r.points.back());
                } else {
                    full = false;
                }
            }
            if (full && n > 0) r.intermediates = std::move(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    return records;
}

}  // namespace ball3d
