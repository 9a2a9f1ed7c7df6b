#ifndef SEWERSIM_GEOJSON_HPP
#define SEWERSIM_GEOJSON_HPP

#include "sewersim/montecarlo.hpp"
#include "sewersim/network.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace sewersim {

/**
 * Map-ready per-node results: a FeatureCollection of point features with
 * properties {node_id, pm_mean, delta_pm, n_sims, model_name}. Coordinates
 * are the network's planar coordinates, written verbatim.
 */
inline std::string write_geojson(const Network& net,
                                 const std::vector<NodePmEstimate>& results,
                                 const std::string& model_name) {
    nlohmann::ordered_json features = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        auto ni = net.node_index(r.node_id);
        if (ni == npos)
            throw std::invalid_argument("result references unknown node '" + r.node_id + "'");
        const auto& n = net.node(ni);
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["geometry"] = {{"type", "Point"},
                         {"coordinates", nlohmann::ordered_json::array({n.coord.x, n.coord.y})}};
        f["properties"] = {{"node_id", r.node_id},
                           {"pm_mean", r.pm_mean},
                           {"delta_pm", r.delta},
                           {"n_sims", r.n_sims},
                           {"model_name", model_name}};
        features.push_back(std::move(f));
    }
    nlohmann::ordered_json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = std::move(features);
    return doc.dump(2) + "\n";
}

inline std::string write_results_csv(const std::vector<NodePmEstimate>& results,
                                     const std::string& model_name) {
    std::string out = "node_id,model,pm_mean,delta_pm,n_sims\n";
    char buf[128];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%zu\n", r.node_id.c_str(),
                      model_name.c_str(), r.pm_mean, r.delta, r.n_sims);
        out += buf;
    }
    return out;
}

inline std::string write_mapping_csv(const Network& full, const ArterialMapping& mapping) {
    std::string out = "node_id,arterial_node_id\n";
    for (const auto& n : full.nodes()) out += n.id + "," + mapping.id_map.at(n.id) + "\n";
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace sewersim

#endif
