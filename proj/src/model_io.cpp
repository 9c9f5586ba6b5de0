#include "oodgen/model_io.hpp"

#include <fstream>

#include "oodgen/errors.hpp"

namespace oodgen {

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json doc;
    std::vector<std::size_t> dims;
    dims.push_back(net.input_dim());
    for (const auto& layer : net.layers) dims.push_back(layer.out_dim());
    doc["dims"] = dims;
    auto& acts = doc["activations"] = nlohmann::json::array();
    auto& weights = doc["weights"] = nlohmann::json::array();
    auto& biases = doc["biases"] = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        acts.push_back(std::string(activation_name(layer.act)));
        weights.push_back(layer.weight.data);
        biases.push_back(layer.bias);
    }
    return doc;
}

Mlp mlp_from_json(const nlohmann::json& doc) {
    const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    const auto acts = doc.at("activations").get<std::vector<std::string>>();
    if (dims.size() < 2 || acts.size() != dims.size() - 1) {
        throw ValueError("model json: dims/activations do not describe a network");
    }
    Mlp net;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        MlpLayer layer;
        layer.act = activation_from_name(acts[i]);
        layer.weight = DenseMatrix(dims[i], dims[i + 1],
                                   doc.at("weights").at(i).get<std::vector<double>>());
        layer.bias = doc.at("biases").at(i).get<std::vector<double>>();
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

void save_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    write_file_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValueError("malformed json in " + path.string() + ": " + e.what());
    }
    return doc;
}

}  // namespace oodgen
