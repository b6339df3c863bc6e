#include "attnlens/model/checkpoint.hpp"

#include "attnlens/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace attnlens::model {

using nlohmann::json;

std::string checkpoint_to_json(const Transformer& model) {
    const auto& c = model.config();
    json j;
    j["version"] = kCheckpointVersion;
    j["config"] = {{"n_layers", c.n_layers}, {"n_heads", c.n_heads},       {"d_model", c.d_model},
                   {"d_k", c.d_k},           {"d_ff", c.d_ff},             {"vocab_size", c.vocab_size},
                   {"max_seq_len", c.max_seq_len}, {"n_classes", c.n_classes}};
    j["vocab"] = model.vocab().words();
    const auto p = model.params();
    j["params"] = std::vector<double>(p.begin(), p.end());
    return j.dump();
}

Transformer checkpoint_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::input, std::string("malformed checkpoint: ") + e.what());
    }
    if (!j.contains("version") || j["version"] != kCheckpointVersion) {
        fail(ErrorKind::input, "unsupported checkpoint version");
    }
    try {
        const auto& jc = j.at("config");
        ModelConfig c;
        c.n_layers = jc.at("n_layers").get<std::size_t>();
        c.n_heads = jc.at("n_heads").get<std::size_t>();
        c.d_model = jc.at("d_model").get<std::size_t>();
        c.d_k = jc.at("d_k").get<std::size_t>();
        c.d_ff = jc.at("d_ff").get<std::size_t>();
        c.vocab_size = jc.at("vocab_size").get<std::size_t>();
        c.max_seq_len = jc.at("max_seq_len").get<std::size_t>();
        c.n_classes = jc.at("n_classes").get<std::size_t>();
        auto vocab = Vocabulary::from_words(j.at("vocab").get<std::vector<std::string>>());
        return Transformer(c, std::move(vocab), j.at("params").get<std::vector<double>>());
    } catch (const json::exception& e) {
        fail(ErrorKind::input, std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Transformer& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::io, "cannot write checkpoint " + path.string());
    }
    out << checkpoint_to_json(model) << '\n';
}

Transformer load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot read checkpoint " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

} // namespace attnlens::model
