#pragma once

// Training checkpoints: <stem>.bin holds the weights as a MODPOLY1 dump,
// <stem>.json the TrainConfig, the Adam step and the names of the two
// moment dumps (<stem>.adam_m.bin, <stem>.adam_v.bin, same layout).

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "modpoly/experiments.hpp"
#include "modpoly/trainer.hpp"
#include "modpoly/weights_io.hpp"

namespace modpoly {

struct Checkpoint {
    TwoLayerNet net;
    TrainConfig config;
    AdamState state;
};

namespace detail {

inline TwoLayerNet as_net(const ParamSet& params, const TwoLayerNet& like) {
    return TwoLayerNet(like.p(), NetKind::trained, params.blocks, params.out, like.power());
}

inline ParamSet as_params(const TwoLayerNet& net) { return {net.blocks(), net.out()}; }

} // namespace detail

inline void save_checkpoint(const std::filesystem::path& dir, const std::string& stem, const TwoLayerNet& net,
                            const TrainConfig& cfg, const AdamState& state) {
    std::filesystem::create_directories(dir);
    save_weights((dir / (stem + ".bin")).string(), net);
    save_weights((dir / (stem + ".adam_m.bin")).string(), detail::as_net(state.m, net));
    save_weights((dir / (stem + ".adam_v.bin")).string(), detail::as_net(state.v, net));
    const json sidecar = {{"format", "MODPOLY1"},
                          {"weights", stem + ".bin"},
                          {"activation_power", net.power()},
                          {"train_config", to_json(cfg)},
                          {"adam", {{"step", state.step}, {"m", stem + ".adam_m.bin"}, {"v", stem + ".adam_v.bin"}}}};
    std::ofstream os(dir / (stem + ".json"));
    if (!os) throw FormatError("cannot write checkpoint sidecar in " + dir.string());
    os << sidecar.dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir, const std::string& stem) {
    std::ifstream is(dir / (stem + ".json"));
    if (!is) throw FormatError("missing checkpoint sidecar " + (dir / (stem + ".json")).string());
    json sidecar;
    try {
        sidecar = json::parse(is);
        const auto power = sidecar.at("activation_power").get<unsigned>();
        auto net = load_weights((dir / sidecar.at("weights").get<std::string>()).string(), power);
        const auto m = load_weights((dir / sidecar.at("adam").at("m").get<std::string>()).string(), power);
        const auto v = load_weights((dir / sidecar.at("adam").at("v").get<std::string>()).string(), power);
        if (m.width() != net.width() || v.width() != net.width() || m.arity() != net.arity() ||
            v.arity() != net.arity() || m.p() != net.p() || v.p() != net.p())
            throw FormatError("optimiser moments do not match the checkpointed weights");
        AdamState state{detail::as_params(m), detail::as_params(v), sidecar.at("adam").at("step").get<long>()};
        auto cfg = train_config_from_json(sidecar.at("train_config"));
        return {std::move(net), cfg, std::move(state)};
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed checkpoint sidecar: ") + e.what());
    }
}

} // namespace modpoly
