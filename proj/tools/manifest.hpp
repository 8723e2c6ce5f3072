#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjb/errors.hpp"

namespace hjb::cli {

inline constexpr const char* kToolName = "hjb_cli";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kRngIdentity = "mt19937_64+u53-open+box-muller-cos-sin";

/**
 * Everything needed to regenerate a run: the argv it was started with, the
 * resolved parameters, the RNG identity and the files it wrote.
 */
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    std::vector<std::string> outputs;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tool"] = kToolName;
        j["version"] = kToolVersion;
        j["rng"] = kRngIdentity;
        j["command"] = command;
        j["argv"] = argv;
        j["params"] = params;
        j["outputs"] = outputs;
        j["results"] = results;
        return j;
    }

    static RunManifest from_json(const nlohmann::ordered_json& j) {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        if (j.contains("params")) m.params = j.at("params");
        if (j.contains("outputs")) m.outputs = j.at("outputs").get<std::vector<std::string>>();
        if (j.contains("results")) m.results = j.at("results");
        return m;
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InvalidData("cannot write manifest '" + path + "'");
        out << to_json().dump(2) << "\n";
    }

    static RunManifest read(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InvalidData("cannot open manifest '" + path + "'");
        try {
            return from_json(nlohmann::ordered_json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidData("malformed manifest '" + path + "': " + e.what());
        }
    }
};

}  // namespace hjb::cli
