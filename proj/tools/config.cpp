#include "config.hpp"

#include <fstream>

namespace qrelax::cli {

namespace {
const json kEmpty = json::object();
}

Section::Section(const json& j, std::string path) : j_(j.is_null() ? kEmpty : j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
}

Section Section::child(const std::string& key) {
    used_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, path_ + "." + key);
}

void Section::finish() const {
    std::string unknown;
    for (const auto& [key, value] : j_.items()) {
        if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) throw ConfigError(path_ + ": unknown keys: " + unknown);
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace qrelax::cli
