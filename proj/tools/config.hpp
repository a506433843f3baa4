#pragma once

// JSON config reading for the command-line tool. Every object is read through a Section,
// which remembers the keys it handed out so that misspelled keys are reported instead of
// silently falling back to defaults.

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qrelax::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Section {
public:
    Section(const json& j, std::string path);

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
    }

    template <class T>
    T require(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing required key '" + key + "'");
        return get<T>(key, T{});
    }

    Section child(const std::string& key);
    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    /// Throws ConfigError naming every key that was never read.
    void finish() const;

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

json load_config(const std::string& path);

}  // namespace qrelax::cli
