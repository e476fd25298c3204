#pragma once

// Result persistence. Every payload carries the config hash; a file written
// under a different hash is never overwritten unless forced. Wall-clock data
// goes only to a "<file>.meta.json" sidecar so payloads stay reproducible.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "czforge/errors.hpp"

namespace czforge::experiments {

namespace fs = std::filesystem;

/// Refused overwrite of a result produced by a different configuration.
class OutputConflictError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ResultWriter {
public:
    ResultWriter(fs::path dir, std::string hash, bool force)
        : dir_(std::move(dir)), hash_(std::move(hash)), force_(force) {}

    [[nodiscard]] const fs::path& dir() const { return dir_; }
    [[nodiscard]] const std::string& hash() const { return hash_; }

    /// Hash stored in an existing output file, if any.
    static std::optional<std::string> stored_hash(const fs::path& path) {
        std::ifstream in(path);
        if (!in) {
            return std::nullopt;
        }
        if (path.extension() == ".json") {
            try {
                const auto j = nlohmann::json::parse(in);
                if (j.contains("config_hash") && j["config_hash"].is_string()) {
                    return j["config_hash"].get<std::string>();
                }
            } catch (const nlohmann::json::exception&) {
            }
            return std::string{};
        }
        // CSV: first line is "# config_hash=<hex>".
        std::string line;
        std::getline(in, line);
        const std::string tag = "# config_hash=";
        if (line.rfind(tag, 0) == 0) {
            return line.substr(tag.size());
        }
        return std::string{};
    }

    void write_json(const std::string& name, nlohmann::json payload) const {
        payload["config_hash"] = hash_;
        write(name, payload.dump(2) + "\n");
    }

    /// `body` is the CSV without the hash comment line.
    void write_csv(const std::string& name, const std::string& body) const {
        write(name, "# config_hash=" + hash_ + "\n" + body);
    }

private:
    void write(const std::string& name, const std::string& content) const {
        fs::create_directories(dir_);
        const fs::path path = dir_ / name;
        if (fs::exists(path) && !force_) {
            const auto old = stored_hash(path);
            if (old && *old != hash_) {
                throw OutputConflictError(path.string() + " was written by a different configuration (hash " +
                                          (old->empty() ? "unknown" : *old) + "); pass --force to overwrite");
            }
        }
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw ConfigError("cannot write " + path.string());
            }
            out << content;
        }
        std::ofstream meta(path.string() + ".meta.json", std::ios::trunc);
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::ostringstream ts;
        ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        meta << nlohmann::json{{"file", name}, {"written_utc", ts.str()}, {"config_hash", hash_}}.dump(2) << "\n";
    }

    fs::path dir_;
    std::string hash_;
    bool force_;
};

}  // namespace czforge::experiments
