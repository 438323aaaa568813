#pragma once

#include <mqd/adaptation.hpp>
#include <mqd/environment.hpp>
#include <mqd/evolution.hpp>
#include <mqd/repertoire.hpp>
#include <mqd/surrogate.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace mqd::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json env_to_json(const EnvConfig& env);
/// Keys absent from j keep the task's default layout. Unknown keys throw.
EnvConfig env_from_json(const json& j, std::optional<Task> default_task = std::nullopt);

json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const json& j, ModelConfig base = {});

/// Run parameters only (no env, seed, or algorithm). Unknown keys throw.
json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const json& j, RunConfig base = {});

struct RepertoireFile {
    Repertoire repertoire;
    EnvConfig env;
};

std::string repertoire_to_string(const Repertoire& rep, const EnvConfig& env);
RepertoireFile repertoire_from_string(const std::string& text);

std::string model_to_string(const SurrogateModel& model);
SurrogateModel model_from_string(const std::string& text);

/// Parse with a line number in the error message.
json parse_document(const std::string& text);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary, then renames over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Tracks which keys of an object were read so leftovers can be rejected.
class StrictObject {
public:
    StrictObject(const json& j, std::string context);

    bool has(const std::string& key) const;
    const json& at(const std::string& key);
    template <typename T>
    void read(const std::string& key, T& out)
    {
        if (has(key))
            out = get<T>(key);
    }
    template <typename T>
    T get(const std::string& key)
    {
        try {
            return at(key).get<T>();
        }
        catch (const json::exception& e) {
            throw ParseError(_context + "." + key + ": " + e.what());
        }
    }
    /// Reads a number; strings "inf" and "-inf" are accepted.
    void read_real(const std::string& key, double& out);
    void finish() const;

private:
    const json& _j;
    std::string _context;
    std::vector<std::string> _seen;
};

} // namespace mqd::io
