#include "anaflow/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "anaflow/errors.hpp"

extern char** environ;

namespace anaflow {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::logic_error&) {
    }
    throw ConfigError(fmt::format("{} must be a number, got '{}'", key, v));
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const int i = std::stoi(v, &used);
        if (used == v.size()) return i;
    } catch (const std::logic_error&) {
    }
    throw ConfigError(fmt::format("{} must be an integer, got '{}'", key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(fmt::format("{} must be true or false, got '{}'", key, v));
}

void apply(RunConfig& c, const std::string& key, const std::string& v) {
    if (key == "vdd") c.vdd = to_double(key, v);
    else if (key == "library") c.library_path = v;
    else if (key == "generator") c.generator = v;
    else if (key == "endpoint") c.remote.endpoint = v;
    else if (key == "model") c.remote.model = v;
    else if (key == "temperature") c.remote.temperature = to_double(key, v);
    else if (key == "top_p") c.remote.top_p = to_double(key, v);
    else if (key == "timeout") c.remote.timeout_s = to_int(key, v);
    else if (key == "retries") c.remote.retries = to_int(key, v);
    else if (key == "script") c.script_path = v;
    else if (key == "concurrency") c.concurrency = to_int(key, v);
    else if (key == "output") {
        if (v == "text") c.output = OutputFormat::Text;
        else if (v == "json-lines") c.output = OutputFormat::JsonLines;
        else throw ConfigError("output must be text or json-lines, got '" + v + "'");
    } else if (key == "inverter_standard") c.inverter_standard = to_bool(key, v);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {"vdd",     "library", "generator", "endpoint",    "model",
                                                  "temperature", "top_p", "timeout", "retries",    "script",
                                                  "concurrency", "output", "inverter_standard"};
    return keys;
}

Settings parse_config_text(std::string_view text) {
    Settings out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const auto line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("config line {}: expected key = value, got '{}'", line_no, line));
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "api_key" || key == "token")
            throw ConfigError(fmt::format("config line {}: API tokens are read only from the {} environment variable",
                                          line_no, kApiKeyEnv));
        if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
            throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
        out[key] = value;
    }
    return out;
}

Settings read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

RunConfig load_config(const Settings& file, const std::map<std::string, std::string>& env, const Settings& flags) {
    RunConfig c;
    for (const auto& [k, v] : file) apply(c, k, v);
    for (const auto& key : config_keys()) {
        auto it = env.find(std::string(kEnvPrefix) + upper(key));
        if (it != env.end()) apply(c, key, it->second);
    }
    for (const auto& [k, v] : flags) apply(c, k, v);

    if (!(c.vdd > 0.0)) throw ConfigError(fmt::format("vdd must be positive, got {}", c.vdd));
    if (c.concurrency < 1) throw ConfigError(fmt::format("concurrency must be at least 1, got {}", c.concurrency));
    if (c.generator != "remote" && c.generator != "replay")
        throw ConfigError("generator must be remote or replay, got '" + c.generator + "'");
    if (c.remote.retries < 0) throw ConfigError("retries must not be negative");
    if (c.remote.timeout_s < 1) throw ConfigError("timeout must be at least 1 s");
    return c;
}

std::map<std::string, std::string> process_environment() {
    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        const std::string_view kv(*e);
        if (kv.rfind(kEnvPrefix, 0) != 0) continue;
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) continue;
        env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return env;
}

void require_api_key(RunConfig& config, const std::map<std::string, std::string>& env) {
    auto it = env.find(std::string(kApiKeyEnv));
    if (it == env.end() || it->second.empty())
        throw ConfigError(fmt::format("the remote generator needs an API token in the {} environment variable", kApiKeyEnv));
    config.remote.api_key = it->second;
}

}  // namespace anaflow
