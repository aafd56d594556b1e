#include "anaflow/generator.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "anaflow/errors.hpp"

namespace anaflow {

using nlohmann::json;

ReplayGenerator::ReplayGenerator(std::vector<std::string> replies) : replies_(std::move(replies)) {}

std::string ReplayGenerator::send(const Conversation&) {
    if (next_ >= replies_.size()) {
        throw TransportError("replay script exhausted after " + std::to_string(replies_.size()) + " replies");
    }
    return replies_[next_++];
}

std::vector<std::string> parse_replay_script(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    bool any = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line == kReplayDelimiter) {
            out.push_back(current);
            current.clear();
            any = true;
        } else {
            current.append(line);
            if (end < text.size()) current.push_back('\n');
        }
        pos = end + 1;
    }
    // A trailing section is a reply unless it is only whitespace after a
    // final delimiter.
    if (!any || current.find_first_not_of(" \t\r\n") != std::string::npos) out.push_back(current);
    return out;
}

std::vector<std::string> load_replay_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open replay script '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_replay_script(ss.str());
}

std::string chat_request_body(const Conversation& messages, const RemoteOptions& options) {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    json body = {{"model", options.model},
                 {"messages", msgs},
                 {"temperature", options.temperature},
                 {"top_p", options.top_p}};
    return body.dump();
}

std::string parse_chat_response(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat response: ") + e.what());
    }
    if (j.contains("error")) {
        const auto& err = j["error"];
        throw TransportError("chat endpoint error: " +
                             (err.is_object() && err.contains("message") ? err["message"].get<std::string>() : err.dump()));
    }
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw TransportError("chat response has no choices[0].message.content");
    }
}

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteGenerator::RemoteGenerator(RemoteOptions options) : options_(std::move(options)) {
    split_url(options_.endpoint);
}

std::string RemoteGenerator::send(const Conversation& messages) {
    const auto url = split_url(options_.endpoint);
    const auto body = chat_request_body(messages, options_);
    std::string last_error;
    int delay = options_.backoff_ms;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            delay *= 2;
        }
        httplib::Client client(url.origin);
        client.set_connection_timeout(options_.timeout_s, 0);
        client.set_read_timeout(options_.timeout_s, 0);
        client.set_write_timeout(options_.timeout_s, 0);
        httplib::Headers headers;
        if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                 res->body.substr(0, 500));
        }
        return parse_chat_response(res->body);
    }
    throw TransportError("chat endpoint unreachable after " + std::to_string(options_.retries + 1) +
                         " attempts: " + last_error);
}

}  // namespace anaflow
