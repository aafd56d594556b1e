#pragma once

// Text generators driving the design loop: a chat-completions client and a
// scripted replay used for tests and offline runs.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace anaflow {

struct Message {
    std::string role;  // "system", "user" or "assistant"
    std::string content;

    bool operator==(const Message&) const = default;
};

using Conversation = std::vector<Message>;

class Generator {
public:
    virtual ~Generator() = default;
    /// Returns the reply text. Throws TransportError when no reply could be
    /// obtained.
    virtual std::string send(const Conversation& messages) = 0;
};

/// Hands out canned replies in order, one per call.
class ReplayGenerator final : public Generator {
public:
    explicit ReplayGenerator(std::vector<std::string> replies);
    /// Throws TransportError once the script is exhausted.
    std::string send(const Conversation& messages) override;
    std::size_t consumed() const { return next_; }
    std::size_t size() const { return replies_.size(); }

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

/// Replay scripts hold one reply per section; sections are separated by a
/// line consisting of this marker.
inline constexpr std::string_view kReplayDelimiter = "=== reply ===";

std::vector<std::string> parse_replay_script(std::string_view text);
/// Reads a script file; throws ConfigError when it cannot be opened.
std::vector<std::string> load_replay_script(const std::string& path);

struct RemoteOptions {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key;
    double temperature = 0.5;
    double top_p = 1.0;
    int timeout_s = 120;
    int retries = 2;        // extra attempts after a transport failure
    int backoff_ms = 1000;  // doubled after each failure
};

/// JSON request body for a chat-completions call.
std::string chat_request_body(const Conversation& messages, const RemoteOptions& options);
/// Extracts choices[0].message.content; throws TransportError on a
/// malformed or error body.
std::string parse_chat_response(std::string_view body);

class RemoteGenerator final : public Generator {
public:
    explicit RemoteGenerator(RemoteOptions options);
    std::string send(const Conversation& messages) override;
    const RemoteOptions& options() const { return options_; }

private:
    RemoteOptions options_;
};

}  // namespace anaflow
