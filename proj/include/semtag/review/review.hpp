#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "semtag/corpus/record.hpp"
#include "semtag/training/model.hpp"

namespace semtag::review {

enum class Decision { pending, accepted, rejected, skipped };

std::string_view to_string(Decision d);
// Throws ValidationError.
Decision parse_decision(std::string_view s);

// pending -> {accepted, rejected, skipped}; skipped -> {accepted, rejected}.
bool allowed(Decision from, Decision to);

// A log line. `revert` reopens a decided item (undo); it is only valid when
// `reverts` names the current decision, so a stale undo conflicts.
struct LogEntry {
  std::string id;
  std::string action;  // a decision name, or "revert"
  std::string reviewer;
  std::string timestamp;
  std::optional<std::string> request_id;
  std::optional<std::string> reverts;

  bool operator==(const LogEntry&) const = default;
};

nlohmann::json to_json(const LogEntry& e);
LogEntry log_entry_from_json(const nlohmann::json& j);

struct ReviewItem {
  training::PredictionRecord prediction;
  corpus::SentenceRecord record;
  Decision decision = Decision::pending;
  std::string decided_at;
  std::string reviewer;
  std::vector<Decision> history;  // prior decisions, for revert

  bool operator==(const ReviewItem&) const = default;
};

enum class ApplyResult { applied, duplicate, unknown_id, conflict };

// Decision state for one prediction file joined with its corpus.
class ReviewState {
 public:
  // Ids must match one-to-one; otherwise ValidationError listing orphans.
  ReviewState(const std::vector<training::PredictionRecord>& predictions,
              const std::vector<corpus::SentenceRecord>& records);

  // Duplicate = the same request_id already applied to the same id and
  // action; the state is unchanged. check() never mutates.
  ApplyResult check(const LogEntry& entry) const;
  ApplyResult apply(const LogEntry& entry);

  const ReviewItem* find(const std::string& id) const;
  // Probability descending, then id.
  const std::vector<std::string>& order() const { return order_; }
  std::map<Decision, std::size_t> counts() const;
  std::vector<corpus::SentenceRecord> accepted() const;

  bool operator==(const ReviewState& other) const {
    return items_ == other.items_ && requests_ == other.requests_;
  }

 private:
  std::unordered_map<std::string, ReviewItem> items_;
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::pair<std::string, std::string>> requests_;  // -> (id, action)
};

// Append-only JSON-lines log, flushed and fsynced per entry.
class DecisionLog {
 public:
  explicit DecisionLog(std::filesystem::path path);
  ~DecisionLog();
  DecisionLog(const DecisionLog&) = delete;
  DecisionLog& operator=(const DecisionLog&) = delete;

  // Reads every complete entry. A final line without a newline that fails
  // to parse is a torn write: it is dropped and the file truncated before
  // it. Any other malformed line is a ParseError.
  std::vector<LogEntry> replay();
  void append(const LogEntry& entry);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

// Accepted sentences as positive records; gold spans are kept.
std::vector<corpus::SentenceRecord> export_accepted(const std::vector<LogEntry>& log,
                                                    const std::vector<training::PredictionRecord>& predictions,
                                                    const std::vector<corpus::SentenceRecord>& records);

struct Response {
  int status = 200;
  nlohmann::json body;
  std::string content_type = "application/json";
  std::string raw;  // used instead of body when non-empty
};

using Clock = std::function<std::string()>;
std::string utc_now();

// Transport-independent handlers; the HTTP layer only routes to these.
class ReviewService {
 public:
  ReviewService(const std::vector<training::PredictionRecord>& predictions,
                const std::vector<corpus::SentenceRecord>& records, const std::filesystem::path& log_path,
                Clock clock = utc_now);

  Response queue(std::string_view status, std::optional<std::size_t> limit) const;
  Response item(const std::string& id) const;
  Response decide(const nlohmann::json& body);
  Response stats() const;
  Response export_jsonl() const;

  ReviewState snapshot() const;

 private:
  nlohmann::json summary(const ReviewItem& item) const;
  nlohmann::json detail(const ReviewItem& item) const;

  mutable std::shared_mutex mu_;
  ReviewState state_;
  DecisionLog log_;
  Clock clock_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

class HttpServer {
 public:
  HttpServer(ReviewService& service, ServeOptions options);
  ~HttpServer();
  // Binds and returns the bound port; throws Error when binding fails.
  int bind();
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semtag::review
