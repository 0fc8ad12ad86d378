#include "semtag/review/review.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "semtag/error.hpp"

namespace semtag::review {

using nlohmann::json;
using training::PredictionRecord;

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::pending: return "pending";
    case Decision::accepted: return "accepted";
    case Decision::rejected: return "rejected";
    case Decision::skipped: return "skipped";
  }
  return "pending";
}

Decision parse_decision(std::string_view s) {
  if (s == "pending") return Decision::pending;
  if (s == "accepted") return Decision::accepted;
  if (s == "rejected") return Decision::rejected;
  if (s == "skipped") return Decision::skipped;
  throw ValidationError("unknown decision '" + std::string(s) + "'");
}

bool allowed(Decision from, Decision to) {
  if (from == Decision::pending) return to != Decision::pending;
  if (from == Decision::skipped) return to == Decision::accepted || to == Decision::rejected;
  return false;
}

json to_json(const LogEntry& e) {
  json j{{"id", e.id}, {"action", e.action}, {"reviewer", e.reviewer}, {"timestamp", e.timestamp}};
  if (e.request_id) j["request_id"] = *e.request_id;
  if (e.reverts) j["reverts"] = *e.reverts;
  return j;
}

LogEntry log_entry_from_json(const json& j) {
  LogEntry e;
  try {
    e.id = j.at("id").get<std::string>();
    e.action = j.at("action").get<std::string>();
    e.reviewer = j.value("reviewer", "");
    e.timestamp = j.value("timestamp", "");
    if (j.contains("request_id")) e.request_id = j.at("request_id").get<std::string>();
    if (j.contains("reverts")) e.reverts = j.at("reverts").get<std::string>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("log entry: ") + ex.what());
  }
  if (e.action != "revert") parse_decision(e.action);
  return e;
}

// ---- state

ReviewState::ReviewState(const std::vector<PredictionRecord>& predictions,
                         const std::vector<corpus::SentenceRecord>& records) {
  std::unordered_map<std::string, const corpus::SentenceRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  std::set<std::string> orphan_predictions, orphan_records;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) {
      orphan_predictions.insert(p.id);
      continue;
    }
    if (!items_.emplace(p.id, ReviewItem{p, *it->second, Decision::pending, "", "", {}}).second) {
      throw ValidationError("duplicate prediction id '" + p.id + "'");
    }
  }
  for (const auto& r : records) {
    if (!items_.count(r.id)) orphan_records.insert(r.id);
  }
  if (!orphan_predictions.empty() || !orphan_records.empty()) {
    std::ostringstream msg;
    msg << "predictions and corpus do not align";
    auto list = [&](const char* what, const std::set<std::string>& ids) {
      if (ids.empty()) return;
      msg << "; " << what << ":";
      for (const auto& id : ids) msg << ' ' << id;
    };
    list("predictions without a record", orphan_predictions);
    list("records without a prediction", orphan_records);
    throw ValidationError(msg.str());
  }
  for (const auto& [id, _] : items_) order_.push_back(id);
  std::sort(order_.begin(), order_.end(), [&](const std::string& a, const std::string& b) {
    const double pa = items_.at(a).prediction.probability_positive;
    const double pb = items_.at(b).prediction.probability_positive;
    return pa != pb ? pa > pb : a < b;
  });
}

ApplyResult ReviewState::check(const LogEntry& e) const {
  auto it = items_.find(e.id);
  if (it == items_.end()) return ApplyResult::unknown_id;
  if (e.request_id) {
    if (auto r = requests_.find(*e.request_id); r != requests_.end()) {
      return r->second == std::make_pair(e.id, e.action) ? ApplyResult::duplicate : ApplyResult::conflict;
    }
  }
  const auto& item = it->second;
  if (e.action == "revert") {
    if (item.history.empty() || !e.reverts || *e.reverts != to_string(item.decision)) return ApplyResult::conflict;
    return ApplyResult::applied;
  }
  return allowed(item.decision, parse_decision(e.action)) ? ApplyResult::applied : ApplyResult::conflict;
}

ApplyResult ReviewState::apply(const LogEntry& e) {
  const auto result = check(e);
  if (result != ApplyResult::applied) return result;
  auto& item = items_.at(e.id);
  if (e.action == "revert") {
    item.decision = item.history.back();
    item.history.pop_back();
  } else {
    item.history.push_back(item.decision);
    item.decision = parse_decision(e.action);
  }
  item.decided_at = e.timestamp;
  item.reviewer = e.reviewer;
  if (e.request_id) requests_[*e.request_id] = {e.id, e.action};
  return result;
}

const ReviewItem* ReviewState::find(const std::string& id) const {
  auto it = items_.find(id);
  return it == items_.end() ? nullptr : &it->second;
}

std::map<Decision, std::size_t> ReviewState::counts() const {
  std::map<Decision, std::size_t> out{
      {Decision::pending, 0}, {Decision::accepted, 0}, {Decision::rejected, 0}, {Decision::skipped, 0}};
  for (const auto& [_, item] : items_) ++out[item.decision];
  return out;
}

std::vector<corpus::SentenceRecord> ReviewState::accepted() const {
  std::vector<corpus::SentenceRecord> out;
  for (const auto& id : order_) {
    const auto& item = items_.at(id);
    if (item.decision != Decision::accepted) continue;
    auto r = item.record;
    r.label = corpus::Label::positive;
    out.push_back(std::move(r));
  }
  return out;
}

// ---- log

namespace {

[[noreturn]] void sys_fail(const std::string& what, const std::filesystem::path& p) {
  throw Error(what + " " + p.string() + ": " + std::strerror(errno));
}

}  // namespace

DecisionLog::DecisionLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) sys_fail("cannot open decision log", path_);
}

DecisionLog::~DecisionLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<LogEntry> DecisionLog::replay() {
  std::ifstream in(path_, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<LogEntry> out;
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    ++line;
    const auto nl = text.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string body = text.substr(pos, complete ? nl - pos : std::string::npos);
    const std::size_t next = complete ? nl + 1 : text.size();
    if (body.find_first_not_of(" \t\r") == std::string::npos) {
      pos = next;
      continue;
    }
    try {
      out.push_back(log_entry_from_json(json::parse(body)));
    } catch (const std::exception& e) {
      if (complete) throw ParseError(std::string("decision log: ") + e.what(), line);
      if (::ftruncate(fd_, static_cast<off_t>(pos)) != 0) sys_fail("cannot truncate", path_);
      break;
    }
    if (!complete) {
      // Parsed but unterminated: finish the line so the next append starts clean.
      if (::write(fd_, "\n", 1) != 1) sys_fail("cannot write", path_);
    }
    pos = next;
  }
  return out;
}

void DecisionLog::append(const LogEntry& entry) {
  const std::string line = to_json(entry).dump() + "\n";
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("cannot append to", path_);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) sys_fail("cannot sync", path_);
}

std::vector<corpus::SentenceRecord> export_accepted(const std::vector<LogEntry>& log,
                                                    const std::vector<PredictionRecord>& predictions,
                                                    const std::vector<corpus::SentenceRecord>& records) {
  ReviewState state(predictions, records);
  for (const auto& e : log) state.apply(e);
  return state.accepted();
}

// ---- service

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

namespace {

Response error(int status, const std::string& message) {
  Response r;
  r.status = status;
  r.body = {{"error", message}};
  return r;
}

Response ok(json body) {
  Response r;
  r.body = std::move(body);
  return r;
}

}  // namespace

ReviewService::ReviewService(const std::vector<PredictionRecord>& predictions,
                             const std::vector<corpus::SentenceRecord>& records,
                             const std::filesystem::path& log_path, Clock clock)
    : state_(predictions, records), log_(log_path), clock_(std::move(clock)) {
  std::size_t n = 0;
  for (const auto& e : log_.replay()) {
    ++n;
    const auto r = state_.apply(e);
    if (r == ApplyResult::unknown_id) {
      throw ValidationError("decision log entry " + std::to_string(n) + " names unknown id '" + e.id + "'");
    }
    if (r == ApplyResult::conflict) {
      throw ValidationError("decision log entry " + std::to_string(n) + " is not a valid transition for '" +
                            e.id + "'");
    }
  }
}

json ReviewService::summary(const ReviewItem& item) const {
  return {{"id", item.prediction.id},
          {"probability_positive", item.prediction.probability_positive},
          {"predicted", corpus::to_string(item.prediction.predicted)},
          {"decision", to_string(item.decision)},
          {"decided_at", item.decided_at.empty() ? json() : json(item.decided_at)},
          {"reviewer", item.reviewer.empty() ? json() : json(item.reviewer)}};
}

json ReviewService::detail(const ReviewItem& item) const {
  auto j = summary(item);
  j["tokens"] = item.record.tokens;
  j["lemmas"] = item.record.lemmas;
  j["attention"] = item.prediction.attention ? json(*item.prediction.attention) : json();
  j["metadata"] = corpus::to_json(item.record.metadata);
  j["work_id"] = item.record.work_id;
  j["can_undo"] = !item.history.empty();
  return j;
}

Response ReviewService::queue(std::string_view status, std::optional<std::size_t> limit) const {
  std::optional<Decision> want;
  if (status != "all") {
    try {
      want = parse_decision(status);
    } catch (const ValidationError& e) {
      return error(400, e.what());
    }
  }
  std::shared_lock lock(mu_);
  json items = json::array();
  std::size_t total = 0;
  for (const auto& id : state_.order()) {
    const auto* item = state_.find(id);
    if (want && item->decision != *want) continue;
    ++total;
    if (!limit || items.size() < *limit) items.push_back(summary(*item));
  }
  return ok(json{{"status", std::string(status)}, {"total", total}, {"items", items}});
}

Response ReviewService::item(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto* item = state_.find(id);
  if (!item) return error(404, "unknown id '" + id + "'");
  return ok(detail(*item));
}

Response ReviewService::decide(const json& body) {
  LogEntry e;
  try {
    if (!body.is_object()) throw ValidationError("body must be a JSON object");
    e.id = body.at("id").get<std::string>();
    e.action = body.at("decision").get<std::string>();
    e.reviewer = body.value("reviewer", "");
    if (body.contains("request_id") && !body["request_id"].is_null())
      e.request_id = body["request_id"].get<std::string>();
    if (e.action == "revert") {
      e.reverts = body.at("reverts").get<std::string>();
    } else if (e.action == "pending") {
      throw ValidationError("decision must be accepted, rejected, skipped or revert");
    } else {
      parse_decision(e.action);
    }
  } catch (const json::exception& ex) {
    return error(400, std::string("bad decision body: ") + ex.what());
  } catch (const ValidationError& ex) {
    return error(400, ex.what());
  }

  std::unique_lock lock(mu_);
  switch (state_.check(e)) {
    case ApplyResult::unknown_id:
      return error(404, "unknown id '" + e.id + "'");
    case ApplyResult::conflict: {
      Response r = error(409, "'" + e.action + "' conflicts with the committed state of '" + e.id + "'");
      r.body["item"] = summary(*state_.find(e.id));
      return r;
    }
    case ApplyResult::duplicate: {
      auto j = summary(*state_.find(e.id));
      j["result"] = "duplicate";
      return ok(j);
    }
    case ApplyResult::applied:
      break;
  }
  e.timestamp = clock_();
  log_.append(e);
  state_.apply(e);
  auto j = summary(*state_.find(e.id));
  j["result"] = "applied";
  return ok(j);
}

Response ReviewService::stats() const {
  std::shared_lock lock(mu_);
  const auto c = state_.counts();
  const auto acc = c.at(Decision::accepted), rej = c.at(Decision::rejected);
  json j;
  for (const auto& [d, n] : c) j[std::string(to_string(d))] = n;
  j["total"] = state_.order().size();
  j["precision_so_far"] = acc + rej ? json(double(acc) / double(acc + rej)) : json();
  return ok(j);
}

Response ReviewService::export_jsonl() const {
  std::shared_lock lock(mu_);
  std::ostringstream out;
  corpus::write_corpus(out, state_.accepted());
  Response r;
  r.content_type = "application/x-ndjson";
  r.raw = out.str();
  return r;
}

ReviewState ReviewService::snapshot() const {
  std::shared_lock lock(mu_);
  return state_;
}

}  // namespace semtag::review
