#pragma once

// Vitals store standing in for the monitor + database chain: timestamped
// scalar readings per (patient, parameter) stream, and the value-request
// protocol the session engine uses to ask for them.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace kirett {

struct VitalsRecord {
  std::string patient_id;
  std::string parameter;
  double reading = 0;
  std::string unit;
  std::int64_t timestamp_ms = 0;

  bool operator==(const VitalsRecord&) const = default;
};

enum class Freshness { Fresh, Stale, Unavailable };

std::string_view to_string(Freshness f);
std::optional<Freshness> freshness_from_string(std::string_view text);

struct ValueRequest {
  std::string session_id;
  std::string patient_id;
  std::string node_id;
  std::string parameter;
  std::optional<double> min;
  std::optional<double> max;

  bool operator==(const ValueRequest&) const = default;
};

struct ValueResponse {
  std::string session_id;
  std::string patient_id;
  std::string node_id;
  std::string parameter;
  std::optional<double> reading;
  std::optional<std::string> unit;
  std::optional<std::int64_t> timestamp_ms;
  Freshness freshness = Freshness::Unavailable;
  /// Present iff a reading is present and at least one bound was requested.
  std::optional<bool> in_range;

  bool operator==(const ValueResponse&) const = default;
};

/// Inclusive range test; an absent bound is unbounded.
bool within_bounds(double reading, std::optional<double> min, std::optional<double> max);

class VitalsError : public std::runtime_error {
 public:
  enum class Code { NonMonotone, Malformed, Io };
  VitalsError(Code code, std::string message, std::size_t line = 0)
      : std::runtime_error(std::move(message)), code_(code), line_(line) {}
  Code code() const { return code_; }
  /// 1-based CSV line for feed errors, 0 otherwise.
  std::size_t line() const { return line_; }

 private:
  Code code_;
  std::size_t line_;
};

struct VitalsConfig {
  std::int64_t max_age_ms = 300'000;
};

class VitalsStore {
 public:
  explicit VitalsStore(VitalsConfig config = {}) : config_(config) {}

  /// Rejects a record whose timestamp is not newer than the stream's last one.
  void ingest(const VitalsRecord& record);
  std::optional<VitalsRecord> latest(std::string_view patient_id, std::string_view parameter) const;
  ValueResponse answer(const ValueRequest& request, std::int64_t now_ms) const;

  std::size_t record_count() const;
  const VitalsConfig& config() const { return config_; }

  /// Appends every subsequently ingested record to a CSV log.
  void persist_to(const std::filesystem::path& path);
  /// Rebuilds a store from a log written by persist_to (or any vitals CSV).
  static std::unique_ptr<VitalsStore> restore(const std::filesystem::path& path,
                                              VitalsConfig config = {});

 private:
  using StreamKey = std::pair<std::string, std::string>;

  VitalsConfig config_;
  mutable std::shared_mutex mutex_;
  std::map<StreamKey, std::vector<VitalsRecord>> streams_;
  std::size_t count_ = 0;
  std::unique_ptr<std::ofstream> log_;
};

inline constexpr std::string_view kVitalsCsvHeader = "patient_id,parameter,reading,unit,timestamp_ms";

/// Parses a vitals CSV; rows must be time-ordered per stream. Errors carry the
/// 1-based line of the first offending row.
std::vector<VitalsRecord> parse_vitals_csv(std::string_view text);
std::string format_vitals_csv_row(const VitalsRecord& record);

/// Replays rows in order. Inter-row delays are the timestamp deltas scaled by
/// speed; speed 0 replays immediately.
void play_feed(const std::vector<VitalsRecord>& rows, double speed,
               const std::function<void(const VitalsRecord&)>& sink,
               const std::function<void(std::int64_t delay_ms)>& sleeper = {});

void to_json(nlohmann::json& j, const VitalsRecord& r);
void from_json(const nlohmann::json& j, VitalsRecord& r);
void to_json(nlohmann::json& j, const ValueRequest& r);
void from_json(const nlohmann::json& j, ValueRequest& r);
void to_json(nlohmann::json& j, const ValueResponse& r);
void from_json(const nlohmann::json& j, ValueResponse& r);

}  // namespace kirett
