#include "kirett/vitals.hpp"

#include <charconv>
#include <sstream>
#include <thread>

#include "number_format.hpp"

namespace kirett {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::string_view to_string(Freshness f) {
  switch (f) {
    case Freshness::Fresh:
      return "fresh";
    case Freshness::Stale:
      return "stale";
    case Freshness::Unavailable:
      return "unavailable";
  }
  return "unavailable";
}

std::optional<Freshness> freshness_from_string(std::string_view text) {
  if (text == "fresh") return Freshness::Fresh;
  if (text == "stale") return Freshness::Stale;
  if (text == "unavailable") return Freshness::Unavailable;
  return std::nullopt;
}

bool within_bounds(double reading, std::optional<double> min, std::optional<double> max) {
  return (!min || *min <= reading) && (!max || reading <= *max);
}

void VitalsStore::ingest(const VitalsRecord& record) {
  std::unique_lock lock(mutex_);
  auto& stream = streams_[{record.patient_id, record.parameter}];
  if (!stream.empty() && record.timestamp_ms <= stream.back().timestamp_ms) {
    throw VitalsError(VitalsError::Code::NonMonotone,
                      "timestamp " + std::to_string(record.timestamp_ms) + " for " +
                          record.patient_id + "/" + record.parameter + " is not newer than " +
                          std::to_string(stream.back().timestamp_ms));
  }
  stream.push_back(record);
  ++count_;
  if (log_) {
    *log_ << format_vitals_csv_row(record) << '\n';
    log_->flush();
  }
}

std::optional<VitalsRecord> VitalsStore::latest(std::string_view patient_id,
                                                std::string_view parameter) const {
  std::shared_lock lock(mutex_);
  auto it = streams_.find({std::string(patient_id), std::string(parameter)});
  if (it == streams_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

ValueResponse VitalsStore::answer(const ValueRequest& request, std::int64_t now_ms) const {
  ValueResponse response;
  response.session_id = request.session_id;
  response.patient_id = request.patient_id;
  response.node_id = request.node_id;
  response.parameter = request.parameter;
  auto record = latest(request.patient_id, request.parameter);
  if (!record) {
    response.freshness = Freshness::Unavailable;
    return response;
  }
  response.reading = record->reading;
  response.unit = record->unit;
  response.timestamp_ms = record->timestamp_ms;
  response.freshness =
      now_ms - record->timestamp_ms > config_.max_age_ms ? Freshness::Stale : Freshness::Fresh;
  if (request.min || request.max) {
    response.in_range = within_bounds(record->reading, request.min, request.max);
  }
  return response;
}

std::size_t VitalsStore::record_count() const {
  std::shared_lock lock(mutex_);
  return count_;
}

void VitalsStore::persist_to(const std::filesystem::path& path) {
  std::unique_lock lock(mutex_);
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  log_ = std::make_unique<std::ofstream>(path, std::ios::app);
  if (!*log_) throw VitalsError(VitalsError::Code::Io, "cannot open vitals log " + path.string());
  if (fresh) *log_ << kVitalsCsvHeader << '\n';
}

std::unique_ptr<VitalsStore> VitalsStore::restore(const std::filesystem::path& path,
                                                  VitalsConfig config) {
  std::ifstream in(path);
  if (!in) throw VitalsError(VitalsError::Code::Io, "cannot read vitals log " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  auto store = std::make_unique<VitalsStore>(config);
  for (const VitalsRecord& r : parse_vitals_csv(text.str())) store->ingest(r);
  return store;
}

std::vector<VitalsRecord> parse_vitals_csv(std::string_view text) {
  std::vector<VitalsRecord> rows;
  std::map<std::pair<std::string, std::string>, std::int64_t> last;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    auto eol = text.find('\n');
    std::string_view line = trim(text.substr(0, eol));
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kVitalsCsvHeader) {
        throw VitalsError(VitalsError::Code::Malformed,
                          "line " + std::to_string(line_no) + ": expected header \"" +
                              std::string(kVitalsCsvHeader) + "\"",
                          line_no);
      }
      header_seen = true;
      continue;
    }
    auto fields = split(line, ',');
    VitalsRecord r;
    auto malformed = [&](const std::string& why) {
      return VitalsError(VitalsError::Code::Malformed,
                         "line " + std::to_string(line_no) + ": " + why, line_no);
    };
    if (fields.size() != 5) throw malformed("expected 5 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty()) throw malformed("empty patient_id or parameter");
    r.patient_id = fields[0];
    r.parameter = fields[1];
    if (!parse_number(fields[2], r.reading)) throw malformed("reading is not a number");
    r.unit = fields[3];
    if (!parse_number(fields[4], r.timestamp_ms)) throw malformed("timestamp_ms is not an integer");
    auto [it, inserted] = last.try_emplace({r.patient_id, r.parameter}, r.timestamp_ms);
    if (!inserted) {
      if (r.timestamp_ms <= it->second) {
        throw VitalsError(VitalsError::Code::NonMonotone,
                          "line " + std::to_string(line_no) + ": timestamp not increasing for " +
                              r.patient_id + "/" + r.parameter,
                          line_no);
      }
      it->second = r.timestamp_ms;
    }
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw VitalsError(VitalsError::Code::Malformed, "empty vitals file", 0);
  return rows;
}

std::string format_vitals_csv_row(const VitalsRecord& r) {
  return r.patient_id + "," + r.parameter + "," + detail::format_number(r.reading) + "," + r.unit +
         "," + std::to_string(r.timestamp_ms);
}

void play_feed(const std::vector<VitalsRecord>& rows, double speed,
               const std::function<void(const VitalsRecord&)>& sink,
               const std::function<void(std::int64_t)>& sleeper) {
  if (speed < 0) throw std::invalid_argument("speed factor must be >= 0");
  std::optional<std::int64_t> previous;
  for (const VitalsRecord& r : rows) {
    if (previous && speed > 0) {
      const auto delay = static_cast<std::int64_t>(
          static_cast<double>(std::max<std::int64_t>(0, r.timestamp_ms - *previous)) * speed);
      if (delay > 0) {
        if (sleeper) {
          sleeper(delay);
        } else {
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
      }
    }
    previous = r.timestamp_ms;
    sink(r);
  }
}

void to_json(nlohmann::json& j, const VitalsRecord& r) {
  j = nlohmann::json{{"patient_id", r.patient_id},
                     {"parameter", r.parameter},
                     {"reading", r.reading},
                     {"unit", r.unit},
                     {"timestamp_ms", r.timestamp_ms}};
}

void from_json(const nlohmann::json& j, VitalsRecord& r) {
  j.at("patient_id").get_to(r.patient_id);
  j.at("parameter").get_to(r.parameter);
  j.at("reading").get_to(r.reading);
  r.unit = j.value("unit", std::string{});
  j.at("timestamp_ms").get_to(r.timestamp_ms);
}

void to_json(nlohmann::json& j, const ValueRequest& r) {
  j = nlohmann::json{{"session_id", r.session_id},
                     {"patient_id", r.patient_id},
                     {"node_id", r.node_id},
                     {"parameter", r.parameter}};
  if (r.min) j["min"] = *r.min;
  if (r.max) j["max"] = *r.max;
}

void from_json(const nlohmann::json& j, ValueRequest& r) {
  j.at("session_id").get_to(r.session_id);
  j.at("patient_id").get_to(r.patient_id);
  r.node_id = j.value("node_id", std::string{});
  j.at("parameter").get_to(r.parameter);
  if (j.contains("min")) r.min = j.at("min").get<double>();
  if (j.contains("max")) r.max = j.at("max").get<double>();
}

void to_json(nlohmann::json& j, const ValueResponse& r) {
  j = nlohmann::json{{"session_id", r.session_id},
                     {"patient_id", r.patient_id},
                     {"node_id", r.node_id},
                     {"parameter", r.parameter},
                     {"freshness", std::string(to_string(r.freshness))}};
  if (r.reading) j["reading"] = *r.reading;
  if (r.unit) j["unit"] = *r.unit;
  if (r.timestamp_ms) j["timestamp_ms"] = *r.timestamp_ms;
  if (r.in_range) j["in_range"] = *r.in_range;
}

void from_json(const nlohmann::json& j, ValueResponse& r) {
  j.at("session_id").get_to(r.session_id);
  j.at("patient_id").get_to(r.patient_id);
  r.node_id = j.value("node_id", std::string{});
  j.at("parameter").get_to(r.parameter);
  auto f = freshness_from_string(j.at("freshness").get<std::string>());
  if (!f) throw std::invalid_argument("unknown freshness");
  r.freshness = *f;
  if (j.contains("reading")) r.reading = j.at("reading").get<double>();
  if (j.contains("unit")) r.unit = j.at("unit").get<std::string>();
  if (j.contains("timestamp_ms")) r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  if (j.contains("in_range")) r.in_range = j.at("in_range").get<bool>();
}

}  // namespace kirett
