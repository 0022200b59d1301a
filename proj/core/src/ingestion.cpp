#include "fatigue/ingestion.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kKeys[] = {"t",      "hr_bpm",       "gaze_speed", "blink",      "pupil_mm",
                                 "gsr_us", "task_minutes", "device",     "ambient_lux"};

void check_range(const char* field, double v, double lo, double hi) {
  if (!std::isfinite(v) || v < lo || v > hi) {
    std::ostringstream os;
    os << field << " out of range [" << lo << ", " << hi << "]: " << v;
    throw ValidationError(os.str());
  }
}

double number_field(const ordered_json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(std::string(key) + " must be a number");
  return v.get<double>();
}

SensorFrame frame_from_json(const ordered_json& obj) {
  if (!obj.is_object()) throw ValidationError("record is not a JSON object");
  for (const char* key : kKeys)
    if (!obj.contains(key)) throw ValidationError(std::string("missing field ") + key);
  for (const auto& [key, _] : obj.items()) {
    bool known = key == "label";
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ValidationError("unknown field " + key);
  }

  SensorFrame f;
  f.t = number_field(obj, "t");
  f.hr_bpm = number_field(obj, "hr_bpm");
  f.gaze_speed = number_field(obj, "gaze_speed");
  if (!obj.at("blink").is_boolean()) throw ValidationError("blink must be a boolean");
  f.blink = obj.at("blink").get<bool>();
  f.pupil_mm = number_field(obj, "pupil_mm");
  f.gsr_us = number_field(obj, "gsr_us");
  f.task_minutes = number_field(obj, "task_minutes");
  if (!obj.at("device").is_string()) throw ValidationError("device must be a string");
  f.device = parse_device(obj.at("device").get<std::string>());
  f.ambient_lux = number_field(obj, "ambient_lux");
  if (obj.contains("label")) {
    const auto& l = obj.at("label");
    if (!l.is_number_integer()) throw ValidationError("label must be an integer");
    f.label = l.get<int>();
  }
  validate_frame(f);
  return f;
}

ordered_json frame_to_json(const SensorFrame& f) {
  ordered_json obj;
  obj["t"] = f.t;
  obj["hr_bpm"] = f.hr_bpm;
  obj["gaze_speed"] = f.gaze_speed;
  obj["blink"] = f.blink;
  obj["pupil_mm"] = f.pupil_mm;
  obj["gsr_us"] = f.gsr_us;
  obj["task_minutes"] = f.task_minutes;
  obj["device"] = std::string(to_string(f.device));
  obj["ambient_lux"] = f.ambient_lux;
  if (f.label) obj["label"] = *f.label;
  return obj;
}

}  // namespace

std::string_view to_string(Device d) noexcept {
  return d == Device::watch ? "watch" : "ar_glasses";
}

Device parse_device(std::string_view s) {
  if (s == "watch") return Device::watch;
  if (s == "ar_glasses") return Device::ar_glasses;
  throw ValidationError("device must be \"watch\" or \"ar_glasses\", got \"" + std::string(s) + "\"");
}

void validate_frame(const SensorFrame& f) {
  const double inf = std::numeric_limits<double>::infinity();
  check_range("t", f.t, 0.0, inf);
  check_range("hr_bpm", f.hr_bpm, 20.0, 250.0);
  check_range("gaze_speed", f.gaze_speed, 0.0, inf);
  check_range("pupil_mm", f.pupil_mm, 1.0, 9.0);
  check_range("gsr_us", f.gsr_us, 0.0, 40.0);
  check_range("task_minutes", f.task_minutes, 0.0, inf);
  check_range("ambient_lux", f.ambient_lux, 0.0, inf);
  if (f.label && (*f.label < 0 || *f.label > 2))
    throw ValidationError("label out of range {0,1,2}: " + std::to_string(*f.label));
}

std::vector<SensorFrame> parse_session(std::istream& in) {
  std::vector<SensorFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SensorFrame f;
    try {
      f = frame_from_json(ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("malformed record: ") + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    if (!frames.empty() && !(f.t > frames.back().t)) {
      std::ostringstream os;
      os << "non-monotonic timestamp t=" << f.t << " after t=" << frames.back().t;
      throw ParseError(line_no, os.str());
    }
    frames.push_back(f);
  }
  return frames;
}

std::vector<SensorFrame> parse_session(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_session(in);
}

std::vector<SensorFrame> read_session_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open session file " + path);
  return parse_session(in);
}

void write_session(std::ostream& out, std::span<const SensorFrame> frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    validate_frame(frames[i]);
    if (i > 0 && !(frames[i].t > frames[i - 1].t))
      throw ValidationError("frame " + std::to_string(i) + ": timestamps must strictly increase");
  }
  for (const auto& f : frames) out << frame_to_json(f).dump() << '\n';
}

std::string write_session(std::span<const SensorFrame> frames) {
  std::ostringstream os;
  write_session(os, frames);
  return os.str();
}

std::vector<Window> window_stream(std::span<const SensorFrame> frames, std::size_t width,
                                  std::size_t stride) {
  if (width == 0) throw ValidationError("window width must be >= 1");
  if (stride == 0) throw ValidationError("window stride must be >= 1");
  std::vector<Window> out;
  for (std::size_t start = 0; start + width <= frames.size(); start += stride) {
    Window w;
    w.frames.assign(frames.begin() + start, frames.begin() + start + width);
    bool labelled = true;
    for (const auto& f : w.frames) labelled = labelled && f.label.has_value();
    if (labelled) w.label = w.frames.back().label;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace fatigue
