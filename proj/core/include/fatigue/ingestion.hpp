#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fatigue {

enum class Device { watch, ar_glasses };

std::string_view to_string(Device d) noexcept;
// Throws ValidationError for anything but "watch" / "ar_glasses".
Device parse_device(std::string_view s);

// One 1 Hz multimodal sample. The optional label is the ground-truth
// fatigue level and is only present in simulator output.
struct SensorFrame {
  double t = 0.0;             // s since session start
  double hr_bpm = 60.0;       // beats/min, [20, 250]
  double gaze_speed = 0.0;    // deg/s, >= 0
  bool blink = false;
  double pupil_mm = 4.0;      // [1, 9]
  double gsr_us = 2.0;        // microsiemens, [0, 40]
  double task_minutes = 0.0;  // >= 0
  Device device = Device::watch;
  double ambient_lux = 300.0;  // >= 0
  std::optional<int> label;    // 0, 1, 2

  bool operator==(const SensorFrame&) const = default;
};

struct Window {
  std::vector<SensorFrame> frames;
  std::optional<int> label;
};

inline constexpr std::size_t kDefaultWindow = 30;
inline constexpr std::size_t kDefaultStride = 30;

// Throws ValidationError naming the first offending field.
void validate_frame(const SensorFrame& f);

// Parses line-delimited JSON records. Blank lines are skipped but still
// counted for error line numbers. Throws ParseError.
std::vector<SensorFrame> parse_session(std::istream& in);
std::vector<SensorFrame> parse_session(std::string_view text);
std::vector<SensorFrame> read_session_file(const std::string& path);

// Inverse of parse_session. Throws ValidationError on an invalid frame or
// non-increasing timestamps.
std::string write_session(std::span<const SensorFrame> frames);
void write_session(std::ostream& out, std::span<const SensorFrame> frames);

// Full windows only, starting at 0, stride, 2*stride, ... A window carries a
// label when every frame in it is labelled; the value is the last frame's.
std::vector<Window> window_stream(std::span<const SensorFrame> frames, std::size_t width,
                                  std::size_t stride);

}  // namespace fatigue
