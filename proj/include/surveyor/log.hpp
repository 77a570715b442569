#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace surveyor::log {

enum class Level { debug, info, warn, error };

using Sink = std::function<void(Level, const std::string&)>;

/// Replace the process-wide sink; returns the previous one.
/// The default sink writes "[LEVEL] message" lines to stderr.
Sink set_sink(Sink sink);

void emit(Level level, const std::string& msg);

inline void debug(const std::string& msg) { emit(Level::debug, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void warn(const std::string& msg) { emit(Level::warn, msg); }
inline void error(const std::string& msg) { emit(Level::error, msg); }

const char* level_tag(Level level);

/// RAII capture of everything logged while alive; used by tests and by the
/// CLI to surface warnings in reports.
class Capture {
 public:
  explicit Capture(bool forward = false);
  ~Capture();

  struct Entry {
    Level level;
    std::string message;
  };
  std::vector<Entry> entries() const;
  bool contains(Level level, const std::string& needle) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
  Sink previous_;
};

}  // namespace surveyor::log
