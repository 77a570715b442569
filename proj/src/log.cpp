#include "surveyor/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace surveyor::log {

namespace {

std::mutex g_mutex;

Sink& sink_ref() {
  static Sink sink = [](Level level, const std::string& msg) {
    std::cerr << "[" << level_tag(level) << "] " << msg << "\n";
  };
  return sink;
}

}  // namespace

const char* level_tag(Level level) {
  switch (level) {
    case Level::debug:
      return "DEBUG";
    case Level::info:
      return "INFO";
    case Level::warn:
      return "WARN";
    case Level::error:
      return "ERROR";
  }
  return "?";
}

Sink set_sink(Sink sink) {
  std::lock_guard<std::mutex> lock(g_mutex);
  Sink previous = std::move(sink_ref());
  sink_ref() = std::move(sink);
  return previous;
}

void emit(Level level, const std::string& msg) {
  Sink copy;
  {
    std::lock_guard<std::mutex> lock(g_mutex);
    copy = sink_ref();
  }
  if (copy) copy(level, msg);
}

struct Capture::State {
  mutable std::mutex mutex;
  std::vector<Entry> entries;
};

Capture::Capture(bool forward) : state_(std::make_shared<State>()) {
  auto state = state_;
  previous_ = set_sink([state, forward, prev = Sink{}](Level level,
                                                       const std::string& msg) mutable {
    {
      std::lock_guard<std::mutex> lock(state->mutex);
      state->entries.push_back({level, msg});
    }
    if (forward) {
      std::cerr << "[" << level_tag(level) << "] " << msg << "\n";
    }
  });
}

Capture::~Capture() { set_sink(previous_); }

std::vector<Capture::Entry> Capture::entries() const {
  std::lock_guard<std::mutex> lock(state_->mutex);
  return state_->entries;
}

bool Capture::contains(Level level, const std::string& needle) const {
  std::lock_guard<std::mutex> lock(state_->mutex);
  for (const auto& e : state_->entries) {
    if (e.level == level && e.message.find(needle) != std::string::npos) {
      return true;
    }
  }
  return false;
}

}  // namespace surveyor::log
