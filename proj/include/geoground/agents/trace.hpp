#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/agents/protocol.hpp"

namespace geoground::agents {

enum class StepAction { ToolCall, Delegate, FinalAnswer };

inline constexpr std::string_view to_string(StepAction a) {
  switch (a) {
    case StepAction::ToolCall: return "tool_call";
    case StepAction::Delegate: return "delegate";
    case StepAction::FinalAnswer: return "final_answer";
  }
  return "tool_call";
}

struct AgentStep {
  AgentRole agent = AgentRole::Orchestrator;
  StepAction action = StepAction::ToolCall;
  nlohmann::json payload = nlohmann::json::object();
  std::string result_digest;
  std::int64_t elapsed_ms = 0;
};

enum class TraceOutcome { Answered, StepBudgetExceeded, MalformedToolCall };

inline constexpr std::string_view to_string(TraceOutcome o) {
  switch (o) {
    case TraceOutcome::Answered: return "answered";
    case TraceOutcome::StepBudgetExceeded: return "step_budget_exceeded";
    case TraceOutcome::MalformedToolCall: return "malformed_tool_call";
  }
  return "answered";
}

struct AgentTrace {
  std::string query;
  std::vector<AgentStep> steps;
  TraceOutcome outcome = TraceOutcome::Answered;

  std::size_t tool_calls() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.action == StepAction::ToolCall;
    return n;
  }
};

inline nlohmann::json to_json(const AgentStep& s) {
  return {{"agent", to_string(s.agent)},
          {"action", to_string(s.action)},
          {"payload", s.payload},
          {"result_digest", s.result_digest},
          {"elapsed_ms", s.elapsed_ms}};
}

inline nlohmann::json to_json(const AgentTrace& t) {
  auto steps = nlohmann::json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  return {{"query", t.query}, {"outcome", to_string(t.outcome)}, {"steps", std::move(steps)}};
}

// One AgentStep per line.
inline std::string to_jsonl(const AgentTrace& t) {
  std::string out;
  for (const auto& s : t.steps) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

// Milliseconds since an arbitrary epoch. Swap in a fake for reproducible traces.
using Clock = std::function<std::int64_t()>;

inline Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

inline Clock frozen_clock(std::int64_t t = 0) {
  return [t] { return t; };
}

}  // namespace geoground::agents
