#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "geoground/agents/protocol.hpp"
#include "geoground/agents/trace.hpp"
#include "geoground/error.hpp"

namespace geoground::agents {

inline constexpr int kDefaultMaxSteps = 8;

inline constexpr std::string_view kSystemPrompt =
    "You answer questions about places. Decompose the question, call the offered tools to ground every "
    "place you mention, then reply with a short final answer that only names places returned by tools.";

struct OrchestratorOptions {
  int max_steps = kDefaultMaxSteps;
  Clock clock = steady_clock_ms();
  std::string context;  // user pose / viewport description appended to the system prompt
};

struct OrchestrationResult {
  std::string answer;
  AgentTrace trace;
};

namespace detail {

inline std::string digest(const nlohmann::json& result, std::size_t limit = 160) {
  auto s = result.dump();
  if (s.size() > limit) {
    s.resize(limit);
    s += "...";
  }
  return s;
}

}  // namespace detail

// Drives the LM over the registry. A malformed call is rejected with the
// reason and retried once; a second consecutive malformed call ends the run.
// Tool failures are fed back to the LM and recorded, never thrown.
inline OrchestrationResult orchestrate(const std::string& query, LmClient& lm, const ToolRegistry& registry,
                                       const OrchestratorOptions& opts = {}) {
  if (opts.max_steps < 1) fail(ErrorCode::InvalidArgument, "max_steps must be at least 1");
  const Clock clock = opts.clock ? opts.clock : steady_clock_ms();
  const auto t0 = clock();

  OrchestrationResult out;
  out.trace.query = query;
  LmRequest req;
  req.system = std::string(kSystemPrompt);
  if (!opts.context.empty()) req.system += "\n" + opts.context;
  req.tools = registry.specs();
  req.messages.push_back({"user", query, {}});

  AgentRole current = AgentRole::Orchestrator;
  int tool_calls = 0;
  bool retried = false;
  auto finish = [&](std::string text, TraceOutcome outcome, nlohmann::json payload) {
    payload["text"] = text;
    out.trace.outcome = outcome;
    out.trace.steps.push_back({AgentRole::Orchestrator, StepAction::FinalAnswer, std::move(payload), {}, clock() - t0});
    out.answer = std::move(text);
  };

  for (;;) {
    const LmResponse resp = lm.complete(req);
    if (!resp.tool_call) {
      finish(resp.text, TraceOutcome::Answered, nlohmann::json::object());
      break;
    }
    const ToolCall& call = *resp.tool_call;
    if (auto problem = registry.check(call)) {
      if (!retried) {
        retried = true;
        req.messages.push_back({"assistant", nlohmann::json{{"tool", call.name}, {"arguments", call.arguments}}.dump(), {}});
        req.messages.push_back({"tool", nlohmann::json{{"rejected", *problem}}.dump(), call.name});
        continue;
      }
      finish("Sorry, that request could not be completed because the planner produced an invalid tool call.",
             TraceOutcome::MalformedToolCall,
             {{"error", to_string(ErrorCode::MalformedToolCall)}, {"detail", *problem}});
      break;
    }
    retried = false;
    if (tool_calls >= opts.max_steps) {
      finish("Sorry, that request needed more steps than allowed.", TraceOutcome::StepBudgetExceeded,
             {{"error", to_string(ErrorCode::StepBudgetExceeded)}, {"max_steps", opts.max_steps}});
      break;
    }
    const ToolSpec* spec = registry.find(call.name);
    if (spec->owner != current) {
      out.trace.steps.push_back({AgentRole::Orchestrator,
                                 StepAction::Delegate,
                                 {{"from", to_string(current)}, {"to", to_string(spec->owner)}, {"task", call.name}},
                                 {},
                                 clock() - t0});
      current = spec->owner;
    }
    nlohmann::json result;
    try {
      result = spec->handler(call.arguments);
    } catch (const Error& e) {
      result = {{"error", to_string(ErrorCode::ToolError)}, {"cause", to_string(e.code())}, {"message", e.what()}};
    } catch (const nlohmann::json::exception& e) {
      result = {{"error", to_string(ErrorCode::ToolError)}, {"cause", "invalid_argument"}, {"message", e.what()}};
    }
    ++tool_calls;
    out.trace.steps.push_back({spec->owner,
                               StepAction::ToolCall,
                               {{"tool", call.name}, {"arguments", call.arguments}, {"result", result}},
                               detail::digest(result),
                               clock() - t0});
    req.messages.push_back({"assistant", nlohmann::json{{"tool", call.name}, {"arguments", call.arguments}}.dump(), {}});
    req.messages.push_back({"tool", result.dump(), call.name});
  }
  return out;
}

}  // namespace geoground::agents
