#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/error.hpp"

namespace geoground::agents {

enum class AgentRole { Orchestrator, LocationIntel, Navigation };

inline constexpr std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::Orchestrator: return "orchestrator";
    case AgentRole::LocationIntel: return "location_intel";
    case AgentRole::Navigation: return "navigation";
  }
  return "orchestrator";
}

// Semantic parameter types understood by the call validator.
enum class ParamType { String, Number, Integer, Boolean, StringList, Object };

inline constexpr std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::String: return "string";
    case ParamType::Number: return "number";
    case ParamType::Integer: return "integer";
    case ParamType::Boolean: return "boolean";
    case ParamType::StringList: return "string[]";
    case ParamType::Object: return "object";
  }
  return "string";
}

struct ToolParam {
  std::string name;
  ParamType type = ParamType::String;
  bool required = true;
};

using ToolHandler = std::function<nlohmann::json(const nlohmann::json& args)>;

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ToolParam> params;
  AgentRole owner = AgentRole::Orchestrator;
  ToolHandler handler;

  nlohmann::json schema() const {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& t : params) p[t.name] = {{"type", to_string(t.type)}, {"required", t.required}};
    return {{"name", name}, {"description", description}, {"agent", to_string(owner)}, {"parameters", std::move(p)}};
  }
};

struct ToolCall {
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();
};

struct Message {
  std::string role;  // system | user | assistant | tool
  std::string content;
  std::string tool;  // set on tool messages
};

struct LmRequest {
  std::string system;
  std::vector<Message> messages;
  std::vector<const ToolSpec*> tools;
};

// Either a tool call or final text.
struct LmResponse {
  std::optional<ToolCall> tool_call;
  std::string text;

  static LmResponse call(std::string name, nlohmann::json args = nlohmann::json::object()) {
    return LmResponse{ToolCall{std::move(name), std::move(args)}, {}};
  }
  static LmResponse final_text(std::string text) { return LmResponse{std::nullopt, std::move(text)}; }
};

class LmClient {
 public:
  virtual ~LmClient() = default;
  virtual LmResponse complete(const LmRequest& request) = 0;
};

class ToolRegistry {
 public:
  void add(ToolSpec spec) {
    if (spec.name.empty()) fail(ErrorCode::InvalidArgument, "tool name must not be empty");
    if (!spec.handler) fail(ErrorCode::InvalidArgument, "tool '" + spec.name + "' has no handler");
    if (tools_.count(spec.name)) fail(ErrorCode::InvalidArgument, "duplicate tool name '" + spec.name + "'");
    const auto name = spec.name;
    tools_.emplace(name, std::move(spec));
  }

  const ToolSpec* find(std::string_view name) const {
    auto it = tools_.find(std::string(name));
    return it == tools_.end() ? nullptr : &it->second;
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::vector<const ToolSpec*> specs() const {
    std::vector<const ToolSpec*> out;
    for (const auto& [_, spec] : tools_) out.push_back(&spec);
    return out;
  }

  // Empty when the call is well formed against the offered schema.
  std::optional<std::string> check(const ToolCall& call) const {
    const auto* spec = find(call.name);
    if (!spec) return "unknown tool '" + call.name + "'";
    if (!call.arguments.is_object()) return "arguments must be a JSON object";
    for (const auto& p : spec->params) {
      if (!call.arguments.contains(p.name)) {
        if (p.required) return "missing argument '" + p.name + "'";
        continue;
      }
      const auto& v = call.arguments.at(p.name);
      bool ok = false;
      switch (p.type) {
        case ParamType::String: ok = v.is_string(); break;
        case ParamType::Number: ok = v.is_number(); break;
        case ParamType::Integer: ok = v.is_number_integer(); break;
        case ParamType::Boolean: ok = v.is_boolean(); break;
        case ParamType::Object: ok = v.is_object(); break;
        case ParamType::StringList:
          ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_string(); });
          break;
      }
      if (!ok) return "argument '" + p.name + "' must be " + std::string(to_string(p.type));
    }
    for (auto it = call.arguments.begin(); it != call.arguments.end(); ++it) {
      bool known = false;
      for (const auto& p : spec->params) known |= p.name == it.key();
      if (!known) return "unexpected argument '" + it.key() + "'";
    }
    return std::nullopt;
  }

 private:
  std::map<std::string, ToolSpec> tools_;
};

}  // namespace geoground::agents
