#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpv/mechanisms.hpp"
#include "cpv/protocol.hpp"
#include "json.hpp"

namespace cpv {

inline constexpr const char* kSchema = "cpv-1";

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : InputError(what), line(line), column(column) {}
  std::size_t line, column;
};

// Schema violation at a JSON pointer such as "/rule/table/3".
class SchemaError : public InputError {
 public:
  SchemaError(std::string pointer, const std::string& what)
      : InputError(pointer + ": " + what), pointer(std::move(pointer)) {}
  std::string pointer;
};

class ProtocolDefect : public InputError {
 public:
  explicit ProtocolDefect(ValidationReport r)
      : InputError(r.kind + " at node /tree/" + std::to_string(r.node)), report(std::move(r)) {}
  ValidationReport report;
};

struct Instance {
  ChoiceRule rule;
  DomainModel model;
};

struct LoadedProtocol {
  Protocol protocol;
  std::optional<std::vector<int>> phase;
};

nlohmann::json parse_json_text(const std::string& text);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

Instance instance_from_json(const nlohmann::json& doc);
nlohmann::json instance_to_json(const ChoiceRule& rule, const DomainModel& model);

// Throws ProtocolDefect when the tree fails validate_protocol.
LoadedProtocol protocol_from_json(const nlohmann::json& doc, const TypeSpace& space);
nlohmann::json protocol_to_json(const Protocol& p, const std::optional<std::vector<int>>& phase = std::nullopt);

nlohmann::json profile_json(const TypeSpace& space, std::size_t index);
nlohmann::json rational_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& v, const std::string& pointer);

}  // namespace cpv
