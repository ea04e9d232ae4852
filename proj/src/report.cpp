#include "policybounds/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace policybounds::report {

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void escape_string(const std::string& s, std::string& out) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void write_canonical(const nlohmann::json& j, std::string& out) {
  switch (j.type()) {
    case nlohmann::json::value_t::null:
      out += "null";
      break;
    case nlohmann::json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(j.get<long long>());
      break;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(j.get<unsigned long long>());
      break;
    case nlohmann::json::value_t::number_float:
      out += format_number(j.get<double>());
      break;
    case nlohmann::json::value_t::string:
      escape_string(j.get<std::string>(), out);
      break;
    case nlohmann::json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        write_canonical(item, out);
      }
      out += ']';
      break;
    }
    case nlohmann::json::value_t::object: {
      // nlohmann's default object container keeps keys sorted already
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        escape_string(it.key(), out);
        out += ':';
        write_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    default:
      throw std::invalid_argument("emit_json: unsupported value type");
  }
}

std::string field(const nlohmann::json& r, const char* key) {
  if (!r.contains(key)) return "";
  const auto& v = r.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return "";
}

}  // namespace

OutputFormat parse_format(const std::string& name) {
  if (name == "json") return OutputFormat::Json;
  if (name == "csv") return OutputFormat::Csv;
  if (name == "human") return OutputFormat::Human;
  throw std::invalid_argument("unsupported output format '" + name + "'");
}

std::string emit_json(const nlohmann::json& doc) {
  std::string out;
  write_canonical(doc, out);
  out += '\n';
  return out;
}

std::string emit_csv(const nlohmann::json& doc) {
  std::string out = "name,kind,lower,upper,status,level,method\n";
  if (!doc.contains("results")) return out;
  for (const auto& r : doc.at("results")) {
    out += field(r, "name");
    out += ',';
    out += field(r, "kind");
    out += ',';
    out += field(r, "lower");
    out += ',';
    out += field(r, "upper");
    out += ',';
    out += field(r, "status");
    out += ',';
    out += field(r, "level");
    out += ',';
    out += field(r, "method");
    out += '\n';
  }
  return out;
}

std::string emit_human(const nlohmann::json& doc) {
  std::string out;
  out += "policybounds " + field(doc, "subcommand") + "\n";
  if (doc.contains("results")) {
    for (const auto& r : doc.at("results")) {
      out += "  " + field(r, "name");
      if (r.contains("lower") && r.contains("upper")) {
        std::string lo = field(r, "lower"), hi = field(r, "upper");
        if (lo == hi && !lo.empty())
          out += " = " + lo;
        else
          out += " in [" + lo + ", " + hi + "]";
      } else if (r.contains("value")) {
        out += " = " + field(r, "value");
      }
      std::string status = field(r, "status");
      if (!status.empty() && status != "optimal") out += " (" + status + ")";
      std::string note = field(r, "note");
      if (!note.empty()) out += "  -- " + note;
      out += '\n';
    }
  }
  if (doc.contains("warnings")) {
    for (const auto& w : doc.at("warnings"))
      out += "  warning: " + w.get<std::string>() + "\n";
  }
  if (doc.contains("timings")) {
    const auto& t = doc.at("timings");
    out += "  total " + field(t, "total_seconds") + "s\n";
  }
  return out;
}

std::string emit(const nlohmann::json& doc, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: return emit_json(doc);
    case OutputFormat::Csv: return emit_csv(doc);
    case OutputFormat::Human: return emit_human(doc);
  }
  throw std::invalid_argument("unsupported output format");
}

}  // namespace policybounds::report
