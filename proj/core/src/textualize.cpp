#include "glow/textualize.hpp"

#include <algorithm>
#include <sstream>

#include "glow/error.hpp"

namespace glow {

std::string escape_prompt(std::string_view prompt) {
  std::string out;
  out.reserve(prompt.size());
  for (char c : prompt) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

SerializedWorkflow serialize_workflow(const AgentWorkflow& w) {
  auto report = validate_workflow(w);
  if (!report.ok())
    throw Error("cannot serialize invalid workflow '" + w.workflow_id +
                "': " + report.errors.front().message);

  std::vector<AgentNode> sorted = w.nodes;
  std::sort(sorted.begin(), sorted.end(),
            [](const AgentNode& a, const AgentNode& b) { return a.id < b.id; });

  std::ostringstream os;
  os << kTemplatePreamble << '\n' << kTemplateNodeHeader << '\n' << '{';
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) os << ", ";
    os << sorted[i].id << ": \"" << escape_prompt(sorted[i].prompt) << '"';
  }
  os << "}\n" << kTemplateEdgeHeader << "\n[";
  for (std::size_t i = 0; i < w.edges.size(); ++i) {
    if (i) os << ", ";
    os << '(' << w.edges[i].source << ", " << w.edges[i].target << ')';
  }
  os << "]\n" << kTemplateInstruction;
  return {w.workflow_id, os.str()};
}

namespace {

// Cursor over the serialized text; all errors carry the current byte offset.
struct Cursor {
  std::string_view s;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("serialized workflow: " + what + " at offset " + std::to_string(pos));
  }
  bool eof() const { return pos >= s.size(); }
  char peek() const { return eof() ? '\0' : s[pos]; }
  void expect(std::string_view lit, const char* desc) {
    if (s.substr(pos, lit.size()) != lit) fail(std::string("expected ") + desc);
    pos += lit.size();
  }
  void skip_spaces() {
    while (!eof() && s[pos] == ' ') pos++;
  }
  int parse_int() {
    skip_spaces();
    std::size_t start = pos;
    if (peek() == '-') pos++;
    while (!eof() && std::isdigit(static_cast<unsigned char>(s[pos]))) pos++;
    if (pos == start || (pos == start + 1 && s[start] == '-')) fail("expected integer");
    return std::stoi(std::string(s.substr(start, pos - start)));
  }
  std::string parse_quoted() {
    expect("\"", "opening quote");
    std::string out;
    while (true) {
      if (eof()) fail("unterminated string");
      char c = s[pos++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("dangling escape");
        char e = s[pos++];
        switch (e) {
          case '\\': out += '\\'; break;
          case '"': out += '"'; break;
          case 'n': out += '\n'; break;
          case 'r': out += '\r'; break;
          case 't': out += '\t'; break;
          default: pos -= 1; fail("unknown escape");
        }
      } else {
        out += c;
      }
    }
    return out;
  }
};

}  // namespace

AgentWorkflow parse_serialized(std::string_view text) {
  Cursor c{text};
  c.expect(kTemplatePreamble, "template preamble");
  c.expect("\n", "newline after preamble");
  c.expect(kTemplateNodeHeader, "node header");
  c.expect("\n", "newline after node header");

  AgentWorkflow w;
  w.workflow_id = "parsed";
  c.expect("{", "node dictionary");
  c.skip_spaces();
  if (c.peek() != '}') {
    while (true) {
      int id = c.parse_int();
      c.expect(":", "':' after node id");
      c.skip_spaces();
      std::string prompt = c.parse_quoted();
      w.nodes.push_back({id, std::move(prompt)});
      c.skip_spaces();
      if (c.peek() == ',') {
        c.pos++;
        c.skip_spaces();
        continue;
      }
      break;
    }
  }
  c.expect("}", "closing '}' of node dictionary");
  c.expect("\n", "newline after node dictionary");
  c.expect(kTemplateEdgeHeader, "edge header");
  c.expect("\n", "newline after edge header");

  c.expect("[", "edge list");
  c.skip_spaces();
  if (c.peek() != ']') {
    while (true) {
      c.expect("(", "'(' opening edge tuple");
      int src = c.parse_int();
      c.expect(",", "',' inside edge tuple");
      int dst = c.parse_int();
      c.skip_spaces();
      c.expect(")", "')' closing edge tuple");
      w.edges.push_back({src, dst});
      c.skip_spaces();
      if (c.peek() == ',') {
        c.pos++;
        c.skip_spaces();
        continue;
      }
      break;
    }
  }
  c.expect("]", "closing ']' of edge list");
  c.expect("\n", "newline after edge list");
  c.expect(kTemplateInstruction, "instruction sentence");
  if (!c.eof()) c.fail("trailing characters after instruction");
  return w;
}

}  // namespace glow
