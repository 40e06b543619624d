#pragma once

#include <string>
#include <string_view>

#include "glow/workflow.hpp"

namespace glow {

// Versioned serialization template. The wording is a repo constant so that
// generated corpora stay reproducible across releases; bump the version id
// whenever any template string changes.
inline constexpr std::string_view kTemplateVersion = "aw-template-v1";
inline constexpr std::string_view kTemplatePreamble =
    "You are given an agentic workflow represented as a directed acyclic graph.";
inline constexpr std::string_view kTemplateNodeHeader =
    "Nodes (mapping node ID to agent prompt):";
inline constexpr std::string_view kTemplateEdgeHeader =
    "Edges as (source, target) tuples:";
inline constexpr std::string_view kTemplateInstruction =
    "Provide a single token representing the embedding of this graph.";

struct SerializedWorkflow {
  std::string workflow_id;
  std::string text;
};

// Deterministic linearization: nodes as a {id: "prompt"} dictionary in
// ascending id order, edges as a [(source, target), ...] list in input order,
// terminated by the fixed instruction sentence. Prompts are escaped with
// backslash conventions (\" \\ \n \r \t) so the grammar stays unambiguous.
// Throws Error if the workflow fails validation.
SerializedWorkflow serialize_workflow(const AgentWorkflow& w);

// Inverse of serialize_workflow for round-trip testing. Accepts exactly the
// template grammar; anything else raises ParseError with a byte offset.
AgentWorkflow parse_serialized(std::string_view text);

std::string escape_prompt(std::string_view prompt);

}  // namespace glow
