#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace agentjudge {

/// Compiled-in text asset lookup (templates and the default sandbox suite);
/// definitions are generated from assets/ at build time.
const std::string* find_embedded_asset(const std::string& name);
std::vector<std::string> embedded_asset_names();

/// A prompt template parsed from its asset: optional [system] section and a
/// [user] section, both carrying {placeholder} slots.
struct PromptTemplate {
  std::string id;
  std::optional<std::string> system;
  std::string user;
};

/// Looks up a template by id (asset basename, e.g. "web_e2e_trajectory").
/// Throws ConfigError for unknown ids.
const PromptTemplate& get_prompt_template(const std::string& id);

std::vector<std::string> prompt_template_ids();

/// Substitutes {name} slots from `values`. Every slot in the template must
/// be present in the map (ConfigError otherwise); braces inside substituted
/// values are left untouched.
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values);

/// Content hash over all prompt assets (sorted by name); pinned into run
/// manifests so a result can be traced to the exact template bytes.
std::string prompt_assets_hash();

}  // namespace agentjudge
