#include "agentjudge/prompts.hpp"

#include <cctype>
#include <mutex>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"

namespace agentjudge {
namespace {

constexpr const char* kPromptPrefix = "prompts/";

/// Splits asset text into [system]/[user] sections. Section markers sit
/// alone on a line; content keeps its internal newlines but not the final
/// one, so rendered prompts do not end with a dangling newline.
PromptTemplate parse_template(const std::string& id, const std::string& text) {
  PromptTemplate result;
  result.id = id;
  std::string section;
  std::string* current = nullptr;
  std::string system_text, user_text;
  bool saw_system = false, saw_user = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string line = end == std::string::npos ? text.substr(pos)
                                                : text.substr(pos, end - pos);
    if (line == "[system]") {
      current = &system_text;
      saw_system = true;
    } else if (line == "[user]") {
      current = &user_text;
      saw_user = true;
    } else if (current != nullptr) {
      current->append(line);
      current->push_back('\n');
    } else if (!line.empty()) {
      throw ConfigError("template " + id + ": content before first section marker");
    }
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  auto strip_last_newline = [](std::string& s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
  };
  strip_last_newline(system_text);
  strip_last_newline(user_text);
  if (!saw_user) throw ConfigError("template " + id + " has no [user] section");
  if (saw_system) result.system = system_text;
  result.user = user_text;
  return result;
}

const std::map<std::string, PromptTemplate>& template_registry() {
  static std::map<std::string, PromptTemplate> registry;
  static std::once_flag once;
  std::call_once(once, [] {
    for (const std::string& name : embedded_asset_names()) {
      if (name.rfind(kPromptPrefix, 0) != 0) continue;
      std::string id = name.substr(std::string(kPromptPrefix).size());
      if (id.size() > 4 && id.substr(id.size() - 4) == ".txt") {
        id = id.substr(0, id.size() - 4);
      }
      registry.emplace(id, parse_template(id, *find_embedded_asset(name)));
    }
  });
  return registry;
}

}  // namespace

const PromptTemplate& get_prompt_template(const std::string& id) {
  const auto& registry = template_registry();
  auto it = registry.find(id);
  if (it == registry.end()) throw ConfigError("unknown prompt template: " + id);
  return it->second;
}

std::vector<std::string> prompt_template_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, templ] : template_registry()) ids.push_back(id);
  return ids;
}

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    char c = text[pos];
    if (c != '{') {
      out.push_back(c);
      ++pos;
      continue;
    }
    std::size_t end = pos + 1;
    while (end < text.size() &&
           (std::islower(static_cast<unsigned char>(text[end])) || text[end] == '_')) {
      ++end;
    }
    if (end < text.size() && text[end] == '}' && end > pos + 1) {
      const std::string name = text.substr(pos + 1, end - pos - 1);
      auto it = values.find(name);
      if (it == values.end()) {
        throw ConfigError("template placeholder has no value: {" + name + "}");
      }
      out.append(it->second);
      pos = end + 1;
    } else {
      out.push_back(c);
      ++pos;
    }
  }
  return out;
}

std::string prompt_assets_hash() {
  std::string buffer;
  for (const std::string& name : embedded_asset_names()) {
    if (name.rfind(kPromptPrefix, 0) != 0) continue;
    buffer += name;
    buffer += "\n";
    buffer += *find_embedded_asset(name);
    buffer += "\n";
  }
  return sha256_hex(buffer);
}

}  // namespace agentjudge
