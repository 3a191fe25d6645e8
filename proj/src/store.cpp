#include "agentjudge/store.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"
#include "json.hpp"

namespace agentjudge {
namespace {

nlohmann::ordered_json evaluator_to_json(const EvaluatorSpec& spec) {
  nlohmann::ordered_json json;
  json["architecture"] = to_string(spec.architecture);
  json["granularity"] = to_string(spec.granularity);
  json["reward"] = {{"p", spec.reward.p},
                    {"not_sure", spec.reward.not_sure},
                    {"d", spec.reward.d}};
  return json;
}

EvaluatorSpec evaluator_from_json(const nlohmann::json& json) {
  EvaluatorSpec spec;
  const auto architecture =
      architecture_from_string(json.at("architecture").get<std::string>());
  if (!architecture) {
    throw SchemaError("unknown architecture: " +
                      json.at("architecture").get<std::string>());
  }
  spec.architecture = *architecture;
  const auto granularity =
      granularity_from_string(json.at("granularity").get<std::string>());
  if (!granularity) {
    throw SchemaError("unknown granularity: " +
                      json.at("granularity").get<std::string>());
  }
  spec.granularity = *granularity;
  if (json.contains("reward")) {
    spec.reward.p = json.at("reward").value("p", 0.5);
    spec.reward.not_sure = json.at("reward").value("not_sure", 0.0);
    spec.reward.d = json.at("reward").value("d", -1.0);
  }
  spec.reward.validate();
  return spec;
}

nlohmann::ordered_json manifest_body(const RunManifest& manifest) {
  nlohmann::ordered_json json;
  json["command"] = manifest.command;
  json["seed"] = manifest.seed;
  json["backend"] = manifest.backend;
  json["model_name"] = manifest.model_name;
  if (manifest.evaluator) {
    json["evaluator"] = evaluator_to_json(*manifest.evaluator);
  } else {
    json["evaluator"] = nullptr;
  }
  json["prompt_assets_hash"] = manifest.prompt_assets_hash;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const InputRef& input : manifest.inputs) {
    inputs.push_back({{"name", input.name}, {"sha256", input.sha256}});
  }
  json["inputs"] = inputs;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  for (const auto& [key, value] : manifest.extra) extra[key] = value;
  json["extra"] = extra;
  return json;
}

const std::set<std::string>& known_kinds() {
  static const std::set<std::string> kinds = {"rewards", "reflexion", "agreement",
                                              "bc_samples", "error"};
  return kinds;
}

void validate_payload(const std::string& kind, const nlohmann::json& payload) {
  if (kind == "rewards") {
    if (!payload.contains("granularity") || !payload.contains("values") ||
        !payload.at("values").is_array()) {
      throw SchemaError("rewards payload needs granularity and a values array");
    }
    if (!granularity_from_string(payload.at("granularity").get<std::string>())) {
      throw SchemaError("rewards payload has an unknown granularity");
    }
  } else if (kind == "reflexion") {
    for (const char* field : {"rounds_used", "judged_success", "per_round"}) {
      if (!payload.contains(field)) {
        throw SchemaError(std::string("reflexion payload is missing ") + field);
      }
    }
  } else if (kind == "agreement") {
    for (const char* field : {"accuracy", "tp", "fp", "tn", "fn", "n"}) {
      if (!payload.contains(field)) {
        throw SchemaError(std::string("agreement payload is missing ") + field);
      }
    }
  } else if (kind == "bc_samples") {
    if (!payload.contains("samples") || !payload.at("samples").is_array()) {
      throw SchemaError("bc_samples payload needs a samples array");
    }
  } else if (kind == "error") {
    if (!payload.contains("message")) {
      throw SchemaError("error payload needs a message");
    }
  }
}

}  // namespace

std::string evaluator_spec_to_json_text(const EvaluatorSpec& spec) {
  return evaluator_to_json(spec).dump();
}

EvaluatorSpec evaluator_spec_from_json_text(const std::string& json_text) {
  try {
    return evaluator_from_json(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed evaluator config: ") + e.what());
  }
}

void finalize_manifest(RunManifest& manifest) {
  manifest.run_id = sha256_hex(manifest_body(manifest).dump());
  if (manifest.created.empty()) manifest.created = timestamp_utc();
}

std::string manifest_to_json(const RunManifest& manifest) {
  nlohmann::ordered_json json;
  json["run_id"] = manifest.run_id;
  json["created"] = manifest.created;
  const nlohmann::ordered_json body = manifest_body(manifest);
  for (const auto& [key, value] : body.items()) json[key] = value;
  return json.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& json_text) {
  RunManifest manifest;
  try {
    const nlohmann::json json = nlohmann::json::parse(json_text);
    manifest.run_id = json.at("run_id").get<std::string>();
    manifest.created = json.at("created").get<std::string>();
    manifest.command = json.at("command").get<std::string>();
    manifest.seed = json.at("seed").get<std::uint64_t>();
    manifest.backend = json.at("backend").get<std::string>();
    manifest.model_name = json.at("model_name").get<std::string>();
    if (!json.at("evaluator").is_null()) {
      manifest.evaluator = evaluator_from_json(json.at("evaluator"));
    }
    manifest.prompt_assets_hash = json.at("prompt_assets_hash").get<std::string>();
    for (const auto& input : json.at("inputs")) {
      manifest.inputs.push_back({input.at("name").get<std::string>(),
                                 input.at("sha256").get<std::string>()});
    }
    if (json.contains("extra")) {
      for (const auto& [key, value] : json.at("extra").items()) {
        manifest.extra[key] = value.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
  return manifest;
}

void write_manifest(const std::string& dir, const RunManifest& manifest) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
  const std::string content = manifest_to_json(manifest);
  if (std::filesystem::exists(path)) {
    if (read_file(path) != content) {
      throw ConfigError("manifest already exists with different content: " + path);
    }
    return;
  }
  write_file(path, content);
}

RunManifest read_manifest(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
  if (!std::filesystem::exists(path)) {
    throw ConfigError("no manifest found in run directory: " + dir);
  }
  return manifest_from_json(read_file(path));
}

void validate_manifest_json(const std::string& json_text) {
  const RunManifest manifest = manifest_from_json(json_text);
  if (manifest.run_id.size() != 64) {
    throw SchemaError("manifest run_id must be a sha256 hex digest");
  }
  static const std::set<std::string> kCommands = {"evaluate", "reflexion", "filter-bc",
                                                  "metrics", "sandbox-gen"};
  if (!kCommands.count(manifest.command)) {
    throw SchemaError("manifest has an unknown command: " + manifest.command);
  }
  RunManifest expected = manifest;
  finalize_manifest(expected);
  if (expected.run_id != manifest.run_id) {
    throw SchemaError("manifest run_id does not match its content");
  }
}

std::string result_record_to_json_line(const ResultRecord& record) {
  nlohmann::ordered_json json;
  json["run_id"] = record.run_id;
  json["task_id"] = record.task_id;
  json["kind"] = record.kind;
  try {
    json["payload"] = nlohmann::ordered_json::parse(record.payload_json);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("result payload is not valid JSON: ") + e.what());
  }
  return json.dump();
}

ResultRecord result_record_from_json_line(const std::string& line) {
  ResultRecord record;
  try {
    const nlohmann::json json = nlohmann::json::parse(line);
    record.run_id = json.at("run_id").get<std::string>();
    record.task_id = json.at("task_id").get<std::string>();
    record.kind = json.at("kind").get<std::string>();
    record.payload_json = json.at("payload").dump();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed result record: ") + e.what());
  }
  return record;
}

void validate_result_line(const std::string& line) {
  const ResultRecord record = result_record_from_json_line(line);
  if (!known_kinds().count(record.kind)) {
    throw SchemaError("result record has an unknown kind: " + record.kind);
  }
  if (record.task_id.empty()) {
    throw SchemaError("result record has an empty task_id");
  }
  validate_payload(record.kind, nlohmann::json::parse(record.payload_json));
}

ResultStore::ResultStore(std::string path) : path_(std::move(path)) {
  // Pick up existing keys so reopening an output file keeps the
  // one-record-per-key invariant append-only.
  if (std::filesystem::exists(path_)) {
    for (const ResultRecord& record : read_result_records(path_)) {
      keys_.insert(record.task_id + "\n" + record.kind);
    }
  }
}

void ResultStore::append(const ResultRecord& record) {
  const std::string line = result_record_to_json_line(record);
  validate_result_line(line);
  std::lock_guard<std::mutex> lock(mutex_);
  if (!keys_.insert(record.task_id + "\n" + record.kind).second) {
    throw ConfigError("duplicate result record for task " + record.task_id +
                      " kind " + record.kind);
  }
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot open result store for append: " + path_);
  out << line << "\n";
}

std::vector<ResultRecord> read_result_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open result store for reading: " + path);
  std::vector<ResultRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(result_record_from_json_line(line));
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open file for writing: " + path);
  out << content;
}

std::string file_sha256(const std::string& path) {
  return sha256_hex(read_file(path));
}

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  if (const char* pinned = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(pinned, nullptr, 10));
  }
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

}  // namespace agentjudge
