#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentjudge/judges.hpp"

namespace agentjudge {

/// One input file pinned by content hash. Names are logical (basenames), not
/// absolute paths, so manifests compare equal across machines.
struct InputRef {
  std::string name;
  std::string sha256;

  bool operator==(const InputRef& other) const = default;
};

/// Immutable description of one command invocation. Auth tokens and other
/// secrets never enter a manifest; endpoints appear by name only.
struct RunManifest {
  std::string run_id;  ///< content digest over everything except run_id/created
  std::string command;  ///< evaluate | reflexion | filter-bc | metrics | sandbox-gen
  std::string created;  ///< ISO-8601 UTC; SOURCE_DATE_EPOCH pins it for reproducible runs
  std::uint64_t seed = 0;
  std::string backend;     ///< scripted | endpoint | none
  std::string model_name;  ///< judge model identifier (never a credential)
  std::optional<EvaluatorSpec> evaluator;
  std::string prompt_assets_hash;
  std::vector<InputRef> inputs;
  /// Command parameters that shape outputs (threshold, actor skill, ...).
  /// Part of the run_id digest like everything else above except run_id/created.
  std::map<std::string, std::string> extra;
};

/// Fills run_id (content digest) and created (SOURCE_DATE_EPOCH or now).
void finalize_manifest(RunManifest& manifest);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& json_text);

/// EvaluatorSpec as a JSON object ({"architecture", "granularity", "reward"}).
/// Parsing ignores unknown keys so a full judge config object also loads.
std::string evaluator_spec_to_json_text(const EvaluatorSpec& spec);
EvaluatorSpec evaluator_spec_from_json_text(const std::string& json_text);

/// Writes <dir>/manifest.json. Writing over an existing manifest with
/// different content throws ConfigError (manifests are immutable); an
/// identical rewrite is a no-op.
void write_manifest(const std::string& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::string& dir);

/// Throws SchemaError when the text is not a structurally valid manifest.
void validate_manifest_json(const std::string& json_text);

/// One appended result: payload_json holds the kind-specific JSON object.
/// Kinds: rewards | reflexion | agreement | bc_samples | error.
struct ResultRecord {
  std::string run_id;
  std::string task_id;
  std::string kind;
  std::string payload_json;
};

std::string result_record_to_json_line(const ResultRecord& record);
ResultRecord result_record_from_json_line(const std::string& line);

/// Structural check of one record line, including the kind-specific payload
/// shape. Throws SchemaError on violations.
void validate_result_line(const std::string& line);

/// Append-only JSONL result store with a single serialized writer. Repeating
/// a (task_id, kind) pair violates the one-record-per-key invariant and
/// throws ConfigError.
class ResultStore {
 public:
  explicit ResultStore(std::string path);

  void append(const ResultRecord& record);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mutex_;
  std::set<std::string> keys_;
};

std::vector<ResultRecord> read_result_records(const std::string& path);

/// Whole-file read/write and content hashing helpers.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string file_sha256(const std::string& path);

/// Current time (or SOURCE_DATE_EPOCH when set) as an ISO-8601 UTC string.
std::string timestamp_utc();

}  // namespace agentjudge
