#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "agentjudge/actions.hpp"

namespace agentjudge {

enum class Domain { kWeb, kAndroid, kIos, kSandbox };

const char* to_string(Domain domain);
std::optional<Domain> domain_from_string(const std::string& name);

struct Instruction {
  std::string text;
  std::string task_id;
  Domain domain = Domain::kSandbox;
};

/// One OCR token: text plus a normalized [x0, y0, x1, y1] box and confidence.
struct OcrToken {
  std::string text;
  std::array<double, 4> bbox{0, 0, 0, 0};
  double confidence = 1.0;

  bool operator==(const OcrToken& other) const = default;
};

/// Pointer to screenshot bytes: sha256 of the bytes plus an optional locator
/// hint (file path, URL, or a synthetic tag). Equality is hash equality.
struct ScreenshotRef {
  std::string sha256;
  std::string locator;

  bool operator==(const ScreenshotRef& other) const { return sha256 == other.sha256; }
};

struct State {
  ScreenshotRef screenshot;
  std::optional<std::vector<OcrToken>> ocr;
  std::optional<std::string> caption;
};

/// A full episode: instruction, n actions, and n+1 states (one snapshot
/// before every action plus the final one).
struct Trajectory {
  Instruction instruction;
  std::vector<Action> actions;
  std::vector<State> states;
  std::optional<std::string> agent_response;
  std::string policy_id;
};

/// One validation finding; `field` names the offending location
/// (e.g. "states", "actions[3]") and `rule` the violated rule.
struct Violation {
  std::string field;
  std::string rule;
  std::string detail;
};

/// Structural checks: states.size() == actions.size() + 1, non-empty
/// instruction text, click coords in range, OCR boxes well-formed, captions
/// non-empty when present. Returns every violation found.
std::vector<Violation> validate_trajectory(const Trajectory& trajectory);

/// JSONL record form (one trajectory per line). Actions serialize as
/// canonical strings and screenshots as hash refs.
std::string trajectory_to_json_line(const Trajectory& trajectory);
Trajectory trajectory_from_json_line(const std::string& line);

std::vector<Trajectory> read_trajectories_jsonl(const std::string& path);
void write_trajectories_jsonl(const std::string& path,
                              const std::vector<Trajectory>& trajectories);

/// Content-addressed screenshot storage: bytes live in <dir>/<sha256>.png.
class BlobStore {
 public:
  explicit BlobStore(std::string dir);

  /// Writes bytes (no-op if already present) and returns their ref.
  ScreenshotRef put(const std::string& bytes);
  std::optional<std::string> get(const std::string& sha256) const;
  bool contains(const std::string& sha256) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string path_for(const std::string& sha256) const;
  std::string dir_;
};

}  // namespace agentjudge
