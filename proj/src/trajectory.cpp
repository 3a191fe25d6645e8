#include "agentjudge/trajectory.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"

namespace agentjudge {

using nlohmann::json;

const char* to_string(Domain domain) {
  switch (domain) {
    case Domain::kWeb:
      return "web";
    case Domain::kAndroid:
      return "android";
    case Domain::kIos:
      return "ios";
    case Domain::kSandbox:
      return "sandbox";
  }
  return "sandbox";
}

std::optional<Domain> domain_from_string(const std::string& name) {
  if (name == "web") return Domain::kWeb;
  if (name == "android") return Domain::kAndroid;
  if (name == "ios") return Domain::kIos;
  if (name == "sandbox") return Domain::kSandbox;
  return std::nullopt;
}

std::vector<Violation> validate_trajectory(const Trajectory& trajectory) {
  std::vector<Violation> out;
  auto add = [&out](std::string field, std::string rule, std::string detail) {
    out.push_back({std::move(field), std::move(rule), std::move(detail)});
  };

  if (trajectory.instruction.text.empty()) {
    add("instruction.text", "NonEmptyInstruction", "instruction text is empty");
  }
  if (trajectory.actions.empty()) {
    add("actions", "NonEmptyActions", "trajectory has no actions");
  }
  if (trajectory.states.size() != trajectory.actions.size() + 1) {
    std::ostringstream detail;
    detail << "expected " << trajectory.actions.size() + 1 << " states, got "
           << trajectory.states.size();
    add("states", "StateCountMatchesActions", detail.str());
  }
  for (std::size_t i = 0; i < trajectory.actions.size(); ++i) {
    const Action& a = trajectory.actions[i];
    if (a.kind == ActionKind::kClick &&
        (a.x < 0.0 || a.x > 1.0 || a.y < 0.0 || a.y > 1.0)) {
      add("actions[" + std::to_string(i) + "]", "ClickCoordsInRange",
          render_action(a));
    }
  }
  for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
    const State& s = trajectory.states[i];
    const std::string field = "states[" + std::to_string(i) + "]";
    if (s.caption && s.caption->empty()) {
      add(field + ".caption", "NonEmptyCaption", "caption present but empty");
    }
    if (s.ocr) {
      for (std::size_t j = 0; j < s.ocr->size(); ++j) {
        const OcrToken& t = (*s.ocr)[j];
        bool in_range = true;
        for (double v : t.bbox) in_range = in_range && v >= 0.0 && v <= 1.0;
        if (!in_range || t.bbox[0] > t.bbox[2] || t.bbox[1] > t.bbox[3]) {
          add(field + ".ocr[" + std::to_string(j) + "]", "WellFormedBbox", t.text);
        }
        if (t.confidence < 0.0 || t.confidence > 1.0) {
          add(field + ".ocr[" + std::to_string(j) + "]", "ConfidenceInRange", t.text);
        }
      }
    }
  }
  return out;
}

namespace {

json state_ocr_to_json(const State& state) {
  json tokens = json::array();
  if (state.ocr) {
    for (const OcrToken& t : *state.ocr) {
      tokens.push_back(json{{"text", t.text},
                            {"bbox", t.bbox},
                            {"confidence", t.confidence}});
    }
  }
  return tokens;
}

OcrToken ocr_token_from_json(const json& j) {
  OcrToken t;
  t.text = j.at("text").get<std::string>();
  auto bbox = j.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw SchemaError("ocr token bbox must have 4 entries");
  }
  for (int i = 0; i < 4; ++i) t.bbox[i] = bbox[i].get<double>();
  t.confidence = j.value("confidence", 1.0);
  return t;
}

}  // namespace

std::string trajectory_to_json_line(const Trajectory& trajectory) {
  json record;
  record["task_id"] = trajectory.instruction.task_id;
  record["instruction"] = trajectory.instruction.text;
  record["domain"] = to_string(trajectory.instruction.domain);
  record["policy_id"] = trajectory.policy_id;
  json actions = json::array();
  for (const Action& a : trajectory.actions) actions.push_back(render_action(a));
  record["actions"] = actions;
  json screenshots = json::array();
  json ocr = json::array();
  json captions = json::array();
  for (const State& s : trajectory.states) {
    json shot;
    shot["sha256"] = s.screenshot.sha256;
    if (!s.screenshot.locator.empty()) shot["locator"] = s.screenshot.locator;
    screenshots.push_back(shot);
    ocr.push_back(s.ocr ? state_ocr_to_json(s) : json());
    captions.push_back(s.caption ? json(*s.caption) : json());
  }
  record["screenshots"] = screenshots;
  record["ocr"] = ocr;
  record["captions"] = captions;
  record["response"] =
      trajectory.agent_response ? json(*trajectory.agent_response) : json();
  return record.dump();
}

Trajectory trajectory_from_json_line(const std::string& line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("trajectory record is not valid JSON: ") + e.what());
  }
  if (!record.is_object()) throw SchemaError("trajectory record must be an object");
  for (const char* key : {"task_id", "instruction", "actions", "screenshots"}) {
    if (!record.contains(key)) {
      throw SchemaError(std::string("trajectory record missing key: ") + key);
    }
  }
  Trajectory t;
  t.instruction.task_id = record.at("task_id").get<std::string>();
  t.instruction.text = record.at("instruction").get<std::string>();
  std::string domain = record.value("domain", std::string("sandbox"));
  auto parsed_domain = domain_from_string(domain);
  if (!parsed_domain) throw SchemaError("unknown domain: " + domain);
  t.instruction.domain = *parsed_domain;
  t.policy_id = record.value("policy_id", std::string());
  for (const auto& a : record.at("actions")) {
    t.actions.push_back(parse_action(a.get<std::string>()));
  }
  const json& screenshots = record.at("screenshots");
  const json ocr = record.value("ocr", json::array());
  const json captions = record.value("captions", json::array());
  for (std::size_t i = 0; i < screenshots.size(); ++i) {
    State s;
    const json& shot = screenshots[i];
    if (shot.is_string()) {
      s.screenshot.sha256 = shot.get<std::string>();
    } else {
      s.screenshot.sha256 = shot.at("sha256").get<std::string>();
      s.screenshot.locator = shot.value("locator", std::string());
    }
    if (i < ocr.size() && !ocr[i].is_null()) {
      std::vector<OcrToken> tokens;
      for (const auto& tok : ocr[i]) tokens.push_back(ocr_token_from_json(tok));
      s.ocr = std::move(tokens);
    }
    if (i < captions.size() && captions[i].is_string()) {
      s.caption = captions[i].get<std::string>();
    }
    t.states.push_back(std::move(s));
  }
  if (record.contains("response") && record.at("response").is_string()) {
    t.agent_response = record.at("response").get<std::string>();
  }
  return t;
}

std::vector<Trajectory> read_trajectories_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open trajectory file: " + path);
  std::vector<Trajectory> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(trajectory_from_json_line(line));
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_trajectories_jsonl(const std::string& path,
                              const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write trajectory file: " + path);
  for (const Trajectory& t : trajectories) out << trajectory_to_json_line(t) << "\n";
}

BlobStore::BlobStore(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string BlobStore::path_for(const std::string& sha256) const {
  return (std::filesystem::path(dir_) / (sha256 + ".png")).string();
}

ScreenshotRef BlobStore::put(const std::string& bytes) {
  ScreenshotRef ref;
  ref.sha256 = sha256_hex(bytes);
  const std::string path = path_for(ref.sha256);
  ref.locator = path;
  if (!std::filesystem::exists(path)) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write blob: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  return ref;
}

std::optional<std::string> BlobStore::get(const std::string& sha256) const {
  std::ifstream in(path_for(sha256), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool BlobStore::contains(const std::string& sha256) const {
  return std::filesystem::exists(path_for(sha256));
}

}  // namespace agentjudge
