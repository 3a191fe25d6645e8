#include "agentjudge/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "agentjudge/errors.hpp"
#include "agentjudge/prompts.hpp"

namespace agentjudge {

using nlohmann::json;

std::string merge_ocr(const std::vector<OcrToken>& tokens, double min_confidence) {
  struct Placed {
    long row;
    double cx;
    double cy;
    const OcrToken* token;
  };
  std::vector<Placed> placed;
  for (const OcrToken& t : tokens) {
    if (t.confidence < min_confidence) continue;
    const double cx = (t.bbox[0] + t.bbox[2]) / 2.0;
    const double cy = (t.bbox[1] + t.bbox[3]) / 2.0;
    placed.push_back({static_cast<long>(std::floor(cy / 0.02)), cx, cy, &t});
  }
  std::sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
    return std::tie(a.row, a.cx, a.cy, a.token->text, a.token->confidence) <
           std::tie(b.row, b.cx, b.cy, b.token->text, b.token->confidence);
  });
  std::string out;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += placed[i].token->text;
  }
  return out;
}

std::vector<ChatMessage> build_caption_request(const State& state) {
  if (!state.ocr) throw CaptionError("state has no OCR tokens to caption from");
  const PromptTemplate& templ = get_prompt_template("caption_inference");
  const std::string prompt =
      render_template(templ.user, {{"ocr_result", merge_ocr(*state.ocr)}});
  return {ChatMessage::user(prompt, {state.screenshot})};
}

std::vector<ChatMessage> build_caption_collection_request(const State& state) {
  const PromptTemplate& templ = get_prompt_template("caption_collection");
  return {ChatMessage::user(templ.user, {state.screenshot})};
}

void caption_trajectory(Trajectory& trajectory, Gateway& gateway,
                        const GenerationParams& params) {
  std::vector<std::pair<std::size_t, std::string>> fresh;
  for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
    if (trajectory.states[i].caption) continue;
    try {
      const auto request = build_caption_request(trajectory.states[i]);
      std::string caption = gateway.complete(request, params);
      if (caption.empty()) throw CaptionError("captioner returned empty text");
      fresh.emplace_back(i, std::move(caption));
    } catch (const Error& e) {
      throw CaptionError("state " + std::to_string(i) + ": " + e.what());
    }
  }
  for (auto& [index, caption] : fresh) {
    trajectory.states[index].caption = std::move(caption);
  }
}

namespace {

json ocr_tokens_to_json(const std::vector<OcrToken>& tokens) {
  json out = json::array();
  for (const OcrToken& t : tokens) {
    out.push_back(
        json{{"text", t.text}, {"bbox", t.bbox}, {"confidence", t.confidence}});
  }
  return out;
}

}  // namespace

std::string caption_record_to_json_line(const CaptionRecord& record) {
  json j;
  j["screenshot"] = json{{"sha256", record.screenshot.sha256}};
  if (!record.screenshot.locator.empty()) {
    j["screenshot"]["locator"] = record.screenshot.locator;
  }
  j["ocr"] = ocr_tokens_to_json(record.ocr);
  j["caption"] = record.caption;
  j["domain"] = to_string(record.domain);
  j["human_verified"] = record.human_verified;
  return j.dump();
}

CaptionRecord caption_record_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("caption record is not valid JSON: ") + e.what());
  }
  CaptionRecord record;
  record.screenshot.sha256 = j.at("screenshot").at("sha256").get<std::string>();
  record.screenshot.locator = j.at("screenshot").value("locator", std::string());
  for (const auto& tok : j.value("ocr", json::array())) {
    OcrToken t;
    t.text = tok.at("text").get<std::string>();
    for (int i = 0; i < 4; ++i) t.bbox[i] = tok.at("bbox")[i].get<double>();
    t.confidence = tok.value("confidence", 1.0);
    record.ocr.push_back(std::move(t));
  }
  record.caption = j.at("caption").get<std::string>();
  auto domain = domain_from_string(j.value("domain", std::string("sandbox")));
  if (!domain) throw SchemaError("caption record has unknown domain");
  record.domain = *domain;
  record.human_verified = j.value("human_verified", false);
  return record;
}

std::vector<CaptionRecord> make_caption_records(
    const std::vector<Trajectory>& trajectories) {
  std::vector<CaptionRecord> records;
  for (const Trajectory& t : trajectories) {
    for (const State& s : t.states) {
      if (!s.caption) continue;
      CaptionRecord record;
      record.screenshot = s.screenshot;
      if (s.ocr) record.ocr = *s.ocr;
      record.caption = *s.caption;
      record.domain = t.instruction.domain;
      records.push_back(std::move(record));
    }
  }
  return records;
}

void write_caption_records_jsonl(const std::string& path,
                                 const std::vector<CaptionRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write caption records: " + path);
  for (const CaptionRecord& r : records) out << caption_record_to_json_line(r) << "\n";
}

std::vector<CaptionRecord> read_caption_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open caption records: " + path);
  std::vector<CaptionRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(caption_record_from_json_line(line));
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace agentjudge
