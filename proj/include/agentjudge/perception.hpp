#pragma once

#include <string>
#include <vector>

#include "agentjudge/gateway.hpp"
#include "agentjudge/trajectory.hpp"

namespace agentjudge {

/// Flattens OCR tokens to text: drops tokens below min_confidence, sorts
/// top-to-bottom then left-to-right by box center (rows bucketed at 0.02
/// normalized height), and joins with newlines. Invariant under input
/// permutation.
std::string merge_ocr(const std::vector<OcrToken>& tokens, double min_confidence = 0.3);

/// Caption request for the fine-tuned captioner: screenshot attached plus
/// the merged OCR block. The instruction never enters this prompt; captions
/// stay task-agnostic. Requires state.ocr (CaptionError otherwise).
std::vector<ChatMessage> build_caption_request(const State& state);

/// Caption request in the dataset-collection form (screenshot only).
std::vector<ChatMessage> build_caption_collection_request(const State& state);

/// Fills in missing captions for every state via the gateway. Idempotent
/// (existing captions are kept) and atomic: on any failure the trajectory is
/// left untouched and a CaptionError names the failing state index.
void caption_trajectory(Trajectory& trajectory, Gateway& gateway,
                        const GenerationParams& params = {});

/// One row of a caption dataset export.
struct CaptionRecord {
  ScreenshotRef screenshot;
  std::vector<OcrToken> ocr;
  std::string caption;
  Domain domain = Domain::kSandbox;
  bool human_verified = false;
};

std::string caption_record_to_json_line(const CaptionRecord& record);
CaptionRecord caption_record_from_json_line(const std::string& line);

/// Collects every captioned state of the trajectories into dataset records.
std::vector<CaptionRecord> make_caption_records(
    const std::vector<Trajectory>& trajectories);

void write_caption_records_jsonl(const std::string& path,
                                 const std::vector<CaptionRecord>& records);
std::vector<CaptionRecord> read_caption_records_jsonl(const std::string& path);

}  // namespace agentjudge
