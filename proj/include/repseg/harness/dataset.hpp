#pragma once

// Dataset directories: for every recording <id>
//   <id>.csv       skeleton frames
//   <id>.json      sidecar metadata
//   <id>.ann.json  repetition annotation

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "repseg/error.hpp"
#include "repseg/harness/synth.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
}

/// Reads one recording; the sidecar is optional, the annotation may be absent when
/// `require_annotation` is false (an empty annotation of matching length is used).
inline Sample load_sample(const std::filesystem::path& csv_path, bool require_annotation = true) {
  const std::string id = csv_path.stem().string();
  const auto dir = csv_path.parent_path();
  const auto meta_path = dir / (id + ".json");
  const auto ann_path = dir / (id + ".ann.json");
  const std::string meta = std::filesystem::exists(meta_path) ? read_text_file(meta_path) : std::string{};
  SkeletonSequence seq = parse_skeleton(read_text_file(csv_path), meta);
  RepetitionAnnotation ann({}, seq.frames());
  if (std::filesystem::exists(ann_path)) {
    ann = parse_annotation(read_text_file(ann_path));
    require(ann.length() == seq.frames(), ErrorCode::LengthMismatch,
            id + ": annotation length " + std::to_string(ann.length()) + " vs " + std::to_string(seq.frames()) +
                " frames");
  } else {
    require(!require_annotation, ErrorCode::Io, "missing annotation '" + ann_path.string() + "'");
  }
  if (seq.info().exercise_id.empty() && !ann.exercise().empty()) {
    SequenceInfo info = seq.info();
    info.exercise_id = ann.exercise();
    if (info.subject_id.empty()) info.subject_id = ann.subject();
    seq = seq.with_info(info);
  }
  return {id, std::move(seq), std::move(ann)};
}

/// All recordings in `dir`, ordered by id.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::Io, "dataset directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> csvs;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
  std::sort(csvs.begin(), csvs.end());
  Dataset ds;
  for (const auto& p : csvs) {
    try {
      ds.push_back(load_sample(p));
    } catch (const Error& e) {
      throw Error(e.code(), p.filename().string() + ": " + e.message());
    }
  }
  require(!ds.empty(), ErrorCode::EmptyInput, "no recordings in '" + dir.string() + "'");
  return ds;
}

inline void save_sample(const std::filesystem::path& dir, const Sample& s) {
  write_text_file(dir / (s.id + ".csv"), serialize_skeleton(s.skeleton));
  write_text_file(dir / (s.id + ".json"), sequence_info_json(s.skeleton.info()).dump(2) + "\n");
  write_text_file(dir / (s.id + ".ann.json"), annotation_json(s.annotation).dump() + "\n");
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  for (const auto& s : ds) save_sample(dir, s);
}

}  // namespace repseg
