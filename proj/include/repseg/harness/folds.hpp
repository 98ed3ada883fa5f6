#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "repseg/error.hpp"

namespace repseg {

struct FoldKey {
  std::string id;
  std::string exercise;
  std::string subject;
};

struct FoldSplit {
  int k = 0;
  std::vector<int> fold_of;  // per sample, in input order

  std::vector<std::size_t> test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != fold) out.push_back(i);
    return out;
  }
  std::vector<int> fold_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int f : fold_of) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
  }
};

/// Stratified by exercise: each exercise's samples are shuffled and dealt round-robin,
/// continuing the deal across exercises so overall fold sizes also stay within one.
/// With `subject_disjoint`, whole subjects are assigned instead (largest first, to the
/// currently smallest fold).
inline FoldSplit make_folds(const std::vector<FoldKey>& samples, int k, std::uint64_t seed,
                            bool subject_disjoint = false) {
  require(k >= 2, ErrorCode::InvalidArgument, "need at least 2 folds");
  require(static_cast<int>(samples.size()) >= k, ErrorCode::TooFewSamples,
          std::to_string(samples.size()) + " samples cannot fill " + std::to_string(k) + " folds");
  std::mt19937_64 rng(seed);
  FoldSplit split{k, std::vector<int>(samples.size(), -1)};

  if (!subject_disjoint) {
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < samples.size(); ++i) strata[samples[i].exercise].push_back(i);
    int cursor = 0;
    for (auto& [exercise, members] : strata) {
      std::shuffle(members.begin(), members.end(), rng);
      for (const std::size_t i : members) {
        split.fold_of[i] = cursor;
        cursor = (cursor + 1) % k;
      }
    }
    return split;
  }

  std::map<std::string, std::vector<std::size_t>> subjects;
  for (std::size_t i = 0; i < samples.size(); ++i) subjects[samples[i].subject].push_back(i);
  require(static_cast<int>(subjects.size()) >= k, ErrorCode::TooFewSamples,
          std::to_string(subjects.size()) + " subjects cannot fill " + std::to_string(k) + " subject-disjoint folds");
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [subject, members] : subjects) groups.push_back(&members);
  std::shuffle(groups.begin(), groups.end(), rng);
  std::stable_sort(groups.begin(), groups.end(), [](auto* a, auto* b) { return a->size() > b->size(); });
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (const auto* g : groups) {
    const auto smallest = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (const std::size_t i : *g) split.fold_of[i] = smallest;
    sizes[static_cast<std::size_t>(smallest)] += static_cast<int>(g->size());
  }
  return split;
}

}  // namespace repseg
