#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vioscan/corpus.hpp"
#include "vioscan/types.hpp"

namespace vioscan::splits {

struct SplitPlan {
  std::vector<std::string> train_ids;  // input order
  std::vector<std::string> test_ids;   // input order
  std::uint64_t seed = 0;
  double test_fraction_target = 0.0;
};

// Whole cause-of-action groups are shuffled by `seed` and moved to the test
// side until it holds at least test_fraction * N records. Records without a
// cause of action form one group that always stays in train, and the last
// remaining group is never moved, so both sides are nonempty.
SplitPlan coa_split(std::span<const corpus::NerRecord> records, double test_fraction,
                    std::uint64_t seed);

struct Fold {
  LegalDomain held_out_domain;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct FoldPlan {
  std::vector<Fold> folds;  // LegalDomain order
};

FoldPlan leave_one_out(std::span<const corpus::NliRecord> records);

}  // namespace vioscan::splits
